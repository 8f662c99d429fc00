#pragma once

#include <cmath>
#include <stdexcept>

#include "quafe/constants.hpp"

namespace quafe {

// Relativistic electron beam. gamma = 1 + E_kin/(m_e c^2), beta = v/c.
struct ElectronBeam {
    double kinetic_energy;  // [eV]
    double gamma;
    double beta;
};

inline ElectronBeam lorentz_factors(double kinetic_energy_ev,
                                    const PhysicalConstants& pc = constants())
{
    if (kinetic_energy_ev < 0)
        throw std::invalid_argument("lorentz_factors: kinetic energy must be >= 0");
    const double gamma = 1.0 + kinetic_energy_ev / pc.electron_rest_energy;
    const double beta = std::sqrt(1.0 - 1.0 / (gamma * gamma));
    return ElectronBeam{kinetic_energy_ev, gamma, beta};
}

}  // namespace quafe
