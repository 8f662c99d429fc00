#pragma once

#include <stdexcept>

namespace quafe {

// Unit system: energies in eV, lengths in nm, static fields in V/nm.
// The speed of light enters only through v/c ratios and hbar*c, so both
// are stored in forms that keep every downstream quantity dimensionless
// or in eV/nm units.
struct PhysicalConstants {
    double electron_rest_energy;  // m_e c^2 [eV]
    double speed_of_light;        // enters via ratios only; kept at 1
    double hbar_c;                // [eV nm]

    PhysicalConstants(double rest_energy_ev, double c, double hbarc_ev_nm)
        : electron_rest_energy(rest_energy_ev), speed_of_light(c), hbar_c(hbarc_ev_nm)
    {
        if (electron_rest_energy <= 0 || speed_of_light <= 0 || hbar_c <= 0)
            throw std::invalid_argument("PhysicalConstants: all constants must be positive");
    }

    PhysicalConstants() : PhysicalConstants(510998.95, 1.0, 197.3269804) {}
};

inline const PhysicalConstants& constants()
{
    static const PhysicalConstants c;
    return c;
}

}  // namespace quafe
