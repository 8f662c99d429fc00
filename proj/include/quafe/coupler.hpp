#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "quafe/bessel.hpp"
#include "quafe/constants.hpp"
#include "quafe/kinematics.hpp"
#include "quafe/waveguide.hpp"

namespace quafe {

// Reflection-coupler geometry. base_rates[n] is the surface excitation
// probability density dP_n(x=0)/dz in 1/nm; it is a calibration input, not a
// first-principles output. length_scale multiplies every L_eff (used by the
// NOON interaction-length optimizer).
struct CouplerGeometry {
    double min_distance_nm;        // b
    double field_gradient;         // E_DC [V/nm]
    std::vector<double> base_rates;
    double length_scale = 1.0;

    void validate() const
    {
        if (!(min_distance_nm > 0.0))
            throw std::invalid_argument("CouplerGeometry: min_distance must be > 0");
        if (!(field_gradient > 0.0))
            throw std::invalid_argument("CouplerGeometry: field_gradient must be > 0");
        if (!(length_scale > 0.0))
            throw std::invalid_argument("CouplerGeometry: length_scale must be > 0");
        for (double r : base_rates)
            if (r < 0.0) throw std::invalid_argument("CouplerGeometry: base_rates must be >= 0");
    }
};

struct ModeCoupling {
    int mode_index = 0;
    bool matched = false;       // electron line crosses this branch
    double photon_energy = 0;   // [eV]
    double decay_length = 0;    // [nm]
    double theta = 0;
    double effective_length = 0;  // [nm], unscaled
    double mean_photons = 0;      // length_scale * L_eff * rho
};

struct CouplingResult {
    std::vector<ModeCoupling> modes;  // ascending photon energy
    double length_scale = 1.0;

    std::vector<double> mean_photon_list() const
    {
        std::vector<double> v;
        v.reserve(modes.size());
        for (const auto& m : modes) v.push_back(m.mean_photons);
        return v;
    }
    std::vector<double> frequency_ratios() const
    {
        std::vector<double> v;
        v.reserve(modes.size());
        if (modes.empty()) return v;
        for (const auto& m : modes) v.push_back(m.photon_energy / modes.front().photon_energy);
        return v;
    }
};

// theta = 2 m_e c^2 gamma / (e E_DC lambda_perp); with energies in eV and
// E_DC in V/nm the charge cancels.
inline double coupler_theta(const ElectronBeam& beam, const CouplerGeometry& geometry,
                            double decay_length_nm,
                            const PhysicalConstants& pc = constants())
{
    if (!(geometry.field_gradient > 0.0))
        throw std::invalid_argument("coupler_theta: field gradient must be > 0");
    if (!(decay_length_nm > 0.0))
        throw std::invalid_argument("coupler_theta: decay length must be > 0");
    return 2.0 * pc.electron_rest_energy * beam.gamma /
           (geometry.field_gradient * decay_length_nm);
}

// L_eff = lambda_perp (v/c) theta K1(theta) exp(theta - 2b/lambda_perp).
// The exp(theta) cancels against the scaled Bessel analytically; theta is
// ~1e8 at realistic gradients, so the cancellation must never be numeric.
inline double effective_length(const ElectronBeam& beam, const CouplerGeometry& geometry,
                               double decay_length_nm,
                               const PhysicalConstants& pc = constants())
{
    const double theta = coupler_theta(beam, geometry, decay_length_nm, pc);
    return decay_length_nm * beam.beta * theta * bessel_k1_scaled(theta) *
           std::exp(-2.0 * geometry.min_distance_nm / decay_length_nm);
}

// Default sampling grid for the dispersion solver: geometric in k so the
// low-energy crossings near the light line and the high-order branches are
// both covered for 50-200 keV beams.
inline std::vector<double> default_k_grid(double k_min = 2e-4, double k_max = 0.06,
                                          int samples = 240)
{
    if (!(k_min > 0) || !(k_max > k_min) || samples < 2)
        throw std::invalid_argument("default_k_grid: invalid range");
    std::vector<double> grid(samples);
    const double r = std::log(k_max / k_min) / (samples - 1);
    for (int i = 0; i < samples; ++i) grid[i] = k_min * std::exp(r * i);
    return grid;
}

// Full per-mode coupling table for one beam/geometry. Branches that the
// electron line never crosses are reported unmatched with <N_n> = 0.
inline CouplingResult mean_photon_numbers(const ElectronBeam& beam,
                                          const WaveguideSpec& spec,
                                          const CouplerGeometry& geometry,
                                          std::span<const double> k_grid,
                                          const PhysicalConstants& pc = constants())
{
    geometry.validate();
    const auto branches = solve_dispersion(spec, k_grid, pc);
    CouplingResult result;
    result.length_scale = geometry.length_scale;
    for (const auto& br : branches) {
        if (static_cast<std::size_t>(br.index) >= geometry.base_rates.size())
            throw std::invalid_argument("mean_photon_numbers: base_rates does not cover mode " +
                                        std::to_string(br.index));
        ModeCoupling mc;
        mc.mode_index = br.index;
        const auto pm = phase_match(br, beam, pc);
        if (pm) {
            mc.matched = true;
            mc.photon_energy = pm->photon_energy;
            mc.decay_length = pm->decay_length;
            mc.theta = coupler_theta(beam, geometry, pm->decay_length, pc);
            mc.effective_length = effective_length(beam, geometry, pm->decay_length, pc);
            mc.mean_photons = geometry.length_scale * mc.effective_length *
                              geometry.base_rates[br.index];
        }
        result.modes.push_back(mc);
    }
    return result;
}

inline CouplingResult mean_photon_numbers(const ElectronBeam& beam,
                                          const WaveguideSpec& spec,
                                          const CouplerGeometry& geometry,
                                          const PhysicalConstants& pc = constants())
{
    const auto grid = default_k_grid();
    return mean_photon_numbers(beam, spec, geometry, grid, pc);
}

// Calibrates base rates against the two anchors: <N_0> = mean_mode0 at the
// given beam, and N^eff = eff_factor * <N_0>. relative_weights fixes the
// rate ratios for n >= 1 (uniform when empty); the overall scale of the
// weights drops out.
inline std::vector<double> calibrate_base_rates(const ElectronBeam& beam,
                                                const WaveguideSpec& spec,
                                                const CouplerGeometry& geometry,
                                                std::span<const double> relative_weights,
                                                std::span<const double> k_grid,
                                                double mean_mode0 = 40.0,
                                                double eff_factor = 7.0,
                                                const PhysicalConstants& pc = constants())
{
    CouplerGeometry probe = geometry;
    probe.base_rates.assign(static_cast<std::size_t>(spec.max_modes), 0.0);
    const CouplingResult probe_result = mean_photon_numbers(beam, spec, probe, k_grid, pc);

    std::vector<const ModeCoupling*> matched;
    for (const auto& m : probe_result.modes)
        if (m.matched) matched.push_back(&m);
    if (matched.size() < 2)
        throw std::runtime_error("calibrate_base_rates: fewer than 2 phase-matched modes; "
                                 "N^eff constraint unsatisfiable");
    if (matched.front()->mode_index != 0)
        throw std::runtime_error("calibrate_base_rates: mode 0 is not phase-matched");

    auto weight = [&](std::size_t i) {
        if (relative_weights.empty()) return 1.0;
        if (i - 1 >= relative_weights.size())
            throw std::runtime_error("calibrate_base_rates: relative_weights shorter than "
                                     "the matched mode list");
        const double w = relative_weights[i - 1];
        if (!(w > 0.0))
            throw std::runtime_error("calibrate_base_rates: relative weights must be > 0");
        return w;
    };

    const double s = geometry.length_scale;
    const double omega0 = matched.front()->photon_energy;
    std::vector<double> rates(static_cast<std::size_t>(spec.max_modes), 0.0);
    rates[0] = mean_mode0 / (s * matched.front()->effective_length);

    double weighted = 0.0;
    for (std::size_t i = 1; i < matched.size(); ++i)
        weighted += weight(i) * s * matched[i]->effective_length *
                    (matched[i]->photon_energy / omega0);
    const double c = (eff_factor - 1.0) * mean_mode0 / weighted;
    for (std::size_t i = 1; i < matched.size(); ++i)
        rates[static_cast<std::size_t>(matched[i]->mode_index)] = c * weight(i);
    return rates;
}

}  // namespace quafe
