#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "quafe/constants.hpp"
#include "quafe/kinematics.hpp"

namespace quafe {

struct WaveguideSpec {
    double permittivity;  // real, > 1
    double width_nm;      // W
    double height_nm;     // h
    int max_modes;        // branches retained, [1, 16]

    void validate() const
    {
        if (!(permittivity > 1.0))
            throw std::invalid_argument("WaveguideSpec: permittivity must be > 1");
        if (!(width_nm > 0.0) || !(height_nm > 0.0))
            throw std::invalid_argument("WaveguideSpec: dimensions must be > 0");
        if (max_modes < 1 || max_modes > 16)
            throw std::invalid_argument("WaveguideSpec: max_modes must be in [1, 16]");
    }
};

struct DispersionSample {
    double k_parallel;     // [1/nm]
    double photon_energy;  // hbar*omega [eV]
    double decay_length;   // lambda_perp [nm]
};

// One guided branch omega_n(k_parallel), sampled on the caller's grid.
// photon_energy_at re-solves the dispersion at arbitrary k between samples;
// branches are immutable once built and safe to share across threads.
struct ModeBranch {
    int index = 0;
    std::vector<DispersionSample> samples;
    std::function<std::optional<double>(double)> photon_energy_at;
};

struct PhaseMatchPoint {
    int mode_index;
    double k_parallel;       // [1/nm]
    double photon_energy;    // [eV], equals hbar*c*beta*k_parallel by construction
    double decay_length;     // [nm]
    bool multiple_crossings = false;  // more than one crossing seen; lowest-k returned
};

// Evanescent decay length lambda_perp = (k^2 - (E/hbar c)^2)^{-1/2}.
inline double decay_length(double k_parallel, double photon_energy_ev,
                           const PhysicalConstants& pc = constants())
{
    if (!(k_parallel > 0.0))
        throw std::invalid_argument("decay_length: k_parallel must be > 0");
    const double k0 = photon_energy_ev / pc.hbar_c;
    const double gap = k_parallel * k_parallel - k0 * k0;
    if (!(gap > 0.0))
        throw std::invalid_argument("decay_length: point is not evanescent (k <= omega/c)");
    return 1.0 / std::sqrt(gap);
}

namespace detail {

enum class SlabPolarization { te, tm };

// Symmetric slab, core eps_core / cladding eps_clad, order m. All orders
// satisfy tan(u - m pi/2) = A w / u with u^2 + w^2 = V^2 and A = 1 (TE) or
// eps_core/eps_clad (TM). Returns the effective index, or nullopt below
// cutoff. Bisection to 1e-12 relative in u.
inline std::optional<double> slab_neff(double eps_core, double eps_clad,
                                       double thickness, double k0, int order,
                                       SlabPolarization pol)
{
    if (!(eps_core > eps_clad)) return std::nullopt;
    const double V = 0.5 * k0 * thickness * std::sqrt(eps_core - eps_clad);
    const double lo = 0.5 * order * M_PI;
    if (!(V > lo)) return std::nullopt;
    const double hi = std::min(V, 0.5 * (order + 1) * M_PI);
    const double A = (pol == SlabPolarization::tm) ? eps_core / eps_clad : 1.0;

    auto f = [&](double u) {
        const double w2 = V * V - u * u;
        const double w = w2 > 0.0 ? std::sqrt(w2) : 0.0;
        return std::tan(u - lo) - A * w / u;
    };
    double a = lo + 1e-12 * (1.0 + lo);
    double b = hi - 1e-12 * (1.0 + hi);
    if (!(a < b)) return std::nullopt;
    if (f(a) > 0.0 || f(b) < 0.0) return std::nullopt;  // degenerate sliver
    while (b - a > 1e-12 * (1.0 + b)) {
        const double mid = 0.5 * (a + b);
        if (f(mid) > 0.0)
            b = mid;
        else
            a = mid;
    }
    const double u = 0.5 * (a + b);
    const double kappa = 2.0 * u / thickness;
    const double beta2 = eps_core * k0 * k0 - kappa * kappa;
    if (!(beta2 > eps_clad * k0 * k0)) return std::nullopt;
    const double neff = std::sqrt(beta2) / k0;
    if (!(neff > std::sqrt(eps_clad) * (1.0 + 1e-12))) return std::nullopt;
    return neff;
}

// Effective-index factorization of the rectangular guide: the height slab
// (TM, fundamental) yields an effective core permittivity, which feeds the
// width slab (TE, order = branch index). Marcatili recipe for E^y modes.
inline std::optional<double> rect_neff(const WaveguideSpec& spec, double photon_energy_ev,
                                       int branch, const PhysicalConstants& pc)
{
    const double k0 = photon_energy_ev / pc.hbar_c;
    if (!(k0 > 0.0)) return std::nullopt;
    const auto ny = slab_neff(spec.permittivity, 1.0, spec.height_nm, k0, 0,
                              SlabPolarization::tm);
    if (!ny) return std::nullopt;
    return slab_neff(*ny * *ny, 1.0, spec.width_nm, k0, branch, SlabPolarization::te);
}

// Solve photon energy E on branch `branch` at fixed k_parallel; the root of
// n_eff(E) E / hbar c = k_parallel lies strictly between the bulk and vacuum
// light lines when the branch is guided there.
inline std::optional<double> solve_photon_energy(const WaveguideSpec& spec, int branch,
                                                 double k_parallel,
                                                 const PhysicalConstants& pc)
{
    if (!(k_parallel > 0.0)) return std::nullopt;
    const double e_vacuum = k_parallel * pc.hbar_c;
    const double e_bulk = e_vacuum / std::sqrt(spec.permittivity);

    auto residual = [&](double e) -> double {
        const auto neff = rect_neff(spec, e, branch, pc);
        if (!neff) return -1.0;  // below cutoff: beta < k_parallel
        return *neff * e / pc.hbar_c - k_parallel;
    };

    double a = e_bulk * (1.0 + 1e-12);
    double b = e_vacuum * (1.0 - 1e-9);
    if (!(residual(b) > 0.0)) return std::nullopt;  // no guided solution at this k
    while (b - a > 1e-13 * b) {
        const double mid = 0.5 * (a + b);
        if (residual(mid) > 0.0)
            b = mid;
        else
            a = mid;
    }
    return 0.5 * (a + b);
}

}  // namespace detail

// Sample the guided branches of `spec` on a strictly increasing positive
// k grid. Grid points without a guided solution are omitted (a branch may
// start at its cutoff); branches empty everywhere are dropped.
inline std::vector<ModeBranch> solve_dispersion(const WaveguideSpec& spec,
                                                std::span<const double> k_grid,
                                                const PhysicalConstants& pc = constants())
{
    spec.validate();
    for (std::size_t i = 0; i < k_grid.size(); ++i) {
        if (!(k_grid[i] > 0.0) || (i > 0 && !(k_grid[i] > k_grid[i - 1])))
            throw std::invalid_argument("solve_dispersion: k grid must be positive and strictly increasing");
    }

    std::vector<ModeBranch> branches;
    for (int q = 0; q < spec.max_modes; ++q) {
        ModeBranch br;
        br.index = q;
        br.photon_energy_at = [spec, q, pc](double k) {
            return detail::solve_photon_energy(spec, q, k, pc);
        };
        for (double k : k_grid) {
            const auto e = detail::solve_photon_energy(spec, q, k, pc);
            if (!e) continue;
            br.samples.push_back({k, *e, decay_length(k, *e, pc)});
        }
        if (!br.samples.empty()) branches.push_back(std::move(br));
    }
    return branches;
}

// Root of omega_n(k) - k v = 0 over the sampled branch, refined by local
// re-solve to 1e-9 relative in photon energy. Returns nullopt when the
// electron line does not cross the branch.
inline std::optional<PhaseMatchPoint> phase_match(const ModeBranch& branch,
                                                  const ElectronBeam& beam,
                                                  const PhysicalConstants& pc = constants())
{
    if (branch.samples.empty())
        throw std::invalid_argument("phase_match: branch has no samples");
    if (beam.beta <= 0.0) return std::nullopt;

    const double slope = pc.hbar_c * beam.beta;  // electron line E = slope * k
    auto line_gap = [&](const DispersionSample& s) { return s.photon_energy - slope * s.k_parallel; };

    // Guided samples sit below the vacuum light line, so the gap starts
    // positive; a crossing is a +/- sign change between adjacent samples.
    int crossings = 0;
    std::size_t first = 0;
    for (std::size_t i = 0; i + 1 < branch.samples.size(); ++i) {
        if (line_gap(branch.samples[i]) > 0.0 && line_gap(branch.samples[i + 1]) <= 0.0) {
            if (crossings == 0) first = i;
            ++crossings;
        }
    }
    if (crossings == 0) return std::nullopt;

    double ka = branch.samples[first].k_parallel;
    double kb = branch.samples[first + 1].k_parallel;
    auto gap_at = [&](double k) -> double {
        const auto e = branch.photon_energy_at ? branch.photon_energy_at(k) : std::nullopt;
        if (!e) return 1.0;  // unguided interior point: keep to the guided side
        return *e - slope * k;
    };
    while (kb - ka > 1e-12 * kb) {
        const double mid = 0.5 * (ka + kb);
        if (gap_at(mid) > 0.0)
            ka = mid;
        else
            kb = mid;
    }
    const double k = 0.5 * (ka + kb);
    const double energy = slope * k;  // on the electron line by construction
    return PhaseMatchPoint{branch.index, k, energy, decay_length(k, energy, pc),
                           crossings > 1};
}

}  // namespace quafe
