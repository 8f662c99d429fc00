#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "quafe/numeric.hpp"
#include "quafe/poisson.hpp"

namespace quafe {

namespace detail {

inline void check_interference_args(std::span<const double> mean_photons,
                                    std::span<const double> freq_ratios)
{
    if (mean_photons.size() != freq_ratios.size())
        throw std::invalid_argument("interference: mean_photons and freq_ratios size mismatch");
    for (double m : mean_photons)
        if (m < 0.0) throw std::invalid_argument("interference: mean photon numbers must be >= 0");
}

}  // namespace detail

// Normalized kept-port current of the two-arm, single-pass interferometer:
//   I = (1/2) (1 + exp[-sum_n <N_n>(1 - cos p_n)] cos[phi_e + sum_n <N_n> sin p_n])
// with p_n = phi_ell * omega_n/omega_0. The 1/2 makes the lossless
// no-coupling interferometer peak at 1.
inline double current_closed_form(std::span<const double> mean_photons,
                                  std::span<const double> freq_ratios, double phi_e,
                                  double phi_ell)
{
    detail::check_interference_args(mean_photons, freq_ratios);
    double decay = 0.0, drift = 0.0;
    for (std::size_t n = 0; n < mean_photons.size(); ++n) {
        const double p = phi_ell * freq_ratios[n];
        decay += mean_photons[n] * (1.0 - std::cos(p));
        drift += mean_photons[n] * std::sin(p);
    }
    return 0.5 * (1.0 + std::exp(-decay) * std::cos(phi_e + drift));
}

// Same interferometer with both interactions on one arm (the reflected
// layout): the exponent carries 1 + cos p_n, and the single-mode curve
// equals the two-arm one at phi_ell -> pi - phi_ell'.
inline double current_closed_form_reflected(std::span<const double> mean_photons,
                                            std::span<const double> freq_ratios,
                                            double phi_e, double phi_ell)
{
    detail::check_interference_args(mean_photons, freq_ratios);
    double decay = 0.0, drift = 0.0;
    for (std::size_t n = 0; n < mean_photons.size(); ++n) {
        const double p = phi_ell * freq_ratios[n];
        decay += mean_photons[n] * (1.0 + std::cos(p));
        drift += mean_photons[n] * std::sin(p);
    }
    return 0.5 * (1.0 + std::exp(-decay) * std::cos(phi_e + drift));
}

// Brute-force reference: direct sum over the product Fock basis of
//   |(e^{i phi_{N}} + 1)/2|^2 prod_n Pois(<N_n>, N_n),
// phi_{N} = phi_e + phi_ell sum_n N_n omega_n/omega_0. Terms are gathered
// and pairwise-summed so the result is bit-stable.
inline double oracle_current(std::span<const double> mean_photons,
                             std::span<const double> freq_ratios, double phi_e,
                             double phi_ell, std::span<const int> cutoffs)
{
    detail::check_interference_args(mean_photons, freq_ratios);
    if (cutoffs.size() != mean_photons.size())
        throw std::invalid_argument("oracle_current: cutoffs size mismatch");

    const std::size_t modes = mean_photons.size();
    std::vector<std::vector<double>> pois(modes);
    for (std::size_t n = 0; n < modes; ++n) {
        pois[n].resize(static_cast<std::size_t>(cutoffs[n]) + 1);
        double tail = 1.0;
        for (int k = 0; k <= cutoffs[n]; ++k) {
            pois[n][static_cast<std::size_t>(k)] = poisson_pmf(mean_photons[n], k);
            tail -= pois[n][static_cast<std::size_t>(k)];
        }
        if (tail > 1e-11)
            throw std::runtime_error("oracle_current: cutoff too small for mode " +
                                     std::to_string(n));
    }

    std::vector<double> terms;
    std::vector<int> occ(modes, 0);
    std::function<void(std::size_t, double, double)> rec =
        [&](std::size_t mode, double weight, double scaled_total) {
            if (mode == modes) {
                const double phi = phi_e + phi_ell * scaled_total;
                terms.push_back(weight * 0.5 * (1.0 + std::cos(phi)));
                return;
            }
            for (int k = 0; k <= cutoffs[mode]; ++k)
                rec(mode + 1, weight * pois[mode][static_cast<std::size_t>(k)],
                    scaled_total + k * freq_ratios[mode]);
        };
    rec(0, 1.0, 0.0);
    return pairwise_sum(terms);
}

// N^eff = sum_n <N_n> omega_n/omega_0.
inline double effective_photon_number(std::span<const double> mean_photons,
                                      std::span<const double> freq_ratios)
{
    detail::check_interference_args(mean_photons, freq_ratios);
    double s = 0.0;
    for (std::size_t n = 0; n < mean_photons.size(); ++n)
        s += mean_photons[n] * freq_ratios[n];
    return s;
}

// d(current)/d(phi_ell) at phi_ell = 0: -(1/2) N^eff sin(phi_e).
inline double sensitivity_slope(std::span<const double> mean_photons,
                                std::span<const double> freq_ratios, double phi_e)
{
    return -0.5 * effective_photon_number(mean_photons, freq_ratios) * std::sin(phi_e);
}

// Width of the first interference fringe: full width at half depth of the
// first local minimum of I(phi_ell) right of zero. Used for the qualitative
// fringe-sharpening checks.
inline double central_fringe_fwhm(std::span<const double> mean_photons,
                                  std::span<const double> freq_ratios, double phi_e)
{
    const double neff = effective_photon_number(mean_photons, freq_ratios);
    if (!(neff > 0.0))
        throw std::invalid_argument("central_fringe_fwhm: no coupling");
    auto current = [&](double p) { return current_closed_form(mean_photons, freq_ratios, phi_e, p); };

    const double step = M_PI / (512.0 * std::max(1.0, neff));
    const double baseline = current(0.0);

    // scan for the first local minimum below baseline
    double prev = baseline;
    double phi = step;
    double min_phi = 0.0;
    bool descending = false;
    for (int i = 0; i < 1 << 20; ++i, phi += step) {
        const double v = current(phi);
        if (v < prev) {
            descending = true;
        } else if (descending && v >= prev) {
            min_phi = phi - step;
            break;
        }
        prev = v;
    }
    if (min_phi == 0.0)
        throw std::runtime_error("central_fringe_fwhm: no fringe found");

    const auto [m_phi, neg_depth] = golden_section_maximize(
        [&](double p) { return -current(p); }, min_phi - step, min_phi + step, 1e-12);
    const double i_min = -neg_depth;
    const double half = 0.5 * (baseline + i_min);

    auto cross = [&](double lo, double hi) {
        // bisection for current == half; the bracket straddles the level
        const bool lo_above = current(lo) > half;
        for (int i = 0; i < 200 && hi - lo > 1e-14 * (1.0 + hi); ++i) {
            const double mid = 0.5 * (lo + hi);
            if ((current(mid) > half) == lo_above)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    };
    const double left = cross(0.0, m_phi);
    double hi = m_phi;
    for (int i = 0; i < 1 << 20 && current(hi) < half; ++i) hi += step;
    const double right = cross(m_phi, hi);
    return right - left;
}

}  // namespace quafe
