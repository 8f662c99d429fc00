#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "quafe/numeric.hpp"
#include "quafe/poisson.hpp"

namespace quafe {

// Pure variants demand vacuum in every mode n >= 1; dressed variants
// tolerate (and later filter) higher-mode photons. Band variants sum the
// mode-0 count over [N0-2, N0+2], clipped at 0 for small N0.
enum class NoonVariant { pure_single, pure_band, dressed_single, dressed_band };

inline const char* to_string(NoonVariant v)
{
    switch (v) {
        case NoonVariant::pure_single: return "pure_single";
        case NoonVariant::pure_band: return "pure_band";
        case NoonVariant::dressed_single: return "dressed_single";
        case NoonVariant::dressed_band: return "dressed_band";
    }
    return "?";
}

inline NoonVariant noon_variant_from_string(const std::string& s)
{
    if (s == "pure_single") return NoonVariant::pure_single;
    if (s == "pure_band") return NoonVariant::pure_band;
    if (s == "dressed_single") return NoonVariant::dressed_single;
    if (s == "dressed_band") return NoonVariant::dressed_band;
    throw std::invalid_argument("unknown NOON variant: " + s);
}

inline double noon_probability(std::span<const double> mean_photons, int target_n0,
                               NoonVariant variant)
{
    if (target_n0 < 1)
        throw std::invalid_argument("noon_probability: target N0 must be >= 1");
    if (mean_photons.empty())
        throw std::invalid_argument("noon_probability: no modes");
    const double p0 = mean_photons[0];

    double window;
    if (variant == NoonVariant::pure_single || variant == NoonVariant::dressed_single) {
        window = poisson_pmf(p0, target_n0);
    } else {
        window = 0.0;
        for (int n = std::max(0, target_n0 - 2); n <= target_n0 + 2; ++n)
            window += poisson_pmf(p0, n);
    }
    if (variant == NoonVariant::dressed_single || variant == NoonVariant::dressed_band)
        return window;

    double others = 0.0;
    for (std::size_t n = 1; n < mean_photons.size(); ++n) others += mean_photons[n];
    return window * std::exp(-others);
}

struct LengthScaleOptimum {
    double scale;        // s*, multiplier on every L_eff
    double probability;  // noon_probability at s*
};

// Maximizes noon_probability over the interaction-length multiplier s.
// Golden-section over a bracket built from the analytic candidates
// s = N0/P_0(1) (dressed) and s = N0/sum_n P_n(1) (pure).
inline LengthScaleOptimum optimize_length_scale(std::span<const double> mean_photons_at_unit,
                                                int target_n0, NoonVariant variant)
{
    if (target_n0 < 1)
        throw std::invalid_argument("optimize_length_scale: target N0 must be >= 1");
    if (mean_photons_at_unit.empty() || !(mean_photons_at_unit[0] > 0.0))
        throw std::invalid_argument("optimize_length_scale: P_0(s=1) must be > 0");

    double total = 0.0;
    for (double p : mean_photons_at_unit) total += p;
    const double cand_dressed = target_n0 / mean_photons_at_unit[0];
    const double cand_pure = target_n0 / total;

    auto probability_at = [&](double s) {
        std::vector<double> scaled(mean_photons_at_unit.begin(), mean_photons_at_unit.end());
        for (double& p : scaled) p *= s;
        return noon_probability(scaled, target_n0, variant);
    };

    const double lo = 0.5 * std::min(cand_dressed, cand_pure);
    const double hi = 2.0 * std::max(cand_dressed, cand_pure);
    const auto [scale, prob] = golden_section_maximize(probability_at, lo, hi, 1e-8);
    return {scale, prob};
}

// Heralded-event rate. grating_factor is the per-pass current correction of
// a realistic electron grating, applied once per grating pass (the split and
// the mix), hence squared by default.
inline double generation_rate(double probability, double beam_current_per_s,
                              double grating_factor = 1.0, int grating_passes = 2)
{
    if (probability < 0.0 || probability > 1.0)
        throw std::invalid_argument("generation_rate: probability must be in [0, 1]");
    if (beam_current_per_s < 0.0)
        throw std::invalid_argument("generation_rate: beam current must be >= 0");
    return probability * beam_current_per_s * std::pow(grating_factor, grating_passes);
}

}  // namespace quafe
