#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quafe/poisson.hpp"

namespace quafe {

using cdouble = std::complex<double>;

// Truncated multimode Fock space. Cutoffs must follow the sizing rule
// N_max >= <N> + 10 sqrt(<N> + 1) for the largest mean each mode hosts,
// which keeps the Poisson tail mass far below tail_tolerance.
struct ModeSpaceSpec {
    std::vector<int> cutoffs;      // per-mode maximum photon number
    double tail_tolerance = 1e-12;

    static ModeSpaceSpec for_means(std::span<const double> means, double tol = 1e-12)
    {
        ModeSpaceSpec s;
        s.tail_tolerance = tol;
        s.cutoffs.reserve(means.size());
        for (double m : means) s.cutoffs.push_back(poisson_cutoff(m));
        return s;
    }

    std::size_t mode_count() const { return cutoffs.size(); }

    void validate() const
    {
        if (cutoffs.empty())
            throw std::invalid_argument("ModeSpaceSpec: at least one mode required");
        for (int c : cutoffs)
            if (c < 0) throw std::invalid_argument("ModeSpaceSpec: negative cutoff");
        if (!(tail_tolerance > 0))
            throw std::invalid_argument("ModeSpaceSpec: tail_tolerance must be > 0");
    }
};

// Coherent amplitudes of S(beta)|0> = e^{-|b|^2/2} sum_N (b*)^N/sqrt(N!) |N>.
// Throws if the truncated tail mass exceeds tail_tolerance.
inline std::vector<cdouble> displace_vacuum(cdouble beta, int cutoff,
                                            double tail_tolerance = 1e-12)
{
    if (cutoff < 0) throw std::invalid_argument("displace_vacuum: negative cutoff");
    std::vector<cdouble> amps(static_cast<std::size_t>(cutoff) + 1);
    const double mean = std::norm(beta);
    amps[0] = std::exp(-0.5 * mean);
    const cdouble bc = std::conj(beta);
    double norm2 = std::norm(amps[0]);
    for (int n = 1; n <= cutoff; ++n) {
        amps[n] = amps[n - 1] * bc / std::sqrt(static_cast<double>(n));
        norm2 += std::norm(amps[n]);
    }
    if (1.0 - norm2 > tail_tolerance)
        throw std::runtime_error("displace_vacuum: cutoff too small for |beta|^2 = " +
                                 std::to_string(mean));
    return amps;
}

// Dense square block <m|S(beta)|n>, m,n in [0, size).
struct ComplexMatrix {
    int size = 0;
    std::vector<cdouble> a;  // row-major

    cdouble& at(int m, int n) { return a[static_cast<std::size_t>(m) * size + n]; }
    const cdouble& at(int m, int n) const { return a[static_cast<std::size_t>(m) * size + n]; }
};

// One exact matrix element via the associated Laguerre closed form, with
// every magnitude carried in log space. Elements are computed independently,
// so errors never propagate across the block (the natural column recurrence
// has parasitic solutions growing like (sqrt(m) + |beta|)^n / sqrt(n!) and
// collapses for blocks past ~10^2).
inline cdouble displacement_element(int m, int n, cdouble beta)
{
    if (m < 0 || n < 0) throw std::invalid_argument("displacement_element: negative index");
    const cdouble alpha = std::conj(beta);
    const double x = std::norm(alpha);
    if (x == 0.0) return m == n ? cdouble{1.0} : cdouble{};

    const int lo = std::min(m, n);
    const int d = std::abs(m - n);

    // scaled upward recurrence for L_lo^{(d)}(x)
    double l_prev = 1.0;
    double l_cur = 1.0 + d - x;
    double log_scale = 0.0;
    double lag = lo == 0 ? l_prev : l_cur;
    constexpr double kRescale = 1e270;
    for (int k = 1; k < lo; ++k) {
        const double next = ((2.0 * k + 1.0 + d - x) * l_cur - (k + d) * l_prev) / (k + 1.0);
        l_prev = l_cur;
        l_cur = next;
        if (std::abs(l_cur) > kRescale) {
            l_cur /= kRescale;
            l_prev /= kRescale;
            log_scale += std::log(kRescale);
        }
        lag = l_cur;
    }
    if (lag == 0.0) return cdouble{};

    const double log_mag = 0.5 * (std::lgamma(lo + 1.0) - std::lgamma(lo + d + 1.0)) +
                           0.5 * d * std::log(x) - 0.5 * x + log_scale +
                           std::log(std::abs(lag));
    const double arg = m >= n ? d * std::arg(alpha) : d * std::arg(-std::conj(alpha));
    const double mag = std::exp(log_mag);
    return (lag > 0 ? mag : -mag) * std::polar(1.0, arg);
}

inline ComplexMatrix displacement_matrix(cdouble beta, int size)
{
    if (size < 1) throw std::invalid_argument("displacement_matrix: size must be >= 1");
    ComplexMatrix d;
    d.size = size;
    d.a.assign(static_cast<std::size_t>(size) * size, cdouble{});
    for (int m = 0; m < size; ++m)
        for (int n = 0; n < size; ++n) d.at(m, n) = displacement_element(m, n, beta);
    return d;
}

// Weyl composition: S(b2) S(b1) = e^{i phase} S(b1 + b2) with
// phase = Im(b1 conj(b2)). Verified against matrix products in the tests.
struct DisplacementComposition {
    cdouble beta_total;
    double phase;
};

inline DisplacementComposition compose_displacements(cdouble beta1, cdouble beta2)
{
    return {beta1 + beta2, std::imag(beta1 * std::conj(beta2))};
}

// Product state over the modes of a ModeSpaceSpec. Amplitudes stay
// factorized per mode; all in-scope operations act mode-diagonally, so the
// dense product basis is materialized only on demand.
class PhotonicState {
public:
    static PhotonicState vacuum(ModeSpaceSpec spec)
    {
        spec.validate();
        PhotonicState st;
        st.spec_ = std::move(spec);
        st.modes_.resize(st.spec_.mode_count());
        for (std::size_t m = 0; m < st.modes_.size(); ++m) {
            st.modes_[m].assign(static_cast<std::size_t>(st.spec_.cutoffs[m]) + 1, cdouble{});
            st.modes_[m][0] = 1.0;
        }
        return st;
    }

    const ModeSpaceSpec& spec() const { return spec_; }
    std::size_t mode_count() const { return modes_.size(); }
    std::span<const cdouble> mode_amplitudes(std::size_t mode) const { return modes_.at(mode); }

    // Applies S(beta) to one mode; the norm lost past the cutoff must stay
    // within tail_tolerance.
    void displace(std::size_t mode, cdouble beta)
    {
        auto& v = modes_.at(mode);
        const int size = static_cast<int>(v.size());
        const ComplexMatrix d = displacement_matrix(beta, size);
        const double before = norm2_of(v);
        std::vector<cdouble> out(v.size(), cdouble{});
        for (int m = 0; m < size; ++m) {
            cdouble acc{};
            for (int n = 0; n < size; ++n) acc += d.at(m, n) * v[n];
            out[m] = acc;
        }
        const double after = norm2_of(out);
        if (before - after > spec_.tail_tolerance)
            throw std::runtime_error("PhotonicState::displace: truncation violation on mode " +
                                     std::to_string(mode));
        v = std::move(out);
    }

    // e^{i N phi} on one mode.
    void apply_phase(std::size_t mode, double phi)
    {
        auto& v = modes_.at(mode);
        for (std::size_t n = 0; n < v.size(); ++n)
            v[n] *= std::polar(1.0, static_cast<double>(n) * phi);
    }

    double norm2() const
    {
        double p = 1.0;
        for (const auto& v : modes_) p *= norm2_of(v);
        return p;
    }

    // <this|other>, product of per-mode overlaps.
    cdouble inner(const PhotonicState& other) const
    {
        if (other.modes_.size() != modes_.size())
            throw std::invalid_argument("PhotonicState::inner: mode count mismatch");
        cdouble p = 1.0;
        for (std::size_t m = 0; m < modes_.size(); ++m) {
            const auto& a = modes_[m];
            const auto& b = other.modes_[m];
            const std::size_t n = std::min(a.size(), b.size());
            cdouble s{};
            for (std::size_t i = 0; i < n; ++i) s += std::conj(a[i]) * b[i];
            p *= s;
        }
        return p;
    }

    // Marginal photon-number distribution of one mode; sums to norm2().
    std::vector<double> number_distribution(std::size_t mode) const
    {
        double rest = 1.0;
        for (std::size_t m = 0; m < modes_.size(); ++m)
            if (m != mode) rest *= norm2_of(modes_[m]);
        const auto& v = modes_.at(mode);
        std::vector<double> p(v.size());
        for (std::size_t n = 0; n < v.size(); ++n) p[n] = std::norm(v[n]) * rest;
        return p;
    }

    // Dense product-basis amplitudes above `threshold` in modulus, as
    // (occupations, amplitude) pairs in lexicographic basis order.
    std::vector<std::pair<std::vector<int>, cdouble>> dense_amplitudes(
        double threshold = 0.0, std::size_t max_entries = 1u << 22) const
    {
        std::vector<std::pair<std::vector<int>, cdouble>> out;
        std::vector<int> occ(modes_.size(), 0);
        dense_rec(0, cdouble{1.0}, threshold, max_entries, occ, out);
        return out;
    }

private:
    static double norm2_of(const std::vector<cdouble>& v)
    {
        double s = 0.0;
        for (const auto& x : v) s += std::norm(x);
        return s;
    }

    void dense_rec(std::size_t mode, cdouble partial, double threshold,
                   std::size_t max_entries, std::vector<int>& occ,
                   std::vector<std::pair<std::vector<int>, cdouble>>& out) const
    {
        if (std::abs(partial) <= threshold) return;
        if (mode == modes_.size()) {
            if (out.size() >= max_entries)
                throw std::runtime_error("PhotonicState::dense_amplitudes: basis too large");
            out.emplace_back(occ, partial);
            return;
        }
        const auto& v = modes_[mode];
        for (std::size_t n = 0; n < v.size(); ++n) {
            occ[mode] = static_cast<int>(n);
            dense_rec(mode + 1, partial * v[n], threshold, max_entries, occ, out);
        }
        occ[mode] = 0;
    }

    ModeSpaceSpec spec_;
    std::vector<std::vector<cdouble>> modes_;
};

inline std::vector<double> number_distribution(const PhotonicState& state, std::size_t mode)
{
    return state.number_distribution(mode);
}

}  // namespace quafe
