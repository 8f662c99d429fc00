#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>

namespace quafe {

// Pairwise summation; deterministic for a fixed input order regardless of
// how callers shard surrounding work.
inline double pairwise_sum(std::span<const double> v)
{
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

// Bisection on a bracketing interval [a, b] with f(a) and f(b) of opposite
// sign (f(a) <= 0 <= f(b)). Converges to relative tolerance on x.
inline double bisect(const std::function<double(double)>& f, double a, double b,
                     double rel_tol, int max_iter = 200)
{
    for (int i = 0; i < max_iter && (b - a) > rel_tol * (std::abs(a) + std::abs(b)); ++i) {
        const double mid = 0.5 * (a + b);
        if (f(mid) > 0)
            b = mid;
        else
            a = mid;
    }
    return 0.5 * (a + b);
}

// Golden-section maximization on [a, b]; assumes a unimodal objective.
// Returns (argmax, max).
inline std::pair<double, double> golden_section_maximize(
    const std::function<double(double)>& f, double a, double b, double rel_tol)
{
    if (!(a < b))
        throw std::invalid_argument("golden_section_maximize: empty bracket");
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    while ((b - a) > rel_tol * (std::abs(a) + std::abs(b))) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    const double x = 0.5 * (a + b);
    return {x, f(x)};
}

}  // namespace quafe
