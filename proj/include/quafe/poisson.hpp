#pragma once

#include <cmath>
#include <stdexcept>

namespace quafe {

namespace detail {

// stirlerr(n) = ln n! - (n ln n - n + ln(2 pi n)/2). Five-term asymptotic
// series past 15, direct log-gamma difference below.
inline double stirlerr(double n)
{
    if (n < 15.0) {
        return std::lgamma(n + 1.0) - (n + 0.5) * std::log(n) + n -
               0.5 * std::log(2.0 * M_PI);
    }
    const double nn = n * n;
    return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - (1.0 / 1680.0 - 1.0 / (1188.0 * nn)) /
                                                            nn) /
                                            nn) /
                             nn) /
           n;
}

// Binomial deviance x ln(x/np) + np - x, evaluated without cancellation
// when x is close to np.
inline double bd0(double x, double np)
{
    if (std::abs(x - np) < 0.1 * (x + np)) {
        const double v = (x - np) / (x + np);
        double s = (x - np) * v;
        double ej = 2.0 * x * v;
        const double v2 = v * v;
        for (int j = 1; j < 1000; ++j) {
            ej *= v2;
            const double s1 = s + ej / (2.0 * j + 1.0);
            if (s1 == s) return s1;
            s = s1;
        }
        return s;
    }
    return x * std::log(x / np) + np - x;
}

}  // namespace detail

// Poisson pmf e^{-m} m^n / n!. The saddle-point form
//   exp(-stirlerr(n) - bd0(n, m)) / sqrt(2 pi n)
// keeps full relative accuracy for means and counts up to ~1e4, where the
// naive log-space difference already loses five digits.
inline double poisson_pmf(double mean, long long n)
{
    if (mean < 0)
        throw std::invalid_argument("poisson_pmf: mean must be >= 0");
    if (n < 0)
        throw std::invalid_argument("poisson_pmf: count must be >= 0");
    if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
    if (n == 0) return std::exp(-mean);
    const double nd = static_cast<double>(n);
    return std::exp(-detail::stirlerr(nd) - detail::bd0(nd, mean)) /
           std::sqrt(2.0 * M_PI * nd);
}

// Smallest cutoff guaranteeing Poisson tail mass far below 1e-12; the
// 10-sigma-plus rule keeps a mean of 40 at cutoff 105.
inline int poisson_cutoff(double mean)
{
    if (mean < 0)
        throw std::invalid_argument("poisson_cutoff: mean must be >= 0");
    return static_cast<int>(std::ceil(mean + 10.0 * std::sqrt(mean + 1.0)));
}

}  // namespace quafe
