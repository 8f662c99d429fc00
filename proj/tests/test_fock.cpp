#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "quafe/fock.hpp"
#include "quafe/poisson.hpp"

using namespace quafe;

namespace {

// Independent reference for <m|S(beta)|n>: the explicit normal-ordered sum
//   e^{-x/2} sqrt(m! n!) sum_q a^{m-n+q} (-a*)^q / [(m-n+q)! q! (n-q)!],
// a finite hypergeometric series evaluated with log-gamma magnitudes. The
// implementation goes through Laguerre recurrences instead; any shared bug
// would have to conspire across both routes.
cdouble series_element(int m, int n, cdouble beta)
{
    // successive terms differ by the real ratio -x (n-q) / ((p+1)(q+1)),
    // because alpha * (-conj alpha) = -|alpha|^2; the whole alternating sum
    // is one complex prefactor times a real series. Building terms by ratio
    // keeps their cancellation exact; extended precision absorbs the rest.
    const cdouble alpha = std::conj(beta);
    const double x = std::norm(alpha);
    if (x == 0.0) return m == n ? cdouble{1.0} : cdouble{};

    const int q0 = std::max(0, n - m);
    const int p0 = m - n + q0;
    const double log_first = 0.5 * (std::lgamma(m + 1.0) + std::lgamma(n + 1.0)) - 0.5 * x +
                             0.5 * (p0 + q0) * std::log(x) - std::lgamma(p0 + 1.0) -
                             std::lgamma(q0 + 1.0) - std::lgamma(n - q0 + 1.0);
    const double phase = p0 * std::arg(alpha) + q0 * std::arg(-std::conj(alpha));

    long double term = 1.0L;
    long double sum = term;
    for (int q = q0; q < n; ++q) {
        const int p = m - n + q;
        term *= -static_cast<long double>(x) * (n - q) /
                (static_cast<long double>(p + 1) * (q + 1));
        sum += term;
    }
    const double value = static_cast<double>(sum) * std::exp(log_first);
    return value * std::polar(1.0, phase);
}

double max_block_deviation_from_identity(const ComplexMatrix& product, int block)
{
    double worst = 0.0;
    for (int m = 0; m < block; ++m)
        for (int n = 0; n < block; ++n) {
            const cdouble want = m == n ? cdouble{1.0} : cdouble{};
            worst = std::max(worst, std::abs(product.at(m, n) - want));
        }
    return worst;
}

ComplexMatrix multiply(const ComplexMatrix& a, const ComplexMatrix& b)
{
    ComplexMatrix c;
    c.size = a.size;
    c.a.assign(static_cast<std::size_t>(a.size) * a.size, cdouble{});
    for (int m = 0; m < a.size; ++m)
        for (int k = 0; k < a.size; ++k) {
            const cdouble v = a.at(m, k);
            if (v == cdouble{}) continue;
            for (int n = 0; n < a.size; ++n) c.at(m, n) += v * b.at(k, n);
        }
    return c;
}

// Row range for isometry checks: every column n < block must hold its full
// displaced-|n> support. Displaced number states are wider than Poisson by
// ~sqrt(2n+1), hence the extra block-sized margin.
int extended_rows(int block, double beta_abs)
{
    const double top = std::sqrt(static_cast<double>(block)) + beta_abs;
    return poisson_cutoff(top * top) + block + 16;
}

}  // namespace

TEST_CASE("displaced vacuum amplitudes")
{
    const auto vac = displace_vacuum(cdouble{0.0, 0.0}, 8);
    CHECK(vac[0] == cdouble{1.0});
    for (int n = 1; n <= 8; ++n) CHECK(vac[n] == cdouble{});

    const auto one = displace_vacuum(cdouble{1.0, 0.0}, poisson_cutoff(1.0));
    CHECK_THAT(std::norm(one[0]), Catch::Matchers::WithinRel(std::exp(-1.0), 1e-13));
    CHECK_THAT(std::norm(one[1]), Catch::Matchers::WithinRel(std::exp(-1.0), 1e-13));

    CHECK_THROWS_AS(displace_vacuum(cdouble{std::sqrt(40.0), 0.0}, 20), std::runtime_error);
}

TEST_CASE("displaced vacuum mean and variance at the anchor population")
{
    // the anchor population stays accurate already at cutoff 104; the sizing
    // rule itself returns ceil(40 + 10 sqrt(41)) = 105
    const double mean = 40.0;
    CHECK(poisson_cutoff(mean) == 105);
    const int cutoff = 104;
    const auto amps = displace_vacuum(cdouble{0.0, std::sqrt(mean)}, cutoff);
    double m1 = 0.0, m2 = 0.0;
    for (int n = 0; n <= cutoff; ++n) {
        const double p = std::norm(amps[n]);
        m1 += (n - mean) * p;
        m2 += (n - mean) * (n - mean) * p;
    }
    CHECK(std::abs(m1) < 1e-9);
    CHECK(std::abs(m2 - mean) < 1e-9 * mean);
}

TEST_CASE("displacement matrix against the series reference")
{
    for (const cdouble beta : {cdouble{1.1, 0.7}, cdouble{0.0, 2.0}, cdouble{-2.5, 1.2},
                               cdouble{3.0, 0.0}}) {
        const int size = 32;
        const auto d = displacement_matrix(beta, size);
        double worst = 0.0;
        for (int m = 0; m < size; ++m)
            for (int n = 0; n < size; ++n)
                worst = std::max(worst, std::abs(d.at(m, n) - series_element(m, n, beta)));
        INFO("beta = " << beta.real() << " + " << beta.imag() << "i");
        CHECK(worst < 1e-8);
    }
}

TEST_CASE("displacement matrix identities")
{
    const auto id = displacement_matrix(cdouble{}, 6);
    CHECK(max_block_deviation_from_identity(id, 6) == 0.0);

    // column 0 is the displaced vacuum
    const cdouble beta{0.8, -0.5};
    const int rows = extended_rows(12, std::abs(beta));
    const auto d = displacement_matrix(beta, rows);
    const auto col = displace_vacuum(beta, rows - 1);
    for (int m = 0; m < rows; ++m) CHECK(std::abs(d.at(m, 0) - col[m]) < 1e-14);
}

TEST_CASE("inverse pair composes to the identity block")
{
    const cdouble beta{2.0, 0.0};
    const int block = poisson_cutoff(std::norm(beta)) + 1;
    const int rows = extended_rows(block, std::abs(beta));
    const auto product = multiply(displacement_matrix(beta, rows),
                                  displacement_matrix(-beta, rows));
    CHECK(max_block_deviation_from_identity(product, block) < 1e-8);
}

TEST_CASE("truncated unitarity on the rule-sized block")
{
    for (const cdouble beta : {cdouble{std::sqrt(10.0), 0.0}, cdouble{0.0, 3.0},
                               cdouble{2.0, 2.0}}) {
        const int block = poisson_cutoff(10.0) + 1;
        const int rows = extended_rows(block, std::abs(beta));
        const auto d = displacement_matrix(beta, rows);
        double worst = 0.0;
        for (int n = 0; n < block; ++n)
            for (int m = 0; m < block; ++m) {
                cdouble acc{};
                for (int k = 0; k < rows; ++k) acc += std::conj(d.at(k, n)) * d.at(k, m);
                const cdouble want = m == n ? cdouble{1.0} : cdouble{};
                worst = std::max(worst, std::abs(acc - want));
            }
        INFO("|beta|^2 = " << std::norm(beta));
        CHECK(worst < 1e-8);
    }
}

TEST_CASE("Weyl composition matches matrix products on vacuum")
{
    const std::vector<cdouble> betas{{0.5, 0.0}, {1.5, 1.0}, {0.0, -2.0}, {2.5, -1.5}, {3.0, 0.0}};
    for (const auto& b1 : betas) {
        for (const auto& b2 : betas) {
            const auto [total, phase] = compose_displacements(b1, b2);
            CHECK(total == b1 + b2);

            const int block = poisson_cutoff(std::norm(total)) + 1;
            const int rows = extended_rows(block, std::abs(b1) + std::abs(b2));
            const auto product = multiply(displacement_matrix(b2, rows),
                                          displacement_matrix(b1, rows));
            const auto direct = displace_vacuum(total, rows - 1);
            const cdouble weyl = std::polar(1.0, phase);
            double worst = 0.0;
            for (int m = 0; m < block; ++m)
                worst = std::max(worst, std::abs(product.at(m, 0) - weyl * direct[m]));
            INFO("b1 = (" << b1.real() << "," << b1.imag() << ") b2 = (" << b2.real() << ","
                          << b2.imag() << ")");
            CHECK(worst < 1e-8);

            // vacuum expectation |<0|S(b2)S(b1)|0>|^2 = e^{-|b1+b2|^2}
            CHECK_THAT(std::norm(product.at(0, 0)),
                       Catch::Matchers::WithinAbs(std::exp(-std::norm(total)), 1e-10));
        }
    }
    // inverse pair: total zero, global phase only
    const auto [zero, phase] = compose_displacements(cdouble{1.0, 2.0}, cdouble{-1.0, -2.0});
    CHECK(zero == cdouble{});
    CHECK(phase == 0.0);  // Im(b * conj(-b)) = 0
    // real pair adds with no phase
    const auto [two, phase2] = compose_displacements(cdouble{0.7, 0.0}, cdouble{0.7, 0.0});
    CHECK(two == cdouble{1.4, 0.0});
    CHECK(phase2 == 0.0);
}

TEST_CASE("photonic state marginals are Poissonian")
{
    auto state = PhotonicState::vacuum(ModeSpaceSpec::for_means(std::vector<double>{4.0}));
    auto dist = state.number_distribution(0);
    CHECK(dist[0] == 1.0);

    state.displace(0, cdouble{2.0, 0.0});  // |beta|^2 = 4
    dist = state.number_distribution(0);
    double kl = 0.0;
    for (std::size_t n = 0; n < dist.size(); ++n) {
        const double q = poisson_pmf(4.0, static_cast<long long>(n));
        if (dist[n] > 0.0) kl += dist[n] * std::log(dist[n] / q);
    }
    CHECK(kl < 1e-10);
    double total = 0.0;
    for (double p : dist) total += p;
    CHECK_THAT(total, Catch::Matchers::WithinAbs(state.norm2(), 1e-14));
}

TEST_CASE("product states keep independent marginals")
{
    const std::vector<double> means{2.25, 0.64};
    auto state = PhotonicState::vacuum(ModeSpaceSpec::for_means(means));
    state.displace(0, cdouble{1.5, 0.0});
    state.displace(1, cdouble{0.0, 0.8});
    state.apply_phase(0, 0.7);

    for (std::size_t mode = 0; mode < 2; ++mode) {
        const auto dist = state.number_distribution(mode);
        for (std::size_t n = 0; n < dist.size(); ++n)
            CHECK_THAT(dist[n],
                       Catch::Matchers::WithinAbs(
                           poisson_pmf(means[mode], static_cast<long long>(n)), 1e-12));
    }

    // dense amplitudes factorize over modes
    const auto dense = state.dense_amplitudes(1e-8);
    const auto m0 = state.mode_amplitudes(0);
    const auto m1 = state.mode_amplitudes(1);
    for (const auto& [occ, amp] : dense)
        CHECK(std::abs(amp - m0[occ[0]] * m1[occ[1]]) < 1e-15);

    // norm stays within mode_count * tail tolerance
    CHECK(std::abs(state.norm2() - 1.0) < 2.0 * state.spec().tail_tolerance);
}

TEST_CASE("phases do not change photon statistics")
{
    auto state = PhotonicState::vacuum(ModeSpaceSpec::for_means(std::vector<double>{1.0}));
    state.displace(0, cdouble{1.0, 0.0});
    const auto before = state.number_distribution(0);
    state.apply_phase(0, 1.234);
    const auto after = state.number_distribution(0);
    for (std::size_t n = 0; n < before.size(); ++n)
        CHECK_THAT(after[n], Catch::Matchers::WithinAbs(before[n], 1e-15));
}

TEST_CASE("repeated displacement past the cutoff is rejected")
{
    auto state = PhotonicState::vacuum(ModeSpaceSpec::for_means(std::vector<double>{1.0}));
    state.displace(0, cdouble{1.0, 0.0});
    CHECK_THROWS_AS(state.displace(0, cdouble{4.0, 0.0}), std::runtime_error);
}

TEST_CASE("mode space construction rules")
{
    const auto spec = ModeSpaceSpec::for_means(std::vector<double>{40.0, 0.0});
    CHECK(spec.cutoffs[0] == 105);
    CHECK(spec.cutoffs[1] == 10);
    CHECK_THROWS_AS(PhotonicState::vacuum(ModeSpaceSpec{}), std::invalid_argument);
}
