#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "quafe/config.hpp"
#include "quafe/coupler.hpp"
#include "quafe/interference.hpp"

using namespace quafe;

namespace {

CouplerGeometry reference_geometry()
{
    CouplerGeometry g;
    g.min_distance_nm = 60.0;
    g.field_gradient = 1e-5;  // 10 V/mm
    return g;
}

}  // namespace

TEST_CASE("theta at the reference working point")
{
    const auto beam = lorentz_factors(200e3);
    const auto g = reference_geometry();
    // 2 * 510998.95 * gamma(200 keV) / (1e-5 * 300), evaluated independently
    CHECK_THAT(coupler_theta(beam, g, 300.0), Catch::Matchers::WithinRel(473999300.0, 1e-9));

    CouplerGeometry doubled = g;
    doubled.field_gradient *= 2.0;
    CHECK(coupler_theta(beam, doubled, 300.0) == 0.5 * coupler_theta(beam, g, 300.0));
    CHECK(coupler_theta(beam, g, 600.0) == 0.5 * coupler_theta(beam, g, 300.0));

    CHECK_THROWS_AS(coupler_theta(beam, g, 0.0), std::invalid_argument);
    CouplerGeometry zero_field = g;
    zero_field.field_gradient = 0.0;
    CHECK_THROWS_AS(coupler_theta(beam, zero_field, 300.0), std::invalid_argument);
}

TEST_CASE("effective length suppression and asymptotics")
{
    const auto beam = lorentz_factors(200e3);
    const auto g = reference_geometry();

    const double reference = effective_length(beam, g, 436.0);
    CHECK(reference > 0.1e6);  // the quoted millimeter range
    CHECK(reference < 10e6);

    CouplerGeometry far = g;
    far.min_distance_nm = 1e6;
    CHECK(effective_length(beam, far, 436.0) < 1e-300 * reference + 1e-200);

    // large-theta closed form: lambda (v/c) sqrt(pi theta/2) exp(-2b/lambda)
    for (double lam : {50.0, 300.0, 800.0}) {
        const double theta = coupler_theta(beam, g, lam);
        REQUIRE(theta > 1e4);
        const double closed =
            lam * beam.beta * std::sqrt(M_PI * theta / 2.0) * std::exp(-2.0 * g.min_distance_nm / lam);
        CHECK_THAT(effective_length(beam, g, lam), Catch::Matchers::WithinRel(closed, 1e-4));
    }
}

TEST_CASE("mean photon numbers with zero rates vanish")
{
    const WaveguideSpec spec{5.8, 600.0, 800.0, 4};
    auto g = reference_geometry();
    g.base_rates.assign(4, 0.0);
    const auto result = mean_photon_numbers(lorentz_factors(200e3), spec, g);
    REQUIRE(result.modes.size() == 4);
    for (const auto& m : result.modes) {
        CHECK(m.mean_photons == 0.0);
        CHECK(m.matched);
    }
    // ordering invariant
    for (std::size_t i = 0; i + 1 < result.modes.size(); ++i)
        CHECK(result.modes[i].photon_energy < result.modes[i + 1].photon_energy);
}

TEST_CASE("base rates must cover the retained modes")
{
    const WaveguideSpec spec{5.8, 600.0, 800.0, 4};
    auto g = reference_geometry();
    g.base_rates.assign(2, 0.0);
    CHECK_THROWS_AS(mean_photon_numbers(lorentz_factors(200e3), spec, g), std::invalid_argument);
}

TEST_CASE("calibration hits both anchors")
{
    const WaveguideSpec spec{5.8, 600.0, 800.0, 4};
    const auto grid = default_k_grid();
    const auto beam = lorentz_factors(200e3);
    auto g = reference_geometry();
    g.base_rates = calibrate_base_rates(beam, spec, g, {}, grid);

    const auto result = mean_photon_numbers(beam, spec, g, grid);
    const auto means = result.mean_photon_list();
    const auto ratios = result.frequency_ratios();
    CHECK_THAT(means[0], Catch::Matchers::WithinRel(40.0, 1e-12));
    CHECK_THAT(effective_photon_number(means, ratios), Catch::Matchers::WithinRel(280.0, 1e-10));
    CHECK(std::abs(effective_photon_number(means, ratios) - 280.0) < 14.0);
}

TEST_CASE("calibration is invariant under weight rescaling")
{
    const WaveguideSpec spec{5.8, 600.0, 800.0, 4};
    const auto grid = default_k_grid();
    const auto beam = lorentz_factors(200e3);
    const auto g = reference_geometry();

    const std::vector<double> w1{1.0, 2.0, 0.5};
    std::vector<double> w2 = w1;
    for (double& w : w2) w *= 2.0;

    const auto r1 = calibrate_base_rates(beam, spec, g, w1, grid);
    const auto r2 = calibrate_base_rates(beam, spec, g, w2, grid);
    REQUIRE(r1.size() == r2.size());
    for (std::size_t i = 0; i < r1.size(); ++i)
        CHECK_THAT(r2[i], Catch::Matchers::WithinRel(r1[i], 1e-12));
}

TEST_CASE("calibration needs at least two matched modes")
{
    const WaveguideSpec spec{5.8, 600.0, 800.0, 1};
    const auto grid = default_k_grid();
    CHECK_THROWS_AS(calibrate_base_rates(lorentz_factors(200e3), spec, reference_geometry(), {}, grid),
                    std::runtime_error);
}

TEST_CASE("mean photons scale exactly with the length multiplier")
{
    RunConfig cfg;
    const auto profile = build_profile(cfg);
    auto scaled_geometry = profile.geometry;
    scaled_geometry.length_scale = 2.0;

    const auto base = mean_photon_numbers(profile.beam, cfg.spec, profile.geometry, profile.k_grid);
    const auto scaled =
        mean_photon_numbers(profile.beam, cfg.spec, scaled_geometry, profile.k_grid);
    for (std::size_t i = 0; i < base.modes.size(); ++i) {
        CHECK(scaled.modes[i].mean_photons == 2.0 * base.modes[i].mean_photons);
        CHECK(scaled.modes[i].effective_length == base.modes[i].effective_length);
    }
}

TEST_CASE("effective lengths are ordered and grow with beam energy")
{
    RunConfig cfg;
    const auto profile = build_profile(cfg);

    std::vector<double> leff0;
    for (double kev = 60; kev <= 200; kev += 10) {
        const auto result = mean_photon_numbers(lorentz_factors(kev * 1e3), cfg.spec,
                                                profile.geometry, profile.k_grid);
        // lower-order modes carry longer effective lengths
        double prev = std::numeric_limits<double>::infinity();
        for (const auto& m : result.modes) {
            if (!m.matched) continue;
            CHECK(m.effective_length < prev);
            prev = m.effective_length;
        }
        REQUIRE(result.modes[0].matched);
        leff0.push_back(result.modes[0].effective_length);
    }
    for (std::size_t i = 0; i + 1 < leff0.size(); ++i) CHECK(leff0[i] < leff0[i + 1]);
}
