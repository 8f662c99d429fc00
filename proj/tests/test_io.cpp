#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <sstream>
#include <vector>

#include "quafe/config.hpp"
#include "quafe/io.hpp"

using namespace quafe;

TEST_CASE("double formatting round-trips")
{
    for (double v : {0.3, 1.0 / 3.0, 2.5e-17, 473999300.0, -0.6953}) {
        CHECK(std::stod(format_double(v)) == v);
    }
    std::ostringstream out;
    csv_row(out, {"a", "b", "c"});
    CHECK(out.str() == "a,b,c\n");
}

TEST_CASE("parallel_for covers every slot exactly once")
{
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
    parallel_for(hits.size(), 1, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 2);
}

TEST_CASE("detection report serialization")
{
    DetectionReport report;
    report.current = 0.25;
    report.discarded = 0.75;
    HeraldedOutcome h;
    h.energy_loss = 0.88;
    h.probability = 0.25;
    HeraldComponent c;
    c.waveguide_occupations = {{2}, {0}};
    c.amplitude = {0.6, 0.8};
    h.components.push_back(c);
    report.heralds.push_back(h);

    const auto j = detection_report_json(report);
    CHECK(j["current"] == 0.25);
    CHECK(j["heralds"][0]["energy_loss_eV"] == 0.88);
    CHECK(j["heralds"][0]["components"][0]["waveguide_occupations"][0][0] == 2);
    CHECK(j["heralds"][0]["components"][0]["re"] == 0.6);
    // stable field order for byte-identical dumps
    CHECK(j.dump().rfind("{\"current\":", 0) == 0);
}

TEST_CASE("photonic state debug dump")
{
    auto state = PhotonicState::vacuum(ModeSpaceSpec::for_means(std::vector<double>{1.0, 0.5}));
    state.displace(0, cdouble{1.0, 0.0});
    const auto j = photonic_state_json(state, 1e-6);
    REQUIRE(j.is_array());
    REQUIRE(!j.empty());
    CHECK(j[0]["basis"].size() == 2);
    CHECK(j[0].contains("re"));
    CHECK(j[0].contains("im"));
}

TEST_CASE("config parsing")
{
    const auto cfg = parse_config(
        "# comment\nepsilon = 6.1\nwidth_nm = 500 # trailing\nheight_nm=700\n"
        "max_modes = 3\nb_nm = 55\nE_DC_V_per_mm = 20\nbeam_energy_keV = 150\n"
        "relative_weights = 1, 0.5, 0.25\nthreads = 2\nseed = 42\n");
    CHECK(cfg.spec.permittivity == 6.1);
    CHECK(cfg.spec.width_nm == 500.0);
    CHECK(cfg.spec.height_nm == 700.0);
    CHECK(cfg.spec.max_modes == 3);
    CHECK(cfg.relative_weights == std::vector<double>{1.0, 0.5, 0.25});
    CHECK(cfg.threads == 2);
    CHECK(cfg.seed == 42);
    // V/mm -> V/nm
    CHECK_THAT(cfg.geometry().field_gradient, Catch::Matchers::WithinRel(2e-5, 1e-12));

    CHECK_THROWS_WITH(parse_config("nonsense = 1\n"),
                      Catch::Matchers::ContainsSubstring("unknown key 'nonsense'"));
    CHECK_THROWS_WITH(parse_config("epsilon 5.8\n"),
                      Catch::Matchers::ContainsSubstring("expected key = value"));
    CHECK_THROWS_AS(parse_config("epsilon = 0.5\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config("threads = 0\n"), std::invalid_argument);
    CHECK_THROWS_AS(load_config("/nonexistent/path.conf"), std::invalid_argument);
}

TEST_CASE("profile construction calibrates at the anchor energy")
{
    RunConfig cfg;
    cfg.beam_energy_kev = 120.0;
    const auto profile = build_profile(cfg);
    CHECK_THAT(profile.beam.kinetic_energy, Catch::Matchers::WithinRel(120e3, 1e-12));
    // rates were fixed at 200 keV: re-evaluating there reproduces the anchor
    const auto at_anchor = mean_photon_numbers(lorentz_factors(200e3), cfg.spec,
                                               profile.geometry, profile.k_grid);
    CHECK_THAT(at_anchor.modes[0].mean_photons, Catch::Matchers::WithinRel(40.0, 1e-12));
    // at 120 keV the population is below the anchor
    const auto at_beam = mean_photon_numbers(profile.beam, cfg.spec, profile.geometry,
                                             profile.k_grid);
    CHECK(at_beam.modes[0].mean_photons < 40.0);
}
