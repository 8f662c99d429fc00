#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "quafe/coupler.hpp"
#include "quafe/dsl.hpp"
#include "quafe/kinematics.hpp"
#include "quafe/waveguide.hpp"

namespace quafe {

// Run configuration: waveguide + coupler geometry + beam + solver knobs.
// Shipped defaults are the diamond-guide reference parameters; the
// relative mode weights for n >= 1 are calibration inputs with a uniform
// non-first-principles default.
struct RunConfig {
    WaveguideSpec spec{5.8, 600.0, 800.0, 4};
    double b_nm = 60.0;
    double e_dc_v_per_mm = 10.0;
    std::vector<double> relative_weights;  // n >= 1; empty = uniform
    double beam_energy_kev = 200.0;
    double length_scale = 1.0;
    double k_min_per_nm = 2e-4;
    double k_max_per_nm = 0.06;
    int k_samples = 240;
    int threads = 1;
    unsigned long long seed = 0;  // reserved; every computation is deterministic

    void validate() const
    {
        spec.validate();
        if (!(b_nm > 0)) throw std::invalid_argument("config: b_nm must be > 0");
        if (!(e_dc_v_per_mm > 0)) throw std::invalid_argument("config: E_DC_V_per_mm must be > 0");
        if (!(beam_energy_kev >= 0)) throw std::invalid_argument("config: beam energy must be >= 0");
        if (!(length_scale > 0)) throw std::invalid_argument("config: length_scale must be > 0");
        if (!(k_min_per_nm > 0) || !(k_max_per_nm > k_min_per_nm) || k_samples < 2)
            throw std::invalid_argument("config: invalid k grid");
        if (threads < 1) throw std::invalid_argument("config: thread count must be >= 1");
        for (double w : relative_weights)
            if (!(w > 0)) throw std::invalid_argument("config: relative_weights must be > 0");
    }

    CouplerGeometry geometry() const
    {
        CouplerGeometry g;
        g.min_distance_nm = b_nm;
        g.field_gradient = e_dc_v_per_mm * 1e-6;  // V/mm -> V/nm
        g.length_scale = length_scale;
        return g;
    }

    std::vector<double> k_grid() const
    {
        return default_k_grid(k_min_per_nm, k_max_per_nm, k_samples);
    }
};

// Key-value config text: `key = value` lines, '#' comments,
// relative_weights as a comma-separated list.
inline RunConfig parse_config(const std::string& text)
{
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto as_double = [&] {
            std::size_t used = 0;
            const double v = std::stod(value, &used);
            if (used != value.size())
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": bad number '" + value + "'");
            return v;
        };
        if (key == "epsilon") cfg.spec.permittivity = as_double();
        else if (key == "width_nm") cfg.spec.width_nm = as_double();
        else if (key == "height_nm") cfg.spec.height_nm = as_double();
        else if (key == "max_modes") cfg.spec.max_modes = static_cast<int>(as_double());
        else if (key == "b_nm") cfg.b_nm = as_double();
        else if (key == "E_DC_V_per_mm") cfg.e_dc_v_per_mm = as_double();
        else if (key == "beam_energy_keV") cfg.beam_energy_kev = as_double();
        else if (key == "length_scale") cfg.length_scale = as_double();
        else if (key == "k_min_per_nm") cfg.k_min_per_nm = as_double();
        else if (key == "k_max_per_nm") cfg.k_max_per_nm = as_double();
        else if (key == "k_samples") cfg.k_samples = static_cast<int>(as_double());
        else if (key == "threads") cfg.threads = static_cast<int>(as_double());
        else if (key == "seed") cfg.seed = static_cast<unsigned long long>(as_double());
        else if (key == "relative_weights") {
            cfg.relative_weights.clear();
            std::istringstream ws(value);
            std::string item;
            while (std::getline(ws, item, ','))
                cfg.relative_weights.push_back(std::stod(item));
        } else {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": unknown key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

// Base rates are always calibrated at the 200 keV anchor with unit length
// scale, then reused for every requested beam energy and scale.
inline dsl::CalibrationProfile build_profile(const RunConfig& cfg,
                                             const PhysicalConstants& pc = constants())
{
    cfg.validate();
    const auto grid = cfg.k_grid();
    const ElectronBeam anchor_beam = lorentz_factors(200e3, pc);
    CouplerGeometry calib_geometry = cfg.geometry();
    calib_geometry.length_scale = 1.0;
    auto rates = calibrate_base_rates(anchor_beam, cfg.spec, calib_geometry,
                                      cfg.relative_weights, grid, 40.0, 7.0, pc);
    dsl::CalibrationProfile profile;
    profile.beam = lorentz_factors(cfg.beam_energy_kev * 1e3, pc);
    profile.default_spec = cfg.spec;
    profile.geometry = cfg.geometry();
    profile.geometry.base_rates = std::move(rates);
    profile.k_grid = grid;
    profile.pc = pc;
    return profile;
}

}  // namespace quafe
