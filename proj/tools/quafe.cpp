// Command-line front end: reproduces the coupler tables, NOON probabilities
// and interference scans as CSV/JSON, and runs .quafe circuit programs.
//
// Exit codes: 0 ok, 1 configuration error, 2 circuit parse/lowering error,
// 3 runtime failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "quafe/quafe.hpp"

namespace {

using namespace quafe;

constexpr const char* kBuiltinFig3a = R"(path e0
path a
path b
path c
waveguide wg1 { max_modes = 1 }
waveguide wg2 { max_modes = 1 }
split e0 -> a b
couple a wg1 @calibrated
couple b wg2 @calibrated
mix a b -> c
detect c energy
)";

constexpr const char* kBuiltinFig4a = R"(path e0
path a
path b
path c
waveguide wg { }
split e0 -> a b
couple a wg @calibrated
ophase wg 0.3rad
couple b wg @calibrated
ephase a 90deg
mix a b -> c
detect c current
)";

constexpr const char* kBuiltinFig4b = R"(path e0
path a
path b
path c
waveguide wg { }
split e0 -> a b
couple a wg @calibrated
ophase wg 0.3rad
couple a wg @calibrated
ephase b 90deg
mix a b -> c
detect c current
)";

struct Range {
    double lo = 0, hi = 0;
    int steps = 0;
    std::vector<double> points() const
    {
        std::vector<double> p;
        if (steps <= 1) {
            p.push_back(lo);
            return p;
        }
        for (int i = 0; i < steps; ++i) p.push_back(lo + (hi - lo) * i / (steps - 1));
        return p;
    }
};

Range parse_range(const std::string& text, const char* what)
{
    Range r;
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw std::invalid_argument(std::string(what) + ": expected lo:hi:steps, got '" + text + "'");
    r.lo = std::stod(text.substr(0, c1));
    r.hi = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
    r.steps = std::stoi(text.substr(c2 + 1));
    if (r.steps < 1) throw std::invalid_argument(std::string(what) + ": steps must be >= 1");
    return r;
}

struct Output {
    std::string path;
    std::string format = "csv";  // csv | json

    void write_table(const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) const
    {
        std::ostringstream out;
        if (format == "csv") {
            csv_row(out, header);
            for (const auto& r : rows) csv_row(out, r);
        } else {
            auto cell_value = [](const std::string& cell) -> nlohmann::ordered_json {
                if (cell.empty()) return nullptr;
                std::size_t used = 0;
                try {
                    const double v = std::stod(cell, &used);
                    if (used == cell.size()) return v;
                } catch (const std::exception&) {
                }
                return cell;
            };
            nlohmann::ordered_json arr = nlohmann::ordered_json::array();
            for (const auto& r : rows) {
                nlohmann::ordered_json obj;
                for (std::size_t i = 0; i < header.size(); ++i) obj[header[i]] = cell_value(r[i]);
                arr.push_back(std::move(obj));
            }
            out << arr.dump(2) << '\n';
        }
        deliver(out.str());
    }

    void deliver(const std::string& text) const
    {
        if (path.empty()) {
            std::cout << text;
            return;
        }
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open output file '" + path + "'");
        f << text;
    }
};

struct CommonOptions {
    std::string config_path;
    std::string out_path;
    std::string format = "csv";
    int threads = 0;  // 0 = from config
    double energy_kev = -1;
    std::string energy_sweep;

    RunConfig load() const
    {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        if (threads > 0) cfg.threads = threads;
        if (energy_kev >= 0) cfg.beam_energy_kev = energy_kev;
        cfg.validate();
        if (format != "csv" && format != "json")
            throw std::invalid_argument("--format must be csv or json");
        return cfg;
    }
    Output output() const { return Output{out_path, format}; }
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool with_energy = true)
{
    cmd->add_option("--config", opt.config_path, "configuration file (key = value lines)");
    cmd->add_option("--out", opt.out_path, "output file (stdout when omitted)");
    cmd->add_option("--format", opt.format, "csv or json")->default_str("csv");
    cmd->add_option("--threads", opt.threads, "worker pool size for sweeps");
    if (with_energy) {
        cmd->add_option("--energy", opt.energy_kev, "beam kinetic energy [keV]");
        cmd->add_option("--energy-sweep", opt.energy_sweep, "beam energy sweep lo:hi:steps [keV]");
    }
}

// ---- dispersion ----

int cmd_dispersion(const CommonOptions& opt)
{
    const RunConfig cfg = opt.load();
    const auto grid = cfg.k_grid();
    const auto branches = solve_dispersion(cfg.spec, grid);

    std::vector<std::vector<std::string>> rows;
    for (const auto& br : branches)
        for (const auto& s : br.samples)
            rows.push_back({"branch", "", std::to_string(br.index), format_double(s.k_parallel),
                            format_double(s.photon_energy), format_double(s.decay_length)});

    std::vector<double> energies;
    if (!opt.energy_sweep.empty())
        energies = parse_range(opt.energy_sweep, "--energy-sweep").points();
    else if (opt.energy_kev >= 0)
        energies.push_back(opt.energy_kev);

    std::vector<std::vector<std::vector<std::string>>> match_rows(energies.size());
    parallel_for(energies.size(), cfg.threads, [&](std::size_t i) {
        const auto beam = lorentz_factors(energies[i] * 1e3);
        for (const auto& br : branches) {
            const auto pm = phase_match(br, beam);
            if (!pm) continue;
            match_rows[i].push_back({"phase_match", format_double(energies[i]),
                                     std::to_string(pm->mode_index), format_double(pm->k_parallel),
                                     format_double(pm->photon_energy),
                                     format_double(pm->decay_length)});
        }
    });
    for (auto& per_energy : match_rows)
        for (auto& r : per_energy) rows.push_back(std::move(r));

    opt.output().write_table({"kind", "kinetic_energy_keV", "mode", "k_parallel_per_nm",
                              "photon_energy_eV", "decay_length_nm"},
                             rows);
    return 0;
}

// ---- coupler ----

int cmd_coupler(const CommonOptions& opt)
{
    const RunConfig cfg = opt.load();
    const auto profile = build_profile(cfg);

    std::vector<double> energies;
    if (!opt.energy_sweep.empty())
        energies = parse_range(opt.energy_sweep, "--energy-sweep").points();
    else
        energies.push_back(cfg.beam_energy_kev);

    std::vector<std::vector<std::vector<std::string>>> rows(energies.size());
    parallel_for(energies.size(), cfg.threads, [&](std::size_t i) {
        const auto beam = lorentz_factors(energies[i] * 1e3);
        const auto result = mean_photon_numbers(beam, cfg.spec, profile.geometry, profile.k_grid);
        for (const auto& m : result.modes) {
            if (!m.matched) continue;
            rows[i].push_back({format_double(energies[i]), std::to_string(m.mode_index),
                               format_double(m.photon_energy),
                               format_double(m.effective_length / 1e6),
                               format_double(m.mean_photons)});
        }
    });

    std::vector<std::vector<std::string>> flat;
    for (auto& r : rows)
        for (auto& x : r) flat.push_back(std::move(x));
    opt.output().write_table(
        {"kinetic_energy_keV", "mode", "photon_energy_eV", "L_eff_mm", "mean_photons"}, flat);
    return 0;
}

// ---- noon ----

int cmd_noon(const CommonOptions& opt, const std::string& n0_range,
             const std::string& variants_list, double beam_current)
{
    const RunConfig cfg = opt.load();
    const auto profile = build_profile(cfg);
    const auto coupling =
        mean_photon_numbers(profile.beam, cfg.spec, profile.geometry, profile.k_grid);
    const auto means = coupling.mean_photon_list();

    int n0_lo = 1, n0_hi = 20;
    if (!n0_range.empty()) {
        const auto colon = n0_range.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("--n0: expected lo:hi");
        n0_lo = std::stoi(n0_range.substr(0, colon));
        n0_hi = std::stoi(n0_range.substr(colon + 1));
        if (n0_lo < 1 || n0_hi < n0_lo) throw std::invalid_argument("--n0: bad range");
    }

    std::vector<NoonVariant> variants;
    if (variants_list.empty()) {
        variants = {NoonVariant::pure_single, NoonVariant::pure_band, NoonVariant::dressed_single,
                    NoonVariant::dressed_band};
    } else {
        std::istringstream vs(variants_list);
        std::string item;
        while (std::getline(vs, item, ',')) variants.push_back(noon_variant_from_string(item));
    }

    struct Job {
        int n0;
        NoonVariant variant;
    };
    std::vector<Job> jobs;
    for (int n0 = n0_lo; n0 <= n0_hi; ++n0)
        for (auto v : variants) jobs.push_back({n0, v});

    std::vector<std::vector<std::string>> rows(jobs.size());
    parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
        const auto opt_result = optimize_length_scale(means, jobs[i].n0, jobs[i].variant);
        rows[i] = {std::to_string(jobs[i].n0), to_string(jobs[i].variant),
                   format_double(opt_result.scale), format_double(opt_result.probability),
                   format_double(generation_rate(opt_result.probability, beam_current))};
    });
    opt.output().write_table({"N0", "variant", "s_opt", "probability", "rate_hz"}, rows);
    return 0;
}

// ---- interfere ----

struct InterferenceLayout {
    Circuit circuit;
    std::vector<double> means;
    std::vector<double> ratios;
    bool reflected = false;  // both couplings on a single path
};

InterferenceLayout analyze_interference_circuit(Circuit circuit)
{
    InterferenceLayout layout;
    std::vector<const CouplerElement*> couplers;
    int ophase_count = 0;
    for (const auto& el : circuit.elements) {
        if (const auto* c = std::get_if<CouplerElement>(&el)) couplers.push_back(c);
        if (std::holds_alternative<OpticalPhase>(el)) ++ophase_count;
    }
    if (couplers.size() != 2 || ophase_count != 1)
        throw std::invalid_argument(
            "interfere: circuit must contain exactly two couplers and one ophase");
    if (couplers[0]->waveguide != couplers[1]->waveguide)
        throw std::invalid_argument("interfere: both couplers must address one waveguide");
    layout.reflected = couplers[0]->path == couplers[1]->path;
    for (const auto& m : couplers[0]->coupling.modes) {
        if (!m.matched) continue;
        layout.means.push_back(m.mean_photons);
        layout.ratios.push_back(m.photon_energy / couplers[0]->coupling.modes.front().photon_energy);
    }
    layout.circuit = std::move(circuit);
    return layout;
}

Circuit with_phases(Circuit circuit, double phi_ell, std::optional<double> phi_e)
{
    for (auto& el : circuit.elements) {
        if (auto* o = std::get_if<OpticalPhase>(&el)) o->phi_ell = phi_ell;
        if (phi_e)
            if (auto* e = std::get_if<ElectronPhase>(&el)) e->phi_e = *phi_e;
    }
    return circuit;
}

int cmd_interfere(const CommonOptions& opt, const std::string& circuit_file,
                  const std::string& builtin, const std::string& phi_grid, double phi_e,
                  bool with_oracle)
{
    const RunConfig cfg = opt.load();
    const auto profile = build_profile(cfg);

    std::string source, name;
    if (!circuit_file.empty()) {
        std::ifstream in(circuit_file);
        if (!in) throw std::invalid_argument("cannot open circuit file '" + circuit_file + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        source = ss.str();
        name = circuit_file;
    } else if (builtin == "fig4a") {
        source = kBuiltinFig4a;
        name = "<builtin fig4a>";
    } else if (builtin == "fig4b") {
        source = kBuiltinFig4b;
        name = "<builtin fig4b>";
    } else {
        throw std::invalid_argument("interfere: pass --circuit FILE or --builtin fig4a|fig4b");
    }

    auto parsed = dsl::parse_source(source);
    if (!parsed.ok()) {
        for (const auto& d : parsed.diagnostics)
            std::cerr << dsl::format_diagnostic(name, d) << '\n';
        return 2;
    }
    InterferenceLayout layout;
    try {
        layout = analyze_interference_circuit(dsl::lower(parsed.ast, profile));
    } catch (const dsl::LoweringError& e) {
        std::cerr << dsl::format_diagnostic(name, e.diagnostic) << '\n';
        return 2;
    }
    if (with_oracle && layout.reflected)
        throw std::invalid_argument(
            "interfere: --oracle implements the two-arm sum; not available for the reflected layout");

    const Range grid = phi_grid.empty() ? Range{0.0, 2.0 * M_PI, 201}
                                        : parse_range(phi_grid, "--phi-grid");
    const auto points = grid.points();

    std::vector<int> cutoffs;
    for (double m : layout.means) cutoffs.push_back(poisson_cutoff(m));

    std::vector<std::vector<std::string>> rows(points.size());
    std::vector<double> deviation(points.size(), 0.0);
    parallel_for(points.size(), cfg.threads, [&](std::size_t i) {
        const double phi = points[i];
        const double closed =
            layout.reflected
                ? current_closed_form_reflected(layout.means, layout.ratios, phi_e, phi)
                : current_closed_form(layout.means, layout.ratios, phi_e, phi);
        const auto report = run(with_phases(layout.circuit, phi, phi_e));
        deviation[i] = std::abs(report.current - closed);
        rows[i] = {format_double(phi), format_double(closed), format_double(report.current)};
        if (with_oracle)
            rows[i].push_back(format_double(
                oracle_current(layout.means, layout.ratios, phi_e, phi, cutoffs)));
    });

    std::vector<std::string> header{"phi_ell", "closed_form", "engine"};
    if (with_oracle) header.push_back("oracle");
    opt.output().write_table(header, rows);

    double max_dev = 0.0;
    for (double d : deviation) max_dev = std::max(max_dev, d);
    std::cerr << "max |engine - closed_form| = " << format_double(max_dev) << '\n';
    return 0;
}

// ---- run ----

int cmd_run(const CommonOptions& opt, const std::string& circuit_file)
{
    const RunConfig cfg = opt.load();
    const auto profile = build_profile(cfg);

    std::ifstream in(circuit_file);
    if (!in) throw std::invalid_argument("cannot open circuit file '" + circuit_file + "'");
    std::ostringstream ss;
    ss << in.rdbuf();

    auto parsed = dsl::parse_source(ss.str());
    if (!parsed.ok()) {
        for (const auto& d : parsed.diagnostics)
            std::cerr << dsl::format_diagnostic(circuit_file, d) << '\n';
        return 2;
    }
    Circuit circuit;
    try {
        circuit = dsl::lower(parsed.ast, profile);
    } catch (const dsl::LoweringError& e) {
        std::cerr << dsl::format_diagnostic(circuit_file, e.diagnostic) << '\n';
        return 2;
    }
    const auto report = run(circuit);
    Output out = opt.output();
    out.format = "json";  // DetectionReport is a JSON document
    out.deliver(detection_report_json(report).dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"quantum free-electron photonics simulator"};
    app.require_subcommand(1);

    CommonOptions disp_opt, coup_opt, noon_opt, intf_opt, run_opt;

    auto* disp = app.add_subcommand("dispersion", "guided branches and phase-match points");
    add_common(disp, disp_opt);

    auto* coup = app.add_subcommand("coupler", "effective lengths and mean photon numbers");
    add_common(coup, coup_opt);

    auto* noon = app.add_subcommand("noon", "NOON generation probabilities and rates");
    add_common(noon, noon_opt);
    std::string n0_range, variants;
    double beam_current = 1e9;
    noon->add_option("--n0", n0_range, "target photon number range lo:hi (default 1:20)");
    noon->add_option("--variants", variants,
                     "comma list of pure_single,pure_band,dressed_single,dressed_band");
    noon->add_option("--beam-current", beam_current, "electrons per second (default 1e9)");

    auto* intf = app.add_subcommand("interfere", "current vs optical phase scan");
    add_common(intf, intf_opt);
    std::string circuit_file, builtin, phi_grid;
    double phi_e = M_PI / 2;
    bool with_oracle = false;
    intf->add_option("--circuit", circuit_file, ".quafe circuit file");
    intf->add_option("--builtin", builtin, "fig4a or fig4b");
    intf->add_option("--phi-grid", phi_grid, "phi_ell grid lo:hi:steps [rad] (default 0:2pi:201)");
    intf->add_option("--phi-e", phi_e, "electron phase [rad] (default pi/2)");
    intf->add_flag("--oracle", with_oracle, "add the brute-force Fock-sum column");

    auto* runc = app.add_subcommand("run", "run a .quafe circuit, emit the detection report");
    add_common(runc, run_opt);
    std::string run_file;
    runc->add_option("circuit", run_file, ".quafe circuit file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (disp->parsed()) return cmd_dispersion(disp_opt);
        if (coup->parsed()) return cmd_coupler(coup_opt);
        if (noon->parsed()) return cmd_noon(noon_opt, n0_range, variants, beam_current);
        if (intf->parsed())
            return cmd_interfere(intf_opt, circuit_file, builtin, phi_grid, phi_e, with_oracle);
        if (runc->parsed()) return cmd_run(run_opt, run_file);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
