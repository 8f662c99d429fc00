#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "quafe/coupler.hpp"
#include "quafe/fock.hpp"

namespace quafe {

namespace detail {

// Phase scans re-apply identical couplers thousands of times; displacement
// blocks are immutable, so they are shared process-wide.
inline std::shared_ptr<const ComplexMatrix> cached_displacement_matrix(cdouble beta, int size)
{
    using Key = std::tuple<double, double, int>;
    static std::map<Key, std::shared_ptr<const ComplexMatrix>> cache;
    static std::mutex mutex;
    const Key key{beta.real(), beta.imag(), size};
    {
        std::lock_guard<std::mutex> lock(mutex);
        const auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    auto built = std::make_shared<const ComplexMatrix>(displacement_matrix(beta, size));
    std::lock_guard<std::mutex> lock(mutex);
    return cache.emplace(key, std::move(built)).first->second;
}

}  // namespace detail

enum class DetectorKind { current, energy_resolved };

struct Splitter {
    std::string from, to_a, to_b;
};
struct Mixer {
    std::string from_a, from_b, to;
    std::string discard_port;  // tracked as a probability sink, never evolved
};
struct ElectronPhase {
    std::string path;
    double phi_e;
};
struct OpticalPhase {
    std::string waveguide;
    double phi_ell;  // phase of the fundamental mode; mode n gets phi * omega_n/omega_0
};
struct CouplerElement {
    std::string path, waveguide;
    CouplingResult coupling;
};
struct Detector {
    std::string path;
    DetectorKind kind;
};

using CircuitElement =
    std::variant<Splitter, Mixer, ElectronPhase, OpticalPhase, CouplerElement, Detector>;

struct Circuit {
    std::vector<std::string> paths;       // declaration order; paths[0] is the incident path
    std::vector<std::string> waveguides;  // declaration order
    std::vector<CircuitElement> elements;

    int path_index(const std::string& name) const
    {
        for (std::size_t i = 0; i < paths.size(); ++i)
            if (paths[i] == name) return static_cast<int>(i);
        return -1;
    }
    int waveguide_index(const std::string& name) const
    {
        for (std::size_t i = 0; i < waveguides.size(); ++i)
            if (waveguides[i] == name) return static_cast<int>(i);
        return -1;
    }

    // Structural checks: declared references, exactly one terminating
    // detector, and a DAG walk in time order (each path created once,
    // consumed once, nothing left dangling at the detector).
    void validate() const
    {
        if (paths.empty()) throw std::runtime_error("circuit: no paths declared");
        {
            std::set<std::string> seen;
            for (const auto& p : paths)
                if (!seen.insert(p).second)
                    throw std::runtime_error("circuit: duplicate path '" + p + "'");
            seen.clear();
            for (const auto& w : waveguides)
                if (!seen.insert(w).second)
                    throw std::runtime_error("circuit: duplicate waveguide '" + w + "'");
        }
        if (elements.empty() || !std::holds_alternative<Detector>(elements.back()))
            throw std::runtime_error("circuit: must end with a detector");
        for (std::size_t i = 0; i + 1 < elements.size(); ++i)
            if (std::holds_alternative<Detector>(elements[i]))
                throw std::runtime_error("circuit: detector must be the last element");

        std::set<std::string> live{paths.front()};
        std::set<std::string> used{paths.front()};
        auto require_declared_path = [&](const std::string& p) {
            if (path_index(p) < 0) throw std::runtime_error("circuit: undeclared path '" + p + "'");
        };
        auto require_live = [&](const std::string& p) {
            require_declared_path(p);
            if (!live.count(p)) throw std::runtime_error("circuit: path '" + p + "' is not live");
        };
        auto create = [&](const std::string& p) {
            require_declared_path(p);
            if (used.count(p))
                throw std::runtime_error("circuit: path '" + p + "' created twice");
            live.insert(p);
            used.insert(p);
        };
        for (const auto& el : elements) {
            if (const auto* s = std::get_if<Splitter>(&el)) {
                require_live(s->from);
                live.erase(s->from);
                if (s->to_a == s->to_b)
                    throw std::runtime_error("circuit: splitter outputs must differ");
                create(s->to_a);
                create(s->to_b);
            } else if (const auto* m = std::get_if<Mixer>(&el)) {
                if (m->from_a == m->from_b)
                    throw std::runtime_error("circuit: duplicate mixer input '" + m->from_a + "'");
                require_live(m->from_a);
                require_live(m->from_b);
                live.erase(m->from_a);
                live.erase(m->from_b);
                create(m->to);
            } else if (const auto* e = std::get_if<ElectronPhase>(&el)) {
                require_live(e->path);
            } else if (const auto* o = std::get_if<OpticalPhase>(&el)) {
                if (waveguide_index(o->waveguide) < 0)
                    throw std::runtime_error("circuit: undeclared waveguide '" + o->waveguide + "'");
            } else if (const auto* c = std::get_if<CouplerElement>(&el)) {
                require_live(c->path);
                if (waveguide_index(c->waveguide) < 0)
                    throw std::runtime_error("circuit: undeclared waveguide '" + c->waveguide + "'");
            } else if (const auto* d = std::get_if<Detector>(&el)) {
                require_live(d->path);
                live.erase(d->path);
                if (!live.empty())
                    throw std::runtime_error("circuit: path '" + *live.begin() +
                                             "' is still live at the detector");
            }
        }

        // couplers on a shared waveguide must agree on the guided mode energies
        std::map<std::string, std::vector<double>> wg_energies;
        for (const auto& el : elements) {
            const auto* c = std::get_if<CouplerElement>(&el);
            if (!c) continue;
            std::vector<double> energies;
            for (const auto& m : c->coupling.modes)
                if (m.matched) energies.push_back(m.photon_energy);
            auto [it, inserted] = wg_energies.emplace(c->waveguide, energies);
            if (!inserted) {
                const auto& prev = it->second;
                bool same = prev.size() == energies.size();
                for (std::size_t i = 0; same && i < prev.size(); ++i)
                    same = std::abs(prev[i] - energies[i]) <= 1e-12 * std::abs(prev[i]);
                if (!same)
                    throw std::runtime_error("circuit: couplers on waveguide '" + c->waveguide +
                                             "' disagree on mode energies");
            }
        }
    }
};

// One guided mode of one waveguide, as a simulation channel.
struct ChannelInfo {
    int waveguide;         // index into Circuit::waveguides
    int mode_index;        // position among the waveguide's matched modes
    double photon_energy;  // [eV]
    double freq_ratio;     // photon_energy / waveguide's fundamental energy
    int cutoff;
};

// Joint electron-path (x) photonic state as a sum of product terms. Terms
// sharing a path label are coherent; the mixer's discarded port is folded
// into a scalar probability.
struct JointStateTerm {
    int path;
    cdouble amplitude;
    std::vector<std::vector<cdouble>> channels;
};

struct JointState {
    std::vector<ChannelInfo> channel_info;
    std::vector<JointStateTerm> terms;
    double discarded = 0.0;
    double tail_tolerance = 1e-12;

    static JointState initial(const Circuit& circuit, double tail_tol = 1e-12)
    {
        JointState st;
        st.tail_tolerance = tail_tol;
        // per (waveguide, mode): worst-case displacement budget sum |beta|
        std::map<std::pair<int, int>, std::pair<double, double>> budget;  // -> (sum sqrt, energy)
        for (const auto& el : circuit.elements) {
            const auto* c = std::get_if<CouplerElement>(&el);
            if (!c) continue;
            const int w = circuit.waveguide_index(c->waveguide);
            int mode = 0;
            for (const auto& m : c->coupling.modes) {
                if (!m.matched) continue;
                auto& slot = budget[{w, mode}];
                slot.first += std::sqrt(std::max(0.0, m.mean_photons));
                slot.second = m.photon_energy;
                ++mode;
            }
        }
        std::map<int, double> fundamental;
        for (const auto& [key, val] : budget) {
            auto it = fundamental.find(key.first);
            if (it == fundamental.end() || val.second < it->second)
                fundamental[key.first] = val.second;
        }
        for (const auto& [key, val] : budget) {
            ChannelInfo ch;
            ch.waveguide = key.first;
            ch.mode_index = key.second;
            ch.photon_energy = val.second;
            ch.freq_ratio = val.second / fundamental[key.first];
            ch.cutoff = poisson_cutoff(val.first * val.first);
            st.channel_info.push_back(ch);
        }
        JointStateTerm t;
        t.path = 0;
        t.amplitude = 1.0;
        for (const auto& ch : st.channel_info) {
            std::vector<cdouble> v(static_cast<std::size_t>(ch.cutoff) + 1, cdouble{});
            v[0] = 1.0;
            t.channels.push_back(std::move(v));
        }
        st.terms.push_back(std::move(t));
        return st;
    }

    static cdouble term_inner(const JointStateTerm& a, const JointStateTerm& b)
    {
        cdouble p = std::conj(a.amplitude) * b.amplitude;
        for (std::size_t c = 0; c < a.channels.size(); ++c) {
            cdouble s{};
            const auto& va = a.channels[c];
            const auto& vb = b.channels[c];
            for (std::size_t n = 0; n < va.size(); ++n) s += std::conj(va[n]) * vb[n];
            p *= s;
        }
        return p;
    }

    static double group_probability(std::span<const JointStateTerm> group)
    {
        double p = 0.0;
        for (std::size_t i = 0; i < group.size(); ++i) {
            p += std::real(term_inner(group[i], group[i]));
            for (std::size_t j = i + 1; j < group.size(); ++j)
                p += 2.0 * std::real(term_inner(group[i], group[j]));
        }
        return p;
    }

    double path_probability(int path) const
    {
        std::vector<JointStateTerm> group;
        for (const auto& t : terms)
            if (t.path == path) group.push_back(t);
        return group_probability(group);
    }

    double total_probability() const
    {
        std::set<int> paths;
        for (const auto& t : terms) paths.insert(t.path);
        double p = 0.0;
        for (int pa : paths) p += path_probability(pa);
        return p;
    }
};

// Applies one circuit element. The detector is a measurement, not an
// evolution; it leaves the state untouched (run() builds the report).
inline JointState apply_element(JointState state, const CircuitElement& element,
                                const Circuit& circuit)
{
    if (const auto* s = std::get_if<Splitter>(&element)) {
        const int from = circuit.path_index(s->from);
        const int ta = circuit.path_index(s->to_a);
        const int tb = circuit.path_index(s->to_b);
        const double r = 1.0 / std::sqrt(2.0);
        std::vector<JointStateTerm> extra;
        for (auto& t : state.terms) {
            if (t.path != from) continue;
            JointStateTerm clone = t;
            clone.path = tb;
            clone.amplitude *= r;
            extra.push_back(std::move(clone));
            t.path = ta;
            t.amplitude *= r;
        }
        for (auto& t : extra) state.terms.push_back(std::move(t));
    } else if (const auto* m = std::get_if<Mixer>(&element)) {
        const int fa = circuit.path_index(m->from_a);
        const int fb = circuit.path_index(m->from_b);
        const int to = circuit.path_index(m->to);
        const double r = 1.0 / std::sqrt(2.0);
        std::vector<JointStateTerm> discard_group;
        for (auto& t : state.terms) {
            if (t.path != fa && t.path != fb) continue;
            JointStateTerm d = t;
            d.amplitude *= (t.path == fa ? r : -r);
            discard_group.push_back(std::move(d));
            t.amplitude *= r;
            t.path = to;
        }
        state.discarded += JointState::group_probability(discard_group);
    } else if (const auto* e = std::get_if<ElectronPhase>(&element)) {
        const int p = circuit.path_index(e->path);
        const cdouble f = std::polar(1.0, e->phi_e);
        for (auto& t : state.terms)
            if (t.path == p) t.amplitude *= f;
    } else if (const auto* o = std::get_if<OpticalPhase>(&element)) {
        const int w = circuit.waveguide_index(o->waveguide);
        for (auto& t : state.terms) {
            for (std::size_t c = 0; c < state.channel_info.size(); ++c) {
                if (state.channel_info[c].waveguide != w) continue;
                const double phi = o->phi_ell * state.channel_info[c].freq_ratio;
                auto& v = t.channels[c];
                for (std::size_t n = 0; n < v.size(); ++n)
                    v[n] *= std::polar(1.0, static_cast<double>(n) * phi);
            }
        }
    } else if (const auto* c = std::get_if<CouplerElement>(&element)) {
        const int p = circuit.path_index(c->path);
        const int w = circuit.waveguide_index(c->waveguide);
        int mode = 0;
        for (const auto& mc : c->coupling.modes) {
            if (!mc.matched) continue;
            const double beta = std::sqrt(std::max(0.0, mc.mean_photons));
            const int this_mode = mode++;
            if (beta == 0.0) continue;
            std::size_t channel = state.channel_info.size();
            for (std::size_t i = 0; i < state.channel_info.size(); ++i)
                if (state.channel_info[i].waveguide == w &&
                    state.channel_info[i].mode_index == this_mode)
                    channel = i;
            if (channel == state.channel_info.size())
                throw std::runtime_error("apply_element: no channel for coupled mode");
            const int size = state.channel_info[channel].cutoff + 1;
            const auto d_ptr = detail::cached_displacement_matrix(beta, size);
            const ComplexMatrix& d = *d_ptr;
            for (auto& t : state.terms) {
                if (t.path != p) continue;
                auto& v = t.channels[channel];
                double before = 0.0, after = 0.0;
                std::vector<cdouble> out(v.size(), cdouble{});
                for (int row = 0; row < size; ++row) {
                    cdouble acc{};
                    for (int col = 0; col < size; ++col) acc += d.at(row, col) * v[col];
                    out[static_cast<std::size_t>(row)] = acc;
                }
                for (const auto& x : v) before += std::norm(x);
                for (const auto& x : out) after += std::norm(x);
                if (before - after > state.tail_tolerance)
                    throw std::runtime_error("apply_element: truncation violation on waveguide '" +
                                             c->waveguide + "' mode " + std::to_string(this_mode));
                v = std::move(out);
            }
        }
    }
    return state;
}

struct HeraldComponent {
    std::vector<std::vector<int>> waveguide_occupations;  // per waveguide, per mode
    cdouble amplitude;                                    // normalized within the herald
};

struct HeraldedOutcome {
    double energy_loss;  // [eV]
    double probability;
    std::vector<HeraldComponent> components;
};

struct DetectionReport {
    double current = 0.0;    // probability on the detected path
    double discarded = 0.0;  // mixer sink
    std::vector<HeraldedOutcome> heralds;  // energy-resolved detectors; ascending energy
};

namespace detail {

struct HeraldRecord {
    double energy;
    std::vector<int> occupations;  // flat, per channel
    cdouble amplitude;
};

inline void enumerate_heralds(const JointState& state, std::span<const JointStateTerm> group,
                              std::vector<HeraldRecord>& out)
{
    const std::size_t channels = state.channel_info.size();
    std::vector<int> occ(channels, 0);
    std::vector<cdouble> partial(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) partial[i] = group[i].amplitude;

    constexpr double kPruneAmplitude = 1e-13;
    constexpr std::size_t kMaxRecords = 1u << 22;

    std::function<void(std::size_t, double, std::vector<cdouble>&)> rec =
        [&](std::size_t ch, double energy, std::vector<cdouble>& parts) {
            double bound = 0.0;
            for (const auto& x : parts) bound += std::abs(x);
            if (bound < kPruneAmplitude) return;
            if (ch == channels) {
                cdouble amp{};
                for (const auto& x : parts) amp += x;
                if (std::norm(amp) > 0.0) {
                    if (out.size() >= kMaxRecords)
                        throw std::runtime_error("run: herald enumeration too large");
                    out.push_back({energy, occ, amp});
                }
                return;
            }
            const int size = state.channel_info[ch].cutoff + 1;
            std::vector<cdouble> next(parts.size());
            for (int n = 0; n < size; ++n) {
                occ[ch] = n;
                for (std::size_t i = 0; i < parts.size(); ++i)
                    next[i] = parts[i] * group[i].channels[ch][static_cast<std::size_t>(n)];
                rec(ch + 1, energy + n * state.channel_info[ch].photon_energy, next);
            }
            occ[ch] = 0;
        };
    rec(0, 0.0, partial);
}

}  // namespace detail

// Evolves the circuit from vacuum waveguides and a single incident electron
// path, returning the detected current, the discard sink, and, for
// energy-resolved detectors, the herald table grouped by total energy loss
// (degenerate losses merged; components stay coherent within one bin).
inline DetectionReport run(const Circuit& circuit, double tail_tol = 1e-12)
{
    circuit.validate();
    JointState state = JointState::initial(circuit, tail_tol);
    const Detector* det = nullptr;
    for (const auto& el : circuit.elements) {
        if (const auto* d = std::get_if<Detector>(&el)) {
            det = d;
            break;
        }
        state = apply_element(std::move(state), el, circuit);
    }

    DetectionReport report;
    const int dpath = circuit.path_index(det->path);
    report.current = state.path_probability(dpath);
    report.discarded = state.discarded;
    if (det->kind != DetectorKind::energy_resolved) return report;

    std::vector<JointStateTerm> group;
    for (const auto& t : state.terms)
        if (t.path == dpath) group.push_back(t);

    std::vector<detail::HeraldRecord> records;
    detail::enumerate_heralds(state, group, records);
    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
        if (a.energy != b.energy) return a.energy < b.energy;
        return a.occupations < b.occupations;
    });

    const std::size_t wg_count = circuit.waveguides.size();
    std::vector<int> wg_modes(wg_count, 0);
    for (const auto& ch : state.channel_info)
        wg_modes[static_cast<std::size_t>(ch.waveguide)] =
            std::max(wg_modes[static_cast<std::size_t>(ch.waveguide)], ch.mode_index + 1);

    for (std::size_t i = 0; i < records.size();) {
        HeraldedOutcome bin;
        bin.energy_loss = records[i].energy;
        std::size_t j = i;
        while (j < records.size() &&
               records[j].energy - bin.energy_loss <= 1e-9 * std::max(1.0, records[j].energy))
            ++j;
        double prob = 0.0;
        for (std::size_t k = i; k < j; ++k) prob += std::norm(records[k].amplitude);
        bin.probability = prob;
        const double norm = prob > 0.0 ? 1.0 / std::sqrt(prob) : 0.0;
        for (std::size_t k = i; k < j; ++k) {
            HeraldComponent comp;
            comp.waveguide_occupations.resize(wg_count);
            for (std::size_t w = 0; w < wg_count; ++w)
                comp.waveguide_occupations[w].assign(static_cast<std::size_t>(wg_modes[w]), 0);
            for (std::size_t c = 0; c < state.channel_info.size(); ++c) {
                const auto& ch = state.channel_info[c];
                comp.waveguide_occupations[static_cast<std::size_t>(ch.waveguide)]
                                          [static_cast<std::size_t>(ch.mode_index)] =
                    records[k].occupations[c];
            }
            comp.amplitude = records[k].amplitude * norm;
            bin.components.push_back(std::move(comp));
        }
        report.heralds.push_back(std::move(bin));
        i = j;
    }
    return report;
}

// Post-selects the NOON herald at energy loss N0 * (fundamental photon
// energy). Checks the documented structure: exactly two components, each
// confined to one waveguide, with equal moduli.
inline HeraldedOutcome heralded_noon_state(const DetectionReport& report,
                                           double mode0_energy_ev, int target_n0)
{
    if (target_n0 < 1)
        throw std::invalid_argument("heralded_noon_state: target N0 must be >= 1");
    const double target = target_n0 * mode0_energy_ev;
    const HeraldedOutcome* found = nullptr;
    for (const auto& h : report.heralds) {
        if (std::abs(h.energy_loss - target) <= 1e-9 * std::max(1.0, target)) {
            found = &h;
            break;
        }
    }
    if (!found || !(found->probability > 0.0))
        throw std::runtime_error("heralded_noon_state: impossible post-selection (no herald at "
                                 "energy loss " + std::to_string(target) + " eV)");
    if (found->components.size() != 2)
        throw std::runtime_error("heralded_noon_state: herald is not a two-component state");
    for (const auto& comp : found->components) {
        int active_waveguides = 0;
        for (const auto& occ : comp.waveguide_occupations) {
            int total = 0;
            for (int n : occ) total += n;
            if (total > 0) ++active_waveguides;
        }
        if (active_waveguides != 1)
            throw std::runtime_error("heralded_noon_state: component spans several waveguides");
    }
    const double m0 = std::abs(found->components[0].amplitude);
    const double m1 = std::abs(found->components[1].amplitude);
    if (std::abs(m0 - m1) > 1e-9)
        throw std::runtime_error("heralded_noon_state: component moduli differ");
    return *found;
}

// Relative phase delta of the |0,N> component against the |N,0> component,
// with components ordered by which waveguide is occupied. Zero for
// geometrically identical arms with phi_e = 0.
inline double noon_relative_phase(const HeraldedOutcome& outcome)
{
    if (outcome.components.size() != 2)
        throw std::invalid_argument("noon_relative_phase: not a NOON herald");
    auto occupied_waveguide = [](const HeraldComponent& c) {
        for (std::size_t w = 0; w < c.waveguide_occupations.size(); ++w)
            for (int n : c.waveguide_occupations[w])
                if (n > 0) return static_cast<int>(w);
        return -1;
    };
    const HeraldComponent* first = &outcome.components[0];
    const HeraldComponent* second = &outcome.components[1];
    if (occupied_waveguide(*first) > occupied_waveguide(*second)) std::swap(first, second);
    return std::arg(second->amplitude * std::conj(first->amplitude));
}

// Canonical circuits. The .quafe goldens in circuits/ mirror these layouts.
inline Circuit build_fig3a(const CouplingResult& coupling1, const CouplingResult& coupling2)
{
    Circuit c;
    c.paths = {"e0", "a", "b", "c"};
    c.waveguides = {"wg1", "wg2"};
    c.elements = {
        Splitter{"e0", "a", "b"},
        CouplerElement{"a", "wg1", coupling1},
        CouplerElement{"b", "wg2", coupling2},
        Mixer{"a", "b", "c", "!c"},
        Detector{"c", DetectorKind::energy_resolved},
    };
    return c;
}

inline Circuit build_fig4a(const CouplingResult& coupling, double phi_ell, double phi_e)
{
    Circuit c;
    c.paths = {"e0", "a", "b", "c"};
    c.waveguides = {"wg"};
    c.elements = {
        Splitter{"e0", "a", "b"},
        CouplerElement{"a", "wg", coupling},
        OpticalPhase{"wg", phi_ell},
        CouplerElement{"b", "wg", coupling},
        ElectronPhase{"a", phi_e},
        Mixer{"a", "b", "c", "!c"},
        Detector{"c", DetectorKind::current},
    };
    return c;
}

inline Circuit build_fig4b(const CouplingResult& coupling, double phi_ell, double phi_e)
{
    Circuit c;
    c.paths = {"e0", "a", "b", "c"};
    c.waveguides = {"wg"};
    c.elements = {
        Splitter{"e0", "a", "b"},
        CouplerElement{"a", "wg", coupling},
        OpticalPhase{"wg", phi_ell},
        CouplerElement{"a", "wg", coupling},
        ElectronPhase{"b", phi_e},
        Mixer{"a", "b", "c", "!c"},
        Detector{"c", DetectorKind::current},
    };
    return c;
}

}  // namespace quafe
