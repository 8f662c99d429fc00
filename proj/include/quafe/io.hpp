#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "quafe/circuit.hpp"

namespace quafe {

// %.17g round-trips doubles exactly, keeping CSV output byte-stable.
inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void csv_row(std::ostream& out, const std::vector<std::string>& fields)
{
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << fields[i];
    }
    out << '\n';
}

// Static work sharding; every item writes only its own slot, so output is
// identical for any thread count.
inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t)>& fn)
{
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    const int n = std::min<std::size_t>(threads, count);
    pool.reserve(n);
    for (int t = 0; t < n; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = static_cast<std::size_t>(t); i < count; i += n) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

// DetectionReport as ordered JSON (documented in docs/formats.md).
inline nlohmann::ordered_json detection_report_json(const DetectionReport& report)
{
    nlohmann::ordered_json j;
    j["current"] = report.current;
    j["discarded"] = report.discarded;
    auto heralds = nlohmann::ordered_json::array();
    for (const auto& h : report.heralds) {
        nlohmann::ordered_json hj;
        hj["energy_loss_eV"] = h.energy_loss;
        hj["probability"] = h.probability;
        auto comps = nlohmann::ordered_json::array();
        for (const auto& c : h.components) {
            nlohmann::ordered_json cj;
            cj["waveguide_occupations"] = c.waveguide_occupations;
            cj["re"] = c.amplitude.real();
            cj["im"] = c.amplitude.imag();
            comps.push_back(std::move(cj));
        }
        hj["components"] = std::move(comps);
        heralds.push_back(std::move(hj));
    }
    j["heralds"] = std::move(heralds);
    return j;
}

// Debug dump of a photonic state: product-basis occupations with re/im.
inline nlohmann::ordered_json photonic_state_json(const PhotonicState& state,
                                                  double threshold = 0.0)
{
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& [occ, amp] : state.dense_amplitudes(threshold)) {
        nlohmann::ordered_json e;
        e["basis"] = occ;
        e["re"] = amp.real();
        e["im"] = amp.imag();
        j.push_back(std::move(e));
    }
    return j;
}

}  // namespace quafe
