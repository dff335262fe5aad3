#pragma once

#include "exnet/instance.hpp"
#include "exnet/outcomes.hpp"
#include "exnet/run.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace exnet {

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace jsonio {

using nlohmann::json;

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw parse_error(path + ": " + e.what());
    }
    return j;
}

inline int parse_node_id(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        int v = std::stoi(s, &used);
        if (used != s.size()) throw parse_error(what + ": bad node id '" + s + "'");
        return v;
    } catch (const parse_error&) {
        throw;
    } catch (const std::exception&) {
        throw parse_error(what + ": bad node id '" + s + "'");
    }
}

inline void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path);
    out << body;
    if (!out) throw io_error("short write to " + path);
}

// Instance format:
//   {"nodes": 4 | ["A","B",...],
//    "edges": [{"i":0, "j":1, "w":"8", "r":0.5}, ...],
//    "capacities": {"0": 2}}
// Weights are decimal strings (or "p/q"); plain numbers are accepted on
// input. "r" and "capacities" are optional and default to 1/2 and 1.

inline NetworkInstance instance_from_json(const json& j) {
    if (!j.contains("nodes") || !j.contains("edges"))
        throw parse_error("instance: missing 'nodes' or 'edges'");
    int n = 0;
    std::vector<std::string> labels;
    if (j["nodes"].is_array()) {
        for (const auto& l : j["nodes"]) labels.push_back(l.get<std::string>());
        n = static_cast<int>(labels.size());
    } else {
        n = j["nodes"].get<int>();
    }
    std::vector<Edge> edges;
    for (const auto& ej : j["edges"]) {
        if (!ej.contains("i") || !ej.contains("j") || !ej.contains("w"))
            throw parse_error("edge entry needs fields i, j, w (edge #" +
                              std::to_string(edges.size()) + ")");
        int i = ej["i"].get<int>();
        int jj = ej["j"].get<int>();
        double r = ej.value("r", 0.5);
        if (ej["w"].is_string()) {
            edges.emplace_back(i, jj, ej["w"].get<std::string>(), r);
        } else {
            edges.emplace_back(i, jj, ej["w"].get<double>(), r);
        }
    }
    std::vector<int> caps;
    if (j.contains("capacities") && !j["capacities"].is_null()) {
        caps.assign(n, 1);
        for (const auto& [key, val] : j["capacities"].items()) {
            int v = parse_node_id(key, "capacities");
            if (v < 0 || v >= n) throw parse_error("capacities: node " + key + " out of range");
            caps[v] = val.get<int>();
        }
    }
    return NetworkInstance(n, std::move(edges), std::move(caps), std::move(labels));
}

inline json instance_to_json(const NetworkInstance& inst) {
    json j;
    if (!inst.labels().empty())
        j["nodes"] = inst.labels();
    else
        j["nodes"] = inst.node_count();
    j["edges"] = json::array();
    for (const Edge& e : inst.edges()) {
        json ej{{"i", e.i}, {"j", e.j}, {"w", rational_to_string(e.w)}};
        if (e.r != 0.5) ej["r"] = e.r;
        j["edges"].push_back(ej);
    }
    json caps = json::object();
    for (int v = 0; v < inst.node_count(); ++v)
        if (inst.capacity(v) != 1) caps[std::to_string(v)] = inst.capacity(v);
    if (!caps.empty()) j["capacities"] = caps;
    return j;
}

inline NetworkInstance load_instance(const std::string& path) {
    return instance_from_json(read_json_file(path));
}

inline void save_instance(const NetworkInstance& inst, const std::string& path) {
    write_file(path, instance_to_json(inst).dump(2) + "\n");
}

// Message files: {"alpha": {"i\j": value, ...}} where "i\j" names the best
// alternative of node i excluding neighbor j. Missing slots default to 0.

inline Vec alpha_from_json(const NetworkInstance& inst, const json& j) {
    if (!j.contains("alpha")) throw parse_error("alpha file: missing 'alpha'");
    Vec alpha(inst.directed_count(), 0.0);
    for (const auto& [key, val] : j["alpha"].items()) {
        auto sep = key.find('\\');
        if (sep == std::string::npos) throw parse_error("alpha key '" + key + "' is not 'i\\j'");
        int i = parse_node_id(key.substr(0, sep), "alpha");
        int jj = parse_node_id(key.substr(sep + 1), "alpha");
        int k = inst.find_edge(i, jj);
        if (k < 0) throw parse_error("alpha key '" + key + "' names a missing edge");
        alpha[inst.slot(k, i)] = val.get<double>();
    }
    return alpha;
}

inline json alpha_to_json(const NetworkInstance& inst, const Vec& alpha) {
    json entries = json::object();
    for (int d = 0; d < inst.directed_count(); ++d) {
        std::string key = std::to_string(inst.slot_owner(d)) + "\\" +
                          std::to_string(inst.slot_target(d));
        entries[key] = alpha[d];
    }
    return json{{"alpha", entries}};
}

// Outcome format: {"matching": [[i,j],...], "shares": {"i->j": value}} where
// "i->j" carries what j receives from the partnership with i.

inline TradeOutcome outcome_from_json(const NetworkInstance& inst, const json& j) {
    if (!j.contains("matching")) throw parse_error("outcome: missing 'matching'");
    Matching m;
    for (const auto& pair : j["matching"]) {
        int k = inst.find_edge(pair.at(0).get<int>(), pair.at(1).get<int>());
        if (k < 0) throw parse_error("outcome: matched pair is not an edge");
        m.push_back(k);
    }
    Vec shares(inst.directed_count(), 0.0);
    if (j.contains("shares")) {
        for (const auto& [key, val] : j["shares"].items()) {
            auto sep = key.find("->");
            if (sep == std::string::npos)
                throw parse_error("share key '" + key + "' is not 'i->j'");
            int i = parse_node_id(key.substr(0, sep), "shares");
            int jj = parse_node_id(key.substr(sep + 2), "shares");
            int k = inst.find_edge(i, jj);
            if (k < 0) throw parse_error("share key '" + key + "' names a missing edge");
            shares[inst.slot(k, i)] = val.get<double>();
        }
    }
    return make_outcome(inst, std::move(m), std::move(shares));
}

inline json outcome_to_json(const NetworkInstance& inst, const TradeOutcome& out) {
    json m = json::array();
    for (int k : out.matching)
        m.push_back(json::array({inst.edge(k).i, inst.edge(k).j}));
    json shares = json::object();
    for (int k : out.matching) {
        const Edge& e = inst.edge(k);
        shares[std::to_string(e.i) + "->" + std::to_string(e.j)] = out.shares[2 * k];
        shares[std::to_string(e.j) + "->" + std::to_string(e.i)] = out.shares[2 * k + 1];
    }
    json gamma = json::array();
    for (double g : out.earnings) gamma.push_back(g);
    return json{{"matching", m}, {"shares", shares}, {"earnings", gamma}};
}

inline json matching_to_json(const NetworkInstance& inst, const std::optional<Matching>& m) {
    if (!m) return nullptr;
    json a = json::array();
    for (int k : *m) a.push_back(json::array({inst.edge(k).i, inst.edge(k).j}));
    return a;
}

/// One JSON line per recorded iteration plus a final summary line.
/// Residuals are in the units the run used; `scale` records the factor back
/// to original units when the caller rescaled the instance first.
inline std::string trace_to_jsonl(const NetworkInstance& inst, const RunTrace& trace,
                                  double scale = 1.0) {
    std::ostringstream out;
    for (std::size_t q = 0; q < trace.earnings_snapshots.size(); ++q) {
        const auto& [t, gamma] = trace.earnings_snapshots[q];
        json rec{{"t", t}, {"residual", trace.residuals[t]}};
        rec["gamma"] = gamma;
        rec["induced"] = matching_to_json(inst, trace.induced_history[q].second);
        out << rec.dump() << "\n";
    }
    json summary{{"schema", 1},
                 {"stop_reason", to_string(trace.stop)},
                 {"iterations", trace.iterations},
                 {"scale", scale},
                 {"final_residual",
                  trace.residuals.empty() ? 0.0 : trace.residuals.back()}};
    out << summary.dump() << "\n";
    return out.str();
}

}  // namespace jsonio
}  // namespace exnet
