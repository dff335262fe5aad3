#pragma once

#include "exnet/rational.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace exnet {

struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Message and offer vectors live on directed slots (size 2|E|);
/// earnings vectors live on nodes (size |V|).
using Vec = std::vector<double>;

/// Undirected edge with a positive profit and a split fraction.
/// `r` is the fraction of the edge surplus credited to endpoint `i`;
/// the fraction for `j` is implicitly 1 - r.
struct Edge {
    int i = 0;
    int j = 0;
    Rational w;
    double wd = 0.0;
    double r = 0.5;

    Edge() = default;
    Edge(int i_, int j_, const std::string& weight, double r_ = 0.5)
        : i(i_), j(j_), w(parse_rational(weight)), wd(std::stod(weight)), r(r_) {
        if (weight.find('/') != std::string::npos) wd = to_double(w);
    }
    Edge(int i_, int j_, double weight, double r_ = 0.5)
        : i(i_), j(j_), w(rational_from_double(weight)), wd(weight), r(r_) {}
    Edge(int i_, int j_, Rational weight, double r_ = 0.5)
        : i(i_), j(j_), w(std::move(weight)), wd(to_double(w)), r(r_) {}
};

inline std::vector<std::string> validate_instance(int n, const std::vector<Edge>& edges,
                                                  const std::vector<int>& capacities) {
    std::vector<std::string> bad;
    if (n < 0) bad.push_back("negative node count");
    std::map<std::pair<int, int>, int> seen;
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const Edge& e = edges[k];
        std::string tag = "edge #" + std::to_string(k) + " (" + std::to_string(e.i) + "," +
                          std::to_string(e.j) + ")";
        if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n) {
            bad.push_back(tag + ": endpoint out of range");
            continue;
        }
        if (e.i == e.j) bad.push_back(tag + ": self-loop");
        auto key = std::minmax(e.i, e.j);
        if (auto it = seen.find(key); it != seen.end())
            bad.push_back(tag + ": parallel edge (duplicate of #" + std::to_string(it->second) + ")");
        else
            seen.emplace(key, static_cast<int>(k));
        if (!(e.w > 0)) bad.push_back(tag + ": non-positive weight");
        if (!(e.r > 0.0 && e.r < 1.0)) bad.push_back(tag + ": split fraction outside (0,1)");
    }
    if (!capacities.empty() && capacities.size() != static_cast<std::size_t>(n))
        bad.push_back("capacity vector size mismatch");
    for (std::size_t v = 0; v < capacities.size(); ++v)
        if (capacities[v] < 1)
            bad.push_back("node " + std::to_string(v) + ": capacity < 1");
    return bad;
}

/// Immutable bargaining-network instance: weighted graph, per-node trade
/// capacities and per-edge split fractions. Directed message slots are
/// indexed 2k (message of edges[k].i excluding .j) and 2k+1 (the reverse);
/// slot d pairs with slot d^1.
class NetworkInstance {
public:
    struct Arc {
        int edge;  // index into edges()
        int peer;  // the neighbor on that edge
        int out;   // directed slot (this node -> peer)
        int in;    // directed slot (peer -> this node)
    };

    NetworkInstance(int n, std::vector<Edge> edges, std::vector<int> capacities = {},
                    std::vector<std::string> labels = {})
        : n_(n), edges_(std::move(edges)), cap_(std::move(capacities)), labels_(std::move(labels)) {
        auto bad = validate_instance(n_, edges_, cap_);
        if (!labels_.empty() && labels_.size() != static_cast<std::size_t>(n_))
            bad.push_back("label table size mismatch");
        if (!bad.empty()) {
            std::string msg = "invalid instance:";
            for (const auto& b : bad) msg += "\n  " + b;
            throw validation_error(msg);
        }
        if (cap_.empty()) cap_.assign(n_, 1);
        adj_.resize(n_);
        for (int k = 0; k < static_cast<int>(edges_.size()); ++k) {
            const Edge& e = edges_[k];
            adj_[e.i].push_back(Arc{k, e.j, 2 * k, 2 * k + 1});
            adj_[e.j].push_back(Arc{k, e.i, 2 * k + 1, 2 * k});
        }
        wmax_exact_ = 0;
        for (const Edge& e : edges_) wmax_exact_ = std::max(wmax_exact_, e.w);
        wmax_ = 0.0;
        for (const Edge& e : edges_) wmax_ = std::max(wmax_, e.wd);
    }

    int node_count() const { return n_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    int directed_count() const { return 2 * edge_count(); }
    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge(int k) const { return edges_[k]; }
    int capacity(int v) const { return cap_[v]; }
    const std::vector<int>& capacities() const { return cap_; }
    bool unit_capacities() const {
        return std::all_of(cap_.begin(), cap_.end(), [](int b) { return b == 1; });
    }
    const std::vector<Arc>& arcs(int v) const { return adj_[v]; }
    int degree(int v) const { return static_cast<int>(adj_[v].size()); }
    const std::vector<std::string>& labels() const { return labels_; }

    double max_weight() const { return wmax_; }
    const Rational& max_weight_exact() const { return wmax_exact_; }

    static int flip_slot(int d) { return d ^ 1; }
    /// Directed slot for the ordered pair (from -> other endpoint) on edge k.
    int slot(int k, int from) const { return edges_[k].i == from ? 2 * k : 2 * k + 1; }
    /// Sender of the offer carried in slot d (the node whose message it is).
    int slot_owner(int d) const { const Edge& e = edges_[d / 2]; return d % 2 == 0 ? e.i : e.j; }
    int slot_target(int d) const { const Edge& e = edges_[d / 2]; return d % 2 == 0 ? e.j : e.i; }
    /// Split fraction credited to the owner of slot d.
    double slot_split(int d) const { const Edge& e = edges_[d / 2]; return d % 2 == 0 ? e.r : 1.0 - e.r; }

    int find_edge(int a, int b) const {
        for (const Arc& arc : adj_[a])
            if (arc.peer == b) return arc.edge;
        return -1;
    }

private:
    int n_;
    std::vector<Edge> edges_;
    std::vector<int> cap_;
    std::vector<std::string> labels_;
    std::vector<std::vector<Arc>> adj_;
    double wmax_ = 0.0;
    Rational wmax_exact_;
};

struct RescaledInstance {
    NetworkInstance instance;
    double scale;           // multiply rescaled quantities by this to undo
    Rational scale_exact;
};

/// Divides all weights by the maximum so the rescaled instance has
/// max weight exactly 1. Earnings on the rescaled instance times `scale`
/// recover earnings on the original.
inline RescaledInstance rescale(const NetworkInstance& inst) {
    Rational s = inst.max_weight_exact();
    if (s == 0) throw validation_error("rescale: empty instance");
    std::vector<Edge> edges = inst.edges();
    for (Edge& e : edges) {
        e.w /= s;
        e.wd = to_double(e.w);
        // keep w == 1 bit-exact on the maximal edge
        if (e.w == 1) e.wd = 1.0;
    }
    return RescaledInstance{NetworkInstance(inst.node_count(), std::move(edges), inst.capacities(),
                                            inst.labels()),
                            to_double(s), s};
}

}  // namespace exnet
