#pragma once

#include "exnet/instance.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace exnet {

/// Deterministic uniform in [0,1) from a seeded engine; identical across
/// platforms, unlike std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct GeneratedCase {
    NetworkInstance instance;
    std::optional<Vec> alpha0;
    // annotations, where known
    std::optional<Vec> expected_earnings;
    std::optional<std::vector<std::pair<int, int>>> expected_matching;  // node pairs
    std::optional<double> expected_residual;
    std::optional<double> expected_gap;
};

/// Four-node path with weights 8, 6, 2. Unique balanced outcome
/// (1.5, 6.5, 1, 1) on the matching {(0,1), (2,3)}; undamped dynamics from
/// zero reaches it exactly.
inline GeneratedCase chain_example() {
    NetworkInstance inst(4, {Edge(0, 1, "8"), Edge(1, 2, "6"), Edge(2, 3, "2")}, {},
                         {"A", "B", "C", "D"});
    GeneratedCase c{std::move(inst), Vec(6, 0.0), {}, {}, {}, {}};
    c.expected_earnings = Vec{1.5, 6.5, 1.0, 1.0};
    c.expected_matching = std::vector<std::pair<int, int>>{{0, 1}, {2, 3}};
    return c;
}

/// Three-node path a-c-d with weights 2 and 1. Node c trades with a,
/// earnings (0.5, 1.5, 0).
inline GeneratedCase g1_example() {
    NetworkInstance inst(3, {Edge(0, 1, "2"), Edge(1, 2, "1")}, {}, {"a", "c", "d"});
    GeneratedCase c{std::move(inst), Vec(4, 0.0), {}, {}, {}, {}};
    c.expected_earnings = Vec{0.5, 1.5, 0.0};
    c.expected_matching = std::vector<std::pair<int, int>>{{0, 1}};
    return c;
}

/// Ring of 8N nodes on which the unequal-division dynamics stalls: equal
/// weights W = 2 + 2/(1-beta) except one seam edge at W-1, split fractions
/// alternating between r and 1/2 in two mirrored blocks, and a message
/// vector whose update residual is exactly beta^(N-1) (beta = r/(1-r))
/// while inducing no matching. All messages and offers stay >= 1.
inline GeneratedCase ring_slow_instance(int N, double r) {
    if (N < 2) throw validation_error("ring_slow_instance: N must be >= 2");
    if (!(r > 0.0 && r < 0.5)) throw validation_error("ring_slow_instance: r must be in (0, 1/2)");
    const int n = 8 * N;
    const double beta = r / (1.0 - r);
    const double W = 2.0 + 2.0 / (1.0 - beta);

    // split fractions keyed by ordered 1-indexed node pair
    std::map<std::pair<int, int>, double> split;
    auto set_split = [&](int a, int b, double v) {
        split[{a, b}] = v;
        split[{b, a}] = 1.0 - v;
    };
    for (int k = 3; k <= 2 * N - 1; k += 2) set_split(k, k - 1, r);
    for (int k = 2 * N + 1; k <= 4 * N - 3; k += 2) set_split(k, k + 1, r);
    auto reflect = [&](int l) { return n - l + 1; };
    for (int i = 4 * N + 1; i <= 8 * N - 1; ++i) {
        auto it = split.find({reflect(i), reflect(i + 1)});
        set_split(i, i + 1, it != split.end() ? it->second : 0.5);
    }

    std::vector<Edge> edges;
    edges.reserve(n);
    for (int u = 1; u <= n; ++u) {
        int v = u % n + 1;
        double w = (u == 4 * N && v == 4 * N + 1) ? W - 1.0 : W;
        auto it = split.find({u, v});
        edges.emplace_back(u - 1, v - 1, w, it != split.end() ? it->second : 0.5);
    }
    NetworkInstance inst(n, std::move(edges));

    // the stalled message vector, keyed by ordered 1-indexed pair
    auto tail = [&](int upto) {  // sum_{j=0}^{upto} beta^j, empty when upto < 0
        double s = 0.0, p = 1.0;
        for (int j = 0; j <= upto; ++j, p *= beta) s += p;
        return s;
    };
    std::map<std::pair<int, int>, double> msg;
    msg[{n, 1}] = msg[{1, n}] = W / 2 - 1.0;
    for (int i = 0; i <= N - 1; ++i) {
        msg[{2 * i + 1, 2 * i + 2}] = W / 2 - tail(i - 1);
        msg[{2 * i + 2, 2 * i + 1}] = W / 2 + tail(i);
    }
    for (int i = 1; i <= N - 1; ++i) {
        msg[{2 * i, 2 * i + 1}] = W / 2 + tail(i - 2);
        msg[{2 * i + 1, 2 * i}] = W / 2 - tail(i);
    }
    msg[{2 * N, 2 * N + 1}] = W / 2 + tail(N - 1);
    msg[{2 * N + 1, 2 * N}] = W / 2 - tail(N - 1);
    for (int i = 0; i <= N - 2; ++i) {
        msg[{2 * N + 2 * i + 1, 2 * N + 2 * i + 2}] = W / 2 - tail(N - i - 1);
        msg[{2 * N + 2 * i + 2, 2 * N + 2 * i + 1}] = W / 2 + tail(N - i - 3);
    }
    for (int i = 1; i <= N - 1; ++i) {
        msg[{2 * N + 2 * i, 2 * N + 2 * i + 1}] = W / 2 + tail(N - i - 1);
        msg[{2 * N + 2 * i + 1, 2 * N + 2 * i}] = W / 2 - tail(N - i - 2);
    }
    msg[{4 * N - 1, 4 * N}] = msg[{4 * N, 4 * N - 1}] = W / 2 - 1.0;
    msg[{4 * N, 4 * N + 1}] = msg[{4 * N + 1, 4 * N}] = W / 2;
    for (int i = 4 * N + 1; i <= 8 * N - 1; ++i) {
        msg[{i, i + 1}] = msg[{reflect(i), reflect(i + 1)}];
        msg[{i + 1, i}] = msg[{reflect(i + 1), reflect(i)}];
    }

    Vec alpha(inst.directed_count(), 0.0);
    for (int k = 0; k < inst.edge_count(); ++k) {
        const Edge& e = inst.edge(k);
        alpha[2 * k] = msg.at({e.i + 1, e.j + 1});
        alpha[2 * k + 1] = msg.at({e.j + 1, e.i + 1});
    }

    GeneratedCase c{std::move(inst), std::move(alpha), {}, {}, {}, {}};
    c.expected_residual = std::pow(beta, N - 1);
    c.expected_gap = 1.0;
    std::vector<std::pair<int, int>> mstar;
    for (int u = 0; u < n; u += 2) mstar.emplace_back(u, u + 1);
    c.expected_matching = std::move(mstar);
    return c;
}

enum class WeightDist { uniform01, unit };

struct RandomGraphOptions {
    double edge_prob = 0.4;
    WeightDist weights = WeightDist::uniform01;
    std::vector<int> capacity_choices;  // empty = all capacities 1
    double min_weight = 1e-9;           // resample below this, keeps weights positive
};

inline double draw_weight(std::mt19937_64& rng, const RandomGraphOptions& opt) {
    if (opt.weights == WeightDist::unit) return 1.0;
    double w = uniform01(rng);
    while (w < opt.min_weight) w = uniform01(rng);
    return w;
}

/// Erdos-Renyi style instance, reproducible from the seed.
inline GeneratedCase random_graph(int n, std::uint64_t seed, const RandomGraphOptions& opt = {}) {
    std::mt19937_64 rng(seed);
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (uniform01(rng) < opt.edge_prob) edges.emplace_back(i, j, draw_weight(rng, opt));
    std::vector<int> caps;
    if (!opt.capacity_choices.empty()) {
        caps.resize(n);
        for (int v = 0; v < n; ++v)
            caps[v] = opt.capacity_choices[rng() % opt.capacity_choices.size()];
    }
    return GeneratedCase{NetworkInstance(n, std::move(edges), std::move(caps)), {}, {}, {}, {}, {}};
}

/// Random bipartite instance with sides of size n1 and n2; edge_prob = 1
/// gives the complete bipartite graph.
inline GeneratedCase random_bipartite(int n1, int n2, double edge_prob, std::uint64_t seed,
                                      WeightDist weights = WeightDist::uniform01) {
    std::mt19937_64 rng(seed);
    RandomGraphOptions opt;
    opt.weights = weights;
    std::vector<Edge> edges;
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j)
            if (edge_prob >= 1.0 || uniform01(rng) < edge_prob)
                edges.emplace_back(i, n1 + j, draw_weight(rng, opt));
    return GeneratedCase{NetworkInstance(n1 + n2, std::move(edges)), {}, {}, {}, {}, {}};
}

/// Adds an independent uniform [0, eta] bump to every weight, in edge order.
inline NetworkInstance perturb(const NetworkInstance& inst, double eta, std::uint64_t seed) {
    if (eta < 0.0) throw validation_error("perturb: eta must be >= 0");
    std::mt19937_64 rng(seed);
    std::vector<Edge> edges = inst.edges();
    for (Edge& e : edges) {
        double u = uniform01(rng);
        if (eta > 0.0) {
            e.wd += eta * u;
            e.w = rational_from_double(e.wd);
        }
    }
    return NetworkInstance(inst.node_count(), std::move(edges), inst.capacities(), inst.labels());
}

}  // namespace exnet
