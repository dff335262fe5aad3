#pragma once

#include "exnet/instance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace exnet {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Mode { equal_split, unequal_division };

inline double positive_part(double x) { return x > 0.0 ? x : 0.0; }

/// Offer carried by slot d, as a function of the two best-alternative
/// messages on the edge: the sender never offers more than the weight minus
/// her own alternative, and a non-negative surplus is shared with fraction
/// r kept by the sender.
inline double offer_on_slot(const NetworkInstance& inst, const Vec& alpha, int d, Mode mode) {
    const Edge& e = inst.edge(d / 2);
    double mine = alpha[d];
    double theirs = alpha[NetworkInstance::flip_slot(d)];
    double keep = mode == Mode::equal_split ? 0.5 : inst.slot_split(d);
    return positive_part(e.wd - mine) - keep * positive_part(e.wd - mine - theirs);
}

inline Vec compute_offers(const NetworkInstance& inst, const Vec& alpha, Mode mode) {
    Vec m(inst.directed_count());
    for (int d = 0; d < inst.directed_count(); ++d) m[d] = offer_on_slot(inst, alpha, d, mode);
    return m;
}

/// b-th largest of a set of values; 0 when fewer than b values are present.
inline double bth_largest(std::vector<double> values, int b) {
    if (b < 1) throw config_error("bth_largest: b must be >= 1");
    if (static_cast<int>(values.size()) < b) return 0.0;
    std::nth_element(values.begin(), values.begin() + (b - 1), values.end(), std::greater<>());
    return values[b - 1];
}

namespace detail {

// Incoming offers of one node, sorted descending, with the rank of each arc.
struct IncomingSorted {
    std::vector<double> values;  // sorted descending
    std::vector<int> rank;       // rank[arc position in inst.arcs(v)] -> index into values
};

inline IncomingSorted sort_incoming(const NetworkInstance& inst, const Vec& offers, int v) {
    const auto& arcs = inst.arcs(v);
    std::vector<std::pair<double, int>> vals;  // (offer to v, arc position)
    vals.reserve(arcs.size());
    for (int a = 0; a < static_cast<int>(arcs.size()); ++a)
        vals.emplace_back(offers[arcs[a].in], a);
    // ties broken toward the lower neighbor id, for reproducible share vectors
    std::sort(vals.begin(), vals.end(), [&](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first > y.first;
        return arcs[x.second].peer < arcs[y.second].peer;
    });
    IncomingSorted out;
    out.values.resize(vals.size());
    out.rank.resize(vals.size());
    for (int q = 0; q < static_cast<int>(vals.size()); ++q) {
        out.values[q] = vals[q].first;
        out.rank[vals[q].second] = q;
    }
    return out;
}

// b-th largest of the sorted values after removing the entry at index q.
inline double bth_largest_excluding(const std::vector<double>& sorted, int q, int b) {
    int idx = (q <= b - 1) ? b : b - 1;
    return idx < static_cast<int>(sorted.size()) ? sorted[idx] : 0.0;
}

}  // namespace detail

/// Best alternative of node i when it ignores neighbor j: the b_i-th largest
/// offer incoming to i from the other neighbors.
inline double best_alternative(const NetworkInstance& inst, const Vec& offers, int i, int j) {
    int b = inst.capacity(i);
    std::vector<double> vals;
    for (const auto& arc : inst.arcs(i))
        if (arc.peer != j) vals.push_back(offers[arc.in]);
    return bth_largest(std::move(vals), b);
}

/// The update-target map: for every directed slot, the owner's best
/// alternative excluding the slot's counterparty. This is the nonexpansive
/// map whose damped iteration the dynamics runs.
inline Vec best_alternatives(const NetworkInstance& inst, const Vec& offers) {
    Vec target(inst.directed_count(), 0.0);
    for (int v = 0; v < inst.node_count(); ++v) {
        const auto& arcs = inst.arcs(v);
        if (arcs.empty()) continue;
        auto inc = detail::sort_incoming(inst, offers, v);
        int b = inst.capacity(v);
        for (int a = 0; a < static_cast<int>(arcs.size()); ++a)
            target[arcs[a].out] = detail::bth_largest_excluding(inc.values, inc.rank[a], b);
    }
    return target;
}

/// Earnings estimate per node: the b_i-th largest incoming offer.
inline Vec compute_earnings(const NetworkInstance& inst, const Vec& offers) {
    Vec gamma(inst.node_count(), 0.0);
    for (int v = 0; v < inst.node_count(); ++v) {
        std::vector<double> vals;
        for (const auto& arc : inst.arcs(v)) vals.push_back(offers[arc.in]);
        gamma[v] = bth_largest(std::move(vals), inst.capacity(v));
    }
    return gamma;
}

/// Profit-share vector: shares[d] is what the target of slot d books from
/// the slot owner's offer -- the offer value if it ranks among the target's
/// top b incoming offers, else 0. Ties rank the lower sender id first.
inline Vec compute_shares(const NetworkInstance& inst, const Vec& offers) {
    Vec shares(inst.directed_count(), 0.0);
    for (int v = 0; v < inst.node_count(); ++v) {
        const auto& arcs = inst.arcs(v);
        if (arcs.empty()) continue;
        auto inc = detail::sort_incoming(inst, offers, v);
        int b = inst.capacity(v);
        for (int a = 0; a < static_cast<int>(arcs.size()); ++a)
            if (inc.rank[a] < b) shares[arcs[a].in] = offers[arcs[a].in];
    }
    return shares;
}

/// How far alpha is from being a fixed point of the update map, in sup norm.
/// A state is an eps-fixed point iff this is <= eps.
inline double fixed_point_residual(const NetworkInstance& inst, const Vec& alpha, Mode mode) {
    Vec offers = compute_offers(inst, alpha, mode);
    Vec target = best_alternatives(inst, offers);
    double r = 0.0;
    for (int d = 0; d < inst.directed_count(); ++d) r = std::max(r, std::abs(alpha[d] - target[d]));
    return r;
}

enum class Schedule { synchronous, node_damped, time_varying, asynchronous };

struct DynamicsConfig {
    Mode mode = Mode::equal_split;
    double kappa = 0.5;
    Schedule schedule = Schedule::synchronous;
    std::vector<double> node_kappa;   // node_damped: one damping factor per node
    std::vector<double> kappa_steps;  // time_varying: kappa at step t (last value repeats)
    std::vector<int> async_order;     // asynchronous: permutation of directed slots (empty = 0,1,2,...)
    double async_damping = 0.0;       // asynchronous per-update damping; 0 = 1/(2|E|)
    long max_iters = 1000000;
    double target_eps = 0.0;          // 0 = run until exact fixed point or max_iters
    long record_every = 1;

    // residual below exact_tol * W_max stops the run as an exact fixed point
    double exact_tol = 1e-13;
};

inline std::vector<std::string> validate_config(const NetworkInstance& inst,
                                                const DynamicsConfig& cfg) {
    std::vector<std::string> bad;
    auto check_kappa = [&](double k, const std::string& what) {
        if (!(k > 0.0 && k <= 1.0)) bad.push_back(what + " outside (0,1]");
    };
    switch (cfg.schedule) {
        case Schedule::synchronous:
            check_kappa(cfg.kappa, "kappa");
            break;
        case Schedule::node_damped:
            if (cfg.node_kappa.size() != static_cast<std::size_t>(inst.node_count()))
                bad.push_back("node_kappa size mismatch");
            for (double k : cfg.node_kappa) check_kappa(k, "node kappa");
            break;
        case Schedule::time_varying:
            if (cfg.kappa_steps.empty()) bad.push_back("empty kappa_steps");
            for (double k : cfg.kappa_steps) check_kappa(k, "kappa step");
            break;
        case Schedule::asynchronous: {
            if (!cfg.async_order.empty()) {
                std::vector<int> order = cfg.async_order;
                std::sort(order.begin(), order.end());
                bool perm = static_cast<int>(order.size()) == inst.directed_count();
                for (int d = 0; perm && d < inst.directed_count(); ++d) perm = order[d] == d;
                if (!perm) bad.push_back("async_order is not a permutation of directed slots");
            }
            if (cfg.async_damping < 0.0 || cfg.async_damping > 1.0)
                bad.push_back("async damping outside [0,1]");
            break;
        }
    }
    if (cfg.max_iters < 0) bad.push_back("negative max_iters");
    if (cfg.target_eps < 0.0) bad.push_back("negative target_eps");
    if (cfg.record_every < 1) bad.push_back("record_every < 1");
    return bad;
}

/// Undamped synchronous updates can oscillate on even cycles; convergence
/// guarantees need kappa strictly below 1.
inline std::vector<std::string> config_warnings(const DynamicsConfig& cfg) {
    std::vector<std::string> w;
    if (cfg.schedule == Schedule::synchronous && cfg.kappa == 1.0)
        w.push_back("kappa = 1: no damping, updates may oscillate on even cycles");
    return w;
}

/// One update. Synchronous/node-damped/time-varying schedules apply one
/// damped sweep over all slots; the asynchronous schedule applies one full
/// cycle of single-slot updates in the configured order.
inline Vec step(const NetworkInstance& inst, const Vec& alpha, const DynamicsConfig& cfg, long t) {
    switch (cfg.schedule) {
        case Schedule::synchronous:
        case Schedule::node_damped:
        case Schedule::time_varying: {
            Vec offers = compute_offers(inst, alpha, cfg.mode);
            Vec target = best_alternatives(inst, offers);
            Vec next(inst.directed_count());
            for (int d = 0; d < inst.directed_count(); ++d) {
                double k = cfg.kappa;
                if (cfg.schedule == Schedule::node_damped) {
                    k = cfg.node_kappa[inst.slot_owner(d)];
                } else if (cfg.schedule == Schedule::time_varying) {
                    auto idx = std::min<std::size_t>(t, cfg.kappa_steps.size() - 1);
                    k = cfg.kappa_steps[idx];
                }
                next[d] = (1.0 - k) * alpha[d] + k * target[d];
            }
            return next;
        }
        case Schedule::asynchronous: {
            Vec cur = alpha;
            double damp = cfg.async_damping > 0.0 ? cfg.async_damping
                                                  : 1.0 / static_cast<double>(inst.directed_count());
            for (int s = 0; s < inst.directed_count(); ++s) {
                int d = cfg.async_order.empty() ? s : cfg.async_order[s];
                Vec offers = compute_offers(inst, cur, cfg.mode);
                int owner = inst.slot_owner(d);
                int other = inst.slot_target(d);
                double target = best_alternative(inst, offers, owner, other);
                cur[d] = (1.0 - damp) * cur[d] + damp * target;
            }
            return cur;
        }
    }
    throw config_error("unknown schedule");
}

/// Iterations guaranteed to yield an eps-fixed point under synchronous
/// damping with kappa in (0,1) and weights rescaled to [0,1].
inline double tstar(double kappa, double eps) {
    if (!(kappa > 0.0 && kappa < 1.0)) throw config_error("tstar: kappa must be in (0,1)");
    if (!(eps > 0.0)) throw config_error("tstar: eps must be positive");
    return 1.0 / (std::numbers::pi * kappa * (1.0 - kappa) * eps * eps);
}

}  // namespace exnet
