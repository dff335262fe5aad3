#pragma once

#include "exnet/oracle.hpp"
#include "exnet/outcomes.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <variant>

namespace exnet {

struct RebalanceConfig {
    double kappa = 0.5;     // must lie in (0, 1/2] to keep blends stable
    double eps = 1e-3;      // sup-norm termination threshold
    long max_iters = 0;     // 0 = twice the guaranteed iteration bound
};

/// Guaranteed iteration bound for the rebalancing loop (weights <= 1),
/// saturating instead of overflowing for very small eps.
inline long rebalance_iteration_bound(double kappa, double eps) {
    double b = std::ceil(1.0 / (std::numbers::pi * kappa * (1.0 - kappa) * eps * eps));
    double cap = 4.0e18;
    return static_cast<long>(std::min(b, cap));
}

struct RebalanceResult {
    TradeOutcome outcome;
    long iterations = 0;  // number of blend steps performed
};

/// Observer invoked after each blend with the working instance, the fixed
/// matching and the current earnings; lets callers audit that stability is
/// preserved along the way.
using RebalanceAudit = std::function<void(long, const NetworkInstance&, const Matching&, const Vec&)>;

/// Iteratively re-divides each matched edge so that every node keeps its
/// best alternative plus its prescribed fraction of the edge surplus,
/// blending with damping kappa until the correction is below eps. The
/// matching never changes, unmatched nodes stay at zero, and every
/// intermediate allocation remains stable. Inputs that fail the entry check
/// (kappa range, eps > 0, stable valid outcome) are rejected.
inline RebalanceResult edge_rebalancing(const NetworkInstance& inst, const TradeOutcome& stable,
                                        const RebalanceConfig& cfg,
                                        const RebalanceAudit& audit = {}) {
    if (!inst.unit_capacities())
        throw outcome_error("edge rebalancing is defined for unit capacities only");
    if (!(cfg.kappa > 0.0 && cfg.kappa <= 0.5))
        throw config_error("edge_rebalancing: kappa outside (0, 1/2]");
    if (!(cfg.eps > 0.0)) throw config_error("edge_rebalancing: eps must be positive");
    if (auto bad = check_outcome(inst, stable); !bad.empty())
        throw outcome_error("edge_rebalancing: " + bad.front());
    if (!stability_violations(inst, stable).empty())
        throw outcome_error("edge_rebalancing: input outcome is not stable");

    long bound = rebalance_iteration_bound(cfg.kappa, cfg.eps);
    long guard = cfg.max_iters > 0 ? cfg.max_iters
                                   : (bound > 2000000000L ? 4000000000L : 2 * bound);

    Vec gamma = stable.earnings;
    const Matching& m = stable.matching;
    std::vector<char> is_matched_node(inst.node_count(), 0);
    for (int k : m) {
        is_matched_node[inst.edge(k).i] = 1;
        is_matched_node[inst.edge(k).j] = 1;
    }
    Vec reb(inst.node_count(), 0.0);
    long t = 0;
    while (true) {
        for (int v = 0; v < inst.node_count(); ++v)
            if (!is_matched_node[v]) reb[v] = 0.0;
        for (int k : m) {
            const Edge& e = inst.edge(k);
            double alt_i = detail::best_alternative_from_earnings(inst, gamma, e.i, e.j);
            double alt_j = detail::best_alternative_from_earnings(inst, gamma, e.j, e.i);
            double surp = e.wd - alt_i - alt_j;
            reb[e.i] = alt_i + e.r * surp;
            reb[e.j] = alt_j + (1.0 - e.r) * surp;
        }
        double diff = 0.0;
        for (int v = 0; v < inst.node_count(); ++v) diff = std::max(diff, std::abs(reb[v] - gamma[v]));
        if (diff <= cfg.eps) break;
        if (t >= guard)
            throw oracle_error("edge_rebalancing: exceeded iteration guard of " +
                               std::to_string(guard));
        for (int v = 0; v < inst.node_count(); ++v)
            gamma[v] = cfg.kappa * reb[v] + (1.0 - cfg.kappa) * gamma[v];
        ++t;
        if (audit) audit(t, inst, m, gamma);
    }

    Vec shares(inst.directed_count(), 0.0);
    for (int k : m) {
        const Edge& e = inst.edge(k);
        shares[2 * k] = gamma[e.j];      // slot 2k targets j
        shares[2 * k + 1] = gamma[e.i];
    }
    return RebalanceResult{make_outcome(inst, m, std::move(shares)), t};
}

struct Unstable {};

using FptasResult = std::variant<RebalanceResult, Unstable>;

/// Two-step approximation driver: certify a stable outcome from the exact
/// LP dual (or report that none exists), then rebalance it to an eps-correct
/// division. The instance is rescaled to max weight 1 first and the result
/// scaled back; eps is interpreted in original units.
inline FptasResult fptas(const NetworkInstance& inst, double eps, double kappa = 0.5,
                         const OracleGuards& guards = {}, const RebalanceAudit& audit = {}) {
    if (!(eps > 0.0)) throw config_error("fptas: eps must be positive");
    RescaledInstance scaled = rescale(inst);
    LpSolution lp = solve_matching_lp(scaled.instance, guards);
    auto stable = stable_outcome_from_dual(scaled.instance, lp, guards);
    if (!stable) return Unstable{};
    RebalanceConfig cfg;
    cfg.kappa = kappa;
    cfg.eps = eps / scaled.scale;
    RebalanceResult res = edge_rebalancing(scaled.instance, *stable, cfg, audit);
    for (double& s : res.outcome.shares) s *= scaled.scale;
    for (double& g : res.outcome.earnings) g *= scaled.scale;
    return res;
}

}  // namespace exnet
