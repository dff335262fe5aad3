#pragma once

#include "exnet/outcomes.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace exnet {

enum class StopReason { reached_eps, max_iters, exact_fixed_point };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::reached_eps: return "reached-eps";
        case StopReason::max_iters: return "max-iters";
        case StopReason::exact_fixed_point: return "exact-fixed-point";
    }
    return "?";
}

/// Iteration t performs the t-th update (t = 0,1,...) and records the
/// residual of the state it produced. residuals[t] is therefore the
/// fixed-point residual after t+1 updates.
struct RunTrace {
    std::vector<double> residuals;
    std::vector<std::pair<long, Vec>> earnings_snapshots;
    std::vector<std::pair<long, std::optional<Matching>>> induced_history;
    StopReason stop = StopReason::max_iters;
    long iterations = 0;  // index of the last performed iteration
};

struct RunResult {
    Vec alpha;
    RunTrace trace;
};

inline RunResult run_dynamics(const NetworkInstance& inst, const Vec& alpha0,
                              const DynamicsConfig& cfg) {
    if (alpha0.size() != static_cast<std::size_t>(inst.directed_count()))
        throw config_error("alpha0 size mismatch");
    if (auto bad = validate_config(inst, cfg); !bad.empty())
        throw config_error("invalid dynamics config: " + bad.front());
    double exact = cfg.exact_tol * std::max(1.0, inst.max_weight());
    RunResult res{alpha0, {}};
    auto record = [&](long t) {
        Vec offers = compute_offers(inst, res.alpha, cfg.mode);
        res.trace.earnings_snapshots.emplace_back(t, compute_earnings(inst, offers));
        res.trace.induced_history.emplace_back(t, induced_matching(inst, res.alpha, cfg.mode));
    };
    for (long t = 0; t < cfg.max_iters; ++t) {
        res.alpha = step(inst, res.alpha, cfg, t);
        double r = fixed_point_residual(inst, res.alpha, cfg.mode);
        res.trace.residuals.push_back(r);
        res.trace.iterations = t;
        bool done = false;
        if (r <= exact) {
            res.trace.stop = StopReason::exact_fixed_point;
            done = true;
        } else if (cfg.target_eps > 0.0 && r <= cfg.target_eps) {
            res.trace.stop = StopReason::reached_eps;
            done = true;
        } else if (t + 1 == cfg.max_iters) {
            res.trace.stop = StopReason::max_iters;
            done = true;
        }
        if (done || t % cfg.record_every == 0) record(t);
        if (done) break;
    }
    if (cfg.max_iters == 0) res.trace.stop = StopReason::max_iters;
    return res;
}

}  // namespace exnet
