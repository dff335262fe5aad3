#pragma once

#include "exnet/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace exnet {

struct outcome_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Edge indices forming a b-matching (degree of each node at most its capacity).
using Matching = std::vector<int>;

inline bool is_b_matching(const NetworkInstance& inst, const Matching& m) {
    std::vector<int> deg(inst.node_count(), 0);
    for (int k : m) {
        if (k < 0 || k >= inst.edge_count()) return false;
        ++deg[inst.edge(k).i];
        ++deg[inst.edge(k).j];
    }
    for (int v = 0; v < inst.node_count(); ++v)
        if (deg[v] > inst.capacity(v)) return false;
    return true;
}

/// A pairing plus the division of each matched edge's profit.
/// shares[d] is what the *target* of slot d receives from the partnership on
/// that edge; zero on unmatched edges. earnings[v] follows from the shares:
/// the minimum incoming share when v is saturated, 0 otherwise.
struct TradeOutcome {
    Matching matching;
    Vec shares;    // size 2|E|
    Vec earnings;  // size |V|, derived
};

inline Vec earnings_from_shares(const NetworkInstance& inst, const Matching& m, const Vec& shares) {
    std::vector<int> deg(inst.node_count(), 0);
    std::vector<char> matched(inst.edge_count(), 0);
    for (int k : m) {
        matched[k] = 1;
        ++deg[inst.edge(k).i];
        ++deg[inst.edge(k).j];
    }
    Vec gamma(inst.node_count(), 0.0);
    for (int v = 0; v < inst.node_count(); ++v) {
        if (deg[v] < inst.capacity(v)) continue;  // not saturated -> 0
        double lo = std::numeric_limits<double>::infinity();
        for (const auto& arc : inst.arcs(v))
            if (matched[arc.edge]) lo = std::min(lo, shares[arc.in]);
        gamma[v] = std::isfinite(lo) ? lo : 0.0;
    }
    return gamma;
}

inline TradeOutcome make_outcome(const NetworkInstance& inst, Matching m, Vec shares) {
    std::sort(m.begin(), m.end());
    TradeOutcome out{std::move(m), std::move(shares), {}};
    out.earnings = earnings_from_shares(inst, out.matching, out.shares);
    return out;
}

/// Structural validity: a b-matching, shares supported on matched edges and
/// summing to the edge weight there (within tol), non-negative everywhere.
inline std::vector<std::string> check_outcome(const NetworkInstance& inst, const TradeOutcome& out,
                                              double tol = 1e-9) {
    std::vector<std::string> bad;
    double wtol = tol * std::max(1.0, inst.max_weight());
    if (out.shares.size() != static_cast<std::size_t>(inst.directed_count()))
        bad.push_back("share vector size mismatch");
    if (!is_b_matching(inst, out.matching)) bad.push_back("matching violates capacities");
    if (!bad.empty()) return bad;
    std::vector<char> matched(inst.edge_count(), 0);
    for (int k : out.matching) matched[k] = 1;
    for (int k = 0; k < inst.edge_count(); ++k) {
        const Edge& e = inst.edge(k);
        double a = out.shares[2 * k], b = out.shares[2 * k + 1];
        std::string tag = "edge (" + std::to_string(e.i) + "," + std::to_string(e.j) + ")";
        if (a < -wtol || b < -wtol) bad.push_back(tag + ": negative share");
        if (matched[k]) {
            if (std::abs(a + b - e.wd) > wtol) bad.push_back(tag + ": shares do not sum to weight");
        } else {
            if (std::abs(a) > wtol || std::abs(b) > wtol) bad.push_back(tag + ": share off the matching");
        }
    }
    return bad;
}

/// Reads a pairing off a message state, if one is unambiguous: every node
/// with at least b_i offers above tol is matched to the senders of its top
/// b_i offers (which must be separated from the next one by more than tol),
/// nodes with fewer positive offers are matched to all their positive
/// senders, and the relation must be symmetric. Returns nothing otherwise.
inline std::optional<Matching> induced_matching(const NetworkInstance& inst, const Vec& alpha,
                                                Mode mode, double tol = -1.0) {
    if (tol < 0.0) tol = 1e-9 * std::max(1.0, inst.max_weight());
    Vec offers = compute_offers(inst, alpha, mode);
    std::vector<std::vector<int>> chosen(inst.node_count());  // edges each node wants
    for (int v = 0; v < inst.node_count(); ++v) {
        const auto& arcs = inst.arcs(v);
        std::vector<std::pair<double, int>> inc;  // (offer, arc pos)
        for (int a = 0; a < static_cast<int>(arcs.size()); ++a)
            inc.emplace_back(offers[arcs[a].in], a);
        std::sort(inc.begin(), inc.end(),
                  [](const auto& x, const auto& y) { return x.first > y.first; });
        int b = inst.capacity(v);
        int positives = static_cast<int>(
            std::count_if(inc.begin(), inc.end(), [&](const auto& p) { return p.first > tol; }));
        if (positives >= b) {
            // need strict separation below the b-th offer
            if (static_cast<int>(inc.size()) > b && !(inc[b - 1].first > inc[b].first + tol))
                return std::nullopt;
            for (int q = 0; q < b; ++q) chosen[v].push_back(arcs[inc[q].second].edge);
        } else {
            for (const auto& [val, a] : inc)
                if (val > tol) chosen[v].push_back(arcs[a].edge);
        }
    }
    Matching m;
    std::vector<char> want(inst.edge_count(), 0);
    for (int v = 0; v < inst.node_count(); ++v)
        for (int k : chosen[v]) {
            if (want[k]) m.push_back(k);  // second endorsement completes the pair
            want[k] = want[k] ? 2 : 1;
        }
    // symmetry: every endorsement must be mutual
    for (int k = 0; k < inst.edge_count(); ++k)
        if (want[k] == 1) return std::nullopt;
    std::sort(m.begin(), m.end());
    if (!is_b_matching(inst, m)) return std::nullopt;
    return m;
}

/// Edges outside the matching where the two endpoints together earn less
/// than the edge offers -- the pairs with an incentive to defect.
inline std::vector<int> stability_violations(const NetworkInstance& inst, const TradeOutcome& out,
                                             double tol = 1e-12) {
    auto bad = check_outcome(inst, out, std::max(tol, 1e-9));
    if (!bad.empty()) throw outcome_error("malformed outcome: " + bad.front());
    double wtol = tol * std::max(1.0, inst.max_weight());
    std::vector<char> matched(inst.edge_count(), 0);
    for (int k : out.matching) matched[k] = 1;
    std::vector<int> viol;
    for (int k = 0; k < inst.edge_count(); ++k) {
        if (matched[k]) continue;
        const Edge& e = inst.edge(k);
        if (out.earnings[e.i] + out.earnings[e.j] < e.wd - wtol) viol.push_back(k);
    }
    return viol;
}

namespace detail {

/// b_v-th largest of (w_vk - gamma_k)+ over neighbors k of v excluding one.
inline double best_alternative_from_earnings(const NetworkInstance& inst, const Vec& gamma, int v,
                                             int excluded) {
    std::vector<double> vals;
    for (const auto& arc : inst.arcs(v)) {
        if (arc.peer == excluded) continue;
        vals.push_back(positive_part(inst.edge(arc.edge).wd - gamma[arc.peer]));
    }
    return bth_largest(std::move(vals), inst.capacity(v));
}

}  // namespace detail

/// Worst imbalance over matched edges: each side's surplus of its share over
/// its best alternative (computed from the earnings vector) should agree.
/// An outcome is eps-balanced iff this is <= eps.
inline double balance_residual(const NetworkInstance& inst, const TradeOutcome& out) {
    auto bad = check_outcome(inst, out);
    if (!bad.empty()) throw outcome_error("malformed outcome: " + bad.front());
    double worst = 0.0;
    for (int k : out.matching) {
        const Edge& e = inst.edge(k);
        double alt_i = detail::best_alternative_from_earnings(inst, out.earnings, e.i, e.j);
        double alt_j = detail::best_alternative_from_earnings(inst, out.earnings, e.j, e.i);
        double side_i = out.shares[2 * k + 1] - alt_i;  // what i books minus i's alternative
        double side_j = out.shares[2 * k] - alt_j;
        worst = std::max(worst, std::abs(side_i - side_j));
    }
    return worst;
}

/// Surplus of a matched edge over the endpoints' best alternatives.
inline double edge_surplus(const NetworkInstance& inst, const Vec& gamma, int k) {
    const Edge& e = inst.edge(k);
    return e.wd - detail::best_alternative_from_earnings(inst, gamma, e.i, e.j) -
           detail::best_alternative_from_earnings(inst, gamma, e.j, e.i);
}

/// Worst deviation from the prescribed split of the edge surplus, for unit
/// capacities: on each matched edge, i should earn its best alternative plus
/// r_ij times the surplus.
inline double correct_division_residual(const NetworkInstance& inst, const TradeOutcome& out) {
    if (!inst.unit_capacities())
        throw outcome_error("correct division is defined for unit capacities only");
    auto bad = check_outcome(inst, out);
    if (!bad.empty()) throw outcome_error("malformed outcome: " + bad.front());
    double worst = 0.0;
    for (int k : out.matching) {
        const Edge& e = inst.edge(k);
        double alt_i = detail::best_alternative_from_earnings(inst, out.earnings, e.i, e.j);
        double surp = edge_surplus(inst, out.earnings, k);
        worst = std::max(worst, std::abs(out.earnings[e.i] - alt_i - e.r * surp));
    }
    return worst;
}

inline bool is_eps_nb(const NetworkInstance& inst, const TradeOutcome& out, double eps) {
    try {
        return stability_violations(inst, out).empty() && balance_residual(inst, out) <= eps;
    } catch (const outcome_error&) {
        return false;
    }
}

inline bool is_eps_ud(const NetworkInstance& inst, const TradeOutcome& out, double eps) {
    try {
        return stability_violations(inst, out).empty() &&
               correct_division_residual(inst, out) <= eps;
    } catch (const outcome_error&) {
        return false;
    }
}

/// Assembles the trade outcome a message state describes: the induced
/// matching with each matched edge split according to the two offers.
/// Fails when no matching is induced.
inline TradeOutcome outcome_from_state(const NetworkInstance& inst, const Vec& alpha, Mode mode,
                                       double tol = -1.0) {
    auto m = induced_matching(inst, alpha, mode, tol);
    if (!m) throw outcome_error("state induces no matching");
    Vec offers = compute_offers(inst, alpha, mode);
    Vec shares(inst.directed_count(), 0.0);
    for (int k : *m) {
        shares[2 * k] = offers[2 * k];
        shares[2 * k + 1] = offers[2 * k + 1];
    }
    return make_outcome(inst, *m, std::move(shares));
}

}  // namespace exnet
