#pragma once

#include "exnet/outcomes.hpp"
#include "exnet/rational.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace exnet {

struct oracle_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OracleGuards {
    int max_edges_enumeration = 24;  // exhaustive b-matching search
    int max_edges_gap = 14;          // half-integral gap search
};

// ---------------------------------------------------------------------------
// Exhaustive b-matching enumeration
// ---------------------------------------------------------------------------

struct BMatchingReport {
    Matching best;            // first maximizer in DFS order (deterministic)
    Rational best_weight;
    bool unique = true;       // single maximizer?
    Rational second_weight;   // best weight strictly below best_weight (0 if none)
    long count = 0;           // number of b-matchings enumerated
};

/// Depth-first search over edge subsets with capacity pruning. Only feasible
/// subsets are expanded, so the cost is proportional to the number of
/// b-matchings rather than 2^|E|.
inline BMatchingReport enumerate_b_matchings(const NetworkInstance& inst,
                                             const OracleGuards& guards = {}) {
    if (inst.edge_count() > guards.max_edges_enumeration)
        throw oracle_error("instance too large for exhaustive matching enumeration (" +
                           std::to_string(inst.edge_count()) + " edges)");
    BMatchingReport rep;
    rep.best_weight = -1;
    rep.second_weight = 0;
    std::vector<int> room(inst.capacities().begin(), inst.capacities().end());
    std::vector<int> cur;
    Rational weight = 0;
    auto consider = [&](const Rational& w, const std::vector<int>& set) {
        ++rep.count;
        if (w > rep.best_weight) {
            if (rep.best_weight >= 0) rep.second_weight = rep.best_weight;
            rep.best_weight = w;
            rep.best = set;
            rep.unique = true;
        } else if (w == rep.best_weight) {
            rep.unique = false;
        } else if (w > rep.second_weight) {
            rep.second_weight = w;
        }
    };
    auto rec = [&](auto&& self, int k) -> void {
        if (k == inst.edge_count()) {
            consider(weight, cur);
            return;
        }
        self(self, k + 1);
        const Edge& e = inst.edge(k);
        if (room[e.i] > 0 && room[e.j] > 0) {
            --room[e.i]; --room[e.j];
            cur.push_back(k);
            weight += e.w;
            self(self, k + 1);
            weight -= e.w;
            cur.pop_back();
            ++room[e.i]; ++room[e.j];
        }
    };
    rec(rec, 0);
    std::sort(rep.best.begin(), rep.best.end());
    return rep;
}

// ---------------------------------------------------------------------------
// LP gap over half-integral extreme points (unit capacities)
// ---------------------------------------------------------------------------

struct GapReport {
    Rational g;                        // 0 when the optimum is not unique
    Rational optimum;                  // best objective over the candidate set
    bool unique_optimum = true;
    bool optimum_integral = true;
    std::vector<int> witness_halves;   // second-best point, value per edge in halves (0/1/2)
    Rational witness_value;
};

namespace detail {

// The extreme points of the matching relaxation are exactly the vectors in
// {0, 1/2, 1}^E whose half-valued edges form vertex-disjoint odd cycles and
// whose unit edges form a matching avoiding those cycles. The search below
// enumerates them: per-node load is tracked in half-units (at most 2), a node
// whose incident edges are all decided must have half-degree 0 or 2, and a
// finished assignment is kept only if every half-cycle has odd length.
struct GapSearch {
    const NetworkInstance& inst;
    std::vector<int> halves;      // current assignment per edge
    std::vector<int> load;        // half-units used per node
    std::vector<int> half_deg;    // number of half-valued edges per node
    std::vector<int> last_edge;   // highest incident edge index per node
    // objective bookkeeping: weights scaled to integers over a common denominator
    std::vector<BigInt> scaled_w;
    BigInt common_den = 1;
    BigInt value = 0;             // sum of scaled_w[k] * halves[k]
    // running best / second best
    BigInt best = -1, second = -1;
    bool best_unique = true, best_integral = true;
    std::vector<int> best_halves, second_halves;

    explicit GapSearch(const NetworkInstance& instance) : inst(instance) {
        int m = inst.edge_count();
        halves.assign(m, 0);
        load.assign(inst.node_count(), 0);
        half_deg.assign(inst.node_count(), 0);
        last_edge.assign(inst.node_count(), -1);
        for (int k = 0; k < m; ++k) {
            last_edge[inst.edge(k).i] = k;
            last_edge[inst.edge(k).j] = k;
        }
        for (int k = 0; k < m; ++k) {
            BigInt den = boost::multiprecision::denominator(inst.edge(k).w);
            common_den = boost::multiprecision::lcm(common_den, den);
        }
        scaled_w.resize(m);
        for (int k = 0; k < m; ++k) {
            const Rational& w = inst.edge(k).w;
            scaled_w[k] = boost::multiprecision::numerator(w) *
                          (common_den / boost::multiprecision::denominator(w));
        }
    }

    bool odd_half_cycles() const {
        std::vector<char> seen(inst.edge_count(), 0);
        for (int k0 = 0; k0 < inst.edge_count(); ++k0) {
            if (halves[k0] != 1 || seen[k0]) continue;
            int len = 0;
            int e = k0;
            int start = inst.edge(k0).i;
            int at = start;
            do {
                seen[e] = 1;
                ++len;
                int next = inst.edge(e).i == at ? inst.edge(e).j : inst.edge(e).i;
                int nk = -1;
                for (const auto& arc : inst.arcs(next))
                    if (halves[arc.edge] == 1 && arc.edge != e) { nk = arc.edge; break; }
                at = next;
                if (at == start) break;
                e = nk;
                if (e < 0) return false;  // open path, not an extreme point
            } while (true);
            if (len % 2 == 0) return false;
        }
        return true;
    }

    void take_leaf() {
        if (!odd_half_cycles()) return;
        bool integral = std::none_of(halves.begin(), halves.end(), [](int h) { return h == 1; });
        if (value > best) {
            if (best >= 0) { second = best; second_halves = best_halves; }
            best = value;
            best_halves = halves;
            best_unique = true;
            best_integral = integral;
        } else if (value == best) {
            best_unique = false;
            second = value;
            second_halves = halves;
        } else if (value > second) {
            second = value;
            second_halves = halves;
        }
    }

    bool node_done_ok(int v, int k) const {
        return last_edge[v] != k || half_deg[v] != 1;
    }

    void rec(int k) {
        if (k == inst.edge_count()) {
            take_leaf();
            return;
        }
        const Edge& e = inst.edge(k);
        for (int h : {0, 2, 1}) {
            if (load[e.i] + h > 2 || load[e.j] + h > 2) continue;
            load[e.i] += h; load[e.j] += h;
            if (h == 1) { ++half_deg[e.i]; ++half_deg[e.j]; }
            halves[k] = h;
            if (h) value += scaled_w[k] * h;
            if (node_done_ok(e.i, k) && node_done_ok(e.j, k)) rec(k + 1);
            if (h) value -= scaled_w[k] * h;
            if (h == 1) { --half_deg[e.i]; --half_deg[e.j]; }
            load[e.i] -= h; load[e.j] -= h;
        }
        halves[k] = 0;
    }
};

}  // namespace detail

/// Objective gap between the optimum of the matching relaxation and the best
/// other half-integral extreme point. Positive iff the relaxation has a
/// unique optimum; zero is reported when several points tie for the optimum.
inline GapReport lp_gap(const NetworkInstance& inst, const OracleGuards& guards = {}) {
    if (!inst.unit_capacities())
        throw oracle_error("lp_gap requires unit capacities");
    if (inst.edge_count() > guards.max_edges_gap)
        throw oracle_error("instance too large for half-integral gap search (" +
                           std::to_string(inst.edge_count()) + " edges)");
    detail::GapSearch search(inst);
    search.rec(0);
    GapReport rep;
    // values are in half-units of the common-denominator scale
    auto unscale = [&](const BigInt& v) { return Rational(v, 2 * search.common_den); };
    rep.optimum = unscale(search.best);
    rep.unique_optimum = search.best_unique;
    rep.optimum_integral = search.best_integral;
    if (!search.best_unique) {
        rep.g = 0;
        rep.witness_halves = search.second_halves;
        rep.witness_value = rep.optimum;
    } else if (search.second >= 0) {
        rep.g = unscale(search.best - search.second);
        rep.witness_halves = search.second_halves;
        rep.witness_value = unscale(search.second);
    } else {
        rep.g = 0;  // no other point (edgeless instance)
        rep.witness_value = 0;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Exact simplex for the matching LP and its dual
// ---------------------------------------------------------------------------

struct LpSolution {
    std::vector<Rational> x;        // per edge
    std::vector<Rational> y_nodes;  // per node
    std::vector<Rational> y_edges;  // per edge; empty for unit capacities
    Rational objective;
    bool integral = false;
    std::optional<bool> unique_integral;  // set when enumeration runs within guard
};

namespace detail {

// Dense tableau simplex, maximizing c*x subject to A*x <= rhs, x >= 0 with
// rhs >= 0 (slack basis start). Bland's entering/leaving rule, so it cannot
// cycle; all arithmetic exact.
struct RationalSimplex {
    int nvars, nrows;
    std::vector<std::vector<Rational>> T;  // nrows x (nvars + nrows + 1)
    std::vector<Rational> z;               // objective row
    std::vector<int> basis;

    RationalSimplex(const std::vector<std::vector<Rational>>& A, const std::vector<Rational>& rhs,
                    const std::vector<Rational>& c)
        : nvars(static_cast<int>(c.size())), nrows(static_cast<int>(rhs.size())) {
        int cols = nvars + nrows + 1;
        T.assign(nrows, std::vector<Rational>(cols, 0));
        for (int r = 0; r < nrows; ++r) {
            for (int j = 0; j < nvars; ++j) T[r][j] = A[r][j];
            T[r][nvars + r] = 1;
            T[r][cols - 1] = rhs[r];
        }
        z.assign(cols, 0);
        for (int j = 0; j < nvars; ++j) z[j] = -c[j];
        basis.resize(nrows);
        for (int r = 0; r < nrows; ++r) basis[r] = nvars + r;
    }

    void pivot(int r, int j) {
        int cols = nvars + nrows + 1;
        Rational p = T[r][j];
        for (int cc = 0; cc < cols; ++cc) T[r][cc] /= p;
        for (int rr = 0; rr < nrows; ++rr) {
            if (rr == r || T[rr][j] == 0) continue;
            Rational f = T[rr][j];
            for (int cc = 0; cc < cols; ++cc) T[rr][cc] -= f * T[r][cc];
        }
        if (z[j] != 0) {
            Rational f = z[j];
            for (int cc = 0; cc < cols; ++cc) z[cc] -= f * T[r][cc];
        }
        basis[r] = j;
    }

    void solve() {
        int cols = nvars + nrows + 1;
        while (true) {
            int enter = -1;
            for (int j = 0; j < cols - 1; ++j)
                if (z[j] < 0) { enter = j; break; }
            if (enter < 0) return;
            int leave = -1;
            Rational best;
            for (int r = 0; r < nrows; ++r) {
                if (T[r][enter] <= 0) continue;
                Rational ratio = T[r][cols - 1] / T[r][enter];
                if (leave < 0 || ratio < best ||
                    (ratio == best && basis[r] < basis[leave])) {
                    leave = r;
                    best = ratio;
                }
            }
            if (leave < 0) throw oracle_error("simplex: unbounded LP");
            pivot(leave, enter);
        }
    }

    Rational objective() const { return z[nvars + nrows]; }
    std::vector<Rational> primal() const {
        std::vector<Rational> x(nvars, 0);
        for (int r = 0; r < nrows; ++r)
            if (basis[r] < nvars) x[basis[r]] = T[r][nvars + nrows];
        return x;
    }
    std::vector<Rational> dual() const {
        std::vector<Rational> y(nrows);
        for (int r = 0; r < nrows; ++r) y[r] = z[nvars + r];
        return y;
    }
};

}  // namespace detail

/// Exact optimum of the matching relaxation. For unit capacities the rows
/// are the node constraints (the box x <= 1 is implied); with general
/// capacities the box rows join the program and their duals are reported in
/// y_edges. unique_integral is certified against exhaustive enumeration when
/// the instance is within the enumeration guard.
inline LpSolution solve_matching_lp(const NetworkInstance& inst, const OracleGuards& guards = {}) {
    int m = inst.edge_count();
    int n = inst.node_count();
    bool unit = inst.unit_capacities();
    int nrows = unit ? n : n + m;
    std::vector<std::vector<Rational>> A(nrows, std::vector<Rational>(m, 0));
    std::vector<Rational> rhs(nrows), c(m);
    for (int k = 0; k < m; ++k) {
        A[inst.edge(k).i][k] = 1;
        A[inst.edge(k).j][k] = 1;
        c[k] = inst.edge(k).w;
    }
    for (int v = 0; v < n; ++v) rhs[v] = inst.capacity(v);
    if (!unit) {
        for (int k = 0; k < m; ++k) {
            A[n + k][k] = 1;
            rhs[n + k] = 1;
        }
    }
    detail::RationalSimplex s(A, rhs, c);
    s.solve();
    LpSolution sol;
    sol.x = s.primal();
    auto y = s.dual();
    sol.y_nodes.assign(y.begin(), y.begin() + n);
    if (!unit) sol.y_edges.assign(y.begin() + n, y.end());
    sol.objective = s.objective();
    sol.integral = std::all_of(sol.x.begin(), sol.x.end(),
                               [](const Rational& v) { return v == 0 || v == 1; });
    if (inst.edge_count() <= guards.max_edges_enumeration) {
        auto rep = enumerate_b_matchings(inst, guards);
        bool tight = rep.best_weight == sol.objective;
        bool unique = tight && rep.unique;
        if (unique && unit && inst.edge_count() <= guards.max_edges_gap)
            unique = lp_gap(inst, guards).g > 0;  // also rule out fractional ties
        sol.unique_integral = unique;
    }
    return sol;
}

/// The three complementary-slackness identities, checked exactly.
inline bool complementary_slackness_holds(const NetworkInstance& inst, const LpSolution& sol) {
    int m = inst.edge_count();
    for (int k = 0; k < m; ++k) {
        const Edge& e = inst.edge(k);
        Rational yk = sol.y_edges.empty() ? Rational(0) : sol.y_edges[k];
        if (sol.x[k] * (-e.w + yk + sol.y_nodes[e.i] + sol.y_nodes[e.j]) != 0) return false;
        if ((sol.x[k] - 1) * yk != 0) return false;
    }
    for (int v = 0; v < inst.node_count(); ++v) {
        Rational used = 0;
        for (const auto& arc : inst.arcs(v)) used += sol.x[arc.edge];
        if ((used - inst.capacity(v)) * sol.y_nodes[v] != 0) return false;
    }
    return true;
}

/// Builds a stable outcome from a dual optimum when the LP is tight: on each
/// matched edge the target of a slot receives the dual value of its node plus
/// half the edge dual. Returns nothing when no integral optimum exists.
inline std::optional<TradeOutcome> stable_outcome_from_dual(const NetworkInstance& inst,
                                                            const LpSolution& sol,
                                                            const OracleGuards& guards = {}) {
    Matching mstar;
    if (inst.edge_count() <= guards.max_edges_enumeration) {
        auto rep = enumerate_b_matchings(inst, guards);
        if (rep.best_weight != sol.objective) return std::nullopt;  // LP not tight
        mstar = rep.best;
    } else if (sol.integral) {
        for (int k = 0; k < inst.edge_count(); ++k)
            if (sol.x[k] == 1) mstar.push_back(k);
    } else {
        return std::nullopt;
    }
    Vec shares(inst.directed_count(), 0.0);
    for (int k : mstar) {
        const Edge& e = inst.edge(k);
        Rational yk = sol.y_edges.empty() ? Rational(0) : sol.y_edges[k];
        // slot 2k targets j, slot 2k+1 targets i
        shares[2 * k] = to_double(sol.y_nodes[e.j] + yk / 2);
        shares[2 * k + 1] = to_double(sol.y_nodes[e.i] + yk / 2);
    }
    TradeOutcome out = make_outcome(inst, mstar, std::move(shares));
    if (!stability_violations(inst, out).empty()) return std::nullopt;
    return out;
}

/// Certifies in exact arithmetic that an earnings vector is an optimal dual:
/// earnings are snapped to nearby rationals and must be dual feasible with
/// objective equal to the best matching weight. With general capacities the
/// edge duals are completed as the positive slack on matched edges; with unit
/// capacities the node variables alone must cover every edge.
inline bool earnings_are_dual_optimal(const NetworkInstance& inst, const Vec& gamma,
                                      const Matching& matched = {},
                                      const OracleGuards& guards = {}, double snap_tol = 1e-9) {
    if (gamma.size() != static_cast<std::size_t>(inst.node_count())) return false;
    bool unit = inst.unit_capacities();
    std::vector<Rational> y(inst.node_count());
    for (int v = 0; v < inst.node_count(); ++v) {
        y[v] = snap_to_rational(gamma[v], snap_tol);
        if (y[v] < 0) return false;
    }
    std::vector<char> in_m(inst.edge_count(), 0);
    for (int k : matched) in_m[k] = 1;
    Rational dual_obj = 0;
    for (int v = 0; v < inst.node_count(); ++v) dual_obj += inst.capacity(v) * y[v];
    for (int k = 0; k < inst.edge_count(); ++k) {
        const Edge& e = inst.edge(k);
        Rational slack = e.w - y[e.i] - y[e.j];
        Rational yk = 0;
        if (!unit && in_m[k] && slack > 0) yk = slack;
        if (e.w - yk - y[e.i] - y[e.j] > 0) return false;  // infeasible
        dual_obj += yk;
    }
    auto rep = enumerate_b_matchings(inst, guards);
    return dual_obj == rep.best_weight;
}

}  // namespace exnet
