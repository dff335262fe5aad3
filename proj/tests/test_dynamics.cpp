#include "exnet/generators.hpp"
#include "exnet/run.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace exnet;

namespace {

NetworkInstance two_nodes(double w, double r = 0.5) { return NetworkInstance(2, {Edge(0, 1, w, r)}); }

Vec random_state(const NetworkInstance& inst, std::mt19937_64& rng) {
    Vec a(inst.directed_count());
    for (double& v : a) v = uniform01(rng) * inst.max_weight();
    return a;
}

NetworkInstance random_instance(std::mt19937_64& rng, bool caps) {
    while (true) {
        int n = 4 + static_cast<int>(rng() % 6);
        std::vector<Edge> edges;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (uniform01(rng) < 0.5) edges.emplace_back(i, j, 0.05 + 0.95 * uniform01(rng));
        if (edges.size() < 3) continue;
        std::vector<int> b;
        if (caps) {
            b.resize(n);
            for (int v = 0; v < n; ++v) b[v] = 1 + static_cast<int>(rng() % 3);
        }
        return NetworkInstance(n, std::move(edges), std::move(b));
    }
}

}  // namespace

TEST_CASE("offers follow the surplus-splitting rule") {
    // symmetric zero-alternative split
    auto w1 = two_nodes(1.0);
    Vec zero{0.0, 0.0};
    auto m = compute_offers(w1, zero, Mode::equal_split);
    CHECK(m[0] == 0.5);
    CHECK(m[1] == 0.5);

    // one-sided alternatives
    auto w2 = two_nodes(2.0);
    Vec a{0.5, 1.0};
    m = compute_offers(w2, a, Mode::equal_split);
    CHECK(m[0] == Catch::Approx(1.25).margin(1e-15));

    // unequal division keeps r for the sender
    auto ud = two_nodes(2.0, 0.75);
    m = compute_offers(ud, zero, Mode::unequal_division);
    CHECK(m[0] == Catch::Approx(0.5).margin(1e-15));
    CHECK(m[1] == Catch::Approx(1.5).margin(1e-15));

    // an offer is never negative and never exceeds w - own alternative
    std::mt19937_64 rng(21);
    for (int it = 0; it < 50; ++it) {
        auto inst = random_instance(rng, false);
        auto alpha = random_state(inst, rng);
        auto offers = compute_offers(inst, alpha, Mode::equal_split);
        for (int d = 0; d < inst.directed_count(); ++d) {
            CHECK(offers[d] >= 0.0);
            CHECK(offers[d] <= inst.max_weight() + 1e-12);
        }
    }
}

TEST_CASE("bth_largest order statistic") {
    CHECK(bth_largest({3, 1, 2}, 2) == 2.0);
    CHECK(bth_largest({5}, 2) == 0.0);
    CHECK(bth_largest({}, 1) == 0.0);
    CHECK(bth_largest({0.9, 0.3, 0.7}, 2) == 0.7);
    CHECK_THROWS_AS(bth_largest({1.0}, 0), config_error);
}

TEST_CASE("best alternative excludes the counterparty") {
    NetworkInstance star(4, {Edge(0, 1, "1"), Edge(0, 2, "1"), Edge(0, 3, "1")});
    Vec offers(star.directed_count(), 0.0);
    // offers into node 0: from 1 -> 0.3, from 2 -> 0.7, from 3 -> 0.9
    offers[star.slot(0, 1)] = 0.3;
    offers[star.slot(1, 2)] = 0.7;
    offers[star.slot(2, 3)] = 0.9;
    CHECK(best_alternative(star, offers, 0, 3) == 0.7);
    CHECK(best_alternative(star, offers, 0, 1) == 0.9);
    CHECK(best_alternative(star, offers, 1, 0) == 0.0);  // no other neighbors

    NetworkInstance star2(4, {Edge(0, 1, "1"), Edge(0, 2, "1"), Edge(0, 3, "1")}, {2, 1, 1, 1});
    CHECK(best_alternative(star2, offers, 0, 1) == 0.7);  // 2nd largest of {0.7, 0.9}

    // consistency with the bulk map
    std::mt19937_64 rng(5);
    for (int it = 0; it < 30; ++it) {
        auto inst = random_instance(rng, true);
        auto alpha = random_state(inst, rng);
        auto offers2 = compute_offers(inst, alpha, Mode::equal_split);
        auto target = best_alternatives(inst, offers2);
        for (int d = 0; d < inst.directed_count(); ++d)
            CHECK(target[d] ==
                  best_alternative(inst, offers2, inst.slot_owner(d), inst.slot_target(d)));
    }
}

TEST_CASE("earnings and shares pick the top incoming offers") {
    NetworkInstance iso(1, {});
    CHECK(compute_earnings(iso, {}).at(0) == 0.0);

    NetworkInstance v(3, {Edge(0, 2, "1"), Edge(1, 2, "1")});
    Vec offers(v.directed_count(), 0.0);
    offers[v.slot(0, 0)] = 0.4;  // 0 -> 2
    offers[v.slot(1, 1)] = 0.9;  // 1 -> 2
    auto gamma = compute_earnings(v, offers);
    CHECK(gamma[2] == 0.9);
    auto shares = compute_shares(v, offers);
    CHECK(shares[v.slot(1, 1)] == 0.9);
    CHECK(shares[v.slot(0, 0)] == 0.0);

    NetworkInstance v2(4, {Edge(0, 3, "1"), Edge(1, 3, "1"), Edge(2, 3, "1")}, {1, 1, 1, 2});
    Vec o2(v2.directed_count(), 0.0);
    o2[v2.slot(0, 0)] = 0.4;
    o2[v2.slot(1, 1)] = 0.9;
    o2[v2.slot(2, 2)] = 0.2;
    CHECK(compute_earnings(v2, o2)[3] == 0.4);
    auto s2 = compute_shares(v2, o2);
    CHECK(s2[v2.slot(0, 0)] == 0.4);
    CHECK(s2[v2.slot(1, 1)] == 0.9);
    CHECK(s2[v2.slot(2, 2)] == 0.0);
}

TEST_CASE("share ties break toward the lower sender id") {
    NetworkInstance v(3, {Edge(1, 0, "1"), Edge(2, 0, "1")});
    Vec offers(v.directed_count(), 0.0);
    offers[v.slot(0, 1)] = 0.5;  // 1 -> 0
    offers[v.slot(1, 2)] = 0.5;  // 2 -> 0
    auto shares = compute_shares(v, offers);
    CHECK(shares[v.slot(0, 1)] == 0.5);
    CHECK(shares[v.slot(1, 2)] == 0.0);
}

TEST_CASE("synchronous step on the chain finds mutual best offers after one update") {
    auto c = chain_example();
    DynamicsConfig cfg;
    cfg.kappa = 1.0;
    Vec alpha = step(c.instance, *c.alpha0, cfg, 0);
    auto offers = compute_offers(c.instance, alpha, cfg.mode);
    // A and B offer each other more than anyone else offers them
    CHECK(offers[c.instance.slot(0, 0)] > offers[c.instance.slot(1, 2)]);  // A->B beats C->B
    // C and D receive their best offers from each other (D has no one else)
    CHECK(offers[c.instance.slot(2, 3)] > 0.0);
    CHECK(offers[c.instance.slot(2, 3)] > offers[c.instance.slot(1, 1)]);  // D->C beats B->C
}

TEST_CASE("a fixed point stays fixed and kappa = 0 is rejected") {
    auto c = chain_example();
    DynamicsConfig cfg;
    cfg.kappa = 1.0;
    auto res = run_dynamics(c.instance, *c.alpha0, cfg);
    REQUIRE(res.trace.stop == StopReason::exact_fixed_point);
    Vec again = step(c.instance, res.alpha, cfg, 0);
    CHECK(again == res.alpha);

    cfg.kappa = 0.0;
    CHECK(!validate_config(c.instance, cfg).empty());
    CHECK_THROWS_AS(run_dynamics(c.instance, *c.alpha0, cfg), config_error);
    cfg.kappa = 1.0;
    CHECK(validate_config(c.instance, cfg).empty());
    CHECK(!config_warnings(cfg).empty());
}

TEST_CASE("chain reaches its exact fixed point at iteration 6") {
    auto c = chain_example();
    DynamicsConfig cfg;
    cfg.kappa = 1.0;
    auto res = run_dynamics(c.instance, *c.alpha0, cfg);
    CHECK(res.trace.stop == StopReason::exact_fixed_point);
    CHECK(res.trace.iterations == 6);
    CHECK(res.trace.residuals.back() == 0.0);
    auto offers = compute_offers(c.instance, res.alpha, cfg.mode);
    auto gamma = compute_earnings(c.instance, offers);
    CHECK(gamma == *c.expected_earnings);
    // residuals shrink monotonically: 1.5, 1, 0.5, 0.5, 0.25, 0.125, 0
    REQUIRE(res.trace.residuals.size() == 7);
    CHECK(res.trace.residuals.front() == 1.5);
    for (std::size_t t = 1; t < res.trace.residuals.size(); ++t)
        CHECK(res.trace.residuals[t] <= res.trace.residuals[t - 1]);
}

TEST_CASE("two nodes with no alternatives settle on the even split") {
    auto inst = two_nodes(1.0);
    DynamicsConfig cfg;
    cfg.kappa = 0.5;
    auto res = run_dynamics(inst, Vec{0.0, 0.0}, cfg);
    CHECK(res.trace.stop == StopReason::exact_fixed_point);
    auto gamma = compute_earnings(inst, compute_offers(inst, res.alpha, cfg.mode));
    CHECK(gamma[0] == 0.5);
    CHECK(gamma[1] == 0.5);
    CHECK(res.alpha[0] == 0.0);
    CHECK(res.alpha[1] == 0.0);
}

TEST_CASE("messages stay inside [0, W] and residuals never increase") {
    std::mt19937_64 rng(33);
    for (int it = 0; it < 25; ++it) {
        auto inst = random_instance(rng, it % 2 == 0);
        auto alpha0 = random_state(inst, rng);
        DynamicsConfig cfg;
        cfg.kappa = 0.25 + 0.5 * uniform01(rng);
        cfg.max_iters = 60;
        cfg.mode = it % 3 == 0 ? Mode::unequal_division : Mode::equal_split;
        auto res = run_dynamics(inst, alpha0, cfg);
        for (double v : res.alpha) {
            CHECK(v >= 0.0);
            CHECK(v <= inst.max_weight() + 1e-12);
        }
        for (std::size_t t = 1; t < res.trace.residuals.size(); ++t)
            CHECK(res.trace.residuals[t] <= res.trace.residuals[t - 1] + 1e-12);
    }
}

TEST_CASE("the best-alternative map is nonexpansive in sup norm") {
    std::mt19937_64 rng(44);
    for (int it = 0; it < 300; ++it) {
        auto inst = random_instance(rng, it % 2 == 0);
        Mode mode = it % 3 == 0 ? Mode::unequal_division : Mode::equal_split;
        Vec a = random_state(inst, rng), b = random_state(inst, rng);
        auto ta = best_alternatives(inst, compute_offers(inst, a, mode));
        auto tb = best_alternatives(inst, compute_offers(inst, b, mode));
        double dab = 0.0, dtab = 0.0;
        for (int d = 0; d < inst.directed_count(); ++d) {
            dab = std::max(dab, std::abs(a[d] - b[d]));
            dtab = std::max(dtab, std::abs(ta[d] - tb[d]));
        }
        CHECK(dtab <= dab + 1e-12);
    }
}

TEST_CASE("damped runs meet the 1/sqrt(t) residual rate on rescaled weights") {
    std::mt19937_64 rng(55);
    for (int it = 0; it < 6; ++it) {
        auto inst = random_instance(rng, it % 2 == 1);
        auto rs = rescale(inst);
        DynamicsConfig cfg;
        cfg.kappa = it % 2 == 0 ? 0.5 : 0.3;
        cfg.max_iters = 400;
        auto res = run_dynamics(rs.instance, Vec(inst.directed_count(), 0.0), cfg);
        for (std::size_t t = 0; t < res.trace.residuals.size(); ++t) {
            double state_index = static_cast<double>(t + 1);
            double bound =
                1.0 / std::sqrt(std::numbers::pi * cfg.kappa * (1 - cfg.kappa) * state_index);
            CHECK(res.trace.residuals[t] <= bound + 1e-9);
        }
    }
}

TEST_CASE("equal split is bitwise the unequal dynamics at r = 1/2, and unit capacities are the default") {
    std::mt19937_64 rng(66);
    for (int it = 0; it < 20; ++it) {
        auto inst = random_instance(rng, false);  // all r = 0.5
        auto alpha = random_state(inst, rng);
        auto m_eq = compute_offers(inst, alpha, Mode::equal_split);
        auto m_ud = compute_offers(inst, alpha, Mode::unequal_division);
        CHECK(m_eq == m_ud);

        NetworkInstance explicit_caps(inst.node_count(), inst.edges(),
                                      std::vector<int>(inst.node_count(), 1));
        DynamicsConfig cfg;
        cfg.kappa = 0.7;
        CHECK(step(inst, alpha, cfg, 0) == step(explicit_caps, alpha, cfg, 0));
    }
}

TEST_CASE("node-damped and time-varying schedules still converge to fixed points") {
    auto c = g1_example();
    DynamicsConfig cfg;
    cfg.schedule = Schedule::node_damped;
    cfg.node_kappa = {0.4, 0.6, 0.5};
    cfg.target_eps = 1e-9;
    auto res = run_dynamics(c.instance, *c.alpha0, cfg);
    CHECK(res.trace.residuals.back() <= 1e-9);

    cfg.schedule = Schedule::time_varying;
    cfg.kappa_steps = {0.9, 0.7, 0.5};
    auto res2 = run_dynamics(c.instance, *c.alpha0, cfg);
    CHECK(res2.trace.residuals.back() <= 1e-9);
    auto gamma = compute_earnings(c.instance, compute_offers(c.instance, res2.alpha, cfg.mode));
    CHECK(gamma[0] == Catch::Approx(0.5).margin(1e-6));
    CHECK(gamma[1] == Catch::Approx(1.5).margin(1e-6));
}

TEST_CASE("an asynchronous cycle is nonexpansive and near-fixed cycles imply near-fixed dynamics") {
    std::mt19937_64 rng(77);
    for (int it = 0; it < 5; ++it) {
        auto inst = random_instance(rng, false);
        DynamicsConfig cfg;
        cfg.schedule = Schedule::asynchronous;
        int m2 = inst.directed_count();
        double contraction = 1.0 - std::pow(1.0 - 1.0 / m2, m2);

        Vec a = random_state(inst, rng), b = random_state(inst, rng);
        Vec ca = step(inst, a, cfg, 0), cb = step(inst, b, cfg, 0);
        double dab = 0.0, dcab = 0.0;
        for (int d = 0; d < m2; ++d) {
            dab = std::max(dab, std::abs(a[d] - b[d]));
            dcab = std::max(dcab, std::abs(ca[d] - cb[d]));
        }
        CHECK(dcab <= dab + 1e-12);

        // drive cycles until the cycle operator residual is small
        Vec cur = random_state(inst, rng);
        for (int cycle = 0; cycle < 3000; ++cycle) {
            Vec next = step(inst, cur, cfg, cycle);
            double diff = 0.0;
            for (int d = 0; d < m2; ++d) diff = std::max(diff, std::abs(next[d] - cur[d]));
            double cycle_residual = diff / contraction;
            if (cycle_residual <= 0.01) {
                double natural = fixed_point_residual(inst, cur, cfg.mode);
                CHECK(natural <= (m2 + 2) * cycle_residual + 1e-9);
                break;
            }
            cur = next;
            REQUIRE(cycle < 2999);
        }
    }
}

TEST_CASE("tstar matches the guaranteed convergence horizon") {
    CHECK(std::ceil(tstar(0.5, 0.05)) == 510.0);
    CHECK_THROWS_AS(tstar(1.0, 0.1), config_error);
    CHECK_THROWS_AS(tstar(0.5, 0.0), config_error);
}
