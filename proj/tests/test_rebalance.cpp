#include "exnet/generators.hpp"
#include "exnet/rebalance.hpp"
#include "exnet/run.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace exnet;

namespace {

TradeOutcome chain_stable(const NetworkInstance& inst, double ga, double gb, double gc, double gd) {
    Vec shares(inst.directed_count(), 0.0);
    shares[0] = gb;
    shares[1] = ga;
    shares[4] = gd;
    shares[5] = gc;
    return make_outcome(inst, {0, 2}, shares);
}

}  // namespace

TEST_CASE("an already-divided outcome returns with zero blend steps") {
    NetworkInstance two(2, {Edge(0, 1, "1", 0.75)});
    auto out = make_outcome(two, {0}, Vec{0.25, 0.75});
    RebalanceConfig cfg;
    cfg.eps = 1e-9;
    auto res = edge_rebalancing(two, out, cfg);
    CHECK(res.iterations == 0);
    CHECK(res.outcome.earnings == Vec{0.75, 0.25});
}

TEST_CASE("rebalancing the chain recovers the balanced outcome") {
    auto c = chain_example();
    auto start = chain_stable(c.instance, 4.0, 4.0, 2.0, 0.0);
    RebalanceConfig cfg;
    cfg.eps = 1e-10;
    long audited = 0;
    auto res = edge_rebalancing(c.instance, start, cfg,
                                [&](long, const NetworkInstance& wi, const Matching& m,
                                    const Vec& gamma) {
                                    Vec shares(wi.directed_count(), 0.0);
                                    for (int k : m) {
                                        shares[2 * k] = gamma[wi.edge(k).j];
                                        shares[2 * k + 1] = gamma[wi.edge(k).i];
                                    }
                                    auto cur = make_outcome(wi, m, std::move(shares));
                                    REQUIRE(stability_violations(wi, cur).empty());
                                    ++audited;
                                });
    CHECK(audited == res.iterations);
    CHECK(res.iterations <= rebalance_iteration_bound(cfg.kappa, cfg.eps));
    CHECK(res.outcome.matching == Matching{0, 2});
    for (int v = 0; v < 4; ++v)
        CHECK(res.outcome.earnings[v] ==
              Catch::Approx((*c.expected_earnings)[v]).margin(1e-8));
    // matched-edge sums stay conserved
    CHECK(res.outcome.earnings[0] + res.outcome.earnings[1] == Catch::Approx(8.0).margin(1e-12));
    CHECK(res.outcome.earnings[2] + res.outcome.earnings[3] == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("rebalancing rejects bad inputs") {
    auto c = chain_example();
    auto ok = chain_stable(c.instance, 4.0, 4.0, 2.0, 0.0);
    RebalanceConfig cfg;
    cfg.kappa = 0.6;  // outside (0, 1/2]
    CHECK_THROWS_AS(edge_rebalancing(c.instance, ok, cfg), config_error);
    cfg.kappa = 0.5;
    cfg.eps = 0.0;
    CHECK_THROWS_AS(edge_rebalancing(c.instance, ok, cfg), config_error);
    cfg.eps = 1e-6;
    auto unstable = chain_stable(c.instance, 8.0, 0.0, 0.0, 2.0);
    CHECK_THROWS_AS(edge_rebalancing(c.instance, unstable, cfg), outcome_error);
}

TEST_CASE("fptas returns UNSTABLE exactly when no stable outcome exists") {
    NetworkInstance tri(3, {Edge(0, 1, "1"), Edge(1, 2, "1"), Edge(0, 2, "1")});
    CHECK(std::holds_alternative<Unstable>(fptas(tri, 1e-3)));

    NetworkInstance two(2, {Edge(0, 1, "1", 0.75)});
    auto res = fptas(two, 1e-6);
    auto& ok = std::get<RebalanceResult>(res);
    CHECK(ok.outcome.earnings[0] == Catch::Approx(0.75).margin(1e-6));
    CHECK(ok.outcome.earnings[1] == Catch::Approx(0.25).margin(1e-6));
    CHECK(is_eps_ud(two, ok.outcome, 1e-6));
}

TEST_CASE("fptas on the rescaled chain gets close to the balanced point") {
    auto c = chain_example();
    auto rs = rescale(c.instance);
    auto res = fptas(rs.instance, 1e-3);
    auto& ok = std::get<RebalanceResult>(res);
    CHECK(is_eps_ud(rs.instance, ok.outcome, 1e-3));
    CHECK(is_eps_nb(rs.instance, ok.outcome, 2e-3));  // r = 1/2: balance and division agree
    for (int v = 0; v < 4; ++v)
        CHECK(ok.outcome.earnings[v] ==
              Catch::Approx((*c.expected_earnings)[v] / 8.0).margin(6e-3));
    CHECK(ok.iterations <= rebalance_iteration_bound(0.5, 1e-3));
}
