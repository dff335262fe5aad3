// Command-line front end: run the bargaining dynamics, verify outcomes,
// query the exact LP oracle, run the rebalancing approximation scheme, and
// generate instances. All input and output is JSON; traces are JSON lines.

#include "exnet/generators.hpp"
#include "exnet/jsonio.hpp"
#include "exnet/oracle.hpp"
#include "exnet/rebalance.hpp"
#include "exnet/run.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using exnet::jsonio::json;

// exit codes, one class each
constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kParseError = 2;
constexpr int kValidationError = 3;
constexpr int kConfigError = 4;
constexpr int kIoError = 5;

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        auto comma = s.find(',', pos);
        if (comma == std::string::npos) comma = s.size();
        out.push_back(std::stod(s.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return out;
}

json earnings_json(const exnet::Vec& gamma) {
    json a = json::array();
    for (double g : gamma) a.push_back(g);
    return a;
}

struct RunArgs {
    std::string instance_path;
    double kappa = 0.5;
    double eps = 0.0;
    long max_iters = 1000000;
    std::string mode = "equal";
    std::string schedule = "sync";
    std::string alpha0 = "zero";
    std::string kappa_list;
    std::uint64_t seed = 0;
    std::string trace_path;
    long record_every = 1;
    bool verify = false;
};

int cmd_run(const RunArgs& a) {
    auto inst = exnet::jsonio::load_instance(a.instance_path);
    auto scaled = exnet::rescale(inst);
    double scale = scaled.scale;

    exnet::DynamicsConfig cfg;
    cfg.mode = a.mode == "ud" ? exnet::Mode::unequal_division : exnet::Mode::equal_split;
    cfg.kappa = a.kappa;
    cfg.max_iters = a.max_iters;
    cfg.target_eps = a.eps / scale;
    cfg.record_every = a.record_every;
    if (a.schedule == "sync") {
        cfg.schedule = exnet::Schedule::synchronous;
    } else if (a.schedule == "node-damped") {
        cfg.schedule = exnet::Schedule::node_damped;
        cfg.node_kappa = a.kappa_list.empty() ? exnet::Vec(inst.node_count(), a.kappa)
                                              : parse_double_list(a.kappa_list);
    } else if (a.schedule == "time-varying") {
        cfg.schedule = exnet::Schedule::time_varying;
        cfg.kappa_steps =
            a.kappa_list.empty() ? exnet::Vec{a.kappa} : parse_double_list(a.kappa_list);
    } else if (a.schedule == "async") {
        cfg.schedule = exnet::Schedule::asynchronous;
        cfg.async_order.resize(inst.directed_count());
        for (int d = 0; d < inst.directed_count(); ++d) cfg.async_order[d] = d;
        std::mt19937_64 rng(a.seed);
        for (int d = inst.directed_count() - 1; d > 0; --d)
            std::swap(cfg.async_order[d], cfg.async_order[rng() % (d + 1)]);
    } else {
        throw exnet::config_error("unknown schedule '" + a.schedule + "'");
    }
    for (const auto& w : exnet::config_warnings(cfg)) std::cerr << "warning: " << w << "\n";

    exnet::Vec alpha0(inst.directed_count(), 0.0);
    if (a.alpha0 == "zero") {
        // already zero
    } else if (a.alpha0 == "uniform") {
        std::mt19937_64 rng(a.seed);
        for (double& v : alpha0) v = exnet::uniform01(rng);  // rescaled units, W_max = 1
    } else if (a.alpha0.rfind("file:", 0) == 0) {
        alpha0 = exnet::jsonio::alpha_from_json(
            inst, exnet::jsonio::read_json_file(a.alpha0.substr(5)));
        for (double& v : alpha0) v /= scale;
    } else {
        throw exnet::config_error("unknown alpha0 '" + a.alpha0 + "'");
    }

    double initial_residual = exnet::fixed_point_residual(scaled.instance, alpha0, cfg.mode);
    auto res = exnet::run_dynamics(scaled.instance, alpha0, cfg);

    // report in original units; residuals stay in rescaled units (max weight 1)
    auto offers = exnet::compute_offers(scaled.instance, res.alpha, cfg.mode);
    exnet::Vec gamma = exnet::compute_earnings(scaled.instance, offers);
    for (double& g : gamma) g *= scale;
    auto induced = exnet::induced_matching(scaled.instance, res.alpha, cfg.mode);

    json report{{"schema", 1},
                {"config", {{"kappa", a.kappa},
                            {"eps", a.eps},
                            {"mode", a.mode},
                            {"schedule", a.schedule},
                            {"alpha0", a.alpha0},
                            {"seed", a.seed},
                            {"max_iters", a.max_iters}}},
                {"scale", scale},
                {"stop_reason", exnet::to_string(res.trace.stop)},
                {"iterations", res.trace.iterations},
                {"initial_residual", initial_residual * scale},
                {"final_residual_rescaled",
                 res.trace.residuals.empty() ? initial_residual : res.trace.residuals.back()},
                {"final_residual",
                 (res.trace.residuals.empty() ? initial_residual : res.trace.residuals.back()) *
                     scale},
                {"gamma", earnings_json(gamma)},
                {"induced", exnet::jsonio::matching_to_json(scaled.instance, induced)}};

    bool checks_pass = true;
    if (a.verify) {
        json checks;
        if (induced) {
            auto out = exnet::outcome_from_state(scaled.instance, res.alpha, cfg.mode);
            auto viol = exnet::stability_violations(scaled.instance, out);
            double bal = exnet::balance_residual(scaled.instance, out);
            double tol = std::max(6.0 * res.trace.residuals.back(), 1e-8);
            checks["stable"] = viol.empty();
            checks["balance_residual"] = bal * scale;
            checks["balance_tolerance"] = tol * scale;
            checks_pass = viol.empty() && bal <= tol;
            if (scaled.instance.unit_capacities() && cfg.mode == exnet::Mode::unequal_division) {
                double ud = exnet::correct_division_residual(scaled.instance, out);
                checks["ud_residual"] = ud * scale;
                checks_pass = checks_pass && ud <= tol;
            }
            exnet::OracleGuards guards;
            if (inst.edge_count() <= guards.max_edges_enumeration) {
                auto rep = exnet::enumerate_b_matchings(scaled.instance, guards);
                checks["oracle_matching_weight"] = exnet::to_double(rep.best_weight) * scale;
                bool same = rep.unique && *induced == rep.best;
                checks["induced_equals_oracle_matching"] = same;
                double total = 0.0;
                for (int v = 0; v < scaled.instance.node_count(); ++v)
                    total += scaled.instance.capacity(v) * (gamma[v] / scale);
                for (int k : out.matching) {
                    const auto& e = scaled.instance.edge(k);
                    total += exnet::positive_part(e.wd - gamma[e.i] / scale - gamma[e.j] / scale);
                }
                bool dual_ok =
                    std::abs(total - exnet::to_double(rep.best_weight)) <= 1e-6;
                checks["dual_objective_matches"] = dual_ok;
                checks_pass = checks_pass && same && dual_ok;
            }
        } else {
            checks["stable"] = false;
            checks["note"] = "state induces no matching";
            checks_pass = false;
        }
        report["checks"] = checks;
        report["checks_pass"] = checks_pass;
    }

    if (!a.trace_path.empty()) {
        exnet::RunTrace scaled_trace = res.trace;
        for (auto& [t, g] : scaled_trace.earnings_snapshots)
            for (double& v : g) v *= scale;
        exnet::jsonio::write_file(
            a.trace_path, exnet::jsonio::trace_to_jsonl(scaled.instance, scaled_trace, scale));
    }
    std::cout << report.dump(2) << "\n";
    return a.verify && !checks_pass ? kCheckFailed : kOk;
}

int cmd_verify(const std::string& instance_path, const std::string& outcome_path, double eps) {
    auto inst = exnet::jsonio::load_instance(instance_path);
    auto out = exnet::jsonio::outcome_from_json(inst, exnet::jsonio::read_json_file(outcome_path));
    json report{{"schema", 1}};
    auto malformed = exnet::check_outcome(inst, out);
    if (!malformed.empty()) {
        report["valid"] = false;
        report["problems"] = malformed;
        std::cout << report.dump(2) << "\n";
        return kCheckFailed;
    }
    report["valid"] = true;
    auto viol = exnet::stability_violations(inst, out);
    report["stable"] = viol.empty();
    json vj = json::array();
    for (int k : viol) vj.push_back(json::array({inst.edge(k).i, inst.edge(k).j}));
    report["stability_violations"] = vj;
    double bal = exnet::balance_residual(inst, out);
    report["balance_residual"] = bal;
    double ud = -1.0;
    if (inst.unit_capacities()) {
        ud = exnet::correct_division_residual(inst, out);
        report["ud_residual"] = ud;
    } else {
        report["ud_residual"] = nullptr;
    }
    exnet::OracleGuards guards;
    if (inst.edge_count() <= guards.max_edges_enumeration) {
        auto rep = exnet::enumerate_b_matchings(inst, guards);
        double dual_obj = 0.0;
        for (int v = 0; v < inst.node_count(); ++v)
            dual_obj += inst.capacity(v) * out.earnings[v];
        for (int k : out.matching) {
            const auto& e = inst.edge(k);
            dual_obj += exnet::positive_part(e.wd - out.earnings[e.i] - out.earnings[e.j]);
        }
        report["dual_gap"] = dual_obj - exnet::to_double(rep.best_weight);
    } else {
        report["dual_gap"] = nullptr;
    }
    bool pass = viol.empty() && bal <= eps;
    report["eps"] = eps;
    report["pass"] = pass;
    std::cout << report.dump(2) << "\n";
    return pass ? kOk : kCheckFailed;
}

int cmd_oracle(const std::string& instance_path, int enum_guard, int gap_guard) {
    auto inst = exnet::jsonio::load_instance(instance_path);
    exnet::OracleGuards guards;
    if (enum_guard > 0) guards.max_edges_enumeration = enum_guard;
    if (gap_guard > 0) guards.max_edges_gap = gap_guard;
    json report{{"schema", 1}};
    auto lp = exnet::solve_matching_lp(inst, guards);
    report["objective"] = exnet::rational_to_string(lp.objective);
    report["objective_double"] = exnet::to_double(lp.objective);
    report["integral"] = lp.integral;
    report["unique_integral"] =
        lp.unique_integral ? json(*lp.unique_integral) : json(nullptr);
    json yn = json::array();
    for (const auto& y : lp.y_nodes) yn.push_back(exnet::rational_to_string(y));
    report["y_nodes"] = yn;
    if (!lp.y_edges.empty()) {
        json ye = json::object();
        for (int k = 0; k < inst.edge_count(); ++k)
            if (lp.y_edges[k] != 0)
                ye[std::to_string(inst.edge(k).i) + "-" + std::to_string(inst.edge(k).j)] =
                    exnet::rational_to_string(lp.y_edges[k]);
        report["y_edges"] = ye;
    }
    report["complementary_slackness"] = exnet::complementary_slackness_holds(inst, lp);
    if (inst.edge_count() <= guards.max_edges_enumeration) {
        auto rep = exnet::enumerate_b_matchings(inst, guards);
        report["matching_weight"] = exnet::rational_to_string(rep.best_weight);
        report["matching_unique"] = rep.unique;
        report["matching"] = exnet::jsonio::matching_to_json(inst, rep.best);
        report["b_matching_count"] = rep.count;
    }
    if (inst.unit_capacities() && inst.edge_count() <= guards.max_edges_gap) {
        auto gap = exnet::lp_gap(inst, guards);
        report["gap"] = exnet::rational_to_string(gap.g);
        report["gap_double"] = exnet::to_double(gap.g);
        report["unique_optimum"] = gap.unique_optimum;
    } else {
        report["gap"] = nullptr;
    }
    std::cout << report.dump(2) << "\n";
    return kOk;
}

int cmd_fptas(const std::string& instance_path, double eps, double kappa,
              const std::string& out_path) {
    auto inst = exnet::jsonio::load_instance(instance_path);
    long audited = 0;
    auto res = exnet::fptas(inst, eps, kappa, exnet::OracleGuards{},
                            [&](long, const exnet::NetworkInstance& wi, const exnet::Matching& m,
                                const exnet::Vec& gamma) {
                                exnet::Vec shares(wi.directed_count(), 0.0);
                                for (int k : m) {
                                    shares[2 * k] = gamma[wi.edge(k).j];
                                    shares[2 * k + 1] = gamma[wi.edge(k).i];
                                }
                                auto out = exnet::make_outcome(wi, m, std::move(shares));
                                if (exnet::stability_violations(wi, out).empty()) ++audited;
                            });
    if (std::holds_alternative<exnet::Unstable>(res)) {
        json report{{"schema", 1}, {"result", "UNSTABLE"}};
        std::cout << report.dump(2) << "\n";
        return kOk;
    }
    const auto& ok = std::get<exnet::RebalanceResult>(res);
    json report{{"schema", 1},
                {"result", "ok"},
                {"eps", eps},
                {"kappa", kappa},
                {"iterations", ok.iterations},
                {"iteration_bound", exnet::rebalance_iteration_bound(kappa, eps)},
                {"stability_audit", {{"iterations_stable", audited}, {"iterations_total", ok.iterations}}},
                {"outcome", exnet::jsonio::outcome_to_json(inst, ok.outcome)}};
    if (!out_path.empty())
        exnet::jsonio::write_file(out_path,
                                  exnet::jsonio::outcome_to_json(inst, ok.outcome).dump(2) + "\n");
    std::cout << report.dump(2) << "\n";
    return audited == ok.iterations ? kOk : kCheckFailed;
}

struct GenArgs {
    std::string kind;
    std::string out_path;
    std::string alpha_out;
    int N = 2;
    double r = 1.0 / 3.0;
    int n = 8;
    int n1 = 3, n2 = 3;
    double p = 0.4;
    std::uint64_t seed = 0;
    bool unit_weights = false;
    std::string caps;
    std::string in_path;
    double eta = 0.1;
};

int cmd_gen(const GenArgs& a) {
    std::optional<exnet::GeneratedCase> c;
    if (a.kind == "chain") {
        c = exnet::chain_example();
    } else if (a.kind == "g1") {
        c = exnet::g1_example();
    } else if (a.kind == "ring") {
        c = exnet::ring_slow_instance(a.N, a.r);
    } else if (a.kind == "random") {
        exnet::RandomGraphOptions opt;
        opt.edge_prob = a.p;
        opt.weights = a.unit_weights ? exnet::WeightDist::unit : exnet::WeightDist::uniform01;
        if (!a.caps.empty())
            for (double v : parse_double_list(a.caps))
                opt.capacity_choices.push_back(static_cast<int>(v));
        c = exnet::random_graph(a.n, a.seed, opt);
    } else if (a.kind == "bipartite") {
        c = exnet::random_bipartite(a.n1, a.n2, a.p, a.seed,
                                    a.unit_weights ? exnet::WeightDist::unit
                                                   : exnet::WeightDist::uniform01);
    } else if (a.kind == "perturb") {
        if (a.in_path.empty()) throw exnet::config_error("gen perturb needs --in");
        auto base = exnet::jsonio::load_instance(a.in_path);
        c = exnet::GeneratedCase{exnet::perturb(base, a.eta, a.seed), {}, {}, {}, {}, {}};
    } else {
        throw exnet::config_error("unknown generator kind '" + a.kind + "'");
    }
    exnet::jsonio::save_instance(c->instance, a.out_path);
    if (!a.alpha_out.empty()) {
        if (!c->alpha0) throw exnet::config_error("generator '" + a.kind + "' has no alpha vector");
        exnet::jsonio::write_file(a.alpha_out,
                                  exnet::jsonio::alpha_to_json(c->instance, *c->alpha0).dump(2) + "\n");
    }
    std::cerr << "wrote " << a.out_path << " (" << c->instance.node_count() << " nodes, "
              << c->instance.edge_count() << " edges)\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bargaining dynamics on exchange networks"};
    app.require_subcommand(1);

    RunArgs ra;
    auto* run = app.add_subcommand("run", "Run the message-passing dynamics on an instance");
    run->add_option("instance", ra.instance_path, "instance JSON file")->required();
    run->add_option("--kappa", ra.kappa, "damping factor in (0,1]");
    run->add_option("--eps", ra.eps, "stop once the residual is at most eps (original units)");
    run->add_option("--max-iters", ra.max_iters, "iteration cap");
    run->add_option("--mode", ra.mode, "equal | ud")->check(CLI::IsMember({"equal", "ud"}));
    run->add_option("--schedule", ra.schedule, "sync | async | node-damped | time-varying")
        ->check(CLI::IsMember({"sync", "async", "node-damped", "time-varying"}));
    run->add_option("--alpha0", ra.alpha0, "zero | uniform | file:PATH");
    run->add_option("--kappa-list", ra.kappa_list,
                    "comma list: per-node (node-damped) or per-step (time-varying) damping");
    run->add_option("--seed", ra.seed, "seed for uniform alpha0 / async order");
    run->add_option("--trace", ra.trace_path, "write a JSONL trace here");
    run->add_option("--record-every", ra.record_every, "trace cadence");
    run->add_flag("--verify", ra.verify, "run outcome checkers and the oracle cross-check");

    std::string vinst, voutc;
    double veps = 1e-8;
    auto* verify = app.add_subcommand("verify", "Certify an outcome file against an instance");
    verify->add_option("instance", vinst, "instance JSON file")->required();
    verify->add_option("outcome", voutc, "outcome JSON file")->required();
    verify->add_option("--eps", veps, "balance tolerance for the pass verdict");

    std::string oinst;
    int oguard_enum = 0, oguard_gap = 0;
    auto* oracle = app.add_subcommand("oracle", "Exact LP / matching certificate for an instance");
    oracle->add_option("instance", oinst, "instance JSON file")->required();
    oracle->add_option("--enum-guard", oguard_enum, "override the enumeration edge guard");
    oracle->add_option("--gap-guard", oguard_gap, "override the gap-search edge guard");

    std::string finst, fout;
    double feps = 1e-3, fkappa = 0.5;
    auto* fp = app.add_subcommand("fptas", "Stable outcome + rebalancing to an eps-correct division");
    fp->add_option("instance", finst, "instance JSON file")->required();
    fp->add_option("--eps", feps, "target correct-division error");
    fp->add_option("--kappa", fkappa, "rebalancing damping in (0, 1/2]");
    fp->add_option("-o,--out", fout, "also write the outcome JSON here");

    GenArgs ga;
    auto* gen = app.add_subcommand("gen", "Generate instances (chain, g1, ring, random, bipartite, perturb)");
    gen->add_option("kind", ga.kind, "chain | g1 | ring | random | bipartite | perturb")->required();
    gen->add_option("-o,--out", ga.out_path, "output instance path")->required();
    gen->add_option("--alpha-out", ga.alpha_out, "also write the generator's message vector");
    gen->add_option("--N", ga.N, "ring size parameter (8N nodes)");
    gen->add_option("--r", ga.r, "ring split fraction in (0, 1/2)");
    gen->add_option("--n", ga.n, "node count (random)");
    gen->add_option("--n1", ga.n1, "left side size (bipartite)");
    gen->add_option("--n2", ga.n2, "right side size (bipartite)");
    gen->add_option("--p", ga.p, "edge probability");
    gen->add_option("--seed", ga.seed, "RNG seed");
    gen->add_flag("--unit-weights", ga.unit_weights, "all weights 1 instead of uniform(0,1]");
    gen->add_option("--caps", ga.caps, "comma list of capacities to draw from");
    gen->add_option("--in", ga.in_path, "base instance (perturb)");
    gen->add_option("--eta", ga.eta, "perturbation magnitude (perturb)");

    try {
        app.parse(argc, argv);
        if (*run) return cmd_run(ra);
        if (*verify) return cmd_verify(vinst, voutc, veps);
        if (*oracle) return cmd_oracle(oinst, oguard_enum, oguard_gap);
        if (*fp) return cmd_fptas(finst, feps, fkappa, fout);
        if (*gen) return cmd_gen(ga);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    } catch (const exnet::parse_error& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kParseError;
    } catch (const exnet::validation_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kValidationError;
    } catch (const exnet::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const exnet::io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kIoError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kCheckFailed;
    }
    return kOk;
}
