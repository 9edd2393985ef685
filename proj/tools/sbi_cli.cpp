// Command-line experiment runner: seeded Monte-Carlo batches, single-trial
// traces, the results-table bench suite, and a quick invariant check.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sbi/diagnostics.hpp"
#include "sbi/harness.hpp"
#include "sbi/lifecycle.hpp"
#include "sbi/objective.hpp"
#include "sbi/rng.hpp"

namespace {

using nlohmann::json;
using namespace sbi;

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    std::string out_dir;
};

ExperimentConfig build_config(const CommonOpts& opts, json base = json::object()) {
    if (!opts.config_path.empty()) {
        std::ifstream in(opts.config_path);
        if (!in) throw std::runtime_error("cannot open config file: " + opts.config_path);
        in >> base;
    }
    for (const std::string& kv : opts.overrides) apply_override(base, kv);
    ExperimentConfig cfg = config_from_json(base);
    if (opts.seed_set) cfg.master_seed = opts.seed;
    if (opts.threads > 0) cfg.threads = opts.threads;
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    return cfg;
}

void print_summary(const ExperimentReport& report, const std::string& label) {
    std::printf("%-24s %-12s %4s %6s  %-8s %-17s %9s %8s\n", label.c_str(), "scheme", "N",
                "runs", "rate", "wilson95", "mean_iter", "mean_ms");
    for (const CellReport& c : report.cells) {
        std::printf("%-24s %-12s %4d %6d  %6.1f%%  [%5.1f%%, %5.1f%%] %9.1f %8.2f\n", "",
                    to_string(c.scheme), c.n_agents, c.runs, 100.0 * c.rate,
                    100.0 * c.wilson_lo, 100.0 * c.wilson_hi, c.mean_iterations,
                    c.mean_wall_ms);
    }
}

int cmd_run(const CommonOpts& opts) {
    ExperimentConfig cfg = build_config(opts);
    ExperimentReport report = run_batch(cfg);
    emit_report(report, cfg.out_dir);
    print_summary(report, cfg.objective + "/d" + std::to_string(cfg.dim));
    std::printf("report written to %s/report.{csv,json}\n", cfg.out_dir.c_str());
    return 0;
}

int cmd_trace(const CommonOpts& opts, int n_agents, int trial) {
    ExperimentConfig cfg = build_config(opts);
    Box pb = cfg.position_box, vb = cfg.velocity_box;
    if (static_cast<int>(pb.lower.size()) != cfg.dim) {
        pb = Box{Vec(static_cast<std::size_t>(cfg.dim), pb.lower[0]),
                 Vec(static_cast<std::size_t>(cfg.dim), pb.upper[0])};
        vb = Box{Vec(static_cast<std::size_t>(cfg.dim), vb.lower[0]),
                 Vec(static_cast<std::size_t>(cfg.dim), vb.upper[0])};
    }
    if (cfg.swarm.underweight_action == UnderweightAction::relocate) {
        cfg.swarm.relocate_position_box = pb;
        cfg.swarm.relocate_velocity_box = vb;
    }
    cfg.validate();
    const Objective obj = make_objective(cfg.objective, cfg.dim);
    if (!(cfg.swarm.lipschitz.value > 0.0))
        cfg.swarm.lipschitz = estimate_lipschitz(obj, pb.inflated(2.0), cfg.lipschitz_samples,
                                                 mix64(cfg.master_seed ^ 0x4c69707363686974ull));
    if (cfg.auto_kappa) cfg.swarm.kappa = std::max(cfg.swarm.kappa, cfg.swarm.lipschitz.value);

    const SchemeKind scheme = cfg.schemes.front();
    if (n_agents <= 0) n_agents = cfg.swarm_sizes.front();
    const std::uint64_t seed =
        derive_seed(cfg.master_seed, static_cast<std::uint64_t>(trial),
                    static_cast<std::uint64_t>(n_agents), static_cast<std::uint64_t>(scheme));

    std::filesystem::create_directories(cfg.out_dir);
    std::ostringstream stem;
    stem << cfg.objective << "_" << to_string(scheme) << "_N" << n_agents << "_t" << trial;
    const std::string trace_path = cfg.out_dir + "/trace_" + stem.str() + ".tsv";
    const std::string events_path = cfg.out_dir + "/events_" + stem.str() + ".tsv";
    std::ofstream tf(trace_path);
    if (!tf) throw std::runtime_error("cannot open " + trace_path);
    TraceWriter writer(tf, cfg.dim);

    RunHooks hooks;
    hooks.on_initial = [&](const SwarmState& s) { writer.append(s, cfg.swarm); };
    hooks.on_step = [&](const SwarmState& s, const StepOutcome&, bool) {
        writer.append(s, cfg.swarm);
    };

    SwarmState state = initialize_swarm(cfg, obj, n_agents, seed);
    TrialResult res = run(std::move(state), cfg.swarm, obj, scheme, hooks);

    std::ofstream ef(events_path);
    ef << "iter\tkind\tagents\tdetail\n";
    for (const LifecycleEvent& e : res.events) {
        ef << e.iteration << '\t' << to_string(e.kind) << '\t';
        for (std::size_t i = 0; i < e.agents.size(); ++i)
            ef << (i ? ";" : "") << e.agents[i];
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", e.detail);
        ef << '\t' << buf << '\n';
    }

    std::printf("trial seed %llu: final F = %.12g at iteration %d%s\n",
                static_cast<unsigned long long>(seed), res.final_f, res.iterations,
                res.diverged ? " (diverged)" : "");
    std::printf("trace written to %s\n", trace_path.c_str());
    return 0;
}

json table_base(const std::string& objective, int dim, const std::vector<int>& sizes,
                double pos_lo, double pos_hi, double vel_lo, double vel_hi) {
    json j;
    j["objective"] = {{"name", objective}, {"dim", dim}};
    j["swarm_sizes"] = sizes;
    j["init"] = {{"position", json::array({json::array({pos_lo, pos_hi})})},
                 {"velocity", json::array({json::array({vel_lo, vel_hi})})}};
    j["runs"] = 1000;
    return j;
}

int cmd_bench(const CommonOpts& opts, const std::string& table, int runs,
              std::vector<int> dims) {
    struct Job {
        std::string label;
        json base;
    };
    std::vector<Job> jobs;

    if (table == "ex1") {
        json b = table_base("exp_sin_1d", 1, {5, 10, 15, 20, 30}, -3, -1, 1, 5);
        b["swarm"]["max_iter"] = 160;  // the published runs converge within ~160 iterations
        b["schemes"] = {"sbi_simex"};
        jobs.push_back({"simex", b});
        b["schemes"] = {"sbgd"};
        jobs.push_back({"sbgd11", b});
        b["swarm"]["p"] = 2.0;
        jobs.push_back({"sbgd21", b});
    } else if (table == "ex1-variants") {
        for (bool conserve : {true, false})
            for (const char* s : {"sbi_simex", "sbi_imex"}) {
                json b = table_base("exp_sin_1d", 1, {5, 10, 15, 20, 30}, -3, -1, 1, 5);
                b["swarm"]["max_iter"] = 160;
                b["schemes"] = {s};
                b["swarm"]["conserve_mass"] = conserve;
                jobs.push_back({std::string(s) + (conserve ? "_conserved" : "_unconstrained"),
                                b});
            }
    } else if (table == "rastrigin") {
        if (dims.empty()) dims = {2, 3, 4, 5, 6};
        for (int d : dims) {
            json b = table_base("rastrigin", d, {10, 25, 50, 100}, -3, -1, 0, 4);
            b["schemes"] = {"sbi_simex", "rsbi_simex"};
            // slower mass decay keeps explorers alive long enough to line up
            // every coordinate on this landscape
            b["swarm"]["p"] = 2.0;
            jobs.push_back({"d" + std::to_string(d), b});
        }
    } else if (table == "rosenbrock") {
        if (dims.empty()) dims = {2, 3, 4, 5, 6, 20};
        for (int d : dims) {
            json b = table_base("rosenbrock", d, {10, 25, 50, 100}, -2.048, 2.048, -1, 1);
            b["schemes"] = {"sbi_simex", "rsbi_simex"};
            b["auto_kappa"] = true;  // kappa = 10 is unstable on this landscape
            jobs.push_back({"d" + std::to_string(d), b});
        }
    } else if (table == "styblinski") {
        if (dims.empty()) dims = {2, 4, 6, 8, 10, 12};
        for (int d : dims) {
            json b = table_base("styblinski_tang", d, {10, 25, 50, 100}, -3, 3, -1, 1);
            b["schemes"] = {"sbi_simex", "rsbi_simex"};
            jobs.push_back({"d" + std::to_string(d), b});
        }
    } else {
        std::fprintf(stderr, "unknown table: %s\n", table.c_str());
        return 2;
    }

    for (Job& job : jobs) {
        if (runs > 0) job.base["runs"] = runs;
        CommonOpts j_opts = opts;
        j_opts.config_path.clear();
        ExperimentConfig cfg = build_config(j_opts, job.base);
        ExperimentReport report = run_batch(cfg);
        const std::string dir = cfg.out_dir + "/" + table + "/" + job.label;
        emit_report(report, dir);
        print_summary(report, table + "/" + job.label);
    }
    return 0;
}

Objective quadratic_objective(int dim) {
    auto eval = [](const Vec& x) { return 0.5 * norm2_sq(x); };
    auto grad = [](const Vec& x, Vec& g) { g = x; };
    return Objective("quadratic", dim, eval, grad,
                     Box{Vec(static_cast<std::size_t>(dim), -10.0),
                         Vec(static_cast<std::size_t>(dim), 10.0)},
                     KnownMinimum{Vec(static_cast<std::size_t>(dim), 0.0), 0.0});
}

int cmd_verify() {
    int failures = 0;
    auto report = [&](const char* name, bool ok, const std::string& detail = "") {
        std::printf("[%s] %s%s%s\n", ok ? "PASS" : "FAIL", name, detail.empty() ? "" : ": ",
                    detail.c_str());
        if (!ok) ++failures;
    };

    // analytic gradients vs central differences
    {
        bool ok = true;
        std::string detail;
        for (const auto& spec : std::vector<std::pair<std::string, int>>{{"rastrigin", 3},
                                                                         {"rosenbrock", 4},
                                                                         {"styblinski_tang", 3},
                                                                         {"exp_sin_1d", 1},
                                                                         {"oscillatory_1d", 1}}) {
            const Objective obj = make_objective(spec.first, spec.second);
            Rng rng(42);
            for (int t = 0; t < 100 && ok; ++t) {
                Vec x(static_cast<std::size_t>(obj.dim()));
                for (std::size_t k = 0; k < x.size(); ++k)
                    x[k] = rng.uniform(obj.domain().lower[k], obj.domain().upper[k]);
                const Vec g = obj.grad(x);
                Vec xp = x, xm = x;
                double err = 0.0, scale = 1e-12;
                for (std::size_t k = 0; k < x.size(); ++k) {
                    const double hk = 1e-6 * std::max(1.0, std::abs(x[k]));
                    xp[k] += hk;
                    xm[k] -= hk;
                    const double fd = (obj.eval(xp) - obj.eval(xm)) / (2.0 * hk);
                    err = std::max(err, std::abs(fd - g[k]));
                    scale = std::max(scale, std::abs(g[k]));
                    xp[k] = x[k];
                    xm[k] = x[k];
                }
                if (err / std::max(1.0, scale) >= 1e-6) {
                    ok = false;
                    detail = spec.first;
                }
            }
        }
        report("gradient check (5 benchmarks x 100 points)", ok, detail);
    }

    // mass bounds and conservation
    {
        bool ok = true;
        Rng rng(7);
        for (int s = 0; s < 50 && ok; ++s) {
            const int n = 2 + static_cast<int>(rng.uniform01() * 20);
            SwarmConfig cfg;
            cfg.h = rng.uniform(0.05, 1.0);
            std::vector<AgentState> agents(static_cast<std::size_t>(n));
            double tot = 0.0;
            for (auto& a : agents) {
                a.x = {rng.uniform(-1, 1)};
                a.v = {0.0};
                a.m = rng.uniform01() + 1e-3;
                tot += a.m;
            }
            for (auto& a : agents) a.m /= tot;
            SwarmState st = make_swarm(std::move(agents), cfg, 1);
            for (int it = 0; it < 200 && ok; ++it) {
                for (auto& a : st.agents) a.f_cached = rng.uniform(-5, 5);
                const MassUpdate mu = update_masses(st, cfg);
                double sum = 0.0;
                for (std::size_t i = 0; i < st.size(); ++i) {
                    if (!(mu.new_masses[i] >= 0.0 && mu.new_masses[i] <= 1.0)) ok = false;
                    sum += mu.new_masses[i];
                    st.agents[i].m = mu.new_masses[i];
                }
                if (std::abs(sum - 1.0) >= 1e-12) ok = false;
            }
        }
        report("mass bounds + conservation (50 swarms x 200 steps)", ok);
    }

    // SIMEX dissipation on the quadratic with kappa = 1.1 L
    {
        const Objective obj = quadratic_objective(3);
        SwarmConfig cfg;
        cfg.w = {0.5};
        cfg.h = 1.0;
        cfg.kappa = 1.1;
        cfg.lipschitz = user_lipschitz(1.0);
        Rng rng(11);
        bool ok = true;
        for (int s = 0; s < 20 && ok; ++s) {
            std::vector<AgentState> agents(6);
            for (auto& a : agents) {
                a.x = {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
                a.v = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
                a.m = 1.0 / 6.0;
                a.f_cached = obj.eval(a.x);
            }
            SwarmState st = make_swarm(std::move(agents), cfg, 3);
            for (int it = 0; it < 100 && ok; ++it) {
                const StepOutcome out = step_simex(st, cfg, obj);
                if (!check_dissipation(out, cfg, SchemeKind::sbi_simex, st.iteration).empty())
                    ok = false;
            }
        }
        report("SIMEX dissipation (quadratic, kappa = 1.1 L, h = 1)", ok);
    }

    // kappa = 0 reduction equals the IMEX step bitwise
    {
        const Objective obj = make_objective("rastrigin", 2);
        SwarmConfig cfg;
        cfg.kappa = 0.0;
        Rng rng(5);
        std::vector<AgentState> agents(4);
        for (auto& a : agents) {
            a.x = {rng.uniform(-3, 3), rng.uniform(-3, 3)};
            a.v = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
            a.m = 0.25;
            a.f_cached = obj.eval(a.x);
        }
        SwarmState s1 = make_swarm(agents, cfg, 9);
        SwarmState s2 = make_swarm(agents, cfg, 9);
        bool ok = true;
        for (int it = 0; it < 50; ++it) {
            step_imex(s1, cfg, obj);
            step_simex(s2, cfg, obj);
        }
        for (std::size_t i = 0; i < s1.size(); ++i)
            if (s1.agents[i].x != s2.agents[i].x || s1.agents[i].v != s2.agents[i].v ||
                s1.agents[i].m != s2.agents[i].m)
                ok = false;
        report("kappa = 0 SIMEX == IMEX (bitwise, 50 steps)", ok);
    }

    // seeded determinism of a small batch
    {
        json b = table_base("exp_sin_1d", 1, {5}, -3, -1, 1, 5);
        b["runs"] = 20;
        ExperimentConfig cfg = config_from_json(b);
        const std::string r1 = report_to_json(run_batch(cfg)).dump();
        cfg.threads = 4;
        const std::string r2 = report_to_json(run_batch(cfg)).dump();
        report("seeded determinism across thread counts (20 trials)", r1 == r2);
    }

    std::printf("%s\n", failures == 0 ? "verify: all checks passed" : "verify: FAILURES");
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"swarm-based inertial optimization harness"};
    app.require_subcommand(1);

    CommonOpts opts;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "experiment config (JSON)");
        sub->add_option("--set", opts.overrides, "override config entries, e.g. swarm.kappa=20")
            ->take_all();
        sub->add_option("--seed", opts.seed, "master seed")->each([&](const std::string&) {
            opts.seed_set = true;
        });
        sub->add_option("--threads", opts.threads, "worker threads");
        sub->add_option("--out", opts.out_dir, "output directory");
    };

    CLI::App* c_run = app.add_subcommand("run", "run a Monte-Carlo batch from a config");
    add_common(c_run);
    c_run->get_option("--config")->required();

    int trace_n = 0, trace_trial = 0;
    CLI::App* c_trace = app.add_subcommand("trace", "run one trial and write its full trace");
    add_common(c_trace);
    c_trace->get_option("--config")->required();
    c_trace->add_option("--n", trace_n, "swarm size (default: first configured size)");
    c_trace->add_option("--trial", trace_trial, "trial index within the cell");

    std::string table;
    int bench_runs = 0;
    std::vector<int> bench_dims;
    CLI::App* c_bench = app.add_subcommand("bench-suite", "reproduce a named results table");
    add_common(c_bench);
    c_bench->add_option("--table", table, "ex1|ex1-variants|rastrigin|rosenbrock|styblinski")
        ->required();
    c_bench->add_option("--runs", bench_runs, "trials per cell (default 1000)");
    c_bench->add_option("--dims", bench_dims, "dimensions to run")->take_all();

    CLI::App* c_verify = app.add_subcommand("verify", "quick invariant checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(c_run)) return cmd_run(opts);
        if (app.got_subcommand(c_trace)) return cmd_trace(opts, trace_n, trace_trial);
        if (app.got_subcommand(c_bench)) return cmd_bench(opts, table, bench_runs, bench_dims);
        if (app.got_subcommand(c_verify)) return cmd_verify();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
