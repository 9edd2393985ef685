#include "sbi/harness.hpp"

#include <atomic>
#include <limits>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "sbi/rng.hpp"

namespace sbi {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

Box broadcast_box(const Box& b, int dim) {
    if (static_cast<int>(b.lower.size()) == dim) return b;
    if (b.lower.size() == 1)
        return Box{Vec(static_cast<std::size_t>(dim), b.lower[0]),
                   Vec(static_cast<std::size_t>(dim), b.upper[0])};
    throw std::invalid_argument("box has neither 1 nor dim coordinate intervals");
}

Box box_from_json(const json& j) {
    Box b;
    for (const auto& pair : j) {
        if (!pair.is_array() || pair.size() != 2)
            throw std::invalid_argument("box entries must be [lo, hi] pairs");
        b.lower.push_back(pair[0].get<double>());
        b.upper.push_back(pair[1].get<double>());
    }
    if (!b.valid()) throw std::invalid_argument("box has lo > hi");
    return b;
}

ordered_json box_to_json(const Box& b) {
    ordered_json out = ordered_json::array();
    for (std::size_t i = 0; i < b.lower.size(); ++i)
        out.push_back(ordered_json::array({b.lower[i], b.upper[i]}));
    return out;
}

std::uint64_t scheme_id(SchemeKind kind) { return static_cast<std::uint64_t>(kind); }

constexpr double kZ95 = 1.959963984540054;

}  // namespace

void ExperimentConfig::validate() const {
    swarm.validate();
    if (runs < 1) throw std::invalid_argument("config: runs must be >= 1");
    if (dim < 1) throw std::invalid_argument("config: dim must be >= 1");
    if (schemes.empty()) throw std::invalid_argument("config: schemes must not be empty");
    if (swarm_sizes.empty()) throw std::invalid_argument("config: swarm_sizes must not be empty");
    for (int n : swarm_sizes)
        if (n < 1) throw std::invalid_argument("config: swarm sizes must be >= 1");
    if (!position_box.valid() || !velocity_box.valid())
        throw std::invalid_argument("config: initialization boxes invalid");
    if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
    if (swarm.w.size() > 1)
        for (int n : swarm_sizes)
            if (swarm.w.size() != static_cast<std::size_t>(n))
                throw std::invalid_argument(
                    "config: per-agent w must match every configured swarm size");
    if (success.mode == SuccessCriterion::Mode::x_distance && !(success.tol > 0.0))
        throw std::invalid_argument("config: x_distance criterion needs an explicit tol");
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig cfg;
    if (j.contains("objective")) {
        cfg.objective = j["objective"].value("name", cfg.objective);
        cfg.dim = j["objective"].value("dim", cfg.dim);
    }
    if (j.contains("schemes")) {
        cfg.schemes.clear();
        for (const auto& s : j["schemes"]) cfg.schemes.push_back(scheme_from_string(s));
    }
    if (j.contains("swarm_sizes")) cfg.swarm_sizes = j["swarm_sizes"].get<std::vector<int>>();
    cfg.runs = j.value("runs", cfg.runs);
    if (j.contains("init")) {
        cfg.position_box = box_from_json(j["init"].at("position"));
        cfg.velocity_box = box_from_json(j["init"].at("velocity"));
    }
    if (j.contains("swarm")) {
        const json& s = j["swarm"];
        SwarmConfig& w = cfg.swarm;
        w.R = s.value("R", w.R);
        if (s.contains("w")) {
            if (s["w"].is_array())
                w.w = s["w"].get<Vec>();
            else
                w.w = Vec{s["w"].get<double>()};
        }
        w.kappa = s.value("kappa", w.kappa);
        w.epsilon = s.value("epsilon", w.epsilon);
        w.h = s.value("h", w.h);
        w.p = s.value("p", w.p);
        w.conserve_mass = s.value("conserve_mass", w.conserve_mass);
        w.tol_m = s.value("tol_m", w.tol_m);
        w.tol_merge = s.value("tol_merge", w.tol_merge);
        w.tol_res = s.value("tol_res", w.tol_res);
        w.beta = s.value("beta", w.beta);
        w.max_iter = s.value("max_iter", w.max_iter);
        w.sbgd_h_max = s.value("sbgd_h_max", w.sbgd_h_max);
        w.sbgd_lambda = s.value("sbgd_lambda", w.sbgd_lambda);
        w.sbgd_q = s.value("sbgd_q", w.sbgd_q);
        w.lifecycle_enabled = s.value("lifecycle_enabled", w.lifecycle_enabled);
        if (s.contains("underweight_action")) {
            const std::string a = s["underweight_action"];
            if (a == "remove")
                w.underweight_action = UnderweightAction::remove;
            else if (a == "relocate")
                w.underweight_action = UnderweightAction::relocate;
            else
                throw std::invalid_argument("underweight_action must be remove|relocate");
        }
        w.fallback_max_inner = s.value("fallback_max_inner", w.fallback_max_inner);
        if (s.contains("lipschitz")) w.lipschitz = user_lipschitz(s["lipschitz"].get<double>());
    }
    if (j.contains("success")) {
        const std::string m = j["success"].value("mode", "f_gap");
        if (m == "f_gap")
            cfg.success.mode = SuccessCriterion::Mode::f_gap;
        else if (m == "x_distance")
            cfg.success.mode = SuccessCriterion::Mode::x_distance;
        else
            throw std::invalid_argument("success.mode must be f_gap|x_distance");
        cfg.success.tol = j["success"].value("tol", 0.0);
    }
    cfg.master_seed = j.value("seed", cfg.master_seed);
    cfg.auto_kappa = j.value("auto_kappa", cfg.auto_kappa);
    cfg.lipschitz_samples = j.value("lipschitz_samples", cfg.lipschitz_samples);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.out_dir = j.value("out", cfg.out_dir);
    return cfg;
}

ordered_json config_to_json(const ExperimentConfig& cfg, bool include_environment) {
    ordered_json j;
    j["objective"] = {{"name", cfg.objective}, {"dim", cfg.dim}};
    ordered_json schemes = ordered_json::array();
    for (SchemeKind k : cfg.schemes) schemes.push_back(to_string(k));
    j["schemes"] = schemes;
    j["swarm_sizes"] = cfg.swarm_sizes;
    j["runs"] = cfg.runs;
    j["init"] = {{"position", box_to_json(cfg.position_box)},
                 {"velocity", box_to_json(cfg.velocity_box)}};
    const SwarmConfig& w = cfg.swarm;
    ordered_json s;
    s["R"] = w.R;
    s["w"] = w.w;
    s["kappa"] = w.kappa;
    s["epsilon"] = w.epsilon;
    s["h"] = w.h;
    s["p"] = w.p;
    s["conserve_mass"] = w.conserve_mass;
    s["tol_m"] = w.tol_m;
    s["tol_merge"] = w.tol_merge;
    s["tol_res"] = w.tol_res;
    s["beta"] = w.beta;
    s["max_iter"] = w.max_iter;
    s["sbgd_h_max"] = w.sbgd_h_max;
    s["sbgd_lambda"] = w.sbgd_lambda;
    s["sbgd_q"] = w.sbgd_q;
    s["lifecycle_enabled"] = w.lifecycle_enabled;
    s["underweight_action"] =
        w.underweight_action == UnderweightAction::remove ? "remove" : "relocate";
    s["fallback_max_inner"] = w.fallback_max_inner;
    if (w.lipschitz.method == LipschitzMethod::user_supplied && w.lipschitz.value > 0.0)
        s["lipschitz"] = w.lipschitz.value;
    j["swarm"] = s;
    j["success"] = {
        {"mode", cfg.success.mode == SuccessCriterion::Mode::f_gap ? "f_gap" : "x_distance"},
        {"tol", cfg.success.tol}};
    j["seed"] = cfg.master_seed;
    j["auto_kappa"] = cfg.auto_kappa;
    j["lipschitz_samples"] = cfg.lipschitz_samples;
    if (include_environment) {
        j["threads"] = cfg.threads;
        j["out"] = cfg.out_dir;
    }
    return j;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j;
    in >> j;
    return config_from_json(j);
}

void apply_override(json& j, const std::string& key_value) {
    const auto eq = key_value.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override must be key=value: " + key_value);
    const std::string path = key_value.substr(0, eq);
    const std::string value = key_value.substr(eq + 1);

    json* node = &j;
    std::size_t start = 0;
    while (true) {
        const std::size_t dotpos = path.find('.', start);
        const std::string key = path.substr(start, dotpos - start);
        if (key.empty()) throw std::invalid_argument("bad override path: " + path);
        if (dotpos == std::string::npos) {
            json parsed = json::parse(value, nullptr, false);
            (*node)[key] = parsed.is_discarded() ? json(value) : parsed;
            return;
        }
        node = &(*node)[key];
        start = dotpos + 1;
    }
}

SwarmState initialize_swarm(const ExperimentConfig& cfg, const Objective& obj, int n_agents,
                            std::uint64_t trial_seed) {
    const Box pb = broadcast_box(cfg.position_box, cfg.dim);
    const Box vb = broadcast_box(cfg.velocity_box, cfg.dim);
    const std::size_t d = static_cast<std::size_t>(cfg.dim);

    Rng rng(trial_seed);
    std::vector<AgentState> agents(static_cast<std::size_t>(n_agents));
    for (auto& a : agents) {
        a.x.resize(d);
        a.v.resize(d);
        for (std::size_t k = 0; k < d; ++k) a.x[k] = rng.uniform(pb.lower[k], pb.upper[k]);
        for (std::size_t k = 0; k < d; ++k) a.v[k] = rng.uniform(vb.lower[k], vb.upper[k]);
        a.m = 1.0 / static_cast<double>(n_agents);
        a.f_cached = obj.eval(a.x);
    }
    // hand the advanced generator to the state so RSBI draws stay seeded
    SwarmState state = make_swarm(std::move(agents), cfg.swarm, 0);
    state.rng = rng;
    return state;
}

bool classify_success(const Vec& final_x, const Objective& obj, const SuccessCriterion& crit) {
    if (!obj.known_min())
        throw std::runtime_error("classify_success: objective has no known minimum");
    if (crit.mode == SuccessCriterion::Mode::f_gap)
        return obj.eval(final_x) - obj.known_min()->value < crit.tol;
    double d = 0.0;
    const Vec& xs = obj.known_min()->point;
    for (std::size_t i = 0; i < final_x.size(); ++i)
        d = std::max(d, std::abs(final_x[i] - xs[i]));
    return d < crit.tol;
}

SuccessCriterion resolve_success(const ExperimentConfig& cfg) {
    SuccessCriterion crit = cfg.success;
    if (crit.mode == SuccessCriterion::Mode::f_gap && !(crit.tol > 0.0))
        crit.tol = default_success_tol(cfg.objective);
    return crit;
}

void wilson_interval(int successes, int n, double& lo, double& hi) {
    if (n <= 0) {
        lo = hi = 0.0;
        return;
    }
    const double z = kZ95;
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(successes) / nn;
    const double denom = 1.0 + z * z / nn;
    const double center = (p + z * z / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
    lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
    hi = successes == n ? 1.0 : std::min(1.0, center + half);
}

ExperimentReport run_batch(const ExperimentConfig& cfg_in) {
    ExperimentConfig cfg = cfg_in;
    if (cfg.swarm.underweight_action == UnderweightAction::relocate) {
        cfg.swarm.relocate_position_box = broadcast_box(cfg.position_box, cfg.dim);
        cfg.swarm.relocate_velocity_box = broadcast_box(cfg.velocity_box, cfg.dim);
    }
    cfg.validate();
    const Objective obj = make_objective(cfg.objective, cfg.dim);

    // One Lipschitz estimate per batch, on the initialization box inflated 2x,
    // unless the user supplied a value.
    if (!(cfg.swarm.lipschitz.value > 0.0)) {
        const Box sample_box = broadcast_box(cfg.position_box, cfg.dim).inflated(2.0);
        cfg.swarm.lipschitz = estimate_lipschitz(obj, sample_box, cfg.lipschitz_samples,
                                                 mix64(cfg.master_seed ^ 0x4c69707363686974ull));
    }
    if (cfg.auto_kappa) cfg.swarm.kappa = std::max(cfg.swarm.kappa, cfg.swarm.lipschitz.value);

    const SuccessCriterion crit = resolve_success(cfg);

    ExperimentReport report;
    report.config = cfg_in;
    report.lipschitz_value = cfg.swarm.lipschitz.value;
    report.kappa_used = cfg.swarm.kappa;
    report.success_tol_used = crit.tol;

    for (SchemeKind scheme : cfg.schemes) {
        for (int n_agents : cfg.swarm_sizes) {
            CellReport cell;
            cell.scheme = scheme;
            cell.n_agents = n_agents;
            cell.runs = cfg.runs;
            cell.trials.resize(static_cast<std::size_t>(cfg.runs));

            const auto t0 = std::chrono::steady_clock::now();
            std::atomic<int> next{0};
            auto worker = [&]() {
                for (;;) {
                    const int t = next.fetch_add(1);
                    if (t >= cfg.runs) return;
                    const std::uint64_t seed =
                        derive_seed(cfg.master_seed, static_cast<std::uint64_t>(t),
                                    static_cast<std::uint64_t>(n_agents), scheme_id(scheme));
                    TrialRecord rec;
                    rec.seed = seed;
                    try {
                        SwarmState state = initialize_swarm(cfg, obj, n_agents, seed);
                        TrialResult res = run(std::move(state), cfg.swarm, obj, scheme);
                        rec.final_x = std::move(res.final_x);
                        rec.final_f = res.final_f;
                        rec.iterations = res.iterations;
                        rec.diverged = res.diverged;
                        rec.entered_fallback = res.entered_fallback;
                        rec.fallback_converged = res.fallback_converged;
                        rec.success = !res.diverged && all_finite(rec.final_x) &&
                                      classify_success(rec.final_x, obj, crit);
                    } catch (const std::exception&) {
                        // a failed trial is a failure, never a batch abort
                        rec.final_x.assign(static_cast<std::size_t>(cfg.dim), 0.0);
                        rec.final_f = std::numeric_limits<double>::quiet_NaN();
                        rec.diverged = true;
                        rec.success = false;
                    }
                    cell.trials[static_cast<std::size_t>(t)] = std::move(rec);
                }
            };
            if (cfg.threads <= 1) {
                worker();
            } else {
                std::vector<std::thread> pool;
                pool.reserve(static_cast<std::size_t>(cfg.threads));
                for (int i = 0; i < cfg.threads; ++i) pool.emplace_back(worker);
                for (auto& th : pool) th.join();
            }
            const auto t1 = std::chrono::steady_clock::now();

            double iter_sum = 0.0;
            for (const TrialRecord& r : cell.trials) {
                cell.successes += r.success ? 1 : 0;
                cell.diverged += r.diverged ? 1 : 0;
                iter_sum += r.iterations;
            }
            cell.rate = static_cast<double>(cell.successes) / static_cast<double>(cfg.runs);
            wilson_interval(cell.successes, cfg.runs, cell.wilson_lo, cell.wilson_hi);
            cell.mean_iterations = iter_sum / static_cast<double>(cfg.runs);
            cell.mean_wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count() /
                                static_cast<double>(cfg.runs);
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

ordered_json report_to_json(const ExperimentReport& report) {
    ordered_json j;
    j["config"] = config_to_json(report.config, /*include_environment=*/false);
    j["lipschitz_value"] = report.lipschitz_value;
    j["kappa_used"] = report.kappa_used;
    j["success_tol_used"] = report.success_tol_used;
    ordered_json cells = ordered_json::array();
    for (const CellReport& c : report.cells) {
        ordered_json jc;
        jc["scheme"] = to_string(c.scheme);
        jc["N"] = c.n_agents;
        jc["runs"] = c.runs;
        jc["successes"] = c.successes;
        jc["rate"] = c.rate;
        jc["wilson"] = ordered_json::array({c.wilson_lo, c.wilson_hi});
        jc["mean_iterations"] = c.mean_iterations;
        jc["diverged"] = c.diverged;
        ordered_json trials = ordered_json::array();
        for (const TrialRecord& t : c.trials) {
            ordered_json jt;
            jt["seed"] = t.seed;
            jt["x"] = t.final_x;
            jt["f"] = t.final_f;
            jt["success"] = t.success;
            jt["iterations"] = t.iterations;
            jt["diverged"] = t.diverged;
            jt["fallback"] = t.entered_fallback;
            jt["fallback_converged"] = t.fallback_converged;
            trials.push_back(std::move(jt));
        }
        jc["trials"] = std::move(trials);
        cells.push_back(std::move(jc));
    }
    j["cells"] = std::move(cells);
    return j;
}

ExperimentReport report_from_json(const json& j) {
    ExperimentReport report;
    report.config = config_from_json(j.at("config"));
    report.lipschitz_value = j.value("lipschitz_value", 0.0);
    report.kappa_used = j.value("kappa_used", 0.0);
    report.success_tol_used = j.value("success_tol_used", 0.0);
    for (const auto& jc : j.at("cells")) {
        CellReport c;
        c.scheme = scheme_from_string(jc.at("scheme"));
        c.n_agents = jc.at("N");
        c.runs = jc.at("runs");
        c.successes = jc.at("successes");
        c.rate = jc.at("rate");
        c.wilson_lo = jc.at("wilson")[0];
        c.wilson_hi = jc.at("wilson")[1];
        c.mean_iterations = jc.at("mean_iterations");
        c.diverged = jc.at("diverged");
        for (const auto& jt : jc.at("trials")) {
            TrialRecord t;
            t.seed = jt.at("seed");
            t.final_x.clear();
            for (const auto& c : jt.at("x"))
                t.final_x.push_back(c.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                : c.get<double>());
            // non-finite values serialize as null
            t.final_f = jt.at("f").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                             : jt.at("f").get<double>();
            t.success = jt.at("success");
            t.iterations = jt.at("iterations");
            t.diverged = jt.at("diverged");
            t.entered_fallback = jt.at("fallback");
            t.fallback_converged = jt.at("fallback_converged");
            c.trials.push_back(std::move(t));
        }
        report.cells.push_back(std::move(c));
    }
    return report;
}

void emit_report(const ExperimentReport& report, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory: " + dir);

    const ExperimentConfig& cfg = report.config;
    {
        const std::string path = dir + "/report.csv";
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot open " + path);
        char buf[64];
        out << "# objective=" << cfg.objective << " dim=" << cfg.dim << '\n';
        out << "# seed=" << cfg.master_seed << " runs=" << cfg.runs << '\n';
        std::snprintf(buf, sizeof buf, "%.17g", cfg.swarm.h);
        out << "# h=" << buf;
        std::snprintf(buf, sizeof buf, "%.17g", report.kappa_used);
        out << " kappa=" << buf;
        std::snprintf(buf, sizeof buf, "%.17g", cfg.swarm.R);
        out << " R=" << buf;
        std::snprintf(buf, sizeof buf, "%.17g", cfg.swarm.w[0]);
        out << " w=" << buf;
        std::snprintf(buf, sizeof buf, "%.17g", cfg.swarm.p);
        out << " p=" << buf;
        std::snprintf(buf, sizeof buf, "%.17g", cfg.swarm.epsilon);
        out << " epsilon=" << buf << " max_iter=" << cfg.swarm.max_iter
            << " conserve_mass=" << (cfg.swarm.conserve_mass ? 1 : 0) << '\n';
        std::snprintf(buf, sizeof buf, "%.17g", report.success_tol_used);
        out << "# success_mode="
            << (cfg.success.mode == SuccessCriterion::Mode::f_gap ? "f_gap" : "x_distance")
            << " success_tol=" << buf;
        std::snprintf(buf, sizeof buf, "%.17g", report.lipschitz_value);
        out << " lipschitz=" << buf << '\n';
        if (report.lipschitz_value > 0.0) {
            // conditional-stability bound for the non-stabilized scheme
            double wmax = 0.0;
            for (double wi : cfg.swarm.w) wmax = std::max(wmax, wi);
            const double bound =
                std::min(1.0, 2.0 * cfg.swarm.R / (wmax * report.lipschitz_value));
            std::snprintf(buf, sizeof buf, "%.17g", bound);
            out << "# imex_h_bound=" << buf
                << " h_within_bound=" << (cfg.swarm.h <= bound ? 1 : 0) << '\n';
        }
        out << "scheme,N,runs,successes,rate,wilson_lo,wilson_hi,mean_iterations,diverged\n";
        for (const CellReport& c : report.cells) {
            out << to_string(c.scheme) << ',' << c.n_agents << ',' << c.runs << ','
                << c.successes << ',';
            std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.3f", c.rate, c.wilson_lo,
                          c.wilson_hi, c.mean_iterations);
            out << buf << ',' << c.diverged << '\n';
        }
        if (!out) throw std::runtime_error("write failed: " + path);
    }
    {
        const std::string path = dir + "/report.json";
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot open " + path);
        out << report_to_json(report).dump(2) << '\n';
        if (!out) throw std::runtime_error("write failed: " + path);
    }
}

}  // namespace sbi
