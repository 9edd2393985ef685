#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbi/lifecycle.hpp"
#include "sbi/objective.hpp"
#include "sbi/schemes.hpp"

namespace sbi {

struct SuccessCriterion {
    enum class Mode { f_gap, x_distance };
    Mode mode = Mode::f_gap;
    /// tol <= 0 with f_gap selects the benchmark's frozen default tolerance.
    double tol = 0.0;
};

/// One experiment: an objective, a set of (scheme, N) cells, `runs` seeded
/// trials per cell, initialization boxes, and the success criterion.
struct ExperimentConfig {
    std::string objective = "exp_sin_1d";
    int dim = 1;
    std::vector<SchemeKind> schemes = {SchemeKind::sbi_simex};
    std::vector<int> swarm_sizes = {5};
    int runs = 1000;
    Box position_box;  // single interval broadcasts over dim
    Box velocity_box;
    SwarmConfig swarm;
    SuccessCriterion success;
    std::uint64_t master_seed = 20250809;

    /// Lift kappa to max(kappa, L-hat) for this objective (SIMEX stability on
    /// stiff landscapes).
    bool auto_kappa = false;
    int lipschitz_samples = 1000;

    // execution environment; never echoed into reports
    int threads = 1;
    std::string out_dir = "out";

    void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg, bool include_environment);
ExperimentConfig load_config(const std::string& path);

/// Applies one `key=value` override with dotted paths into the config's JSON
/// form, e.g. "swarm.kappa=20", "schemes=[\"sbgd\"]", "runs=100".
void apply_override(nlohmann::json& j, const std::string& key_value);

struct TrialRecord {
    std::uint64_t seed = 0;
    Vec final_x;
    double final_f = 0.0;
    bool success = false;
    int iterations = 0;
    bool diverged = false;
    bool entered_fallback = false;
    bool fallback_converged = false;
};

struct CellReport {
    SchemeKind scheme = SchemeKind::sbi_simex;
    int n_agents = 0;
    int runs = 0;
    int successes = 0;
    double rate = 0.0;
    double wilson_lo = 0.0;
    double wilson_hi = 0.0;
    double mean_iterations = 0.0;
    int diverged = 0;
    double mean_wall_ms = 0.0;  // console only, never serialized
    std::vector<TrialRecord> trials;
};

struct ExperimentReport {
    ExperimentConfig config;
    double lipschitz_value = 0.0;  // the estimate the batch actually used
    double kappa_used = 0.0;
    double success_tol_used = 0.0;
    std::vector<CellReport> cells;
};

/// Swarm for one trial: x_i ~ U(position box), v_i ~ U(velocity box) drawn
/// coordinate-by-coordinate per agent, masses 1/N. The trial seed should come
/// from derive_seed(master, trial, N, scheme).
SwarmState initialize_swarm(const ExperimentConfig& cfg, const Objective& obj, int n_agents,
                            std::uint64_t trial_seed);

/// f_gap: F(x) - F* < tol; x_distance: |x - x*|_inf < tol. Needs known_min.
bool classify_success(const Vec& final_x, const Objective& obj, const SuccessCriterion& crit);

/// Resolved success criterion for an objective (fills the default tolerance).
SuccessCriterion resolve_success(const ExperimentConfig& cfg);

/// Runs every (scheme, N) cell, `runs` trials each, optionally across
/// cfg.threads workers. Trials are independent, keyed by index, and
/// reproducible bit-for-bit regardless of the thread count. Diverged trials
/// count as failures, never abort the batch.
ExperimentReport run_batch(const ExperimentConfig& cfg);

/// 95% Wilson score interval for `successes` out of `n`.
void wilson_interval(int successes, int n, double& lo, double& hi);

nlohmann::ordered_json report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& j);

/// Writes report.csv (rates table with config header) and report.json
/// (per-trial records) under `dir`. Both are byte-deterministic for a given
/// config and master seed. Throws std::runtime_error with path context.
void emit_report(const ExperimentReport& report, const std::string& dir);

}  // namespace sbi
