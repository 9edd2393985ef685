#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sbi/schemes.hpp"
#include "sbi/swarm.hpp"

namespace sbi {

struct LifecycleEvent {
    enum class Kind { merge, remove, fallback_entered, converged, max_iter };
    Kind kind = Kind::merge;
    std::uint64_t iteration = 0;
    std::vector<int> agents;  // indices valid at event time
    double detail = 0.0;      // triggering distance / mass / inner iterations
};

const char* to_string(LifecycleEvent::Kind kind);

/// Removes every agent with m < tol_m / N (N taken at entry). The current
/// best agent is never removed; under mass conservation the removed mass is
/// handed to it so the total stays at one. With
/// cfg.underweight_action == relocate, underweight agents are redrawn
/// uniformly inside the relocation boxes instead (mass kept).
/// One event per affected agent is appended.
void remove_underweight(SwarmState& state, const SwarmConfig& cfg, const Objective& obj,
                        std::vector<LifecycleEvent>& events);

/// Sequential lowest-index-first sweep: whenever |x_i - x_j| <= tol_merge
/// (i < j), agent i becomes the midpoint / mean-velocity / summed-mass agent
/// and j is deleted; the scan restarts until no pair qualifies. Total mass is
/// unchanged; merged agents get their objective value refreshed.
void merge_agents(SwarmState& state, const SwarmConfig& cfg, const Objective& obj,
                  std::vector<LifecycleEvent>& events);

struct DescentResult {
    AgentState agent;
    bool converged = false;
    int iterations = 0;
};

/// Plain gradient descent x <- x - h grad F(x) until the step displacement
/// drops below tol_res or max_inner is reached. On convergence the final
/// agent is returned (v = 0, m = 1); on hitting the cap, the best point seen
/// along the way.
DescentResult single_agent_descent(AgentState agent, const Objective& obj, double h,
                                   double tol_res, int max_inner);

struct TrialResult {
    Vec final_x;
    double final_f = 0.0;
    int iterations = 0;
    bool diverged = false;
    bool entered_fallback = false;
    bool fallback_converged = false;
    std::vector<LifecycleEvent> events;
};

/// Observation hooks for tracing; any of them may be empty.
struct RunHooks {
    std::function<void(const SwarmState&)> on_initial;
    std::function<void(const SwarmState&, const StepOutcome&, bool lifecycle_happened)> on_step;
};

/// Full optimizer loop: scheme step, then removal, then merging, per
/// iteration; once a single agent remains the loop switches to
/// single_agent_descent (with step min(h, 1/L-hat) when a Lipschitz estimate
/// is available) and stops. Runs cfg.max_iter iterations at most. Any
/// non-finite objective value or coordinate aborts the trial with the
/// diverged flag; the reported minimizer is the best surviving agent.
TrialResult run(SwarmState state, const SwarmConfig& cfg, const Objective& obj,
                SchemeKind scheme, const RunHooks& hooks = {});

}  // namespace sbi
