#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sbi/objective.hpp"
#include "sbi/rng.hpp"
#include "sbi/vec.hpp"

namespace sbi {

/// One swarm member: position, velocity, mass in [0,1] (conserved variant)
/// and the objective value cached at the last position update.
struct AgentState {
    Vec x;
    Vec v;
    double m = 0.0;
    double f_cached = 0.0;
};

enum class AlphaPolicy { best_agent };

enum class UnderweightAction { remove, relocate };

/// All scheme parameters. `w` holds either one shared weight or one weight
/// per initial agent; the live per-agent copy travels with the SwarmState so
/// that merges and removals keep weights aligned.
struct SwarmConfig {
    double R = 1.0;       // friction
    Vec w = {1e-4};       // kinetic/potential balance weight(s)
    double kappa = 10.0;  // SIMEX stabilization
    double epsilon = 1e-8;
    double h = 0.5;
    double p = 1.0;  // mass-dynamics exponent in phi_p(eta) = eta^p
    bool conserve_mass = true;
    AlphaPolicy alpha_policy = AlphaPolicy::best_agent;
    LipschitzEstimate lipschitz{};

    double tol_m = 1e-4;
    double tol_merge = 1e-3;
    double tol_res = 1e-5;
    double beta = 0.0;  // RSBI acceptance threshold; <= 0 means 1/N
    int max_iter = 500;

    // SBGD backtracking
    double sbgd_h_max = 1.0;
    double sbgd_lambda = 0.2;
    double sbgd_q = 1.0;

    bool lifecycle_enabled = true;
    UnderweightAction underweight_action = UnderweightAction::remove;
    std::optional<Box> relocate_position_box;  // required when action == relocate
    std::optional<Box> relocate_velocity_box;
    int fallback_max_inner = 100000;

    /// Throws std::invalid_argument on violated parameter constraints.
    void validate() const;
};

/// Collective state owned by a single trial. Distinct trials never share one.
struct SwarmState {
    std::vector<AgentState> agents;
    Vec weights;  // per current agent, broadcast from SwarmConfig::w
    std::uint64_t iteration = 0;
    Rng rng;

    std::size_t size() const { return agents.size(); }
    double total_mass() const;
    Vec f_values() const;
    /// Index of the agent with minimal cached F (lowest index on ties).
    std::size_t best_index() const;
};

/// Builds a state from explicit agents, broadcasting cfg.w to per-agent
/// weights; cfg.w must have size 1 or agents.size().
SwarmState make_swarm(std::vector<AgentState> agents, const SwarmConfig& cfg,
                      std::uint64_t seed);

// --- mass-dynamics kinematics ------------------------------------------------

/// Lowest-index argmin / argmax (deterministic tie break).
std::size_t argmin_index(const std::vector<double>& f);
std::size_t argmax_index(const std::vector<double>& f);

/// eta_i = (F_i - F_best + eps) / (F_worst - F_best + eps), in (0, 1];
/// equals 1 for every agent when all values coincide.
std::vector<double> compute_eta(const std::vector<double>& f, double epsilon);

/// eta without the eps regularization (the gradient-descent baseline's form);
/// all ones when every value coincides.
std::vector<double> compute_eta_unregularized(const std::vector<double>& f);

/// One-hot allocation vector at the argmin of f.
std::vector<double> select_alpha(const std::vector<double>& f);

struct MassUpdate {
    Vec new_masses;
    double lambda = 0.0;  // sum_j phi_p(eta_j) m_j
};

/// Explicit-Euler mass step. Conserved variant:
///   m_i' = m_i + h (-phi_p(eta_i) m_i + alpha_i * lambda)
/// which keeps every mass in [0,1] and the total at 1 for h <= 1.
/// Unconstrained variant: m_i' = (1 - h phi_p(eta_i)) m_i.
/// Throws std::invalid_argument when conserve_mass and h > 1.
MassUpdate update_masses(const SwarmState& state, const SwarmConfig& cfg);

}  // namespace sbi
