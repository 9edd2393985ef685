#pragma once

#include <string>
#include <vector>

#include "sbi/swarm.hpp"

namespace sbi {

enum class SchemeKind { sbi_imex, sbi_simex, rsbi_simex, sbgd };

const char* to_string(SchemeKind kind);
SchemeKind scheme_from_string(const std::string& name);

/// Per-step record: discrete energies before/after, the reductions the
/// dissipation checks need, the mass multiplier, and (RSBI only) which
/// agents kept their proposed position.
struct StepOutcome {
    double lambda = 0.0;
    Vec energy_before;  // (m^n+eps)/2 |v^n|^2 + w_i F(x^n), per agent
    Vec energy_after;   // same with the n+1 quantities
    Vec mass_before;    // m^n
    Vec dv_sq;          // |v^{n+1} - v^n|^2
    Vec v_after_sq;     // |v^{n+1}|^2
    std::vector<std::uint8_t> accepted;  // RSBI only, 1 = proposal kept
    std::vector<int> frozen;             // SBGD backtracking underflow
};

/// One step of the conditionally energy-stable IMEX scheme. Order: masses by
/// explicit Euler, then per agent the v-implicit relation
///   v^{n+1} (1 + hR + (m^{n+1}-m^n)/(2(m^n+eps))) = v^n - h w_i/(m^n+eps) grad F(x^n)
/// solved in closed form (the bracket is a positive scalar), then
/// x^{n+1} = x^n + h v^{n+1}. Dissipates each agent's mechanical energy for
/// h <= min(min_i 2R/(w_i L), 1).
StepOutcome step_imex(SwarmState& state, const SwarmConfig& cfg, const Objective& obj);

/// One step of the stabilized scheme: the kappa x^{n+1} term of the coupled
/// update is eliminated through x^{n+1} = x^n + h v^{n+1}, which adds
/// h^2 w_i kappa/(m^n+eps) to the bracket above. With kappa = 0 this is
/// bit-identical to step_imex; with kappa >= L it is energy-stable for any
/// h <= 1.
StepOutcome step_simex(SwarmState& state, const SwarmConfig& cfg, const Objective& obj);

/// step_simex plus per-agent stochastic acceptance (see stochastic_accept).
StepOutcome step_rsbi_simex(SwarmState& state, const SwarmConfig& cfg, const Objective& obj);

/// Swarm-based gradient descent baseline: mass redistribution with the
/// unregularized eta (non-best agents decay, the best takes the remainder to
/// one), then per agent a backtracking step from sbgd_h_max, halving until
///   F(x - h grad F) <= F(x) - lambda_armijo psi_q(m~) h |grad F|^2,
/// with m~ the masses rescaled by their maximum. Velocities are zeroed.
/// Agents whose backtracking underflows (h < 1e-16) stay put and are listed
/// in StepOutcome::frozen.
StepOutcome step_sbgd(SwarmState& state, const SwarmConfig& cfg, const Objective& obj,
                      double lambda_armijo, double q);

/// Dispatch on kind; sbgd uses cfg.sbgd_lambda / cfg.sbgd_q.
StepOutcome advance(SwarmState& state, const SwarmConfig& cfg, const Objective& obj,
                    SchemeKind kind);

/// P(m) = 1/2 - 1/2 tanh(1000 (m - beta)): probability of accepting an
/// uphill move for an agent of mass m.
double acceptance_probability(double mass, double beta);

/// Per-agent acceptance pass over a state just advanced by step_simex.
/// `before` is the pre-step agent list. Downhill moves are always kept;
/// uphill moves are kept with probability P(m^{n+1}) using one uniform draw
/// from state.rng. A rejected agent reverts its position (and cached F) but
/// keeps the proposed velocity and mass; outcome energies are refreshed.
void stochastic_accept(const std::vector<AgentState>& before, SwarmState& state,
                       StepOutcome& outcome, const SwarmConfig& cfg);

}  // namespace sbi
