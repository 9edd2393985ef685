#include "sbi/swarm.hpp"

#include <cmath>
#include <stdexcept>

namespace sbi {

void SwarmConfig::validate() const {
    if (!(R > 0.0)) throw std::invalid_argument("SwarmConfig: R must be > 0");
    if (!(epsilon > 0.0)) throw std::invalid_argument("SwarmConfig: epsilon must be > 0");
    if (!(h > 0.0)) throw std::invalid_argument("SwarmConfig: h must be > 0");
    if (!(p > 0.0)) throw std::invalid_argument("SwarmConfig: p must be > 0");
    if (w.empty()) throw std::invalid_argument("SwarmConfig: w must not be empty");
    for (double wi : w)
        if (!(wi > 0.0)) throw std::invalid_argument("SwarmConfig: all w_i must be > 0");
    if (kappa < 0.0) throw std::invalid_argument("SwarmConfig: kappa must be >= 0");
    if (!(tol_m > 0.0 && tol_merge > 0.0 && tol_res > 0.0))
        throw std::invalid_argument("SwarmConfig: tolerances must be > 0");
    if (max_iter < 0) throw std::invalid_argument("SwarmConfig: max_iter must be >= 0");
    if (underweight_action == UnderweightAction::relocate &&
        (!relocate_position_box || !relocate_velocity_box))
        throw std::invalid_argument("SwarmConfig: relocate requires relocation boxes");
}

double SwarmState::total_mass() const {
    double s = 0.0;
    for (const auto& a : agents) s += a.m;
    return s;
}

Vec SwarmState::f_values() const {
    Vec f(agents.size());
    for (std::size_t i = 0; i < agents.size(); ++i) f[i] = agents[i].f_cached;
    return f;
}

std::size_t SwarmState::best_index() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < agents.size(); ++i)
        if (agents[i].f_cached < agents[best].f_cached) best = i;
    return best;
}

SwarmState make_swarm(std::vector<AgentState> agents, const SwarmConfig& cfg,
                      std::uint64_t seed) {
    if (agents.empty()) throw std::invalid_argument("make_swarm: agents list is empty");
    if (cfg.w.size() != 1 && cfg.w.size() != agents.size())
        throw std::invalid_argument("make_swarm: w must be shared or one per agent");
    SwarmState s;
    s.weights.resize(agents.size());
    for (std::size_t i = 0; i < agents.size(); ++i)
        s.weights[i] = cfg.w.size() == 1 ? cfg.w[0] : cfg.w[i];
    s.agents = std::move(agents);
    s.rng = Rng(seed);
    return s;
}

std::size_t argmin_index(const std::vector<double>& f) {
    if (f.empty()) throw std::invalid_argument("argmin_index: empty input");
    std::size_t best = 0;
    for (std::size_t i = 1; i < f.size(); ++i)
        if (f[i] < f[best]) best = i;
    return best;
}

std::size_t argmax_index(const std::vector<double>& f) {
    if (f.empty()) throw std::invalid_argument("argmax_index: empty input");
    std::size_t worst = 0;
    for (std::size_t i = 1; i < f.size(); ++i)
        if (f[i] > f[worst]) worst = i;
    return worst;
}

std::vector<double> compute_eta(const std::vector<double>& f, double epsilon) {
    if (f.empty()) throw std::invalid_argument("compute_eta: empty input");
    if (!(epsilon > 0.0)) throw std::invalid_argument("compute_eta: epsilon must be > 0");
    const double fmin = f[argmin_index(f)];
    const double fmax = f[argmax_index(f)];
    const double den = fmax - fmin + epsilon;
    std::vector<double> eta(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) eta[i] = (f[i] - fmin + epsilon) / den;
    return eta;
}

std::vector<double> compute_eta_unregularized(const std::vector<double>& f) {
    if (f.empty()) throw std::invalid_argument("compute_eta_unregularized: empty input");
    const double fmin = f[argmin_index(f)];
    const double fmax = f[argmax_index(f)];
    const double den = fmax - fmin;
    std::vector<double> eta(f.size(), 1.0);  // degenerate all-equal case
    if (den > 0.0)
        for (std::size_t i = 0; i < f.size(); ++i) eta[i] = (f[i] - fmin) / den;
    return eta;
}

std::vector<double> select_alpha(const std::vector<double>& f) {
    std::vector<double> alpha(f.size(), 0.0);
    alpha[argmin_index(f)] = 1.0;
    return alpha;
}

MassUpdate update_masses(const SwarmState& state, const SwarmConfig& cfg) {
    if (state.agents.empty()) throw std::invalid_argument("update_masses: empty swarm");
    if (cfg.conserve_mass && cfg.h > 1.0)
        throw std::invalid_argument(
            "update_masses: h > 1 violates the bound-preservation step-size condition");

    const Vec f = state.f_values();
    const std::vector<double> eta = compute_eta(f, cfg.epsilon);

    MassUpdate out;
    out.new_masses.resize(state.size());
    std::vector<double> phi(state.size());
    for (std::size_t i = 0; i < state.size(); ++i) {
        phi[i] = std::pow(eta[i], cfg.p);
        out.lambda += phi[i] * state.agents[i].m;
    }

    if (cfg.conserve_mass) {
        const std::size_t best = argmin_index(f);
        for (std::size_t i = 0; i < state.size(); ++i) {
            const double inflow = (i == best) ? out.lambda : 0.0;
            out.new_masses[i] = state.agents[i].m + cfg.h * (-phi[i] * state.agents[i].m + inflow);
        }
    } else {
        for (std::size_t i = 0; i < state.size(); ++i)
            out.new_masses[i] = (1.0 - cfg.h * phi[i]) * state.agents[i].m;
    }
    return out;
}

}  // namespace sbi
