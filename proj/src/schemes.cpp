#include "sbi/schemes.hpp"

#include <cmath>
#include <stdexcept>

#include "sbi/diagnostics.hpp"

namespace sbi {

const char* to_string(SchemeKind kind) {
    switch (kind) {
        case SchemeKind::sbi_imex: return "sbi_imex";
        case SchemeKind::sbi_simex: return "sbi_simex";
        case SchemeKind::rsbi_simex: return "rsbi_simex";
        case SchemeKind::sbgd: return "sbgd";
    }
    return "?";
}

SchemeKind scheme_from_string(const std::string& name) {
    if (name == "sbi_imex") return SchemeKind::sbi_imex;
    if (name == "sbi_simex") return SchemeKind::sbi_simex;
    if (name == "rsbi_simex") return SchemeKind::rsbi_simex;
    if (name == "sbgd") return SchemeKind::sbgd;
    throw std::invalid_argument("unknown scheme: " + name);
}

namespace {

/// Shared m -> v -> x update; step_imex is kappa = 0, step_simex is
/// kappa = cfg.kappa. The update order matters: the v-relation uses m^{n+1},
/// the x-update uses v^{n+1}.
StepOutcome inertial_step(SwarmState& state, const SwarmConfig& cfg, const Objective& obj,
                          double kappa) {
    const std::size_t n = state.size();
    const double h = cfg.h;
    const double eps = cfg.epsilon;

    const MassUpdate mu = update_masses(state, cfg);

    StepOutcome out;
    out.lambda = mu.lambda;
    out.energy_before.resize(n);
    out.energy_after.resize(n);
    out.mass_before.resize(n);
    out.dv_sq.resize(n);
    out.v_after_sq.resize(n);

    Vec g;
    for (std::size_t i = 0; i < n; ++i) {
        AgentState& a = state.agents[i];
        const double wi = state.weights[i];
        const double me = a.m + eps;

        out.mass_before[i] = a.m;
        out.energy_before[i] = compute_energy(a, wi, eps, a.f_cached);

        obj.grad_into(a.x, g);
        const double bracket =
            1.0 + h * cfg.R + (mu.new_masses[i] - a.m) / (2.0 * me) + h * h * wi * kappa / me;
        // For masses in [0,1] and h <= 1 the mass term is >= -1/2, so the
        // bracket stays >= 1/2 + hR; anything else is a contract violation.
        if (!(bracket > 0.0))
            throw std::runtime_error("inertial step: singular velocity update (bracket <= 0)");

        double dv2 = 0.0, va2 = 0.0;
        const double force = h * wi / me;
        for (std::size_t k = 0; k < a.x.size(); ++k) {
            const double vn = (a.v[k] - force * g[k]) / bracket;
            const double dv = vn - a.v[k];
            dv2 += dv * dv;
            va2 += vn * vn;
            a.v[k] = vn;
            a.x[k] += h * vn;
        }
        a.m = mu.new_masses[i];
        a.f_cached = obj.eval(a.x);

        out.dv_sq[i] = dv2;
        out.v_after_sq[i] = va2;
        out.energy_after[i] = compute_energy(a, wi, eps, a.f_cached);
    }
    state.iteration += 1;
    return out;
}

}  // namespace

StepOutcome step_imex(SwarmState& state, const SwarmConfig& cfg, const Objective& obj) {
    return inertial_step(state, cfg, obj, 0.0);
}

StepOutcome step_simex(SwarmState& state, const SwarmConfig& cfg, const Objective& obj) {
    return inertial_step(state, cfg, obj, cfg.kappa);
}

double acceptance_probability(double mass, double beta) {
    return 0.5 - 0.5 * std::tanh(1000.0 * (mass - beta));
}

void stochastic_accept(const std::vector<AgentState>& before, SwarmState& state,
                       StepOutcome& outcome, const SwarmConfig& cfg) {
    if (before.size() != state.size())
        throw std::invalid_argument("stochastic_accept: mismatched swarm sizes");
    const double beta =
        cfg.beta > 0.0 ? cfg.beta : 1.0 / static_cast<double>(state.size());
    outcome.accepted.assign(state.size(), 1);
    for (std::size_t i = 0; i < state.size(); ++i) {
        AgentState& a = state.agents[i];
        if (a.f_cached < before[i].f_cached) continue;  // downhill, always keep
        const double pa = acceptance_probability(a.m, beta);
        if (state.rng.uniform01() < pa) continue;
        // reject: revert position only, keep proposed velocity and mass
        a.x = before[i].x;
        a.f_cached = before[i].f_cached;
        outcome.accepted[i] = 0;
        outcome.energy_after[i] =
            compute_energy(a, state.weights[i], cfg.epsilon, a.f_cached);
    }
}

StepOutcome step_rsbi_simex(SwarmState& state, const SwarmConfig& cfg, const Objective& obj) {
    const std::vector<AgentState> before = state.agents;
    StepOutcome out = step_simex(state, cfg, obj);
    stochastic_accept(before, state, out, cfg);
    return out;
}

StepOutcome step_sbgd(SwarmState& state, const SwarmConfig& cfg, const Objective& obj,
                      double lambda_armijo, double q) {
    const std::size_t n = state.size();
    const double eps = cfg.epsilon;

    StepOutcome out;
    out.energy_before.resize(n);
    out.energy_after.resize(n);
    out.mass_before.resize(n);
    out.dv_sq.resize(n);
    out.v_after_sq.resize(n);

    const Vec f = state.f_values();
    const std::size_t best = argmin_index(f);
    const std::vector<double> eta = compute_eta_unregularized(f);

    // Non-best masses decay by explicit Euler; the best takes the remainder,
    // so the total stays at one.
    Vec mn(n);
    double others = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == best) continue;
        mn[i] = (1.0 - cfg.h * std::pow(eta[i], cfg.p)) * state.agents[i].m;
        others += mn[i];
    }
    mn[best] = 1.0 - others;

    double mmax = 0.0;
    for (double m : mn) mmax = std::max(mmax, m);

    Vec g;
    Vec xc;
    for (std::size_t i = 0; i < n; ++i) {
        AgentState& a = state.agents[i];
        const double wi = state.weights[i];
        out.mass_before[i] = a.m;
        out.energy_before[i] = compute_energy(a, wi, eps, a.f_cached);

        obj.grad_into(a.x, g);
        const double gn2 = norm2_sq(g);
        const double mt = mmax > 0.0 ? mn[i] / mmax : 1.0;
        const double slope = lambda_armijo * std::pow(mt, q);

        double dv2 = 0.0;
        for (double vk : a.v) dv2 += vk * vk;  // v is zeroed below
        out.dv_sq[i] = dv2;
        out.v_after_sq[i] = 0.0;
        std::fill(a.v.begin(), a.v.end(), 0.0);

        if (gn2 > 0.0) {
            double hs = cfg.sbgd_h_max;
            double fc = 0.0;
            bool ok = false;
            xc.resize(a.x.size());
            while (hs >= 1e-16) {
                for (std::size_t k = 0; k < a.x.size(); ++k) xc[k] = a.x[k] - hs * g[k];
                fc = obj.eval(xc);
                if (fc <= a.f_cached - slope * hs * gn2) {
                    ok = true;
                    break;
                }
                hs *= 0.5;
            }
            if (ok) {
                a.x = xc;
                a.f_cached = fc;
            } else {
                out.frozen.push_back(static_cast<int>(i));
            }
        }
        a.m = mn[i];
        out.energy_after[i] = compute_energy(a, wi, eps, a.f_cached);
    }
    state.iteration += 1;
    return out;
}

StepOutcome advance(SwarmState& state, const SwarmConfig& cfg, const Objective& obj,
                    SchemeKind kind) {
    switch (kind) {
        case SchemeKind::sbi_imex: return step_imex(state, cfg, obj);
        case SchemeKind::sbi_simex: return step_simex(state, cfg, obj);
        case SchemeKind::rsbi_simex: return step_rsbi_simex(state, cfg, obj);
        case SchemeKind::sbgd: return step_sbgd(state, cfg, obj, cfg.sbgd_lambda, cfg.sbgd_q);
    }
    throw std::invalid_argument("advance: unknown scheme");
}

}  // namespace sbi
