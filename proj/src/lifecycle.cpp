#include "sbi/lifecycle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sbi {

const char* to_string(LifecycleEvent::Kind kind) {
    switch (kind) {
        case LifecycleEvent::Kind::merge: return "merge";
        case LifecycleEvent::Kind::remove: return "remove";
        case LifecycleEvent::Kind::fallback_entered: return "fallback_entered";
        case LifecycleEvent::Kind::converged: return "converged";
        case LifecycleEvent::Kind::max_iter: return "max_iter";
    }
    return "?";
}

void remove_underweight(SwarmState& state, const SwarmConfig& cfg, const Objective& obj,
                        std::vector<LifecycleEvent>& events) {
    const std::size_t n = state.size();
    if (n < 2) return;
    const double threshold = cfg.tol_m / static_cast<double>(n);
    const std::size_t best = state.best_index();

    if (cfg.underweight_action == UnderweightAction::relocate) {
        const Box& pb = cfg.relocate_position_box.value();
        const Box& vb = cfg.relocate_velocity_box.value();
        for (std::size_t i = 0; i < n; ++i) {
            if (i == best || state.agents[i].m >= threshold) continue;
            AgentState& a = state.agents[i];
            for (std::size_t k = 0; k < a.x.size(); ++k) {
                a.x[k] = state.rng.uniform(pb.lower[k], pb.upper[k]);
                a.v[k] = state.rng.uniform(vb.lower[k], vb.upper[k]);
            }
            a.f_cached = obj.eval(a.x);
            events.push_back({LifecycleEvent::Kind::remove, state.iteration,
                              {static_cast<int>(i)}, a.m});
        }
        return;
    }

    std::vector<std::size_t> doomed;
    for (std::size_t i = 0; i < n; ++i)
        if (i != best && state.agents[i].m < threshold) doomed.push_back(i);
    if (doomed.empty()) return;

    double removed_mass = 0.0;
    for (std::size_t i : doomed) {
        removed_mass += state.agents[i].m;
        events.push_back({LifecycleEvent::Kind::remove, state.iteration,
                          {static_cast<int>(i)}, state.agents[i].m});
    }
    std::vector<AgentState> kept;
    Vec kept_w;
    kept.reserve(n - doomed.size());
    kept_w.reserve(n - doomed.size());
    std::size_t next_doomed = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (next_doomed < doomed.size() && doomed[next_doomed] == i) {
            ++next_doomed;
            continue;
        }
        kept.push_back(std::move(state.agents[i]));
        kept_w.push_back(state.weights[i]);
    }
    state.agents = std::move(kept);
    state.weights = std::move(kept_w);
    if (cfg.conserve_mass && removed_mass > 0.0)
        state.agents[state.best_index()].m += removed_mass;
}

void merge_agents(SwarmState& state, const SwarmConfig& cfg, const Objective& obj,
                  std::vector<LifecycleEvent>& events) {
    bool changed = true;
    while (changed) {
        changed = false;
        const std::size_t n = state.size();
        for (std::size_t i = 0; i + 1 < n && !changed; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double dist = dist2(state.agents[i].x, state.agents[j].x);
                if (dist > cfg.tol_merge) continue;
                AgentState& a = state.agents[i];
                const AgentState& b = state.agents[j];
                for (std::size_t k = 0; k < a.x.size(); ++k) {
                    a.x[k] = 0.5 * (a.x[k] + b.x[k]);
                    a.v[k] = 0.5 * (a.v[k] + b.v[k]);
                }
                a.m += b.m;
                a.f_cached = obj.eval(a.x);
                events.push_back({LifecycleEvent::Kind::merge, state.iteration,
                                  {static_cast<int>(i), static_cast<int>(j)}, dist});
                state.agents.erase(state.agents.begin() + static_cast<std::ptrdiff_t>(j));
                state.weights.erase(state.weights.begin() + static_cast<std::ptrdiff_t>(j));
                changed = true;
                break;
            }
        }
    }
}

DescentResult single_agent_descent(AgentState agent, const Objective& obj, double h,
                                   double tol_res, int max_inner) {
    if (!(h > 0.0) || !(tol_res > 0.0))
        throw std::invalid_argument("single_agent_descent: h and tol_res must be > 0");

    DescentResult res;
    Vec g;
    Vec best_x = agent.x;
    double best_f = obj.eval(agent.x);
    double cur_f = best_f;

    for (int it = 0; it < max_inner; ++it) {
        obj.grad_into(agent.x, g);
        double disp2 = 0.0;
        for (std::size_t k = 0; k < agent.x.size(); ++k) {
            const double step = h * g[k];
            agent.x[k] -= step;
            disp2 += step * step;
        }
        res.iterations = it + 1;
        if (!all_finite(agent.x)) break;  // diverged; fall back to best-so-far
        cur_f = obj.eval(agent.x);
        if (std::isfinite(cur_f) && cur_f < best_f) {
            best_f = cur_f;
            best_x = agent.x;
        }
        if (std::sqrt(disp2) < tol_res) {
            res.converged = true;
            break;
        }
    }

    if (!res.converged) {
        agent.x = best_x;
        cur_f = best_f;
    }
    agent.f_cached = cur_f;
    std::fill(agent.v.begin(), agent.v.end(), 0.0);
    agent.m = 1.0;
    res.agent = std::move(agent);
    return res;
}

namespace {

bool state_finite(const SwarmState& state) {
    for (const auto& a : state.agents)
        if (!std::isfinite(a.f_cached) || !all_finite(a.x)) return false;
    return true;
}

TrialResult finish(const SwarmState& state, TrialResult res) {
    const std::size_t best = state.best_index();
    res.final_x = state.agents[best].x;
    res.final_f = state.agents[best].f_cached;
    return res;
}

}  // namespace

TrialResult run(SwarmState state, const SwarmConfig& cfg, const Objective& obj,
                SchemeKind scheme, const RunHooks& hooks) {
    cfg.validate();
    TrialResult res;

    // Stable step for the single-agent polish: the swarm h capped at 1/L-hat.
    const double lhat = cfg.lipschitz.value;
    const double h_fallback = lhat > 0.0 ? std::min(cfg.h, 1.0 / lhat) : cfg.h;

    if (hooks.on_initial) hooks.on_initial(state);

    for (int k = 1; k <= cfg.max_iter; ++k) {
        if (state.size() == 1) {
            res.entered_fallback = true;
            res.events.push_back(
                {LifecycleEvent::Kind::fallback_entered, state.iteration, {0}, 0.0});
            DescentResult dr = single_agent_descent(state.agents[0], obj, h_fallback,
                                                    cfg.tol_res, cfg.fallback_max_inner);
            res.fallback_converged = dr.converged;
            res.events.push_back({dr.converged ? LifecycleEvent::Kind::converged
                                               : LifecycleEvent::Kind::max_iter,
                                  state.iteration,
                                  {0},
                                  static_cast<double>(dr.iterations)});
            state.agents[0] = std::move(dr.agent);
            res.iterations = k;
            return finish(state, std::move(res));
        }

        const StepOutcome outcome = advance(state, cfg, obj, scheme);
        res.iterations = k;

        if (!state_finite(state)) {
            res.diverged = true;
            // report the best still-finite agent
            std::size_t best = 0;
            double bf = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < state.size(); ++i) {
                const double f = state.agents[i].f_cached;
                if (std::isfinite(f) && all_finite(state.agents[i].x) && f < bf) {
                    bf = f;
                    best = i;
                }
            }
            res.final_x = state.agents[best].x;
            res.final_f = state.agents[best].f_cached;
            if (hooks.on_step) hooks.on_step(state, outcome, false);
            return res;
        }

        bool lifecycle_happened = false;
        if (cfg.lifecycle_enabled) {
            const std::size_t before_events = res.events.size();
            remove_underweight(state, cfg, obj, res.events);
            merge_agents(state, cfg, obj, res.events);
            lifecycle_happened = res.events.size() != before_events;
        }
        if (hooks.on_step) hooks.on_step(state, outcome, lifecycle_happened);
    }

    res.events.push_back({LifecycleEvent::Kind::max_iter, state.iteration, {}, 0.0});
    return finish(state, std::move(res));
}

}  // namespace sbi
