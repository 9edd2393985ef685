#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "sbi/diagnostics.hpp"
#include "sbi/schemes.hpp"

using namespace sbi;

namespace {

Objective linear_1d() {  // grad F = 1 everywhere
    return Objective("linear", 1, [](const Vec& x) { return x[0]; },
                     [](const Vec&, Vec& g) { g[0] = 1.0; }, Box{Vec{-1e9}, Vec{1e9}});
}

Objective constant_1d() {
    return Objective("const", 1, [](const Vec&) { return 2.0; },
                     [](const Vec&, Vec& g) { g[0] = 0.0; }, Box{Vec{-1e9}, Vec{1e9}});
}

Objective quadratic(int dim, double curvature) {
    return Objective("quad", dim,
                     [curvature](const Vec& x) { return 0.5 * curvature * norm2_sq(x); },
                     [curvature](const Vec& x, Vec& g) {
                         for (std::size_t i = 0; i < x.size(); ++i) g[i] = curvature * x[i];
                     },
                     Box{Vec(static_cast<std::size_t>(dim), -50.0),
                         Vec(static_cast<std::size_t>(dim), 50.0)},
                     KnownMinimum{Vec(static_cast<std::size_t>(dim), 0.0), 0.0});
}

SwarmState single_agent(double x, double v, double m, const SwarmConfig& cfg,
                        const Objective& obj) {
    AgentState a;
    a.x = {x};
    a.v = {v};
    a.m = m;
    a.f_cached = obj.eval(a.x);
    return make_swarm({a}, cfg, 5);
}

}  // namespace

TEST_CASE("step_imex scalar examples") {
    // a single conserved agent has eta = 1, lambda = m, so its mass is fixed
    SwarmConfig cfg;
    cfg.epsilon = 1e-12;
    cfg.R = 1.0;
    cfg.h = 0.5;
    cfg.w = {1.0};

    SUBCASE("velocity exactly cancelled by the force") {
        const Objective obj = linear_1d();
        SwarmState st = single_agent(3.0, 1.0, 0.5, cfg, obj);
        const StepOutcome out = step_imex(st, cfg, obj);
        CHECK(st.agents[0].m == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(std::abs(st.agents[0].v[0]) < 1e-10);
        CHECK(st.agents[0].x[0] == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(out.lambda == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("force-free decay v' = v / (1 + hR)") {
        const Objective obj = constant_1d();
        SwarmState st = single_agent(0.0, 2.0, 0.5, cfg, obj);
        step_imex(st, cfg, obj);
        CHECK(st.agents[0].v[0] == doctest::Approx(2.0 / 1.5).epsilon(1e-14));
        CHECK(st.agents[0].x[0] == doctest::Approx(0.5 * 2.0 / 1.5).epsilon(1e-14));
    }
    SUBCASE("zero step is the identity") {
        cfg.h = 0.0;
        const Objective obj = linear_1d();
        SwarmState st = single_agent(3.0, 1.0, 0.5, cfg, obj);
        step_imex(st, cfg, obj);
        CHECK(st.agents[0].x[0] == 3.0);
        CHECK(st.agents[0].v[0] == 1.0);
        CHECK(st.agents[0].m == 0.5);
        CHECK(st.iteration == 1);
    }
}

TEST_CASE("step_simex scalar examples") {
    SwarmConfig cfg;
    cfg.epsilon = 1e-12;
    cfg.R = 1.0;
    cfg.h = 0.5;
    cfg.w = {1.0};
    cfg.kappa = 2.0;
    const Objective obj = linear_1d();

    SUBCASE("zero numerator") {
        SwarmState st = single_agent(3.0, 1.0, 0.5, cfg, obj);
        step_simex(st, cfg, obj);
        CHECK(std::abs(st.agents[0].v[0]) < 1e-10);
        CHECK(st.agents[0].x[0] == doctest::Approx(3.0).epsilon(1e-12));
    }
    SUBCASE("bracket 2.5 example") {
        SwarmState st = single_agent(3.0, 2.0, 0.5, cfg, obj);
        step_simex(st, cfg, obj);
        // (2 - 1) / (1 + 0.5 + 0.25*1*2/0.5) = 0.4
        CHECK(st.agents[0].v[0] == doctest::Approx(0.4).epsilon(1e-10));
        CHECK(st.agents[0].x[0] == doctest::Approx(3.2).epsilon(1e-10));
    }
}

TEST_CASE("kappa = 0 stabilized step is bit-identical to the IMEX step") {
    const Objective obj = make_objective("rastrigin", 3);
    SwarmConfig cfg;
    cfg.kappa = 0.0;
    cfg.epsilon = 1e-3;  // keeps lightened agents bounded without lifecycle
    Rng rng(11);
    SwarmState s1 = oracle::random_swarm(rng, cfg, 8, 3, -3.0, 3.0, -2.0, 2.0, &obj);
    SwarmState s2 = s1;
    for (int it = 0; it < 100; ++it) {
        step_imex(s1, cfg, obj);
        step_simex(s2, cfg, obj);
    }
    for (std::size_t i = 0; i < s1.size(); ++i) {
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(std::abs(s1.agents[i].x[k] - s2.agents[i].x[k]) <= 1e-14);
            CHECK(std::abs(s1.agents[i].v[k] - s2.agents[i].v[k]) <= 1e-14);
        }
        CHECK(s1.agents[i].m == s2.agents[i].m);
    }
}

TEST_CASE("closed-form stabilized step agrees with the fixed-point oracle") {
    Rng rng(123);
    int compared = 0;
    for (int t = 0; t < 200; ++t) {
        SwarmConfig cfg;
        cfg.w = {rng.uniform(1e-4, 0.01)};
        cfg.kappa = rng.uniform(0.0, 10.0);
        cfg.h = rng.uniform(0.1, 0.5);
        cfg.R = rng.uniform(0.5, 2.0);
        cfg.conserve_mass = rng.uniform01() < 0.5;
        const int d = 1 + static_cast<int>(rng.uniform01() * 3);
        const int n = 2 + static_cast<int>(rng.uniform01() * 5);
        const Objective obj = make_objective("rastrigin", d);

        SwarmState st = oracle::random_swarm(rng, cfg, n, d, -3.0, 3.0, -2.0, 2.0, &obj);
        // keep masses away from zero so the oracle's iteration contracts
        for (auto& a : st.agents) a.m = std::max(a.m, 0.05);
        double tot = 0.0;
        for (auto& a : st.agents) tot += a.m;
        for (auto& a : st.agents) a.m /= tot;

        const oracle::FixedPointState ref =
            oracle::solve_simex_fixed_point(st, cfg, obj, cfg.kappa);
        SwarmState advanced = st;
        step_simex(advanced, cfg, obj);
        for (std::size_t i = 0; i < st.size(); ++i) {
            CHECK(std::abs(advanced.agents[i].m - ref.m[i]) < 1e-10);
            for (std::size_t k = 0; k < static_cast<std::size_t>(d); ++k) {
                CHECK(std::abs(advanced.agents[i].x[k] - ref.x[i][k]) < 1e-10);
                CHECK(std::abs(advanced.agents[i].v[k] - ref.v[i][k]) < 1e-10);
                ++compared;
            }
        }
    }
    CHECK(compared > 1000);

    SUBCASE("zero step is the oracle's fixed point immediately") {
        SwarmConfig cfg;
        cfg.h = 0.0;
        const Objective obj = make_objective("rastrigin", 2);
        Rng rng(2);
        SwarmState st = oracle::random_swarm(rng, cfg, 3, 2, -3.0, 3.0, -1.0, 1.0, &obj);
        const oracle::FixedPointState ref =
            oracle::solve_simex_fixed_point(st, cfg, obj, cfg.kappa);
        for (std::size_t i = 0; i < st.size(); ++i) {
            CHECK(ref.x[i] == st.agents[i].x);
            CHECK(ref.v[i] == st.agents[i].v);
            CHECK(ref.m[i] == st.agents[i].m);
        }
    }
}

TEST_CASE("acceptance probability") {
    CHECK(acceptance_probability(0.3, 0.3) == 0.5);
    // 1/2 - 1/2 tanh(10) = 1 / (e^20 + 1)
    const double expect = 1.0 / (std::exp(20.0) + 1.0);
    CHECK(acceptance_probability(0.31, 0.3) == doctest::Approx(expect).epsilon(1e-9));
    CHECK(acceptance_probability(0.29, 0.3) == doctest::Approx(1.0 - expect).epsilon(1e-9));
}

TEST_CASE("stochastic acceptance semantics") {
    SwarmConfig cfg;
    cfg.beta = 0.5;
    const Objective obj = make_objective("exp_sin_1d", 1);

    SUBCASE("downhill proposals are always kept") {
        Rng rng(5);
        for (int t = 0; t < 50; ++t) {
            SwarmState st = oracle::random_swarm(rng, cfg, 4, 1, -3.0, -1.0, 1.0, 5.0, &obj);
            std::vector<AgentState> before = st.agents;
            StepOutcome out;
            out.energy_after.assign(4, 0.0);
            // force every cached value below the old one
            for (std::size_t i = 0; i < st.size(); ++i)
                st.agents[i].f_cached = before[i].f_cached - 1.0;
            stochastic_accept(before, st, out, cfg);
            for (std::size_t i = 0; i < st.size(); ++i) CHECK(out.accepted[i] == 1);
        }
    }
    SUBCASE("uphill move of a heavy agent reverts position, keeps v and m") {
        AgentState a;
        a.x = {1.5354988301250133};  // global dip
        a.v = {0.7};
        a.m = 0.9;  // heavy vs beta = 0.5: acceptance probability ~ 0
        a.f_cached = obj.eval(a.x);
        SwarmState st = make_swarm({a}, cfg, 7);
        std::vector<AgentState> before = st.agents;
        // fake a proposed uphill move into the second-best dip
        st.agents[0].x = {2.3399708838998467};
        st.agents[0].f_cached = obj.eval(st.agents[0].x);
        REQUIRE(st.agents[0].f_cached > before[0].f_cached);
        st.agents[0].v = {0.25};
        st.agents[0].m = 0.95;
        StepOutcome out;
        out.energy_after.assign(1, -1.0);
        stochastic_accept(before, st, out, cfg);
        CHECK(out.accepted[0] == 0);
        CHECK(st.agents[0].x[0] == 1.5354988301250133);
        CHECK(st.agents[0].f_cached == before[0].f_cached);
        CHECK(st.agents[0].v[0] == 0.25);
        CHECK(st.agents[0].m == 0.95);
        CHECK(out.energy_after[0] ==
              doctest::Approx(compute_energy(st.agents[0], st.weights[0], cfg.epsilon,
                                             st.agents[0].f_cached)));
    }
    SUBCASE("rsbi step is deterministic given the seed") {
        SwarmConfig rc;
        rc.beta = 0.2;
        Rng rng(9);
        SwarmState a = oracle::random_swarm(rng, rc, 6, 1, -3.0, -1.0, 1.0, 5.0, &obj);
        SwarmState b = a;
        for (int it = 0; it < 40; ++it) {
            step_rsbi_simex(a, rc, obj);
            step_rsbi_simex(b, rc, obj);
        }
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a.agents[i].x[0] == b.agents[i].x[0]);
            CHECK(a.agents[i].v[0] == b.agents[i].v[0]);
        }
    }
}

TEST_CASE("step_sbgd") {
    SwarmConfig cfg;
    cfg.h = 0.5;
    cfg.sbgd_h_max = 1.0;

    SUBCASE("stationary agent stays put") {
        const Objective obj = quadratic(1, 1.0);
        SwarmState st = single_agent(0.0, 0.3, 1.0, cfg, obj);
        step_sbgd(st, cfg, obj, 0.25, 1.0);
        CHECK(st.agents[0].x[0] == 0.0);
        CHECK(st.agents[0].v[0] == 0.0);  // velocities zeroed
        CHECK(st.agents[0].m == 1.0);
    }
    SUBCASE("unit quadratic accepts the full step") {
        const Objective obj = quadratic(1, 1.0);
        SwarmState st = single_agent(1.0, 0.0, 1.0, cfg, obj);
        step_sbgd(st, cfg, obj, 0.25, 1.0);
        // F(0) = 0 <= 0.5 - 0.25 at h = 1
        CHECK(st.agents[0].x[0] == 0.0);
        CHECK(st.agents[0].f_cached == 0.0);
    }
    SUBCASE("mass redistribution: best takes the remainder") {
        const Objective obj = linear_1d();
        std::vector<AgentState> agents(2);
        agents[0] = {{1.0}, {0.0}, 0.5, 1.0};
        agents[1] = {{2.0}, {0.0}, 0.5, 2.0};
        SwarmState st = make_swarm(agents, cfg, 3);
        st.agents[0].f_cached = 1.0;
        st.agents[1].f_cached = 2.0;
        step_sbgd(st, cfg, obj, 0.2, 1.0);
        CHECK(st.agents[1].m == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(st.agents[0].m == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(st.agents[0].m + st.agents[1].m == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("backtracking underflow freezes the agent and records it") {
        // deliberately inconsistent gradient: every candidate step goes uphill
        const Objective bad("bad", 1, [](const Vec& x) { return x[0]; },
                            [](const Vec&, Vec& g) { g[0] = -1.0; },
                            Box{Vec{-1e9}, Vec{1e9}});
        SwarmState st = single_agent(0.0, 0.0, 1.0, cfg, bad);
        const StepOutcome out = step_sbgd(st, cfg, bad, 0.2, 1.0);
        REQUIRE(out.frozen.size() == 1);
        CHECK(out.frozen[0] == 0);
        CHECK(st.agents[0].x[0] == 0.0);
    }
    SUBCASE("accepted steps satisfy the backtracking inequality") {
        const Objective obj = make_objective("styblinski_tang", 2);
        Rng rng(31);
        for (int t = 0; t < 30; ++t) {
            SwarmState st = oracle::random_swarm(rng, cfg, 5, 2, -4.0, 4.0, 0.0, 0.0, &obj);
            std::vector<AgentState> before = st.agents;
            const StepOutcome out = step_sbgd(st, cfg, obj, 0.2, 1.0);
            double mmax = 0.0;
            for (const auto& a : st.agents) mmax = std::max(mmax, a.m);
            for (std::size_t i = 0; i < st.size(); ++i) {
                const Vec g = obj.grad(before[i].x);
                const double gn = norm2(g);
                if (gn == 0.0) continue;
                const double hstep = dist2(st.agents[i].x, before[i].x) / gn;
                const double mt = st.agents[i].m / mmax;
                CHECK(obj.eval(st.agents[i].x) <=
                      before[i].f_cached - 0.2 * mt * hstep * gn * gn + 1e-12);
            }
            (void)out;
        }
    }
}

TEST_CASE("imex dissipation bound holds under the step-size condition") {
    // h = 0.9 min(2R / (w L), 1); full conditional-dissipation right-hand side. The
    // mass floor is kept at 0.25 so lightened agents stay in a regime where
    // the 1e-9 absolute slack is meaningful.
    Rng rng(2025);
    for (const bool use_rastrigin : {false, true}) {
        const Objective obj = use_rastrigin ? make_objective("rastrigin", 2) : quadratic(2, 1.0);
        const double L = use_rastrigin ? 2.0 + 40.0 * 9.869604401089358 : 1.0;
        for (int traj = 0; traj < 30; ++traj) {
            SwarmConfig cfg;
            cfg.epsilon = 0.25;
            cfg.R = rng.uniform(0.5, 2.0);
            cfg.w = {rng.uniform(0.25, 1.0)};
            cfg.lipschitz = user_lipschitz(L);
            cfg.h = 0.9 * std::min(2.0 * cfg.R / (cfg.w[0] * L), 1.0);
            SwarmState st = oracle::random_swarm(rng, cfg, 6, 2, -3.0, 3.0, -2.0, 2.0, &obj);
            for (int it = 0; it < 100; ++it) {
                const StepOutcome out = step_imex(st, cfg, obj);
                const auto viol =
                    check_dissipation(out, cfg, SchemeKind::sbi_imex, st.iteration);
                REQUIRE(viol.empty());
            }
        }
    }
}

TEST_CASE("simex dissipation is unconditional for kappa >= L") {
    Rng rng(17);
    for (const double h : {0.5, 1.0}) {
        for (const bool use_rastrigin : {false, true}) {
            const Objective obj =
                use_rastrigin ? make_objective("rastrigin", 2) : quadratic(2, 1.0);
            const double L = use_rastrigin ? 2.0 + 40.0 * 9.869604401089358 : 1.0;
            for (int traj = 0; traj < 20; ++traj) {
                SwarmConfig cfg;
                cfg.R = rng.uniform(0.5, 2.0);
                cfg.w = {rng.uniform(0.25, 2.0)};
                cfg.h = h;
                cfg.kappa = 1.1 * L;
                cfg.lipschitz = user_lipschitz(L);
                SwarmState st =
                    oracle::random_swarm(rng, cfg, 6, 2, -3.0, 3.0, -2.0, 2.0, &obj);
                for (int it = 0; it < 100; ++it) {
                    const StepOutcome out = step_simex(st, cfg, obj);
                    const auto viol =
                        check_dissipation(out, cfg, SchemeKind::sbi_simex, st.iteration);
                    REQUIRE(viol.empty());
                }
            }
        }
    }
}

TEST_CASE("oversized imex step is caught by the dissipation check") {
    // h far above 2R/(wL): the scheme goes unstable and the check must flag it
    const Objective obj = quadratic(1, 400.0);
    SwarmConfig cfg;
    cfg.w = {1.0};
    cfg.h = 0.5;  // bound is 2/(1*400) = 0.005
    cfg.lipschitz = user_lipschitz(400.0);
    SwarmState st = single_agent(1.0, 0.0, 1.0, cfg, obj);
    bool violated = false;
    for (int it = 0; it < 50 && !violated; ++it) {
        const StepOutcome out = step_imex(st, cfg, obj);
        violated = !check_dissipation(out, cfg, SchemeKind::sbi_imex, st.iteration).empty();
    }
    CHECK(violated);
}

TEST_CASE("identical seeds give identical trajectories") {
    const Objective obj = make_objective("exp_sin_1d", 1);
    SwarmConfig cfg;
    for (const SchemeKind kind :
         {SchemeKind::sbi_imex, SchemeKind::sbi_simex, SchemeKind::rsbi_simex,
          SchemeKind::sbgd}) {
        Rng ra(55), rb(55);
        SwarmState a = oracle::random_swarm(ra, cfg, 5, 1, -3.0, -1.0, 1.0, 5.0, &obj);
        SwarmState b = oracle::random_swarm(rb, cfg, 5, 1, -3.0, -1.0, 1.0, 5.0, &obj);
        for (int it = 0; it < 30; ++it) {
            advance(a, cfg, obj, kind);
            advance(b, cfg, obj, kind);
        }
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a.agents[i].x[0] == b.agents[i].x[0]);
            CHECK(a.agents[i].m == b.agents[i].m);
        }
    }
}

TEST_CASE("scheme names round-trip") {
    for (const SchemeKind k : {SchemeKind::sbi_imex, SchemeKind::sbi_simex,
                               SchemeKind::rsbi_simex, SchemeKind::sbgd})
        CHECK(scheme_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(scheme_from_string("pso"), std::invalid_argument);
}
