#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "sbi/swarm.hpp"

using namespace sbi;

namespace {

SwarmState state_with(const std::vector<double>& masses, const std::vector<double>& f,
                      const SwarmConfig& cfg) {
    std::vector<AgentState> agents(masses.size());
    for (std::size_t i = 0; i < masses.size(); ++i) {
        agents[i].x = {0.0};
        agents[i].v = {0.0};
        agents[i].m = masses[i];
        agents[i].f_cached = f[i];
    }
    return make_swarm(std::move(agents), cfg, 1);
}

}  // namespace

TEST_CASE("compute_eta") {
    SUBCASE("two agents, small epsilon") {
        const auto eta = compute_eta({1.0, 2.0}, 1e-8);
        CHECK(eta[0] == doctest::Approx(1e-8).epsilon(1e-6));
        CHECK(eta[1] == 1.0);
    }
    SUBCASE("all equal values give eta = 1") {
        for (double c : {-3.0, 0.0, 42.0}) {
            const auto eta = compute_eta({c, c, c}, 1e-8);
            for (double e : eta) CHECK(e == 1.0);
        }
    }
    SUBCASE("epsilon -> 0 limit") {
        const auto eta = compute_eta({3.0, 1.0, 5.0}, 1e-12);
        CHECK(eta[0] == doctest::Approx(0.5).epsilon(1e-10));
        CHECK(eta[1] == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(eta[2] == 1.0);
    }
    SUBCASE("range property: 0 < eta <= 1, worst exactly 1") {
        Rng rng(3);
        for (int t = 0; t < 200; ++t) {
            const int n = 1 + static_cast<int>(rng.uniform01() * 20);
            std::vector<double> f(static_cast<std::size_t>(n));
            for (double& v : f) v = rng.uniform(-100.0, 100.0);
            const auto eta = compute_eta(f, 1e-8);
            for (double e : eta) {
                CHECK(e > 0.0);
                CHECK(e <= 1.0);
            }
            CHECK(eta[argmax_index(f)] == 1.0);
        }
    }
    SUBCASE("unregularized variant (baseline form)") {
        const auto eta = compute_eta_unregularized({1.0, 2.0});
        CHECK(eta[0] == 0.0);
        CHECK(eta[1] == 1.0);
        const auto flat = compute_eta_unregularized({4.0, 4.0});
        CHECK(flat[0] == 1.0);
        CHECK(flat[1] == 1.0);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(compute_eta({}, 1e-8), std::invalid_argument);
        CHECK_THROWS_AS(compute_eta({1.0}, 0.0), std::invalid_argument);
    }
}

TEST_CASE("select_alpha") {
    CHECK(select_alpha({3.0, 1.0, 5.0}) == std::vector<double>{0.0, 1.0, 0.0});
    CHECK(select_alpha({7.0}) == std::vector<double>{1.0});
    // ties break to the lowest index
    CHECK(select_alpha({2.0, 2.0}) == std::vector<double>{1.0, 0.0});
    double sum = 0.0;
    for (double a : select_alpha({5.0, -1.0, 0.0, -1.0})) sum += a;
    CHECK(sum == 1.0);
}

TEST_CASE("update_masses") {
    SwarmConfig cfg;
    cfg.epsilon = 1e-12;
    cfg.p = 1.0;
    cfg.h = 0.5;

    SUBCASE("conserved two-agent example") {
        cfg.conserve_mass = true;
        const auto mu = update_masses(state_with({0.5, 0.5}, {1.0, 2.0}, cfg), cfg);
        CHECK(mu.new_masses[0] == doctest::Approx(0.75).epsilon(1e-9));
        CHECK(mu.new_masses[1] == doctest::Approx(0.25).epsilon(1e-9));
        CHECK(mu.lambda == doctest::Approx(0.5).epsilon(1e-9));
    }
    SUBCASE("zero step leaves masses unchanged") {
        cfg.h = 0.0;
        const auto st = state_with({0.3, 0.2, 0.5}, {3.0, 1.0, 2.0}, cfg);
        const auto mu = update_masses(st, cfg);
        CHECK(mu.new_masses == Vec{0.3, 0.2, 0.5});
        // lambda is still the mass-weighted phi sum
        double expect = 0.0;
        const auto eta = compute_eta({3.0, 1.0, 2.0}, cfg.epsilon);
        const Vec m{0.3, 0.2, 0.5};
        for (std::size_t i = 0; i < 3; ++i) expect += eta[i] * m[i];
        CHECK(mu.lambda == doctest::Approx(expect).epsilon(1e-12));
    }
    SUBCASE("unconstrained two-agent example") {
        cfg.conserve_mass = false;
        const auto mu = update_masses(state_with({0.5, 0.5}, {1.0, 2.0}, cfg), cfg);
        CHECK(mu.new_masses[0] == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(mu.new_masses[1] == doctest::Approx(0.25).epsilon(1e-9));
    }
    SUBCASE("h > 1 with conservation is rejected") {
        cfg.h = 1.5;
        cfg.conserve_mass = true;
        CHECK_THROWS_AS(update_masses(state_with({1.0}, {0.0}, cfg), cfg),
                        std::invalid_argument);
        cfg.conserve_mass = false;  // unconstrained variant has no such guard
        CHECK_NOTHROW(update_masses(state_with({1.0}, {0.0}, cfg), cfg));
    }
}

TEST_CASE("mass properties over long runs") {
    Rng rng(77);
    SUBCASE("conserved: bounds and total preserved") {
        for (int s = 0; s < 30; ++s) {
            SwarmConfig cfg;
            cfg.h = rng.uniform(0.01, 1.0);
            const int n = 2 + static_cast<int>(rng.uniform01() * 48);
            std::vector<double> m(static_cast<std::size_t>(n)), f(m.size());
            double tot = 0.0;
            for (double& v : m) {
                v = rng.uniform01() + 1e-3;
                tot += v;
            }
            for (double& v : m) v /= tot;
            for (double& v : f) v = rng.uniform(-10.0, 10.0);
            SwarmState st = state_with(m, f, cfg);
            for (int it = 0; it < 1000; ++it) {
                for (auto& a : st.agents) a.f_cached = rng.uniform(-10.0, 10.0);
                const auto mu = update_masses(st, cfg);
                double sum = 0.0;
                for (std::size_t i = 0; i < st.size(); ++i) {
                    REQUIRE(mu.new_masses[i] >= 0.0);
                    REQUIRE(mu.new_masses[i] <= 1.0);
                    sum += mu.new_masses[i];
                    st.agents[i].m = mu.new_masses[i];
                }
                REQUIRE(std::abs(sum - 1.0) < 1e-12);
                REQUIRE(mu.lambda >= 0.0);
            }
        }
    }
    SUBCASE("conserved: best gains, others lose (fixed distinct f)") {
        SwarmConfig cfg;
        cfg.h = 0.7;
        SwarmState st = state_with({0.25, 0.25, 0.25, 0.25}, {4.0, 1.0, 3.0, 2.0}, cfg);
        const std::size_t best = 1;
        for (int it = 0; it < 50; ++it) {
            const auto mu = update_masses(st, cfg);
            for (std::size_t i = 0; i < st.size(); ++i) {
                if (i == best)
                    CHECK(mu.new_masses[i] >= st.agents[i].m);
                else
                    CHECK(mu.new_masses[i] <= st.agents[i].m);
                st.agents[i].m = mu.new_masses[i];
            }
        }
    }
    SUBCASE("unconstrained: non-increasing and nonnegative") {
        for (int s = 0; s < 20; ++s) {
            SwarmConfig cfg;
            cfg.conserve_mass = false;
            cfg.h = rng.uniform(0.01, 1.0);
            const int n = 2 + static_cast<int>(rng.uniform01() * 20);
            std::vector<double> m(static_cast<std::size_t>(n), 1.0 / n), f(m.size());
            for (double& v : f) v = rng.uniform(-10.0, 10.0);
            SwarmState st = state_with(m, f, cfg);
            for (int it = 0; it < 200; ++it) {
                for (auto& a : st.agents) a.f_cached = rng.uniform(-10.0, 10.0);
                const auto mu = update_masses(st, cfg);
                for (std::size_t i = 0; i < st.size(); ++i) {
                    REQUIRE(mu.new_masses[i] >= 0.0);
                    REQUIRE(mu.new_masses[i] <= st.agents[i].m);
                    st.agents[i].m = mu.new_masses[i];
                }
            }
        }
    }
}

TEST_CASE("swarm construction") {
    SwarmConfig cfg;
    CHECK_THROWS_AS(make_swarm({}, cfg, 1), std::invalid_argument);

    cfg.w = {1.0, 2.0, 3.0};
    std::vector<AgentState> agents(2);
    CHECK_THROWS_AS(make_swarm(agents, cfg, 1), std::invalid_argument);

    cfg.w = {0.5};
    std::vector<AgentState> ok(3);
    for (auto& a : ok) {
        a.x = {0.0};
        a.v = {0.0};
        a.m = 1.0 / 3.0;
    }
    const SwarmState st = make_swarm(ok, cfg, 1);
    CHECK(st.weights == Vec{0.5, 0.5, 0.5});
    CHECK(st.total_mass() == doctest::Approx(1.0));
}

TEST_CASE("config validation") {
    SwarmConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    SwarmConfig bad = cfg;
    bad.epsilon = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.w = {1e-4, -1.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.R = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.underweight_action = UnderweightAction::relocate;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
