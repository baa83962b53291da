#include <cmath>

#include "doctest.h"
#include "mfg/environments.hpp"
#include "mfg/propagation.hpp"
#include "test_helpers.hpp"

using namespace mfg;

TEST_CASE("two-node graph with a cross edge builds a valid game") {
    DirectedGraph g = DirectedGraph::make(2, {{0, 1}}, /*ensure_self_loops=*/true);
    CongestionRewardSpec rewards;  // no bonuses, zero-ish coupling apart from congestion
    GameSpec spec = build_graph_game(g, rewards, 3, {1.0, 0.0});
    CHECK(validate(spec).empty());
    CHECK(spec.n_actions() == 2);
    for (double p : spec.kernel.probs) CHECK((p == 0.0 || p == 1.0));
}

TEST_CASE("the default resource-allocation kernel is one-hot") {
    auto [spec, rho] = default_resource_allocation();
    CHECK(spec.n_states() == 5);
    CHECK(spec.n_actions() == 3);
    CHECK(validate(spec).empty());
    for (int s = 0; s < 5; ++s)
        for (int a = 0; a < 3; ++a) {
            int ones = 0;
            for (int sp = 0; sp < 5; ++sp) {
                double p = spec.kernel.at(s, a, sp);
                CHECK((p == 0.0 || p == 1.0));
                if (p == 1.0) ++ones;
            }
            CHECK(ones == 1);
        }
    CHECK(spec.states.label(2) == "3");
}

TEST_CASE("terminal reward at a crowded bonus node") {
    auto [spec, rho] = default_resource_allocation();
    DistributionFlow mu;
    for (int t = 0; t <= spec.horizon; ++t) {
        Vec delta(5, 0.0);
        delta[2] = 1.0;
        mu.mus.push_back(std::move(delta));
    }
    RewardTable table = induced_reward(spec, mu);
    CHECK(table.at(spec.horizon, 2, 0) == doctest::Approx(0.25));
}

TEST_CASE("padding requires a self-loop") {
    // node 0 has out-degree 1 < 2 and no self-loop
    DirectedGraph g = DirectedGraph::make(2, {{0, 1}, {1, 0}, {1, 1}}, /*ensure_self_loops=*/false);
    CongestionRewardSpec rewards;
    CHECK_THROWS_AS(build_graph_game(g, rewards, 2, {0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("bonus nodes must exist") {
    DirectedGraph g = DirectedGraph::make(2, {{0, 1}}, true);
    CongestionRewardSpec rewards;
    rewards.terminal_bonus = {{5, 1.0}};
    CHECK_THROWS_AS(build_graph_game(g, rewards, 2, {0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("graphs reject dangling nodes and bad edges") {
    CHECK_THROWS_AS(DirectedGraph::make(2, {{0, 3}}, true), std::invalid_argument);
    // node 1 has no outgoing edge at all
    CHECK_THROWS_AS(DirectedGraph::make(2, {{0, 1}}, false), std::invalid_argument);
}

TEST_CASE("reference policy is strictly positive with the advertised split") {
    auto [spec, rho] = default_resource_allocation();
    CHECK(validate_reference_policy(spec, rho).empty());
    for (double p : rho.probs) CHECK(p > 0.0);
    for (int t = 0; t <= spec.horizon; ++t) {
        // node 2 (index 1): actions are self, -> node 3, -> node 4
        CHECK(rho.at(t, 1, 1) == rho.at(t, 1, 2));
        CHECK(std::abs(rho.at(t, 1, 1) - 0.5) < 0.006);
        // node 4 (index 3): second action leads to node 5
        CHECK(std::abs(rho.at(t, 3, 1) - 0.01) < 0.002);
    }
}

TEST_CASE("the reference policy alone fills both bonus nodes about equally") {
    auto [spec, rho] = default_resource_allocation();
    DistributionFlow flow = propagate(spec, rho);
    double at3 = flow.at(spec.horizon)[2];
    double at4 = flow.at(spec.horizon)[3];
    CHECK(at3 > 0.3);
    CHECK(at4 > 0.3);
    CHECK(std::abs(at3 - at4) <= 0.05);
}

TEST_CASE("congestion coupling reduces to bonus minus occupancy") {
    auto [spec, rho] = default_resource_allocation();
    Rng rng(401);
    const int H = spec.horizon;
    for (int trial = 0; trial < 20; ++trial) {
        Vec mu = rng.simplex(5);
        for (int s = 0; s < 5; ++s) {
            double bonus = s == 2 ? 1.5 : (s == 3 ? 1.0 : 0.0);
            for (int a = 0; a < 3; ++a) {
                auto l_row = spec.reward.l_row(H, s, a);
                double x = 0.0;
                for (int sp = 0; sp < 5; ++sp) x += l_row[sp] * mu[static_cast<size_t>(sp)];
                CHECK(std::abs(x - (bonus - mu[static_cast<size_t>(s)])) <= 1e-12);
            }
        }
    }
}

TEST_CASE("running coupling is zero before the terminal step") {
    auto [spec, rho] = default_resource_allocation();
    for (int t = 0; t < spec.horizon; ++t)
        for (int s = 0; s < 5; ++s)
            for (int a = 0; a < 3; ++a)
                for (int sp = 0; sp < 5; ++sp) CHECK(spec.reward.l_at(t, s, a, sp) == 0.0);
}

TEST_CASE("horizons too short to reach the bonuses are rejected") {
    CHECK_THROWS_AS(default_resource_allocation(1), std::invalid_argument);
}
