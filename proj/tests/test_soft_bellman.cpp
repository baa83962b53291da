#include <cmath>

#include "doctest.h"
#include "mfg/environments.hpp"
#include "mfg/soft_bellman.hpp"
#include "test_helpers.hpp"

using namespace mfg;
using mfgtest::random_game;
using mfgtest::random_policy;
using mfgtest::random_reference;
using mfgtest::stay_swap_game;

namespace {

// Independent brute-force oracle: expands the recursion literally, with
// unshifted exponentials and no value caching, so it shares nothing with
// the production backward pass.
double oracle_v(const GameSpec& spec, const RewardTable& r, const Policy& rho, double beta,
                int t, int s);

double oracle_q(const GameSpec& spec, const RewardTable& r, const Policy& rho, double beta,
                int t, int s, int a) {
    double q = r.at(t, s, a);
    if (t < spec.horizon)
        for (int sp = 0; sp < spec.n_states(); ++sp)
            q += spec.kernel.at(s, a, sp) * oracle_v(spec, r, rho, beta, t + 1, sp);
    return q;
}

double oracle_v(const GameSpec& spec, const RewardTable& r, const Policy& rho, double beta,
                int t, int s) {
    double sum = 0.0;
    for (int a = 0; a < spec.n_actions(); ++a)
        sum += rho.at(t, s, a) * std::exp(beta * oracle_q(spec, r, rho, beta, t, s, a));
    return std::log(sum) / beta;
}

// Exhaustive trajectory enumeration of the (regularized) objective: sums
// prob * value over every complete state/action path.
double oracle_path_value(const GameSpec& spec, const Policy& pi, const RewardTable& r,
                         const Policy* rho, double beta) {
    double total = 0.0;
    auto walk = [&](auto&& self, int t, int s, double prob, double value) -> void {
        for (int a = 0; a < spec.n_actions(); ++a) {
            double p_act = pi.at(t, s, a);
            if (p_act == 0.0) continue;
            double term = r.at(t, s, a);
            if (rho) term -= std::log(p_act / rho->at(t, s, a)) / beta;
            double p = prob * p_act;
            double v = value + term;
            if (t == spec.horizon) {
                total += p * v;
                continue;
            }
            for (int sp = 0; sp < spec.n_states(); ++sp) {
                double p_next = spec.kernel.at(s, a, sp);
                if (p_next > 0.0) self(self, t + 1, sp, p * p_next, v);
            }
        }
    };
    for (int s = 0; s < spec.n_states(); ++s)
        if (spec.mu0[static_cast<size_t>(s)] > 0.0)
            walk(walk, 0, s, spec.mu0[static_cast<size_t>(s)], 0.0);
    return total;
}

}  // namespace

TEST_CASE("soft q at horizon zero is the reward table") {
    Rng rng(41);
    GameSpec spec = random_game(rng, 3, 2, 0);
    Policy rho = random_reference(rng, 1, 3, 2);
    DistributionFlow mu{{spec.mu0}};
    RewardTable r = induced_reward(spec, mu);
    SoftQ q = soft_q(spec, mu, rho, 2.0);
    for (int s = 0; s < 3; ++s)
        for (int a = 0; a < 2; ++a) CHECK(q.at(0, s, a) == r.at(0, s, a));
}

TEST_CASE("zero rewards give zero soft q and value") {
    Rng rng(43);
    GameSpec spec = stay_swap_game(3, {0.5, 0.5});
    Policy rho = random_reference(rng, 4, 2, 2);
    DistributionFlow mu = propagate(spec, rho);
    SoftQ q = soft_q(spec, mu, rho, 1.7);
    for (double x : q.q) CHECK(x == doctest::Approx(0.0));
    SoftValue v = soft_value(q);
    for (double x : v.v) CHECK(std::abs(x) <= 1e-12);
}

TEST_CASE("soft q matches the brute-force recursion oracle") {
    Rng rng(47);
    for (int trial = 0; trial < 10; ++trial) {
        GameSpec spec = random_game(rng, 2, 2, 2);
        Policy rho = random_reference(rng, 3, 2, 2);
        DistributionFlow mu = mfgtest::random_flow(rng, 3, 2);
        RewardTable r = induced_reward(spec, mu);
        double beta = 0.5 + 2.0 * rng.next_double();
        SoftQ q = soft_q(spec, mu, rho, beta);
        for (int t = 0; t <= 2; ++t)
            for (int s = 0; s < 2; ++s)
                for (int a = 0; a < 2; ++a)
                    CHECK(q.at(t, s, a) ==
                          doctest::Approx(oracle_q(spec, r, rho, beta, t, s, a)).epsilon(1e-10));
        // boundary condition holds exactly
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 2; ++a) CHECK(q.at(2, s, a) == r.at(2, s, a));
    }
}

TEST_CASE("soft q rejects bad parameters") {
    Rng rng(53);
    GameSpec spec = stay_swap_game(1, {1.0, 0.0});
    DistributionFlow mu = propagate(spec, Policy::uniform(2, 2, 2));
    CHECK_THROWS_AS(soft_q(spec, mu, Policy::uniform(2, 2, 2), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(soft_q(spec, mu, Policy::uniform(2, 2, 2), -1.0), std::invalid_argument);
    Policy rho = Policy::zeros(2, 2, 2);
    for (int t = 0; t < 2; ++t)
        for (int s = 0; s < 2; ++s) rho.at(t, s, 0) = 1.0;  // zero entries
    CHECK_THROWS_AS(soft_q(spec, mu, rho, 1.0), std::invalid_argument);
}

TEST_CASE("soft policy: constant q rows reproduce the reference") {
    Rng rng(59);
    Policy rho = random_reference(rng, 2, 2, 3);
    SoftQ q{2, 2, 3, Vec(12, 0.0), 2.5, rho};
    for (int t = 0; t < 2; ++t)
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 3; ++a) q.q[(static_cast<size_t>(t) * 2 + s) * 3 + a] = 0.7;
    Policy pi = soft_policy(q);
    CHECK(policy_distance(pi, rho) <= 1e-12);
}

TEST_CASE("soft policy: two-action Boltzmann weights") {
    SoftQ q{1, 1, 2, Vec{1.0, 0.0}, 1.0, Policy::uniform(1, 1, 2)};
    Policy pi = soft_policy(q);
    CHECK(pi.at(0, 0, 0) == doctest::Approx(0.7310585786300049).epsilon(1e-9));
    CHECK(pi.at(0, 0, 1) == doctest::Approx(0.2689414213699951).epsilon(1e-9));
}

TEST_CASE("soft policy stays near the reference for tiny beta") {
    Rng rng(61);
    GameSpec spec = random_game(rng, 3, 2, 3);
    Policy rho = random_reference(rng, 4, 3, 2);
    DistributionFlow mu = propagate(spec, rho);
    Policy pi = soft_best_response(spec, mu, rho, 1e-6);
    CHECK(policy_distance(pi, rho) <= 1e-5);
}

TEST_CASE("hard best response is deterministic with unique maxima") {
    Rng rng(67);
    GameSpec spec = random_game(rng, 3, 3, 2);  // continuous rewards: ties have measure zero
    DistributionFlow mu = propagate(spec, Policy::uniform(3, 3, 3));
    Policy pi = hard_best_response(spec, mu);
    for (int t = 0; t <= 2; ++t)
        for (int s = 0; s < 3; ++s) {
            auto row = pi.row(t, s);
            int ones = 0;
            for (double p : row) {
                CHECK((p == 0.0 || p == 1.0));
                if (p == 1.0) ++ones;
            }
            CHECK(ones == 1);
        }
}

TEST_CASE("hard best response splits exact ties uniformly") {
    GameSpec spec = stay_swap_game(0, {1.0, 0.0});
    RewardTable r = RewardTable::zeros(1, 2, 2);
    r.at(0, 0, 0) = 0.4;
    r.at(0, 0, 1) = 0.4;  // exact tie at s=0
    r.at(0, 1, 0) = 0.2;
    r.at(0, 1, 1) = 0.9;
    Policy pi = hard_best_response(spec, r);
    CHECK(pi.at(0, 0, 0) == 0.5);
    CHECK(pi.at(0, 0, 1) == 0.5);
    CHECK(pi.at(0, 1, 1) == 1.0);
}

TEST_CASE("hard best response routes everyone to the high bonus node") {
    auto [spec, rho] = default_resource_allocation();  // mass starts at node 1
    DistributionFlow mu = propagate(spec, Policy::uniform(spec.horizon + 1, spec.n_states(),
                                                          spec.n_actions()));
    Policy pi = hard_best_response(spec, mu);
    DistributionFlow flow = propagate(spec, pi);
    CHECK(flow.at(spec.horizon)[2] == doctest::Approx(1.0));  // node 3
}

TEST_CASE("evaluate_kl with pi = rho reduces to the plain value") {
    Rng rng(71);
    GameSpec spec = random_game(rng, 3, 2, 3);
    Policy rho = random_reference(rng, 4, 3, 2);
    DistributionFlow mu = propagate(spec, rho);
    CHECK(evaluate_kl(spec, rho, mu, rho, 0.8) ==
          doctest::Approx(evaluate_plain(spec, rho, mu)).epsilon(1e-12));

    GameSpec zero = stay_swap_game(2, {0.5, 0.5});
    Policy rho2 = random_reference(rng, 3, 2, 2);
    DistributionFlow mu2 = propagate(zero, rho2);
    CHECK(evaluate_kl(zero, rho2, mu2, rho2, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("evaluators match exhaustive path enumeration") {
    Rng rng(73);
    for (int trial = 0; trial < 10; ++trial) {
        int S = 2 + static_cast<int>(rng.next_u64() % 2);
        int H = static_cast<int>(rng.next_u64() % 3);
        GameSpec spec = random_game(rng, S, 2, H);
        Policy rho = random_reference(rng, H + 1, S, 2);
        Policy pi = random_policy(rng, H + 1, S, 2);
        if (trial % 3 == 0) {
            // deterministic policies exercise the 0 log 0 = 0 convention
            for (int t = 0; t <= H; ++t)
                for (int s = 0; s < S; ++s) {
                    auto row = pi.row(t, s);
                    int best = row[0] >= row[1] ? 0 : 1;
                    row[0] = best == 0 ? 1.0 : 0.0;
                    row[1] = 1.0 - row[0];
                }
        }
        DistributionFlow mu = mfgtest::random_flow(rng, H + 1, S);
        RewardTable r = induced_reward(spec, mu);
        double beta = 0.5 + rng.next_double();
        CHECK(evaluate_kl(spec, pi, r, rho, beta) ==
              doctest::Approx(oracle_path_value(spec, pi, r, &rho, beta)).epsilon(1e-9));
        CHECK(evaluate_plain(spec, pi, r) ==
              doctest::Approx(oracle_path_value(spec, pi, r, nullptr, 0.0)).epsilon(1e-9));
    }
}

TEST_CASE("evaluate_plain: single-step point mass reads the table") {
    GameSpec spec = stay_swap_game(0, {1.0, 0.0});
    RewardTable r = RewardTable::zeros(1, 2, 2);
    r.at(0, 0, 1) = 0.625;
    Policy det = Policy::zeros(1, 2, 2);
    det.at(0, 0, 1) = 1.0;
    det.at(0, 1, 0) = 1.0;
    CHECK(evaluate_plain(spec, det, r) == doctest::Approx(0.625));
}

TEST_CASE("soft policy dominates random perturbations") {
    Rng rng(79);
    GameSpec spec = random_game(rng, 3, 2, 2);
    Policy rho = random_reference(rng, 3, 3, 2);
    DistributionFlow mu = propagate(spec, rho);
    RewardTable r = induced_reward(spec, mu);
    const double beta = 1.4;
    Policy star = soft_policy(soft_q(spec, r, rho, beta));
    double star_value = evaluate_kl(spec, star, r, rho, beta);
    for (int trial = 0; trial < 100; ++trial) {
        Policy other = random_policy(rng, 3, 3, 2);
        CHECK(evaluate_kl(spec, other, r, rho, beta) <= star_value + 1e-9);
    }
}

TEST_CASE("soft policy value equals the initial soft value") {
    Rng rng(83);
    GameSpec spec = random_game(rng, 3, 2, 3);
    Policy rho = random_reference(rng, 4, 3, 2);
    DistributionFlow mu = propagate(spec, rho);
    const double beta = 2.2;
    SoftQ q = soft_q(spec, mu, rho, beta);
    SoftValue v = soft_value(q);
    double expected = 0.0;
    for (int s = 0; s < 3; ++s) expected += spec.mu0[static_cast<size_t>(s)] * v.at(0, s);
    CHECK(evaluate_kl(spec, soft_policy(q), mu, rho, beta) ==
          doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("beta sweep: soft response approaches the reference, then the greedy policy") {
    auto [spec, rho] = default_resource_allocation();
    DistributionFlow mu = propagate(spec, rho);

    double prev = 1e9;
    for (double beta : {1e-2, 1e-4, 1e-6}) {
        double d = policy_distance(soft_best_response(spec, mu, rho, beta), rho);
        CHECK(d < prev);
        prev = d;
    }
    CHECK(prev <= 1e-5);

    // spaced rewards make every argmax unique
    Rng rng(89);
    GameSpec spaced = stay_swap_game(2, {0.5, 0.5});
    RewardTable r = RewardTable::zeros(3, 2, 2);
    for (int t = 0; t <= 2; ++t)
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 2; ++a)
                r.at(t, s, a) = 0.4 * a + 0.15 * s + 0.02 * t + 0.3 * rng.next_double();
    Policy hard = hard_best_response(spaced, r);
    Policy rho2 = Policy::uniform(3, 2, 2);
    double prev_gap = 1e9;
    for (double beta : {10.0, 100.0, 1000.0}) {
        double d = policy_distance(soft_policy(soft_q(spaced, r, rho2, beta)), hard);
        CHECK(d < prev_gap);
        prev_gap = d;
    }
    CHECK(prev_gap <= 1e-9);
}

TEST_CASE("values are invariant under a large common reward shift") {
    Rng rng(97);
    GameSpec spec = stay_swap_game(2, {0.5, 0.5}, {}, /*l_scale=*/1.0, /*l_seed=*/5);
    Policy rho = Policy::uniform(3, 2, 2);
    DistributionFlow flow = propagate(spec, rho);
    RewardTable table = induced_reward(spec, flow);
    RewardTable shifted = table;
    const double c = 1e6;
    for (double& x : shifted.r) x += c;
    const double beta = 1.0;
    SoftQ q = soft_q(spec, table, rho, beta);
    SoftQ q2 = soft_q(spec, shifted, rho, beta);
    CHECK(policy_distance(soft_policy(q), soft_policy(q2)) <= 1e-9);
    SoftValue v = soft_value(q);
    SoftValue v2 = soft_value(q2);
    double val = 0.0, val2 = 0.0;
    for (int s = 0; s < 2; ++s) {
        val += spec.mu0[static_cast<size_t>(s)] * v.at(0, s);
        val2 += spec.mu0[static_cast<size_t>(s)] * v2.at(0, s);
    }
    CHECK(std::abs((val2 - 3 * c) - val) <= 1e-9);
}
