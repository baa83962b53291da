#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mfg/model.hpp"
#include "mfg/propagation.hpp"

// N-agent Monte Carlo: empirical distribution flows, convergence-rate
// statistics against the exact flow, and the unilateral-deviation
// experiment that measures the finite-population best-response gain.
//
// All randomness flows through per-(rollout, agent) derived streams, so
// results are bit-identical for a given seed regardless of scheduling.

namespace mfg {

struct PopulationRollout {
    std::vector<int> states;  // (t, agent), t-major
    DistributionFlow empirical_flow;  // entries are multiples of 1/N
    uint64_t seed = 0;
    int n_agents = 0;

    int state_at(int t, int agent) const {
        return states[static_cast<size_t>(t) * n_agents + agent];
    }
};

struct ConvergenceRow {
    int n_agents = 0;
    int t = 0;
    double mean_tv = 0.0;
    double std_err_tv = 0.0;
    double mean_sq_l2 = 0.0;
    double std_err_sq_l2 = 0.0;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    // Least-squares slope of log(mean_tv) vs log(N), one per time step;
    // nullopt where some mean is zero (degenerate, nothing to fit).
    std::vector<std::optional<double>> slope_per_t;
};

struct DeviationResult {
    int n_agents = 0;
    int monte_carlo_samples = 0;
    double j_equilibrium = 0.0;    // value of the candidate policy under the sampled table
    double j_best_response = 0.0;  // value of the recomputed best response
    double gain = 0.0;
    double std_err = 0.0;
};

struct DeviationSweep {
    std::vector<DeviationResult> rows;
    std::optional<double> slope;  // log(gain) vs log(N), above the noise floor
    std::string note;             // diagnostic when the slope is undefined
};

// N i.i.d. trajectories under a shared policy, states counted into the
// empirical flow.
PopulationRollout simulate_population(const GameSpec& spec, const Policy& pi, int n_agents,
                                      uint64_t seed);

// For each N and t, Monte Carlo estimates of E[d_TV(mu^N_t, mu_t)] and
// E[||mu^N_t - mu_t||_2^2] against the exact propagated flow.
ConvergenceTable convergence_sweep(const GameSpec& spec, const Policy& pi,
                                   const std::vector<int>& n_list, int mc_reps, uint64_t seed);

// The deviator's expected reward table against N-1 co-agents running
// pi_star, averaged over mc_reps rollouts. The deviator's own 1/N point
// mass at its current state enters the coupling analytically.
RewardTable deviator_reward_table(const GameSpec& spec, const Policy& pi_star, int n_agents,
                                  int mc_reps, uint64_t seed);

// Fixes N-1 co-agents to pi_star, builds the deviator's expected reward
// table over mc_reps co-agent rollouts, solves the regularized MDP on
// that table, and reports the value gain of the recomputed best response
// over pi_star.
DeviationResult deviation_gain(const GameSpec& spec, const Policy& rho, double beta,
                               const Policy& pi_star, int n_agents, int mc_reps, uint64_t seed);

// deviation_gain over n_list. Gains below noise_floor are excluded from
// the slope fit; fewer than two surviving points leaves it undefined.
DeviationSweep deviation_sweep(const GameSpec& spec, const Policy& rho, double beta,
                               const Policy& pi_star, const std::vector<int>& n_list, int mc_reps,
                               uint64_t seed, double noise_floor = 1e-7);

// Least-squares slope of log(y) vs log(x); nullopt for fewer than two points.
std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mfg
