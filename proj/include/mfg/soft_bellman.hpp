#pragma once

#include "mfg/model.hpp"
#include "mfg/propagation.hpp"

// Entropy-regularized MDP solver for a fixed mean-field flow (or an
// arbitrary reward table), plus the unregularized hard-max solver and
// policy evaluation for both objectives.
//
// The backward recursion is
//   Q_t(s,a) = r_t(s,a) + sum_{s'} T(s'|s,a) V_{t+1}(s'),
//   V_t(s)   = (1/beta) log sum_a rho_t(a|s) exp(beta Q_t(s,a)),
// with boundary condition Q_H = r_H. All log-sum-exps are max-shifted.

namespace mfg {

inline constexpr double kArgmaxTol = 1e-12;

struct SoftQ {
    int n_steps = 0;
    int n_states = 0;
    int n_actions = 0;
    Vec q;  // (t, s, a)
    double beta = 0.0;
    Policy rho;

    double at(int t, int s, int a) const {
        return q[(static_cast<size_t>(t) * n_states + s) * n_actions + a];
    }
    std::span<const double> row(int t, int s) const {
        return {q.data() + (static_cast<size_t>(t) * n_states + s) * n_actions,
                static_cast<size_t>(n_actions)};
    }
};

struct SoftValue {
    int n_steps = 0;
    int n_states = 0;
    Vec v;  // (t, s)

    double at(int t, int s) const { return v[static_cast<size_t>(t) * n_states + s]; }
};

SoftQ soft_q(const GameSpec& spec, const RewardTable& table, const Policy& rho, double beta);
SoftQ soft_q(const GameSpec& spec, const DistributionFlow& mu, const Policy& rho, double beta);

SoftValue soft_value(const SoftQ& q);

// Boltzmann policy pi_t(a|s) = rho_t(a|s) exp(beta Q_t(s,a)) / Z_t(s).
Policy soft_policy(const SoftQ& q);

// soft_policy(soft_q(...)): the regularized best response to a flow.
Policy soft_best_response(const GameSpec& spec, const DistributionFlow& mu, const Policy& rho,
                          double beta);

// Hard-max backward induction; uniform over the argmax set, ties detected
// at absolute tolerance kArgmaxTol.
Policy hard_best_response(const GameSpec& spec, const RewardTable& table);
Policy hard_best_response(const GameSpec& spec, const DistributionFlow& mu);

// Exact expectation of sum_t [r_t - (1/beta) log(pi/rho)] by forward
// propagation of the agent's state marginal, with the 0 log 0 = 0
// convention.
double evaluate_kl(const GameSpec& spec, const Policy& pi, const RewardTable& table,
                   const Policy& rho, double beta);
double evaluate_kl(const GameSpec& spec, const Policy& pi, const DistributionFlow& mu,
                   const Policy& rho, double beta);

double evaluate_plain(const GameSpec& spec, const Policy& pi, const RewardTable& table);
double evaluate_plain(const GameSpec& spec, const Policy& pi, const DistributionFlow& mu);

}  // namespace mfg
