#pragma once

#include "mfg/model.hpp"

// Policy-induced transition matrices, forward propagation of the mean-field
// flow, and mean-field-induced reward tables.

namespace mfg {

// Row-stochastic matrix T(s'|s, pi_t) = sum_a T(s'|s,a) pi_t(a|s).
struct InducedKernel {
    int n_states = 0;
    Vec m;  // (s, s')

    double at(int s, int sp) const {
        return m[static_cast<size_t>(s) * n_states + sp];
    }
    std::span<const double> row(int s) const {
        return {m.data() + static_cast<size_t>(s) * n_states, static_cast<size_t>(n_states)};
    }
};

// Reward table r(t, s, a) of the MDP induced by a fixed flow.
struct RewardTable {
    int n_steps = 0;
    int n_states = 0;
    int n_actions = 0;
    Vec r;  // (t, s, a)

    static RewardTable zeros(int n_steps, int n_states, int n_actions);

    double at(int t, int s, int a) const {
        return r[(static_cast<size_t>(t) * n_states + s) * n_actions + a];
    }
    double& at(int t, int s, int a) {
        return r[(static_cast<size_t>(t) * n_states + s) * n_actions + a];
    }
};

InducedKernel induced_kernel(const TransitionKernel& kernel, const Policy& pi, int t);

// mu_0 = spec.mu0, mu_{t+1} = mu_t [T(pi_t)]; returns H+1 distributions.
DistributionFlow propagate(const GameSpec& spec, const Policy& pi);

// r(t, s, a) = theta_t(sum_{s'} L_t(s, a, s') mu_t(s'))
RewardTable induced_reward(const GameSpec& spec, const DistributionFlow& mu);

}  // namespace mfg
