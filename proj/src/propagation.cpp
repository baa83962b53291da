#include "mfg/propagation.hpp"

#include <stdexcept>

namespace mfg {

RewardTable RewardTable::zeros(int n_steps, int n_states, int n_actions) {
    return RewardTable{n_steps, n_states, n_actions,
                       Vec(static_cast<size_t>(n_steps) * n_states * n_actions, 0.0)};
}

InducedKernel induced_kernel(const TransitionKernel& kernel, const Policy& pi, int t) {
    if (pi.n_states != kernel.n_states || pi.n_actions != kernel.n_actions)
        throw std::invalid_argument("induced_kernel: policy shape does not match kernel");
    if (t < 0 || t >= pi.n_steps)
        throw std::invalid_argument("induced_kernel: time index out of range");
    const int S = kernel.n_states;
    const int A = kernel.n_actions;
    InducedKernel out{S, Vec(static_cast<size_t>(S) * S, 0.0)};
    for (int s = 0; s < S; ++s) {
        auto pi_row = pi.row(t, s);
        for (int a = 0; a < A; ++a) {
            const double w = pi_row[a];
            if (w == 0.0) continue;
            auto t_row = kernel.row(s, a);
            for (int sp = 0; sp < S; ++sp)
                out.m[static_cast<size_t>(s) * S + sp] += t_row[sp] * w;
        }
    }
    return out;
}

DistributionFlow propagate(const GameSpec& spec, const Policy& pi) {
    if (pi.n_steps != spec.horizon + 1 || pi.n_states != spec.n_states() ||
        pi.n_actions != spec.n_actions())
        throw std::invalid_argument("propagate: policy shape does not match the game");
    const int S = spec.n_states();
    DistributionFlow flow;
    flow.mus.reserve(static_cast<size_t>(spec.horizon) + 1);
    flow.mus.push_back(spec.mu0);
    for (int t = 0; t < spec.horizon; ++t) {
        InducedKernel k = induced_kernel(spec.kernel, pi, t);
        const Vec& cur = flow.mus.back();
        Vec next(static_cast<size_t>(S), 0.0);
        for (int s = 0; s < S; ++s) {
            const double mass = cur[static_cast<size_t>(s)];
            if (mass == 0.0) continue;
            auto row = k.row(s);
            for (int sp = 0; sp < S; ++sp) next[static_cast<size_t>(sp)] += mass * row[sp];
        }
        flow.mus.push_back(std::move(next));
    }
    return flow;
}

RewardTable induced_reward(const GameSpec& spec, const DistributionFlow& mu) {
    if (mu.horizon() != spec.horizon)
        throw std::invalid_argument("induced_reward: flow horizon does not match the game");
    const int S = spec.n_states();
    const int A = spec.n_actions();
    RewardTable table = RewardTable::zeros(spec.horizon + 1, S, A);
    for (int t = 0; t <= spec.horizon; ++t) {
        const Theta& theta = spec.reward.thetas[static_cast<size_t>(t)];
        const Vec& mu_t = mu.at(t);
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                auto l_row = spec.reward.l_row(t, s, a);
                double x = 0.0;
                for (int sp = 0; sp < S; ++sp) x += l_row[sp] * mu_t[static_cast<size_t>(sp)];
                table.at(t, s, a) = theta(x);
            }
        }
    }
    return table;
}

}  // namespace mfg
