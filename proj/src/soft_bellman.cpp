#include "mfg/soft_bellman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mfg {

namespace {

void check_reference(const GameSpec& spec, const Policy& rho, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("soft bellman: beta must be positive");
    if (rho.n_steps != spec.horizon + 1 || rho.n_states != spec.n_states() ||
        rho.n_actions != spec.n_actions())
        throw std::invalid_argument("soft bellman: reference policy shape does not match");
    for (double p : rho.probs)
        if (!(p > 0.0))
            throw std::invalid_argument("soft bellman: reference policy must be strictly positive");
}

void check_table(const GameSpec& spec, const RewardTable& table) {
    if (table.n_steps != spec.horizon + 1 || table.n_states != spec.n_states() ||
        table.n_actions != spec.n_actions())
        throw std::invalid_argument("soft bellman: reward table shape does not match");
}

// (1/beta) log sum_a rho(a) exp(beta q(a)), max-shifted.
double soft_max(std::span<const double> q_row, std::span<const double> rho_row, double beta) {
    double m = -std::numeric_limits<double>::infinity();
    for (double q : q_row) m = std::max(m, q);
    double sum = 0.0;
    for (size_t a = 0; a < q_row.size(); ++a)
        sum += rho_row[a] * std::exp(beta * (q_row[a] - m));
    return m + std::log(sum) / beta;
}

}  // namespace

SoftQ soft_q(const GameSpec& spec, const RewardTable& table, const Policy& rho, double beta) {
    check_reference(spec, rho, beta);
    check_table(spec, table);
    const int H = spec.horizon;
    const int S = spec.n_states();
    const int A = spec.n_actions();

    SoftQ out{H + 1, S, A, Vec(static_cast<size_t>(H + 1) * S * A, 0.0), beta, rho};
    Vec v_next(static_cast<size_t>(S), 0.0);

    for (int t = H; t >= 0; --t) {
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                double q = table.at(t, s, a);
                if (t < H) {
                    auto t_row = spec.kernel.row(s, a);
                    for (int sp = 0; sp < S; ++sp) q += t_row[sp] * v_next[static_cast<size_t>(sp)];
                }
                out.q[(static_cast<size_t>(t) * S + s) * A + a] = q;
            }
        }
        for (int s = 0; s < S; ++s)
            v_next[static_cast<size_t>(s)] = soft_max(out.row(t, s), rho.row(t, s), beta);
    }
    return out;
}

SoftQ soft_q(const GameSpec& spec, const DistributionFlow& mu, const Policy& rho, double beta) {
    return soft_q(spec, induced_reward(spec, mu), rho, beta);
}

SoftValue soft_value(const SoftQ& q) {
    SoftValue out{q.n_steps, q.n_states,
                  Vec(static_cast<size_t>(q.n_steps) * q.n_states, 0.0)};
    for (int t = 0; t < q.n_steps; ++t)
        for (int s = 0; s < q.n_states; ++s)
            out.v[static_cast<size_t>(t) * q.n_states + s] =
                soft_max(q.row(t, s), q.rho.row(t, s), q.beta);
    return out;
}

Policy soft_policy(const SoftQ& q) {
    Policy pi = Policy::zeros(q.n_steps, q.n_states, q.n_actions);
    for (int t = 0; t < q.n_steps; ++t) {
        for (int s = 0; s < q.n_states; ++s) {
            auto q_row = q.row(t, s);
            auto rho_row = q.rho.row(t, s);
            double m = -std::numeric_limits<double>::infinity();
            for (double x : q_row) m = std::max(m, x);
            auto out = pi.row(t, s);
            double z = 0.0;
            for (int a = 0; a < q.n_actions; ++a) {
                out[a] = rho_row[a] * std::exp(q.beta * (q_row[a] - m));
                z += out[a];
            }
            for (int a = 0; a < q.n_actions; ++a) out[a] /= z;
        }
    }
    return pi;
}

Policy soft_best_response(const GameSpec& spec, const DistributionFlow& mu, const Policy& rho,
                          double beta) {
    return soft_policy(soft_q(spec, mu, rho, beta));
}

Policy hard_best_response(const GameSpec& spec, const RewardTable& table) {
    check_table(spec, table);
    const int H = spec.horizon;
    const int S = spec.n_states();
    const int A = spec.n_actions();

    Policy pi = Policy::zeros(H + 1, S, A);
    Vec v_next(static_cast<size_t>(S), 0.0);
    Vec q_row(static_cast<size_t>(A), 0.0);
    Vec v_cur(static_cast<size_t>(S), 0.0);

    for (int t = H; t >= 0; --t) {
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                double q = table.at(t, s, a);
                if (t < H) {
                    auto t_row = spec.kernel.row(s, a);
                    for (int sp = 0; sp < S; ++sp) q += t_row[sp] * v_next[static_cast<size_t>(sp)];
                }
                q_row[static_cast<size_t>(a)] = q;
            }
            double best = *std::max_element(q_row.begin(), q_row.end());
            int n_best = 0;
            for (int a = 0; a < A; ++a)
                if (q_row[static_cast<size_t>(a)] >= best - kArgmaxTol) ++n_best;
            auto out = pi.row(t, s);
            for (int a = 0; a < A; ++a)
                out[a] = (q_row[static_cast<size_t>(a)] >= best - kArgmaxTol) ? 1.0 / n_best : 0.0;
            v_cur[static_cast<size_t>(s)] = best;
        }
        v_next = v_cur;
    }
    return pi;
}

Policy hard_best_response(const GameSpec& spec, const DistributionFlow& mu) {
    return hard_best_response(spec, induced_reward(spec, mu));
}

namespace {

double evaluate(const GameSpec& spec, const Policy& pi, const RewardTable& table,
                const Policy* rho, double beta) {
    check_table(spec, table);
    if (pi.n_steps != spec.horizon + 1 || pi.n_states != spec.n_states() ||
        pi.n_actions != spec.n_actions())
        throw std::invalid_argument("evaluate: policy shape does not match the game");
    const int S = spec.n_states();
    const int A = spec.n_actions();

    Vec marginal = spec.mu0;
    double total = 0.0;
    for (int t = 0; t <= spec.horizon; ++t) {
        for (int s = 0; s < S; ++s) {
            const double p_state = marginal[static_cast<size_t>(s)];
            if (p_state == 0.0) continue;
            auto pi_row = pi.row(t, s);
            double step = 0.0;
            for (int a = 0; a < A; ++a) {
                const double p_act = pi_row[a];
                if (p_act == 0.0) continue;  // 0 log 0 = 0
                double term = table.at(t, s, a);
                if (rho) term -= std::log(p_act / rho->at(t, s, a)) / beta;
                step += p_act * term;
            }
            total += p_state * step;
        }
        if (t < spec.horizon) {
            InducedKernel k = induced_kernel(spec.kernel, pi, t);
            Vec next(static_cast<size_t>(S), 0.0);
            for (int s = 0; s < S; ++s) {
                const double mass = marginal[static_cast<size_t>(s)];
                if (mass == 0.0) continue;
                auto row = k.row(s);
                for (int sp = 0; sp < S; ++sp) next[static_cast<size_t>(sp)] += mass * row[sp];
            }
            marginal = std::move(next);
        }
    }
    return total;
}

}  // namespace

double evaluate_kl(const GameSpec& spec, const Policy& pi, const RewardTable& table,
                   const Policy& rho, double beta) {
    check_reference(spec, rho, beta);
    return evaluate(spec, pi, table, &rho, beta);
}

double evaluate_kl(const GameSpec& spec, const Policy& pi, const DistributionFlow& mu,
                   const Policy& rho, double beta) {
    return evaluate_kl(spec, pi, induced_reward(spec, mu), rho, beta);
}

double evaluate_plain(const GameSpec& spec, const Policy& pi, const RewardTable& table) {
    return evaluate(spec, pi, table, nullptr, 0.0);
}

double evaluate_plain(const GameSpec& spec, const Policy& pi, const DistributionFlow& mu) {
    return evaluate_plain(spec, pi, induced_reward(spec, mu));
}

}  // namespace mfg
