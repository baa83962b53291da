#include "mfg/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mfg/rng.hpp"

namespace mfg {

namespace {

constexpr double kExpOverflow = 700.0;  // exp() overflows double just past this

DistributionFlow blend(const DistributionFlow& prev, const DistributionFlow& next,
                       double damping) {
    DistributionFlow out = next;
    for (size_t t = 0; t < out.mus.size(); ++t)
        for (size_t s = 0; s < out.mus[t].size(); ++s)
            out.mus[t][s] = damping * prev.mus[t][s] + (1.0 - damping) * next.mus[t][s];
    return out;
}

std::optional<double> max_residual_ratio(const std::vector<double>& residuals) {
    std::optional<double> ratio;
    for (size_t i = 0; i + 1 < residuals.size(); ++i) {
        if (residuals[i] <= 1e-12) continue;
        double r = residuals[i + 1] / residuals[i];
        ratio = ratio ? std::max(*ratio, r) : r;
    }
    return ratio;
}

// Shared Picard loop; `best_response` maps a flow to a policy.
template <typename BestResponse>
EquilibriumResult picard(const GameSpec& spec, const DistributionFlow& mu_init,
                         const SolverOptions& opts, BestResponse&& best_response) {
    if (!(opts.tol > 0.0)) throw std::invalid_argument("solve: tol must be positive");
    if (opts.max_iter < 1) throw std::invalid_argument("solve: max_iter must be >= 1");
    if (opts.damping < 0.0 || opts.damping >= 1.0)
        throw std::invalid_argument("solve: damping must lie in [0, 1)");

    EquilibriumResult result;
    DistributionFlow mu = mu_init;
    if (opts.record_trace) result.flow_trace.push_back(mu);

    Policy pi;
    for (int k = 0; k < opts.max_iter; ++k) {
        pi = best_response(mu);
        DistributionFlow next = propagate(spec, pi);
        if (opts.damping > 0.0) next = blend(mu, next, opts.damping);
        double residual = flow_distance(next, mu);
        result.residuals.push_back(residual);
        if (opts.record_trace) result.flow_trace.push_back(next);
        mu = std::move(next);
        ++result.iterations;
        if (residual < opts.tol) {
            result.converged = true;
            break;
        }
    }

    if (opts.damping > 0.0) {
        // re-anchor so that mu_star is exactly the propagation of pi_star
        pi = best_response(mu);
        mu = propagate(spec, pi);
    }
    result.pi_star = std::move(pi);
    result.mu_star = std::move(mu);
    result.empirical_contraction = max_residual_ratio(result.residuals);
    return result;
}

}  // namespace

DistributionFlow er_operator(const GameSpec& spec, const Policy& rho, double beta,
                             const DistributionFlow& mu) {
    return propagate(spec, soft_best_response(spec, mu, rho, beta));
}

EquilibriumResult solve_mfe(const GameSpec& spec, const Policy& rho, double beta,
                            const SolverOptions& opts) {
    DistributionFlow mu_init = opts.mu_init ? *opts.mu_init : propagate(spec, rho);
    EquilibriumResult result = picard(spec, mu_init, opts, [&](const DistributionFlow& mu) {
        return soft_best_response(spec, mu, rho, beta);
    });
    result.exploitability = exploitability(spec, result.pi_star, rho, beta);
    return result;
}

EquilibriumResult solve_unregularized(const GameSpec& spec, const SolverOptions& opts) {
    DistributionFlow mu_init =
        opts.mu_init ? *opts.mu_init
                     : propagate(spec, Policy::uniform(spec.horizon + 1, spec.n_states(),
                                                       spec.n_actions()));
    EquilibriumResult result = picard(spec, mu_init, opts, [&](const DistributionFlow& mu) {
        return hard_best_response(spec, mu);
    });
    result.exploitability = exploitability_plain(spec, result.pi_star);
    return result;
}

LipschitzReport lipschitz_report(const GameSpec& spec, const Policy& rho, double beta,
                                 double beta_max) {
    if (!(beta_max > 0.0)) throw std::invalid_argument("lipschitz_report: beta_max must be positive");
    const double S = spec.n_states();
    const double A = spec.n_actions();
    const int H = spec.horizon;

    LipschitzReport rep;
    rep.beta_max = beta_max;
    rep.rho_min = *std::min_element(rho.probs.begin(), rho.probs.end());
    rep.rho_max = *std::max_element(rho.probs.begin(), rho.probs.end());

    rep.k_prop = (S > 1.0) ? S * (std::pow(S, H) - 1.0) / (S - 1.0)
                           : static_cast<double>(H);  // limit of the geometric sum

    // K_{Q,t} = 2 K_theta L_max + rho_max exp(c K_{Q,t+1}) / rho_min,
    // boundary 2 K_theta L_max; the recursion explodes for all but tiny
    // c = 2 beta_max (H+1) R_max, so track the log alongside.
    const double base = 2.0 * spec.reward.k_theta * spec.reward.l_max;
    const double c = 2.0 * beta_max * (H + 1) * spec.r_max;
    const double log_ratio = std::log(rep.rho_max / rep.rho_min);
    double k_q = base;
    double log_k_q = std::log(base);
    double max_k_q = k_q;
    double max_log_k_q = log_k_q;
    for (int t = H - 1; t >= 0; --t) {
        double arg = c * k_q;  // +inf once the previous level overflowed
        if (arg > kExpOverflow || !std::isfinite(arg)) {
            rep.k_q_overflowed = true;
            log_k_q = arg + log_ratio;  // exp term dominates
            k_q = std::numeric_limits<double>::infinity();
        } else {
            k_q = base + rep.rho_max * std::exp(arg) / rep.rho_min;
            log_k_q = std::log(k_q);
        }
        max_k_q = std::max(max_k_q, k_q);
        max_log_k_q = std::max(max_log_k_q, log_k_q);
    }
    rep.k_q_kl = max_k_q;
    rep.log_k_q_kl = max_log_k_q;

    if (spec.n_actions() == 1) {
        rep.k_opt_kl = 0.0;  // degenerate single-action case
        rep.beta_bound = beta_max;
        return rep;
    }

    const double pair_factor = A * (A - 1.0);
    rep.k_opt_kl = pair_factor * beta * rep.rho_max * rep.rho_max /
                   (2.0 * rep.rho_min * rep.rho_min) * rep.k_q_kl;

    // threshold = 2 rho_min^2 / (rho_max^2 |A|(|A|-1) K_Q K_prop), in log
    // domain so an overflowed K_Q degrades to a 0-adjacent bound
    double log_threshold = std::log(2.0) + 2.0 * std::log(rep.rho_min) -
                           2.0 * std::log(rep.rho_max) - std::log(pair_factor) -
                           max_log_k_q - std::log(rep.k_prop);
    double threshold = std::exp(log_threshold);
    rep.beta_bound = std::min(beta_max, threshold);
    return rep;
}

double estimate_contraction(const GameSpec& spec, const Policy& rho, double beta,
                            int num_pairs, uint64_t seed) {
    if (num_pairs < 1) throw std::invalid_argument("estimate_contraction: num_pairs must be >= 1");
    const int S = spec.n_states();
    const int T = spec.horizon + 1;
    if (S == 1) return 0.0;  // the flow space is a single point

    auto random_flow = [&](uint64_t pair, uint64_t which, uint64_t attempt) {
        Rng rng(derive_seed(seed, {0xC0A7u, pair, which, attempt}));
        DistributionFlow flow;
        flow.mus.reserve(static_cast<size_t>(T));
        for (int t = 0; t < T; ++t) flow.mus.push_back(rng.simplex(S));
        return flow;
    };

    double worst = 0.0;
    for (int p = 0; p < num_pairs; ++p) {
        DistributionFlow mu, mu2;
        double dist = 0.0;
        for (uint64_t attempt = 0;; ++attempt) {
            mu = random_flow(static_cast<uint64_t>(p), 0, attempt);
            mu2 = random_flow(static_cast<uint64_t>(p), 1, attempt);
            dist = flow_distance(mu, mu2);
            if (dist > 0.0) break;
        }
        double moved = flow_distance(er_operator(spec, rho, beta, mu),
                                     er_operator(spec, rho, beta, mu2));
        worst = std::max(worst, moved / dist);
    }
    return worst;
}

double exploitability(const GameSpec& spec, const Policy& pi, const Policy& rho, double beta) {
    DistributionFlow mu_pi = propagate(spec, pi);
    RewardTable table = induced_reward(spec, mu_pi);
    Policy br = soft_policy(soft_q(spec, table, rho, beta));
    return evaluate_kl(spec, br, table, rho, beta) - evaluate_kl(spec, pi, table, rho, beta);
}

double exploitability_plain(const GameSpec& spec, const Policy& pi) {
    DistributionFlow mu_pi = propagate(spec, pi);
    RewardTable table = induced_reward(spec, mu_pi);
    Policy br = hard_best_response(spec, table);
    return evaluate_plain(spec, br, table) - evaluate_plain(spec, pi, table);
}

std::optional<TwoCycleDiagnostic> tail_cycle_gaps(const EquilibriumResult& result) {
    const auto& trace = result.flow_trace;
    if (trace.size() < 3) return std::nullopt;
    size_t k = trace.size() - 3;
    TwoCycleDiagnostic diag;
    diag.gap_two_step = flow_distance(trace[k + 2], trace[k]);
    diag.gap_one_step = flow_distance(trace[k + 1], trace[k]);
    return diag;
}

}  // namespace mfg
