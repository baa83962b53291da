#pragma once

#include <cstdint>
#include <optional>

#include "mfg/model.hpp"
#include "mfg/propagation.hpp"
#include "mfg/soft_bellman.hpp"

// The regularized equilibrium operator (propagate composed with the soft
// best response), Picard fixed-point solvers for both the regularized and
// the hard-max variant, the Lipschitz-constant machinery that certifies a
// contraction regime for beta, an empirical contraction estimator, and
// exploitability.

namespace mfg {

struct LipschitzReport {
    double k_prop = 0.0;      // |S|(|S|^H - 1)/(|S| - 1)
    double k_q_kl = 0.0;      // max_t of the Q-function constant; +inf on overflow
    double log_k_q_kl = 0.0;  // log of the same, finite slightly past the overflow point
    double k_opt_kl = 0.0;    // |A|(|A|-1) beta rho_max^2 / (2 rho_min^2) * k_q_kl
    double beta_bound = 0.0;  // min(beta_max, contraction threshold)
    double beta_max = 0.0;
    double rho_min = 0.0;
    double rho_max = 0.0;
    bool k_q_overflowed = false;
};

struct SolverOptions {
    double tol = 1e-8;
    int max_iter = 500;
    // Fraction of the previous flow blended into each update; 0 is the
    // plain Picard iteration.
    double damping = 0.0;
    std::optional<DistributionFlow> mu_init;
    bool record_trace = true;
};

struct EquilibriumResult {
    Policy pi_star;
    DistributionFlow mu_star;
    int iterations = 0;
    std::vector<double> residuals;  // flow_distance between successive iterates
    bool converged = false;
    double exploitability = 0.0;
    std::optional<double> empirical_contraction;  // max residual ratio along the run
    std::vector<DistributionFlow> flow_trace;     // mu^0 .. mu^K when recorded
};

// Gaps between late iterates, for diagnosing the period-2 oscillation of
// the unregularized iteration.
struct TwoCycleDiagnostic {
    double gap_two_step = 0.0;  // flow_distance(mu^{k+2}, mu^k)
    double gap_one_step = 0.0;  // flow_distance(mu^{k+1}, mu^k)
};

// One application of the regularized equilibrium map on flows.
DistributionFlow er_operator(const GameSpec& spec, const Policy& rho, double beta,
                             const DistributionFlow& mu);

EquilibriumResult solve_mfe(const GameSpec& spec, const Policy& rho, double beta,
                            const SolverOptions& opts = {});

// Picard iteration with the hard-max best response; exploitability in the
// result is the unregularized one. Used to demonstrate oscillation.
EquilibriumResult solve_unregularized(const GameSpec& spec, const SolverOptions& opts = {});

LipschitzReport lipschitz_report(const GameSpec& spec, const Policy& rho, double beta,
                                 double beta_max);

// Max over sampled random flow pairs of
// flow_distance(G mu, G mu') / flow_distance(mu, mu'). Deterministic given
// the seed; degenerate pairs are resampled.
double estimate_contraction(const GameSpec& spec, const Policy& rho, double beta,
                            int num_pairs, uint64_t seed);

// Value gain of the regularized best response to the flow induced by pi,
// relative to pi itself. Nonnegative up to floating-point noise.
double exploitability(const GameSpec& spec, const Policy& pi, const Policy& rho, double beta);

// Unregularized counterpart, with the hard best response.
double exploitability_plain(const GameSpec& spec, const Policy& pi);

// Gaps at the tail of the recorded trace; nullopt when fewer than three
// iterates were recorded.
std::optional<TwoCycleDiagnostic> tail_cycle_gaps(const EquilibriumResult& result);

}  // namespace mfg
