#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

// Core domain types for finite-horizon mean-field games on finite
// state/action spaces, plus the metrics (total variation lifted to flows
// and policies) everything else is built on.
//
// Conventions used throughout:
//   - time index t runs 0..H (H+1 steps); the action at t = H earns reward
//     but triggers no transition
//   - tensors are stored flat, row-major, with the time index slowest
//   - probability vectors must sum to 1 within kSimplexTol; normalization
//     is explicit and happens at construction only

namespace mfg {

inline constexpr double kSimplexTol = 1e-9;

using Vec = std::vector<double>;

// Divides by the sum. Throws if the sum is not positive.
void normalize(Vec& v);
Vec normalized(Vec v);

struct StateSpace {
    int size = 0;
    std::vector<std::string> labels;  // empty, or one unique label per state

    static StateSpace of(int size);
    static StateSpace labeled(std::vector<std::string> labels);
    std::string label(int s) const;  // the stored label, or the index as text
};

struct ActionSpace {
    int size = 0;
    std::vector<std::string> labels;

    static ActionSpace of(int size);
    static ActionSpace labeled(std::vector<std::string> labels);
    std::string label(int a) const;
};

// One scalar transform per time step, applied to the population-averaged
// coupling. The closed set carries analytically known Lipschitz constants;
// custom functions must declare theirs.
struct Theta {
    enum class Kind { identity, square, affine, clip, custom };

    Kind kind = Kind::identity;
    double c0 = 0.0, c1 = 0.0;  // affine: c0 + c1*x
    double lo = 0.0, hi = 0.0;  // clip
    std::function<double(double)> fn;
    double declared_lipschitz = 0.0;  // custom only

    double operator()(double x) const;
    // Lipschitz constant on the domain |x| <= l_max.
    double lipschitz(double l_max) const;
    // Bound on |theta(x)| over |x| <= l_max (exact for the closed set,
    // |theta(0)| + K*l_max for custom).
    double max_abs(double l_max) const;

    static Theta identity();
    static Theta square();
    static Theta affine(double c0, double c1);
    static Theta clip(double lo, double hi);
    static Theta custom(std::function<double(double)> fn, double lipschitz);
};

struct TransitionKernel {
    int n_states = 0;
    int n_actions = 0;
    Vec probs;  // (s, a, s')

    static TransitionKernel make(int n_states, int n_actions, Vec probs);

    double at(int s, int a, int sp) const {
        return probs[(static_cast<size_t>(s) * n_actions + a) * n_states + sp];
    }
    std::span<const double> row(int s, int a) const {
        return {probs.data() + (static_cast<size_t>(s) * n_actions + a) * n_states,
                static_cast<size_t>(n_states)};
    }
};

// Pairwise coupling L indexed (t, s, a, s') together with the per-step
// transforms. l_max bounds |L|; k_theta is the uniform-in-t Lipschitz
// constant of the transforms on |x| <= l_max. Both are derived when not
// supplied.
struct CoupledReward {
    int horizon = 0;  // t = 0..horizon
    int n_states = 0;
    int n_actions = 0;
    Vec L;  // (t, s, a, s')
    std::vector<Theta> thetas;  // horizon+1 entries
    double l_max = 0.0;
    double k_theta = 0.0;

    static CoupledReward make(int horizon, int n_states, int n_actions, Vec L,
                              std::vector<Theta> thetas,
                              std::optional<double> l_max = std::nullopt,
                              std::optional<double> k_theta = std::nullopt);

    double l_at(int t, int s, int a, int sp) const {
        return L[((static_cast<size_t>(t) * n_states + s) * n_actions + a) * n_states + sp];
    }
    std::span<const double> l_row(int t, int s, int a) const {
        return {L.data() + ((static_cast<size_t>(t) * n_states + s) * n_actions + a) * n_states,
                static_cast<size_t>(n_states)};
    }
    // max_t over |x| <= l_max of |theta_t(x)|
    double bound_r_max() const;
};

struct GameSpec {
    StateSpace states;
    ActionSpace actions;
    int horizon = 0;
    TransitionKernel kernel;
    CoupledReward reward;
    Vec mu0;
    double r_max = 0.0;  // derived at construction

    static GameSpec make(StateSpace states, ActionSpace actions, int horizon,
                         TransitionKernel kernel, CoupledReward reward, Vec mu0);

    int n_states() const { return states.size; }
    int n_actions() const { return actions.size; }
};

// Time-indexed family of per-state action distributions; the same shape
// serves as a reference policy.
struct Policy {
    int n_steps = 0;  // horizon + 1
    int n_states = 0;
    int n_actions = 0;
    Vec probs;  // (t, s, a)

    static Policy make(int n_steps, int n_states, int n_actions, Vec probs);
    static Policy zeros(int n_steps, int n_states, int n_actions);
    static Policy uniform(int n_steps, int n_states, int n_actions);

    double at(int t, int s, int a) const {
        return probs[(static_cast<size_t>(t) * n_states + s) * n_actions + a];
    }
    double& at(int t, int s, int a) {
        return probs[(static_cast<size_t>(t) * n_states + s) * n_actions + a];
    }
    std::span<const double> row(int t, int s) const {
        return {probs.data() + (static_cast<size_t>(t) * n_states + s) * n_actions,
                static_cast<size_t>(n_actions)};
    }
    std::span<double> row(int t, int s) {
        return {probs.data() + (static_cast<size_t>(t) * n_states + s) * n_actions,
                static_cast<size_t>(n_actions)};
    }
};

// Sequence mu_0..mu_H of state distributions.
struct DistributionFlow {
    std::vector<Vec> mus;

    int horizon() const { return static_cast<int>(mus.size()) - 1; }
    const Vec& at(int t) const { return mus[static_cast<size_t>(t)]; }
    Vec& at(int t) { return mus[static_cast<size_t>(t)]; }
};

// Half the L1 distance; in [0, 1] for probability vectors.
double total_variation(const Vec& nu, const Vec& nu2);
// max over t of total_variation(mu_t, mu2_t)
double flow_distance(const DistributionFlow& mu, const DistributionFlow& mu2);
// max over (t, s) of total_variation between the action rows
double policy_distance(const Policy& pi, const Policy& pi2);

// Value-level invariant checks. Each string names the violating index and
// the failed invariant. Shape errors throw at construction instead.
std::vector<std::string> validate(const GameSpec& spec);
std::vector<std::string> validate_policy(const GameSpec& spec, const Policy& pi);
// Additionally requires strict positivity of every entry.
std::vector<std::string> validate_reference_policy(const GameSpec& spec, const Policy& rho);

}  // namespace mfg
