#include "mfg/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mfg {

void normalize(Vec& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    if (!(sum > 0.0)) throw std::invalid_argument("normalize: vector sum must be positive");
    for (double& x : v) x /= sum;
}

Vec normalized(Vec v) {
    normalize(v);
    return v;
}

StateSpace StateSpace::of(int size) {
    if (size < 1) throw std::invalid_argument("StateSpace: size must be >= 1");
    return StateSpace{size, {}};
}

StateSpace StateSpace::labeled(std::vector<std::string> labels) {
    if (labels.empty()) throw std::invalid_argument("StateSpace: need at least one label");
    std::set<std::string> uniq(labels.begin(), labels.end());
    if (uniq.size() != labels.size())
        throw std::invalid_argument("StateSpace: labels must be unique");
    return StateSpace{static_cast<int>(labels.size()), std::move(labels)};
}

std::string StateSpace::label(int s) const {
    return labels.empty() ? std::to_string(s) : labels[static_cast<size_t>(s)];
}

ActionSpace ActionSpace::of(int size) {
    if (size < 1) throw std::invalid_argument("ActionSpace: size must be >= 1");
    return ActionSpace{size, {}};
}

ActionSpace ActionSpace::labeled(std::vector<std::string> labels) {
    if (labels.empty()) throw std::invalid_argument("ActionSpace: need at least one label");
    std::set<std::string> uniq(labels.begin(), labels.end());
    if (uniq.size() != labels.size())
        throw std::invalid_argument("ActionSpace: labels must be unique");
    return ActionSpace{static_cast<int>(labels.size()), std::move(labels)};
}

std::string ActionSpace::label(int a) const {
    return labels.empty() ? std::to_string(a) : labels[static_cast<size_t>(a)];
}

double Theta::operator()(double x) const {
    switch (kind) {
        case Kind::identity: return x;
        case Kind::square: return x * x;
        case Kind::affine: return c0 + c1 * x;
        case Kind::clip: return std::clamp(x, lo, hi);
        case Kind::custom: return fn(x);
    }
    return x;
}

double Theta::lipschitz(double l_max) const {
    switch (kind) {
        case Kind::identity: return 1.0;
        case Kind::square: return 2.0 * l_max;
        case Kind::affine: return std::abs(c1);
        case Kind::clip: return 1.0;
        case Kind::custom: return declared_lipschitz;
    }
    return 0.0;
}

double Theta::max_abs(double l_max) const {
    switch (kind) {
        case Kind::identity: return l_max;
        case Kind::square: return l_max * l_max;
        case Kind::affine: return std::abs(c0) + std::abs(c1) * l_max;
        case Kind::clip: {
            // monotone, so the extremes sit at the domain endpoints
            double a = std::clamp(-l_max, lo, hi);
            double b = std::clamp(l_max, lo, hi);
            return std::max(std::abs(a), std::abs(b));
        }
        case Kind::custom: return std::abs(fn(0.0)) + declared_lipschitz * l_max;
    }
    return 0.0;
}

Theta Theta::identity() { return Theta{}; }

Theta Theta::square() {
    Theta t;
    t.kind = Kind::square;
    return t;
}

Theta Theta::affine(double c0, double c1) {
    Theta t;
    t.kind = Kind::affine;
    t.c0 = c0;
    t.c1 = c1;
    return t;
}

Theta Theta::clip(double lo, double hi) {
    if (lo > hi) throw std::invalid_argument("Theta::clip: lo > hi");
    Theta t;
    t.kind = Kind::clip;
    t.lo = lo;
    t.hi = hi;
    return t;
}

Theta Theta::custom(std::function<double(double)> fn, double lipschitz) {
    if (!fn) throw std::invalid_argument("Theta::custom: null function");
    if (lipschitz < 0.0) throw std::invalid_argument("Theta::custom: Lipschitz constant must be >= 0");
    Theta t;
    t.kind = Kind::custom;
    t.fn = std::move(fn);
    t.declared_lipschitz = lipschitz;
    return t;
}

TransitionKernel TransitionKernel::make(int n_states, int n_actions, Vec probs) {
    if (n_states < 1 || n_actions < 1)
        throw std::invalid_argument("TransitionKernel: sizes must be >= 1");
    size_t expect = static_cast<size_t>(n_states) * n_actions * n_states;
    if (probs.size() != expect)
        throw std::invalid_argument("TransitionKernel: probs has wrong size");
    return TransitionKernel{n_states, n_actions, std::move(probs)};
}

CoupledReward CoupledReward::make(int horizon, int n_states, int n_actions, Vec L,
                                  std::vector<Theta> thetas, std::optional<double> l_max,
                                  std::optional<double> k_theta) {
    if (horizon < 0) throw std::invalid_argument("CoupledReward: horizon must be >= 0");
    if (n_states < 1 || n_actions < 1)
        throw std::invalid_argument("CoupledReward: sizes must be >= 1");
    size_t expect = static_cast<size_t>(horizon + 1) * n_states * n_actions * n_states;
    if (L.size() != expect) throw std::invalid_argument("CoupledReward: L has wrong size");
    if (thetas.size() != static_cast<size_t>(horizon + 1))
        throw std::invalid_argument("CoupledReward: need one theta per time step");

    double derived_lmax = 0.0;
    for (double x : L) derived_lmax = std::max(derived_lmax, std::abs(x));
    double lm = l_max.value_or(derived_lmax);
    if (lm < derived_lmax)
        throw std::invalid_argument("CoupledReward: supplied l_max does not bound |L|");

    double kt = 0.0;
    if (k_theta) {
        kt = *k_theta;
        if (kt < 0.0) throw std::invalid_argument("CoupledReward: k_theta must be >= 0");
    } else {
        for (const Theta& th : thetas) kt = std::max(kt, th.lipschitz(lm));
    }
    return CoupledReward{horizon, n_states, n_actions, std::move(L), std::move(thetas), lm, kt};
}

double CoupledReward::bound_r_max() const {
    double r = 0.0;
    for (const Theta& th : thetas) r = std::max(r, th.max_abs(l_max));
    return r;
}

GameSpec GameSpec::make(StateSpace states, ActionSpace actions, int horizon,
                        TransitionKernel kernel, CoupledReward reward, Vec mu0) {
    if (horizon < 0) throw std::invalid_argument("GameSpec: horizon must be >= 0");
    if (kernel.n_states != states.size || kernel.n_actions != actions.size)
        throw std::invalid_argument("GameSpec: kernel shape does not match state/action spaces");
    if (reward.n_states != states.size || reward.n_actions != actions.size)
        throw std::invalid_argument("GameSpec: reward shape does not match state/action spaces");
    if (reward.horizon != horizon)
        throw std::invalid_argument("GameSpec: reward horizon does not match");
    if (mu0.size() != static_cast<size_t>(states.size))
        throw std::invalid_argument("GameSpec: mu0 has wrong length");
    double r_max = reward.bound_r_max();
    return GameSpec{std::move(states), std::move(actions), horizon,
                    std::move(kernel), std::move(reward), std::move(mu0), r_max};
}

Policy Policy::make(int n_steps, int n_states, int n_actions, Vec probs) {
    if (n_steps < 1 || n_states < 1 || n_actions < 1)
        throw std::invalid_argument("Policy: sizes must be >= 1");
    size_t expect = static_cast<size_t>(n_steps) * n_states * n_actions;
    if (probs.size() != expect) throw std::invalid_argument("Policy: probs has wrong size");
    return Policy{n_steps, n_states, n_actions, std::move(probs)};
}

Policy Policy::zeros(int n_steps, int n_states, int n_actions) {
    return make(n_steps, n_states, n_actions,
                Vec(static_cast<size_t>(n_steps) * n_states * n_actions, 0.0));
}

Policy Policy::uniform(int n_steps, int n_states, int n_actions) {
    return make(n_steps, n_states, n_actions,
                Vec(static_cast<size_t>(n_steps) * n_states * n_actions, 1.0 / n_actions));
}

double total_variation(const Vec& nu, const Vec& nu2) {
    if (nu.size() != nu2.size())
        throw std::invalid_argument("total_variation: length mismatch");
    double sum = 0.0;
    for (size_t i = 0; i < nu.size(); ++i) sum += std::abs(nu[i] - nu2[i]);
    return 0.5 * sum;
}

double flow_distance(const DistributionFlow& mu, const DistributionFlow& mu2) {
    if (mu.mus.size() != mu2.mus.size())
        throw std::invalid_argument("flow_distance: horizon mismatch");
    double d = 0.0;
    for (size_t t = 0; t < mu.mus.size(); ++t)
        d = std::max(d, total_variation(mu.mus[t], mu2.mus[t]));
    return d;
}

double policy_distance(const Policy& pi, const Policy& pi2) {
    if (pi.n_steps != pi2.n_steps || pi.n_states != pi2.n_states ||
        pi.n_actions != pi2.n_actions)
        throw std::invalid_argument("policy_distance: shape mismatch");
    double d = 0.0;
    for (int t = 0; t < pi.n_steps; ++t) {
        for (int s = 0; s < pi.n_states; ++s) {
            auto r1 = pi.row(t, s);
            auto r2 = pi2.row(t, s);
            double sum = 0.0;
            for (int a = 0; a < pi.n_actions; ++a) sum += std::abs(r1[a] - r2[a]);
            d = std::max(d, 0.5 * sum);
        }
    }
    return d;
}

namespace {

std::string fmt_idx(std::initializer_list<std::pair<const char*, int>> parts) {
    std::ostringstream os;
    os << "(";
    bool first = true;
    for (const auto& [name, v] : parts) {
        if (!first) os << ", ";
        os << name << "=" << v;
        first = false;
    }
    os << ")";
    return os.str();
}

void check_simplex(std::vector<std::string>& out, std::span<const double> row,
                   const std::string& where) {
    double sum = 0.0;
    for (double x : row) {
        if (x < 0.0 || x > 1.0) {
            out.push_back(where + ": entry " + std::to_string(x) + " outside [0, 1]");
            return;
        }
        sum += x;
    }
    if (std::abs(sum - 1.0) > kSimplexTol)
        out.push_back(where + ": sums to " + std::to_string(sum) + ", expected 1 within 1e-9");
}

}  // namespace

std::vector<std::string> validate(const GameSpec& spec) {
    std::vector<std::string> out;
    const int S = spec.n_states();
    const int A = spec.n_actions();

    if (!spec.states.labels.empty()) {
        std::set<std::string> uniq(spec.states.labels.begin(), spec.states.labels.end());
        if (uniq.size() != spec.states.labels.size())
            out.push_back("states: duplicate labels");
    }

    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
            check_simplex(out, spec.kernel.row(s, a), "kernel row " + fmt_idx({{"s", s}, {"a", a}}));

    for (int t = 0; t <= spec.horizon; ++t)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
                for (int sp = 0; sp < S; ++sp)
                    if (std::abs(spec.reward.l_at(t, s, a, sp)) > spec.reward.l_max) {
                        out.push_back("L " + fmt_idx({{"t", t}, {"s", s}, {"a", a}, {"s'", sp}}) +
                                      ": magnitude exceeds l_max");
                    }
    if (spec.reward.k_theta < 0.0) out.push_back("reward: k_theta must be >= 0");

    check_simplex(out, spec.mu0, "mu0");
    return out;
}

std::vector<std::string> validate_policy(const GameSpec& spec, const Policy& pi) {
    std::vector<std::string> out;
    if (pi.n_steps != spec.horizon + 1 || pi.n_states != spec.n_states() ||
        pi.n_actions != spec.n_actions()) {
        out.push_back("policy: shape does not match the game");
        return out;
    }
    for (int t = 0; t < pi.n_steps; ++t)
        for (int s = 0; s < pi.n_states; ++s)
            check_simplex(out, pi.row(t, s), "policy row " + fmt_idx({{"t", t}, {"s", s}}));
    return out;
}

std::vector<std::string> validate_reference_policy(const GameSpec& spec, const Policy& rho) {
    std::vector<std::string> out = validate_policy(spec, rho);
    if (!out.empty() && out.front() == "policy: shape does not match the game") return out;
    for (int t = 0; t < rho.n_steps; ++t)
        for (int s = 0; s < rho.n_states; ++s)
            for (int a = 0; a < rho.n_actions; ++a)
                if (!(rho.at(t, s, a) > 0.0)) {
                    out.push_back("reference policy " +
                                  fmt_idx({{"t", t}, {"s", s}, {"a", a}}) +
                                  ": entry must be strictly positive");
                }
    return out;
}

}  // namespace mfg
