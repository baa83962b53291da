#include "mfg/finite_population.hpp"

#include <cmath>
#include <stdexcept>

#include "mfg/rng.hpp"
#include "mfg/soft_bellman.hpp"

namespace mfg {

namespace {

constexpr uint64_t kTagPopulation = 0x706f70;  // stream-family tags
constexpr uint64_t kTagSweep = 0x737770;
constexpr uint64_t kTagDeviate = 0x646576;

// One agent trajectory under pi from its own stream; calls sink(t, state).
template <typename Sink>
void walk_agent(const GameSpec& spec, const Policy& pi, Rng& rng, Sink&& sink) {
    int s = rng.categorical(spec.mu0);
    for (int t = 0; t <= spec.horizon; ++t) {
        sink(t, s);
        if (t == spec.horizon) break;
        int a = rng.categorical(pi.row(t, s));
        s = rng.categorical(spec.kernel.row(s, a));
    }
}

// Empirical flow of n_agents independent trajectories, without keeping the
// per-agent state tensor.
DistributionFlow empirical_flow(const GameSpec& spec, const Policy& pi, int n_agents,
                                uint64_t rollout_seed) {
    const int S = spec.n_states();
    std::vector<Vec> counts(static_cast<size_t>(spec.horizon) + 1, Vec(static_cast<size_t>(S), 0.0));
    for (int i = 0; i < n_agents; ++i) {
        Rng rng(derive_seed(rollout_seed, {static_cast<uint64_t>(i)}));
        walk_agent(spec, pi, rng, [&](int t, int s) {
            counts[static_cast<size_t>(t)][static_cast<size_t>(s)] += 1.0;
        });
    }
    DistributionFlow flow;
    flow.mus = std::move(counts);
    for (auto& mu : flow.mus)
        for (double& x : mu) x /= n_agents;
    return flow;
}

double mean_of(const std::vector<double>& xs) {
    double m = 0.0;
    for (double x : xs) m += x;
    return m / static_cast<double>(xs.size());
}

double std_err_of(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    double var = ss / static_cast<double>(xs.size() - 1);
    return std::sqrt(var / static_cast<double>(xs.size()));
}

}  // namespace

std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("loglog_slope: length mismatch");
    if (x.size() < 2) return std::nullopt;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        double lx = std::log(x[i]);
        double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double denom = n * sxx - sx * sx;
    if (denom == 0.0) return std::nullopt;
    return (n * sxy - sx * sy) / denom;
}

PopulationRollout simulate_population(const GameSpec& spec, const Policy& pi, int n_agents,
                                      uint64_t seed) {
    if (n_agents < 1) throw std::invalid_argument("simulate_population: n_agents must be >= 1");
    if (pi.n_steps != spec.horizon + 1 || pi.n_states != spec.n_states() ||
        pi.n_actions != spec.n_actions())
        throw std::invalid_argument("simulate_population: policy shape does not match");

    const int S = spec.n_states();
    const int T = spec.horizon + 1;
    PopulationRollout out;
    out.seed = seed;
    out.n_agents = n_agents;
    out.states.assign(static_cast<size_t>(T) * n_agents, 0);
    std::vector<Vec> counts(static_cast<size_t>(T), Vec(static_cast<size_t>(S), 0.0));

    uint64_t rollout_seed = derive_seed(seed, {kTagPopulation});
    for (int i = 0; i < n_agents; ++i) {
        Rng rng(derive_seed(rollout_seed, {static_cast<uint64_t>(i)}));
        walk_agent(spec, pi, rng, [&](int t, int s) {
            out.states[static_cast<size_t>(t) * n_agents + i] = s;
            counts[static_cast<size_t>(t)][static_cast<size_t>(s)] += 1.0;
        });
    }
    out.empirical_flow.mus = std::move(counts);
    for (auto& mu : out.empirical_flow.mus)
        for (double& x : mu) x /= n_agents;
    return out;
}

ConvergenceTable convergence_sweep(const GameSpec& spec, const Policy& pi,
                                   const std::vector<int>& n_list, int mc_reps, uint64_t seed) {
    if (n_list.empty()) throw std::invalid_argument("convergence_sweep: n_list must be nonempty");
    if (mc_reps < 2) throw std::invalid_argument("convergence_sweep: mc_reps must be >= 2");

    const DistributionFlow exact = propagate(spec, pi);
    const int T = spec.horizon + 1;

    ConvergenceTable table;
    // per t: mean_tv for each N, to fit the slope afterwards
    std::vector<std::vector<double>> tv_by_t(static_cast<size_t>(T));

    for (int n : n_list) {
        if (n < 1) throw std::invalid_argument("convergence_sweep: N must be >= 1");
        std::vector<std::vector<double>> tvs(static_cast<size_t>(T));
        std::vector<std::vector<double>> sqs(static_cast<size_t>(T));
        for (int m = 0; m < mc_reps; ++m) {
            uint64_t rollout_seed =
                derive_seed(seed, {kTagSweep, static_cast<uint64_t>(n), static_cast<uint64_t>(m)});
            DistributionFlow flow = empirical_flow(spec, pi, n, rollout_seed);
            for (int t = 0; t < T; ++t) {
                const Vec& a = flow.at(t);
                const Vec& b = exact.at(t);
                tvs[static_cast<size_t>(t)].push_back(total_variation(a, b));
                double sq = 0.0;
                for (size_t s = 0; s < a.size(); ++s) sq += (a[s] - b[s]) * (a[s] - b[s]);
                sqs[static_cast<size_t>(t)].push_back(sq);
            }
        }
        for (int t = 0; t < T; ++t) {
            ConvergenceRow row;
            row.n_agents = n;
            row.t = t;
            row.mean_tv = mean_of(tvs[static_cast<size_t>(t)]);
            row.std_err_tv = std_err_of(tvs[static_cast<size_t>(t)], row.mean_tv);
            row.mean_sq_l2 = mean_of(sqs[static_cast<size_t>(t)]);
            row.std_err_sq_l2 = std_err_of(sqs[static_cast<size_t>(t)], row.mean_sq_l2);
            table.rows.push_back(row);
            tv_by_t[static_cast<size_t>(t)].push_back(row.mean_tv);
        }
    }

    std::vector<double> n_values(n_list.begin(), n_list.end());
    for (int t = 0; t < T; ++t) {
        const auto& ys = tv_by_t[static_cast<size_t>(t)];
        bool positive = true;
        for (double y : ys)
            if (!(y > 0.0)) positive = false;
        table.slope_per_t.push_back(positive ? loglog_slope(n_values, ys) : std::nullopt);
    }
    return table;
}

namespace {

// Reward table the deviator faces against one sampled co-agent flow; the
// deviator at (t, s) contributes a 1/N point mass at its own state to the
// distribution its reward is evaluated against.
RewardTable deviator_sample_table(const GameSpec& spec, const DistributionFlow& coagent_flow,
                                  int n_agents) {
    const int S = spec.n_states();
    const int A = spec.n_actions();
    const double self_weight = 1.0 / n_agents;
    const double coagent_weight = static_cast<double>(n_agents - 1) / n_agents;
    RewardTable table = RewardTable::zeros(spec.horizon + 1, S, A);
    for (int t = 0; t <= spec.horizon; ++t) {
        const Theta& theta = spec.reward.thetas[static_cast<size_t>(t)];
        const Vec& mu_t = coagent_flow.at(t);
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                auto l_row = spec.reward.l_row(t, s, a);
                double x = 0.0;
                for (int sp = 0; sp < S; ++sp) x += l_row[sp] * mu_t[static_cast<size_t>(sp)];
                x = coagent_weight * x + self_weight * l_row[s];
                table.at(t, s, a) = theta(x);
            }
        }
    }
    return table;
}

std::vector<DistributionFlow> coagent_flows(const GameSpec& spec, const Policy& pi_star,
                                            int n_agents, int mc_reps, uint64_t seed) {
    std::vector<DistributionFlow> flows;
    flows.reserve(static_cast<size_t>(mc_reps));
    for (int m = 0; m < mc_reps; ++m) {
        uint64_t rollout_seed = derive_seed(
            seed, {kTagDeviate, static_cast<uint64_t>(n_agents), static_cast<uint64_t>(m)});
        flows.push_back(empirical_flow(spec, pi_star, n_agents - 1, rollout_seed));
    }
    return flows;
}

}  // namespace

RewardTable deviator_reward_table(const GameSpec& spec, const Policy& pi_star, int n_agents,
                                  int mc_reps, uint64_t seed) {
    if (n_agents < 2) throw std::invalid_argument("deviator_reward_table: n_agents must be >= 2");
    if (mc_reps < 1) throw std::invalid_argument("deviator_reward_table: mc_reps must be >= 1");
    RewardTable mean_table = RewardTable::zeros(spec.horizon + 1, spec.n_states(), spec.n_actions());
    for (const DistributionFlow& flow : coagent_flows(spec, pi_star, n_agents, mc_reps, seed)) {
        RewardTable table = deviator_sample_table(spec, flow, n_agents);
        for (size_t i = 0; i < mean_table.r.size(); ++i) mean_table.r[i] += table.r[i];
    }
    for (double& x : mean_table.r) x /= mc_reps;
    return mean_table;
}

DeviationResult deviation_gain(const GameSpec& spec, const Policy& rho, double beta,
                               const Policy& pi_star, int n_agents, int mc_reps, uint64_t seed) {
    if (n_agents < 2) throw std::invalid_argument("deviation_gain: n_agents must be >= 2");
    if (mc_reps < 2) throw std::invalid_argument("deviation_gain: mc_reps must be >= 2");

    // Pass 1: co-agent empirical flows and the averaged reward table.
    std::vector<DistributionFlow> flows = coagent_flows(spec, pi_star, n_agents, mc_reps, seed);
    RewardTable mean_table = RewardTable::zeros(spec.horizon + 1, spec.n_states(), spec.n_actions());
    for (const DistributionFlow& flow : flows) {
        RewardTable table = deviator_sample_table(spec, flow, n_agents);
        for (size_t i = 0; i < mean_table.r.size(); ++i) mean_table.r[i] += table.r[i];
    }
    for (double& x : mean_table.r) x /= mc_reps;

    // Pass 2: best response to the averaged table; the value difference is
    // linear in the table, so per-rollout differences give the standard
    // error of the gain estimate.
    Policy br = soft_policy(soft_q(spec, mean_table, rho, beta));
    DeviationResult result;
    result.n_agents = n_agents;
    result.monte_carlo_samples = mc_reps;
    result.j_best_response = evaluate_kl(spec, br, mean_table, rho, beta);
    result.j_equilibrium = evaluate_kl(spec, pi_star, mean_table, rho, beta);
    result.gain = result.j_best_response - result.j_equilibrium;

    std::vector<double> per_rollout;
    per_rollout.reserve(static_cast<size_t>(mc_reps));
    for (int m = 0; m < mc_reps; ++m) {
        RewardTable table = deviator_sample_table(spec, flows[static_cast<size_t>(m)], n_agents);
        per_rollout.push_back(evaluate_kl(spec, br, table, rho, beta) -
                              evaluate_kl(spec, pi_star, table, rho, beta));
    }
    result.std_err = std_err_of(per_rollout, mean_of(per_rollout));
    return result;
}

DeviationSweep deviation_sweep(const GameSpec& spec, const Policy& rho, double beta,
                               const Policy& pi_star, const std::vector<int>& n_list, int mc_reps,
                               uint64_t seed, double noise_floor) {
    if (n_list.empty()) throw std::invalid_argument("deviation_sweep: n_list must be nonempty");
    DeviationSweep sweep;
    std::vector<double> xs, ys;
    for (int n : n_list) {
        DeviationResult r = deviation_gain(spec, rho, beta, pi_star, n, mc_reps, seed);
        if (r.gain > noise_floor) {
            xs.push_back(static_cast<double>(n));
            ys.push_back(r.gain);
        }
        sweep.rows.push_back(std::move(r));
    }
    sweep.slope = loglog_slope(xs, ys);
    if (!sweep.slope) {
        sweep.note = xs.empty()
                         ? "all gains at or below the noise floor; slope undefined"
                         : "fewer than two gains above the noise floor; slope undefined";
    }
    return sweep;
}

}  // namespace mfg
