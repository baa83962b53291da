#include "mfg/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mfg::io {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

const json& require(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) fail(where + ": missing required key '" + key + "'");
    return *it;
}

}  // namespace

json theta_to_json(const Theta& theta) {
    switch (theta.kind) {
        case Theta::Kind::identity: return json{{"type", "identity"}};
        case Theta::Kind::square: return json{{"type", "square"}};
        case Theta::Kind::affine:
            return json{{"type", "affine"}, {"c0", theta.c0}, {"c1", theta.c1}};
        case Theta::Kind::clip:
            return json{{"type", "clip"}, {"lo", theta.lo}, {"hi", theta.hi}};
        case Theta::Kind::custom: fail("theta: custom transforms are not serializable");
    }
    fail("theta: unknown kind");
}

Theta theta_from_json(const json& j) {
    std::string type = require(j, "type", "theta").get<std::string>();
    if (type == "identity") return Theta::identity();
    if (type == "square") return Theta::square();
    if (type == "affine")
        return Theta::affine(require(j, "c0", "theta").get<double>(),
                             require(j, "c1", "theta").get<double>());
    if (type == "clip")
        return Theta::clip(require(j, "lo", "theta").get<double>(),
                           require(j, "hi", "theta").get<double>());
    fail("theta: unknown type '" + type + "'");
}

namespace {

StateSpace state_space_from_json(const json& j) {
    if (j.is_number_integer()) return StateSpace::of(j.get<int>());
    if (j.contains("labels")) return StateSpace::labeled(j["labels"].get<std::vector<std::string>>());
    return StateSpace::of(require(j, "size", "states").get<int>());
}

ActionSpace action_space_from_json(const json& j) {
    if (j.is_number_integer()) return ActionSpace::of(j.get<int>());
    if (j.contains("labels"))
        return ActionSpace::labeled(j["labels"].get<std::vector<std::string>>());
    return ActionSpace::of(require(j, "size", "actions").get<int>());
}

GameSpec direct_game_from_json(const json& j) {
    StateSpace states = state_space_from_json(require(j, "states", "game"));
    ActionSpace actions = action_space_from_json(require(j, "actions", "game"));
    const int S = states.size;
    const int A = actions.size;
    const int H = require(j, "horizon", "game").get<int>();
    if (H < 0) fail("game: horizon must be >= 0");

    auto kernel_nested = require(j, "kernel", "game");
    Vec kernel_probs;
    kernel_probs.reserve(static_cast<size_t>(S) * A * S);
    if (static_cast<int>(kernel_nested.size()) != S) fail("game: kernel must have |S| rows");
    for (const auto& per_s : kernel_nested) {
        if (static_cast<int>(per_s.size()) != A) fail("game: kernel row must have |A| entries");
        for (const auto& per_a : per_s) {
            if (static_cast<int>(per_a.size()) != S)
                fail("game: kernel distribution must have |S| entries");
            for (const auto& p : per_a) kernel_probs.push_back(p.get<double>());
        }
    }

    const json& reward = require(j, "reward", "game");
    std::vector<Theta> thetas;
    const json& theta_j = require(reward, "theta", "game.reward");
    if (theta_j.is_array()) {
        if (static_cast<int>(theta_j.size()) != H + 1)
            fail("game.reward: theta array must have horizon+1 entries");
        for (const auto& th : theta_j) thetas.push_back(theta_from_json(th));
    } else {
        thetas.assign(static_cast<size_t>(H) + 1, theta_from_json(theta_j));
    }

    Vec L(static_cast<size_t>(H + 1) * S * A * S, 0.0);
    if (reward.contains("L") && reward.contains("L_sparse"))
        fail("game.reward: give either L or L_sparse, not both");
    if (reward.contains("L")) {
        const json& dense = reward["L"];
        if (static_cast<int>(dense.size()) != H + 1) fail("game.reward: L must have horizon+1 slices");
        size_t idx = 0;
        for (const auto& per_t : dense) {
            if (static_cast<int>(per_t.size()) != S) fail("game.reward: L slice must have |S| rows");
            for (const auto& per_s : per_t) {
                if (static_cast<int>(per_s.size()) != A) fail("game.reward: L row must have |A| entries");
                for (const auto& per_a : per_s) {
                    if (static_cast<int>(per_a.size()) != S)
                        fail("game.reward: L innermost dimension must have |S| entries");
                    for (const auto& v : per_a) L[idx++] = v.get<double>();
                }
            }
        }
    } else if (reward.contains("L_sparse")) {
        for (const auto& entry : reward["L_sparse"]) {
            if (entry.size() != 5) fail("game.reward: L_sparse entries are [t, s, a, s', value]");
            int t = entry[0].get<int>(), s = entry[1].get<int>(), a = entry[2].get<int>(),
                sp = entry[3].get<int>();
            if (t < 0 || t > H || s < 0 || s >= S || a < 0 || a >= A || sp < 0 || sp >= S)
                fail("game.reward: L_sparse index out of range");
            L[((static_cast<size_t>(t) * S + s) * A + a) * S + sp] = entry[4].get<double>();
        }
    } else {
        fail("game.reward: missing L or L_sparse");
    }

    std::optional<double> l_max, k_theta;
    if (reward.contains("l_max")) l_max = reward["l_max"].get<double>();
    if (reward.contains("k_theta")) k_theta = reward["k_theta"].get<double>();

    Vec mu0 = require(j, "mu0", "game").get<Vec>();
    return GameSpec::make(std::move(states), std::move(actions), H,
                          TransitionKernel::make(S, A, std::move(kernel_probs)),
                          CoupledReward::make(H, S, A, std::move(L), std::move(thetas), l_max,
                                              k_theta),
                          std::move(mu0));
}

LoadedGame builder_game_from_json(const json& j) {
    if (j.contains("resource_allocation")) {
        const json& block = j["resource_allocation"];
        int horizon = block.value("horizon", 5);
        Vec mu0 = block.value("mu0", Vec{});
        auto [spec, rho] = default_resource_allocation(horizon, std::move(mu0));
        return {std::move(spec), std::move(rho)};
    }
    const json& graph_j = require(j, "graph", "game");
    std::set<std::pair<int, int>> edges;
    for (const auto& e : require(graph_j, "edges", "game.graph")) {
        if (e.size() != 2) fail("game.graph: edges are [from, to] pairs");
        edges.insert({e[0].get<int>(), e[1].get<int>()});
    }
    DirectedGraph graph = DirectedGraph::make(require(graph_j, "nodes", "game.graph").get<int>(),
                                              std::move(edges), graph_j.value("self_loops", true));

    CongestionRewardSpec rewards;
    const json& rew_j = require(j, "congestion_rewards", "game");
    for (const auto& b : require(rew_j, "terminal_bonus", "game.congestion_rewards")) {
        if (b.size() != 2) fail("game.congestion_rewards: terminal_bonus entries are [node, bonus]");
        rewards.terminal_bonus[b[0].get<int>()] = b[1].get<double>();
    }
    rewards.congestion_weight = rew_j.value("congestion_weight", 1.0);
    if (rew_j.contains("theta_terminal"))
        rewards.theta_terminal = theta_from_json(rew_j["theta_terminal"]);

    GameSpec spec = build_graph_game(graph, rewards, require(j, "horizon", "game").get<int>(),
                                     require(j, "mu0", "game").get<Vec>());
    return {std::move(spec), std::nullopt};
}

}  // namespace

LoadedGame game_from_json(const json& j) {
    if (j.contains("resource_allocation") || j.contains("graph")) return builder_game_from_json(j);
    return {direct_game_from_json(j), std::nullopt};
}

json game_to_json(const GameSpec& spec) {
    const int S = spec.n_states();
    const int A = spec.n_actions();
    json states;
    if (spec.states.labels.empty())
        states = S;
    else
        states = json{{"size", S}, {"labels", spec.states.labels}};
    json actions;
    if (spec.actions.labels.empty())
        actions = A;
    else
        actions = json{{"size", A}, {"labels", spec.actions.labels}};

    json kernel = json::array();
    for (int s = 0; s < S; ++s) {
        json per_s = json::array();
        for (int a = 0; a < A; ++a) {
            auto row = spec.kernel.row(s, a);
            per_s.push_back(Vec(row.begin(), row.end()));
        }
        kernel.push_back(std::move(per_s));
    }

    json sparse = json::array();
    for (int t = 0; t <= spec.horizon; ++t)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
                for (int sp = 0; sp < S; ++sp) {
                    double v = spec.reward.l_at(t, s, a, sp);
                    if (v != 0.0) sparse.push_back(json::array({t, s, a, sp, v}));
                }

    json thetas = json::array();
    for (const Theta& th : spec.reward.thetas) thetas.push_back(theta_to_json(th));

    return json{{"states", std::move(states)},
                {"actions", std::move(actions)},
                {"horizon", spec.horizon},
                {"kernel", std::move(kernel)},
                {"reward",
                 json{{"theta", std::move(thetas)},
                      {"L_sparse", std::move(sparse)},
                      {"l_max", spec.reward.l_max},
                      {"k_theta", spec.reward.k_theta}}},
                {"mu0", spec.mu0}};
}

json policy_to_json(const Policy& pi) {
    json steps = json::array();
    for (int t = 0; t < pi.n_steps; ++t) {
        json per_t = json::array();
        for (int s = 0; s < pi.n_states; ++s) {
            auto row = pi.row(t, s);
            per_t.push_back(Vec(row.begin(), row.end()));
        }
        steps.push_back(std::move(per_t));
    }
    return json{{"probs", std::move(steps)}};
}

Policy policy_from_json(const json& j, int n_steps, int n_states, int n_actions) {
    if (j.contains("type")) {
        std::string type = j["type"].get<std::string>();
        if (type == "uniform") return Policy::uniform(n_steps, n_states, n_actions);
        fail("policy: unknown type '" + type + "'");
    }
    const json& probs = require(j, "probs", "policy");
    if (static_cast<int>(probs.size()) != n_steps) fail("policy: probs must have horizon+1 slices");
    Vec flat;
    flat.reserve(static_cast<size_t>(n_steps) * n_states * n_actions);
    for (const auto& per_t : probs) {
        if (static_cast<int>(per_t.size()) != n_states) fail("policy: slice must have |S| rows");
        for (const auto& row : per_t) {
            if (static_cast<int>(row.size()) != n_actions) fail("policy: row must have |A| entries");
            for (const auto& v : row) flat.push_back(v.get<double>());
        }
    }
    return Policy::make(n_steps, n_states, n_actions, std::move(flat));
}

namespace {

McBlock mc_block_from_json(const json& j, const std::string& where) {
    McBlock block;
    block.n_list = require(j, "n_list", where).get<std::vector<int>>();
    if (block.n_list.empty()) fail(where + ": n_list must be nonempty");
    block.mc_reps = require(j, "mc_reps", where).get<int>();
    if (block.mc_reps < 2) fail(where + ": mc_reps must be >= 2");
    block.seed = require(j, "seed", where).get<uint64_t>();  // seed is mandatory for Monte Carlo
    return block;
}

json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        fail(path + ": " + e.what());
    }
    return j;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    json j = parse_json_file(path);
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& ref) {
        std::filesystem::path p(ref);
        return p.is_absolute() ? p.string() : (base / p).string();
    };

    RunConfig config;
    json game_j = require(j, "game", "config");
    if (game_j.contains("file")) game_j = parse_json_file(resolve(game_j["file"].get<std::string>()));
    LoadedGame loaded = game_from_json(game_j);
    config.game = std::move(loaded.spec);

    auto diagnostics = validate(config.game);
    if (!diagnostics.empty()) fail("config game: " + diagnostics.front());

    const int n_steps = config.game.horizon + 1;
    const int S = config.game.n_states();
    const int A = config.game.n_actions();

    json rho_j = require(j, "rho", "config");
    if (rho_j.contains("file")) rho_j = parse_json_file(resolve(rho_j["file"].get<std::string>()));
    if (rho_j.contains("type") && rho_j["type"].get<std::string>() == "builtin") {
        if (!loaded.builtin_rho) fail("config rho: this game form has no built-in reference policy");
        config.rho = *std::move(loaded.builtin_rho);
    } else {
        config.rho = policy_from_json(rho_j, n_steps, S, A);
    }
    auto rho_diag = validate_reference_policy(config.game, config.rho);
    if (!rho_diag.empty()) fail("config rho: " + rho_diag.front());

    config.beta = require(j, "beta", "config").get<double>();
    if (!(config.beta > 0.0)) fail("config: beta must be positive");

    if (j.contains("solver")) {
        const json& solver = j["solver"];
        config.tol = solver.value("tol", config.tol);
        config.max_iter = solver.value("max_iter", config.max_iter);
        config.damping = solver.value("damping", config.damping);
        config.unregularized = solver.value("unregularized", false);
        if (!(config.tol > 0.0)) fail("config solver: tol must be positive");
        if (config.max_iter < 1) fail("config solver: max_iter must be >= 1");
    }

    if (j.contains("experiments")) {
        const json& exp = j["experiments"];
        if (exp.contains("convergence"))
            config.convergence = mc_block_from_json(exp["convergence"], "config experiments.convergence");
        if (exp.contains("deviation"))
            config.deviation = mc_block_from_json(exp["deviation"], "config experiments.deviation");
    }

    if (j.contains("bounds")) {
        const json& b = j["bounds"];
        BoundsBlock block;
        block.beta_max = b.value("beta_max", config.beta);
        block.num_pairs = b.value("num_pairs", 100);
        block.seed = require(b, "seed", "config bounds").get<uint64_t>();
        if (!(block.beta_max > 0.0)) fail("config bounds: beta_max must be positive");
        if (block.num_pairs < 1) fail("config bounds: num_pairs must be >= 1");
        config.bounds = block;
    }

    config.output_dir = j.value("output_dir", std::string{});
    return config;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << contents;
}

uint64_t fnv1a64(std::string_view bytes) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    // trim to the shortest representation that still round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char probe[32];
        std::snprintf(probe, sizeof(probe), "%.*g", prec, x);
        double back = 0.0;
        std::sscanf(probe, "%lf", &back);
        if (back == x) return probe;
    }
    return buf;
}

std::string flow_csv(const GameSpec& spec, const DistributionFlow& flow) {
    std::ostringstream os;
    os << "t";
    for (int s = 0; s < spec.n_states(); ++s) os << "," << spec.states.label(s);
    os << "\n";
    for (int t = 0; t <= flow.horizon(); ++t) {
        os << t;
        for (double x : flow.at(t)) os << "," << format_double(x);
        os << "\n";
    }
    return os.str();
}

std::string reward_table_csv(const RewardTable& table) {
    std::ostringstream os;
    os << "t";
    for (int s = 0; s < table.n_states; ++s)
        for (int a = 0; a < table.n_actions; ++a) os << "," << s << ":" << a;
    os << "\n";
    for (int t = 0; t < table.n_steps; ++t) {
        os << t;
        for (int s = 0; s < table.n_states; ++s)
            for (int a = 0; a < table.n_actions; ++a) os << "," << format_double(table.at(t, s, a));
        os << "\n";
    }
    return os.str();
}

std::string policy_csv(const Policy& pi) {
    std::ostringstream os;
    os << "t,s,a,value\n";
    for (int t = 0; t < pi.n_steps; ++t)
        for (int s = 0; s < pi.n_states; ++s)
            for (int a = 0; a < pi.n_actions; ++a)
                os << t << "," << s << "," << a << "," << format_double(pi.at(t, s, a)) << "\n";
    return os.str();
}

std::string soft_q_csv(const SoftQ& q) {
    std::ostringstream os;
    os << "t,s,a,value\n";
    for (int t = 0; t < q.n_steps; ++t)
        for (int s = 0; s < q.n_states; ++s)
            for (int a = 0; a < q.n_actions; ++a)
                os << t << "," << s << "," << a << "," << format_double(q.at(t, s, a)) << "\n";
    return os.str();
}

std::string residuals_csv(const std::vector<double>& residuals) {
    std::ostringstream os;
    os << "iter,residual\n";
    for (size_t i = 0; i < residuals.size(); ++i)
        os << i << "," << format_double(residuals[i]) << "\n";
    return os.str();
}

std::string convergence_csv(const ConvergenceTable& table) {
    std::ostringstream os;
    os << "N,t,statistic,value,std_err\n";
    for (const auto& row : table.rows) {
        os << row.n_agents << "," << row.t << ",mean_tv," << format_double(row.mean_tv) << ","
           << format_double(row.std_err_tv) << "\n";
        os << row.n_agents << "," << row.t << ",mean_sq_l2," << format_double(row.mean_sq_l2)
           << "," << format_double(row.std_err_sq_l2) << "\n";
    }
    return os.str();
}

std::string deviation_csv(const DeviationSweep& sweep) {
    std::ostringstream os;
    os << "N,gain,std_err\n";
    for (const auto& row : sweep.rows)
        os << row.n_agents << "," << format_double(row.gain) << "," << format_double(row.std_err)
           << "\n";
    return os.str();
}

json lipschitz_report_to_json(const LipschitzReport& rep) {
    json j{{"k_prop", rep.k_prop},
           {"beta_bound", rep.beta_bound},
           {"beta_max", rep.beta_max},
           {"rho_min", rep.rho_min},
           {"rho_max", rep.rho_max},
           {"k_q_overflowed", rep.k_q_overflowed}};
    // JSON has no infinity; report overflowed constants as strings
    auto put = [&](const char* key, double v) {
        if (std::isfinite(v))
            j[key] = v;
        else
            j[key] = "inf";
    };
    put("k_q_kl", rep.k_q_kl);
    put("k_opt_kl", rep.k_opt_kl);
    put("log_k_q_kl", rep.log_k_q_kl);
    return j;
}

json equilibrium_summary_to_json(const EquilibriumResult& result) {
    json j{{"converged", result.converged},
           {"iterations", result.iterations},
           {"exploitability", result.exploitability},
           {"final_residual", result.residuals.empty() ? 0.0 : result.residuals.back()}};
    if (result.empirical_contraction) j["max_residual_ratio"] = *result.empirical_contraction;
    if (auto gaps = tail_cycle_gaps(result)) {
        j["tail_gap_one_step"] = gaps->gap_one_step;
        j["tail_gap_two_step"] = gaps->gap_two_step;
    }
    return j;
}

}  // namespace mfg::io
