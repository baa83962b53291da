#include "mfg/environments.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace mfg {

DirectedGraph DirectedGraph::make(int node_count, std::set<std::pair<int, int>> edges,
                                  bool ensure_self_loops) {
    if (node_count < 1) throw std::invalid_argument("DirectedGraph: need at least one node");
    for (const auto& [u, v] : edges)
        if (u < 0 || u >= node_count || v < 0 || v >= node_count)
            throw std::invalid_argument("DirectedGraph: edge endpoint out of range");
    if (ensure_self_loops)
        for (int s = 0; s < node_count; ++s) edges.insert({s, s});
    DirectedGraph g{node_count, std::move(edges), ensure_self_loops};
    for (int s = 0; s < node_count; ++s)
        if (g.out_neighbors(s).empty())
            throw std::invalid_argument("DirectedGraph: node " + std::to_string(s) +
                                        " has no outgoing edge");
    return g;
}

std::vector<int> DirectedGraph::out_neighbors(int s) const {
    std::vector<int> out;
    for (auto it = edges.lower_bound({s, 0}); it != edges.end() && it->first == s; ++it)
        out.push_back(it->second);
    return out;  // set ordering keeps targets sorted
}

int DirectedGraph::max_out_degree() const {
    int deg = 0;
    for (int s = 0; s < node_count; ++s)
        deg = std::max(deg, static_cast<int>(out_neighbors(s).size()));
    return deg;
}

GameSpec build_graph_game(const DirectedGraph& graph, const CongestionRewardSpec& rewards,
                          int horizon, Vec mu0) {
    const int S = graph.node_count;
    const int A = graph.max_out_degree();
    if (horizon < 0) throw std::invalid_argument("build_graph_game: horizon must be >= 0");
    for (const auto& [node, bonus] : rewards.terminal_bonus) {
        (void)bonus;
        if (node < 0 || node >= S)
            throw std::invalid_argument("build_graph_game: bonus node out of range");
    }

    // deterministic kernel: action j moves to the j-th out-neighbor;
    // surplus actions alias the self-loop
    Vec kernel_probs(static_cast<size_t>(S) * A * S, 0.0);
    for (int s = 0; s < S; ++s) {
        std::vector<int> nbrs = graph.out_neighbors(s);
        const bool has_self = std::find(nbrs.begin(), nbrs.end(), s) != nbrs.end();
        if (static_cast<int>(nbrs.size()) < A && !has_self)
            throw std::invalid_argument("build_graph_game: node " + std::to_string(s) +
                                        " needs a self-loop to pad its action set");
        for (int a = 0; a < A; ++a) {
            int target = a < static_cast<int>(nbrs.size()) ? nbrs[static_cast<size_t>(a)] : s;
            kernel_probs[(static_cast<size_t>(s) * A + a) * S + target] = 1.0;
        }
    }

    Vec L(static_cast<size_t>(horizon + 1) * S * A * S, 0.0);
    for (int s = 0; s < S; ++s) {
        auto it = rewards.terminal_bonus.find(s);
        const double bonus = it == rewards.terminal_bonus.end() ? 0.0 : it->second;
        for (int a = 0; a < A; ++a)
            for (int sp = 0; sp < S; ++sp)
                L[((static_cast<size_t>(horizon) * S + s) * A + a) * S + sp] =
                    bonus - (sp == s ? rewards.congestion_weight : 0.0);
    }
    std::vector<Theta> thetas(static_cast<size_t>(horizon) + 1, Theta::identity());
    thetas.back() = rewards.theta_terminal;

    std::vector<std::string> state_labels;
    state_labels.reserve(static_cast<size_t>(S));
    for (int s = 0; s < S; ++s) state_labels.push_back(std::to_string(s + 1));

    return GameSpec::make(StateSpace::labeled(std::move(state_labels)), ActionSpace::of(A),
                          horizon, TransitionKernel::make(S, A, std::move(kernel_probs)),
                          CoupledReward::make(horizon, S, A, std::move(L), std::move(thetas)),
                          std::move(mu0));
}

std::pair<GameSpec, Policy> default_resource_allocation(int horizon, Vec mu0) {
    if (horizon < 2)
        throw std::invalid_argument(
            "default_resource_allocation: horizon must be >= 2 so the bonus nodes are reachable");
    constexpr int kNodes = 5;
    if (mu0.empty()) {
        mu0.assign(kNodes, 0.0);
        mu0[0] = 1.0;  // everyone starts at node 1
    }

    DirectedGraph graph =
        DirectedGraph::make(kNodes, {{0, 1}, {1, 2}, {1, 3}, {3, 4}}, /*ensure_self_loops=*/true);
    CongestionRewardSpec rewards;
    rewards.terminal_bonus = {{2, 1.5}, {3, 1.0}};
    rewards.congestion_weight = 1.0;
    rewards.theta_terminal = Theta::square();

    GameSpec spec = build_graph_game(graph, rewards, horizon, std::move(mu0));
    const int A = spec.n_actions();

    // Reference rows over out-edge actions (targets sorted, self-loop
    // first): node 2 splits evenly between nodes 3 and 4; node 4 sends
    // 0.01 toward node 5 and keeps the rest; elsewhere uniform over
    // out-edges. Floor at 0.01 and renormalize so every action, padded
    // ones included, has positive mass.
    constexpr double kFloor = 0.01;
    Policy rho = Policy::zeros(horizon + 1, kNodes, A);
    for (int t = 0; t <= horizon; ++t) {
        for (int s = 0; s < kNodes; ++s) {
            auto row = rho.row(t, s);
            const int degree = static_cast<int>(graph.out_neighbors(s).size());
            if (s == 1) {
                row[1] = 0.5;  // -> node 3
                row[2] = 0.5;  // -> node 4
            } else if (s == 3) {
                row[0] = 0.99;  // self-loop
                row[1] = 0.01;  // -> node 5
            } else {
                for (int a = 0; a < degree; ++a) row[a] = 1.0 / degree;
            }
            double sum = 0.0;
            for (int a = 0; a < A; ++a) {
                row[a] = std::max(row[a], kFloor);
                sum += row[a];
            }
            for (int a = 0; a < A; ++a) row[a] /= sum;
        }
    }
    return {std::move(spec), std::move(rho)};
}

}  // namespace mfg
