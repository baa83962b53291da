#pragma once

#include <map>
#include <set>
#include <utility>

#include "mfg/model.hpp"

// Builders for graph-congestion games: agents traverse a directed graph,
// collect per-node terminal bonuses, and are penalized for sharing a node.
// Actions enumerate out-edges (sorted by target); nodes with fewer
// out-edges than the widest node have their surplus actions alias the
// self-loop, keeping the action space rectangular.

namespace mfg {

struct DirectedGraph {
    int node_count = 0;
    std::set<std::pair<int, int>> edges;
    bool self_loops = false;  // when set, (s, s) is guaranteed for every s

    static DirectedGraph make(int node_count, std::set<std::pair<int, int>> edges,
                              bool ensure_self_loops);
    std::vector<int> out_neighbors(int s) const;  // sorted by target
    int max_out_degree() const;
};

struct CongestionRewardSpec {
    std::map<int, double> terminal_bonus;  // node -> bonus at t = H
    double congestion_weight = 1.0;
    Theta theta_terminal = Theta::identity();
};

// Deterministic-kernel game: L_H(s, a, s') = bonus(s) - [s' == s] * weight,
// L_t = 0 for t < H, theta identity before the terminal step.
GameSpec build_graph_game(const DirectedGraph& graph, const CongestionRewardSpec& rewards,
                          int horizon, Vec mu0);

// The bundled five-node resource-allocation game: a chain 1 -> 2 branching
// to bonus nodes 3 (1.5) and 4 (1.0), with 4 -> 5 and self-loops
// everywhere, squared terminal coupling, and a reference policy that
// splits node 2 evenly between the bonus nodes and nearly pins node 4 to
// its self-loop. Every reference entry is floored at 0.01 and the rows
// renormalized, so the policy is strictly positive.
std::pair<GameSpec, Policy> default_resource_allocation(int horizon = 5, Vec mu0 = {});

}  // namespace mfg
