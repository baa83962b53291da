#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"
#include "mfg/environments.hpp"
#include "mfg/equilibrium.hpp"
#include "mfg/finite_population.hpp"
#include "mfg/model.hpp"

// JSON (de)serialization for games, policies and run configs, CSV writers
// for every exportable artifact, and the checksum helper the run manifest
// uses. Schemas are documented in the README.

namespace mfg::io {

nlohmann::json theta_to_json(const Theta& theta);
Theta theta_from_json(const nlohmann::json& j);

nlohmann::json game_to_json(const GameSpec& spec);
// Accepts the direct tensor form, a {"graph": ..., "congestion_rewards": ...}
// builder form, or the bundled {"resource_allocation": {...}} shortcut.
// Builder forms may carry a built-in reference policy.
struct LoadedGame {
    GameSpec spec;
    std::optional<Policy> builtin_rho;
};
LoadedGame game_from_json(const nlohmann::json& j);

nlohmann::json policy_to_json(const Policy& pi);
Policy policy_from_json(const nlohmann::json& j, int n_steps, int n_states, int n_actions);

struct McBlock {
    std::vector<int> n_list;
    int mc_reps = 0;
    uint64_t seed = 0;
};

struct BoundsBlock {
    double beta_max = 0.0;
    int num_pairs = 100;
    uint64_t seed = 0;
};

struct RunConfig {
    GameSpec game;
    Policy rho;
    double beta = 1.0;
    double tol = 1e-8;
    int max_iter = 500;
    double damping = 0.0;
    bool unregularized = false;
    std::optional<McBlock> convergence;
    std::optional<McBlock> deviation;
    std::optional<BoundsBlock> bounds;
    std::string output_dir;
};

// Parses and validates a run config; relative file references resolve
// against the config's own directory. Throws std::invalid_argument with a
// descriptive message on any problem.
RunConfig load_run_config(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

// FNV-1a, for the run manifest's config hash and artifact checksums.
uint64_t fnv1a64(std::string_view bytes);

// Shortest decimal that round-trips the double.
std::string format_double(double x);

std::string flow_csv(const GameSpec& spec, const DistributionFlow& flow);
std::string reward_table_csv(const RewardTable& table);
std::string policy_csv(const Policy& pi);
std::string soft_q_csv(const SoftQ& q);
std::string residuals_csv(const std::vector<double>& residuals);
std::string convergence_csv(const ConvergenceTable& table);
std::string deviation_csv(const DeviationSweep& sweep);

nlohmann::json lipschitz_report_to_json(const LipschitzReport& rep);
nlohmann::json equilibrium_summary_to_json(const EquilibriumResult& result);

}  // namespace mfg::io
