// Command-line harness: loads a run config, drives the solver and the
// Monte Carlo experiments, and emits CSV artifacts plus a JSON report and
// manifest per run.
//
// Exit codes: 0 success, 1 config error, 2 non-convergence.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mfg/environments.hpp"
#include "mfg/equilibrium.hpp"
#include "mfg/finite_population.hpp"
#include "mfg/io.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitNoConvergence = 2;

struct Options {
    std::string config_path;
    std::string out_dir;
    std::optional<uint64_t> seed;
    std::optional<double> beta;
    bool quiet = false;
};

void add_common(CLI::App* cmd, Options& opts) {
    cmd->add_option("--config", opts.config_path, "Run config (JSON)")->required();
    cmd->add_option("--out", opts.out_dir, "Output directory (overrides config)");
    cmd->add_option("--seed", opts.seed, "Seed override for Monte Carlo blocks");
    cmd->add_option("--beta", opts.beta, "Inverse temperature override");
    cmd->add_flag("--quiet", opts.quiet, "Suppress progress output");
}

struct Run {
    mfg::io::RunConfig config;
    std::string out_dir;
    uint64_t config_hash = 0;
    json manifest_seeds;
    std::map<std::string, uint64_t> checksums;
};

Run prepare(const Options& opts) {
    Run run;
    run.config = mfg::io::load_run_config(opts.config_path);
    run.config_hash = mfg::io::fnv1a64(mfg::io::read_file(opts.config_path));

    if (opts.beta) {
        if (!(*opts.beta > 0.0)) throw std::invalid_argument("--beta must be positive");
        run.config.beta = *opts.beta;
    }
    if (opts.seed) {
        if (run.config.convergence) run.config.convergence->seed = *opts.seed;
        if (run.config.deviation) run.config.deviation->seed = *opts.seed;
        if (run.config.bounds) run.config.bounds->seed = *opts.seed;
    }

    run.out_dir = !opts.out_dir.empty() ? opts.out_dir : run.config.output_dir;
    if (run.out_dir.empty()) {
        const char* env = std::getenv("MFG_OUT_DIR");
        run.out_dir = env ? env : ".";
    }
    std::filesystem::create_directories(run.out_dir);
    return run;
}

void emit(Run& run, const std::string& name, const std::string& contents) {
    mfg::io::write_file((std::filesystem::path(run.out_dir) / name).string(), contents);
    run.checksums[name] = mfg::io::fnv1a64(contents);
}

char hex_digit(uint64_t v) { return "0123456789abcdef"[v & 0xf]; }

std::string hex64(uint64_t v) {
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<size_t>(i)] = hex_digit(v);
    return s;
}

void write_manifest(Run& run, const std::string& command) {
    json artifacts;
    for (const auto& [name, sum] : run.checksums) artifacts[name] = hex64(sum);
    json manifest{{"command", command},
                  {"config_hash", hex64(run.config_hash)},
                  {"beta", run.config.beta},
                  {"seeds", run.manifest_seeds},
                  {"artifacts", std::move(artifacts)}};
    mfg::io::write_file((std::filesystem::path(run.out_dir) / "manifest.json").string(),
                        manifest.dump(2) + "\n");
}

mfg::SolverOptions solver_options(const mfg::io::RunConfig& config) {
    mfg::SolverOptions o;
    o.tol = config.tol;
    o.max_iter = config.max_iter;
    o.damping = config.damping;
    return o;
}

mfg::EquilibriumResult run_solver(const mfg::io::RunConfig& config) {
    if (config.unregularized)
        return mfg::solve_unregularized(config.game, solver_options(config));
    return mfg::solve_mfe(config.game, config.rho, config.beta, solver_options(config));
}

int cmd_solve(const Options& opts) {
    Run run = prepare(opts);
    const auto& config = run.config;
    mfg::EquilibriumResult result = run_solver(config);

    json report = mfg::io::equilibrium_summary_to_json(result);
    report["mode"] = config.unregularized ? "unregularized" : "regularized";
    if (!config.unregularized) report["beta"] = config.beta;
    if (!result.converged) {
        if (auto gaps = mfg::tail_cycle_gaps(result);
            gaps && gaps->gap_two_step < 1e-6 && gaps->gap_one_step > 0.1) {
            report["cycle"] = "period-2: successive flows far apart, two-step gap below 1e-6";
        }
    }
    emit(run, "report.json", report.dump(2) + "\n");
    emit(run, "policy.csv", mfg::io::policy_csv(result.pi_star));
    emit(run, "flow.csv", mfg::io::flow_csv(config.game, result.mu_star));
    emit(run, "residuals.csv", mfg::io::residuals_csv(result.residuals));
    write_manifest(run, "solve");

    if (!opts.quiet) {
        std::printf("%s after %d iterations (residual %.3e, exploitability %.3e)\n",
                    result.converged ? "converged" : "did not converge", result.iterations,
                    result.residuals.empty() ? 0.0 : result.residuals.back(),
                    result.exploitability);
        if (report.contains("cycle"))
            std::printf("cycle: %s\n", report["cycle"].get<std::string>().c_str());
    }
    return result.converged ? kExitOk : kExitNoConvergence;
}

int cmd_bounds(const Options& opts) {
    Run run = prepare(opts);
    const auto& config = run.config;
    if (!config.bounds)
        throw std::invalid_argument("bounds command needs a 'bounds' config block (with a seed)");
    const auto& block = *config.bounds;

    mfg::LipschitzReport rep =
        mfg::lipschitz_report(config.game, config.rho, config.beta, block.beta_max);
    double empirical = mfg::estimate_contraction(config.game, config.rho, config.beta,
                                                 block.num_pairs, block.seed);

    json report = mfg::io::lipschitz_report_to_json(rep);
    report["beta"] = config.beta;
    report["empirical_contraction"] = empirical;
    report["num_pairs"] = block.num_pairs;
    report["beta_exceeds_theoretical_bound"] = config.beta >= rep.beta_bound;
    run.manifest_seeds["bounds"] = block.seed;
    emit(run, "bounds.json", report.dump(2) + "\n");
    write_manifest(run, "bounds");

    if (!opts.quiet)
        std::printf("beta_bound=%.6g empirical_contraction=%.4f%s\n", rep.beta_bound, empirical,
                    config.beta >= rep.beta_bound ? " (beta exceeds the theoretical bound)" : "");
    return kExitOk;
}

int cmd_deviate(const Options& opts) {
    Run run = prepare(opts);
    const auto& config = run.config;
    if (!config.deviation)
        throw std::invalid_argument("deviate command needs an 'experiments.deviation' config block");
    if (config.unregularized)
        throw std::invalid_argument("deviate command needs a regularized config (beta, rho)");

    mfg::EquilibriumResult eq = run_solver(config);
    if (!eq.converged) {
        if (!opts.quiet) std::printf("equilibrium solve did not converge; no deviation sweep\n");
        return kExitNoConvergence;
    }

    const auto& block = *config.deviation;
    mfg::DeviationSweep sweep =
        mfg::deviation_sweep(config.game, config.rho, config.beta, eq.pi_star, block.n_list,
                             block.mc_reps, block.seed, 10.0 * config.tol);

    json report{{"beta", config.beta},
                {"mc_reps", block.mc_reps},
                {"noise_floor", 10.0 * config.tol},
                {"n_list", block.n_list}};
    if (sweep.slope)
        report["slope"] = *sweep.slope;
    else
        report["slope_diagnostic"] = sweep.note;
    run.manifest_seeds["deviation"] = block.seed;
    emit(run, "deviation.csv", mfg::io::deviation_csv(sweep));
    emit(run, "deviate_report.json", report.dump(2) + "\n");
    write_manifest(run, "deviate");

    if (!opts.quiet) {
        if (sweep.slope)
            std::printf("deviation gain slope %.4f over %zu points\n", *sweep.slope,
                        sweep.rows.size());
        else
            std::printf("%s\n", sweep.note.c_str());
    }
    return kExitOk;
}

int cmd_converge(const Options& opts) {
    Run run = prepare(opts);
    const auto& config = run.config;
    if (!config.convergence)
        throw std::invalid_argument(
            "converge command needs an 'experiments.convergence' config block");

    mfg::EquilibriumResult eq = run_solver(config);
    if (!eq.converged) {
        if (!opts.quiet) std::printf("equilibrium solve did not converge; no convergence sweep\n");
        return kExitNoConvergence;
    }

    const auto& block = *config.convergence;
    mfg::ConvergenceTable table =
        mfg::convergence_sweep(config.game, eq.pi_star, block.n_list, block.mc_reps, block.seed);

    json slopes = json::array();
    for (const auto& s : table.slope_per_t) slopes.push_back(s ? json(*s) : json(nullptr));
    json report{{"mc_reps", block.mc_reps}, {"n_list", block.n_list}, {"slope_per_t", slopes}};
    run.manifest_seeds["convergence"] = block.seed;
    emit(run, "convergence.csv", mfg::io::convergence_csv(table));
    emit(run, "converge_report.json", report.dump(2) + "\n");
    write_manifest(run, "converge");

    if (!opts.quiet) {
        std::printf("empirical-vs-exact slopes per t:");
        for (const auto& s : table.slope_per_t)
            if (s)
                std::printf(" %.3f", *s);
            else
                std::printf(" n/a");
        std::printf("\n");
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Entropy-regularized mean-field game solver and experiment harness"};
    app.require_subcommand(1);

    Options solve_opts, bounds_opts, deviate_opts, converge_opts;
    CLI::App* solve = app.add_subcommand("solve", "Solve for the regularized equilibrium");
    add_common(solve, solve_opts);
    CLI::App* bounds = app.add_subcommand("bounds", "Lipschitz constants and contraction estimate");
    add_common(bounds, bounds_opts);
    CLI::App* deviate = app.add_subcommand("deviate", "Finite-population deviation-gain sweep");
    add_common(deviate, deviate_opts);
    CLI::App* converge = app.add_subcommand("converge", "Empirical-distribution convergence sweep");
    add_common(converge, converge_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return cmd_solve(solve_opts);
        if (bounds->parsed()) return cmd_bounds(bounds_opts);
        if (deviate->parsed()) return cmd_deviate(deviate_opts);
        if (converge->parsed()) return cmd_converge(converge_opts);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfigError;
    }
    return kExitConfigError;
}
