#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "baypod/config.hpp"
#include "baypod/suite.hpp"

namespace {

struct CommonOpts {
    std::string config_file;
    std::string output_dir;
    std::string cache_dir;
    int n_iters = -1;
    int workers = -1;
    std::string seeds;
    std::string strategies;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_file, "configuration file (key=value lines)");
    cmd->add_option("--output-dir", opts.output_dir, "output directory override");
    cmd->add_option("--cache-dir", opts.cache_dir, "FOM cache directory override");
    cmd->add_option("--n-iters", opts.n_iters, "AL iteration count override");
    cmd->add_option("--workers", opts.workers, "parallel run workers override");
    cmd->add_option("--seeds", opts.seeds, "comma-separated run seeds override");
    cmd->add_option("--strategies", opts.strategies, "comma-separated strategies override");
}

baypod::ExperimentConfig build_config(const CommonOpts& opts) {
    baypod::ExperimentConfig config;
    if (!opts.config_file.empty()) config = baypod::load_config(opts.config_file);
    if (!opts.output_dir.empty()) config.output_dir = opts.output_dir;
    if (!opts.cache_dir.empty()) config.cache_dir = opts.cache_dir;
    if (const char* env = std::getenv("BAYPOD_CACHE_DIR"); env && *env) config.cache_dir = env;
    if (opts.n_iters > 0) config.n_iters = opts.n_iters;
    if (opts.workers > 0) config.workers = opts.workers;
    if (!opts.seeds.empty()) {
        config.run_seeds.clear();
        std::string tok;
        std::istringstream in(opts.seeds);
        while (std::getline(in, tok, ',')) config.run_seeds.push_back(std::stoull(tok));
    }
    if (!opts.strategies.empty()) {
        config.strategies.clear();
        std::string tok;
        std::istringstream in(opts.strategies);
        while (std::getline(in, tok, ',')) config.strategies.push_back(tok);
    }
    config.validate();
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BayPOD-AL: active learning for a Bayesian POD heat-equation surrogate"};
    app.require_subcommand(1);

    CommonOpts opts;

    auto* simulate = app.add_subcommand("simulate", "solve and cache all FOM trajectories");
    add_common(simulate, opts);

    auto* al_run = app.add_subcommand("al-run", "execute one active-learning run");
    add_common(al_run, opts);
    std::string strategy = "eal";
    std::uint64_t seed = 1;
    std::string resolution = "low";
    al_run->add_option("--strategy", strategy, "eal|ual|random")->required();
    al_run->add_option("--seed", seed, "run seed")->required();
    al_run->add_option("--resolution", resolution, "low|high|both (acquisition time grid)");

    auto* suite = app.add_subcommand("suite", "run all strategies x seeds and aggregate");
    add_common(suite, opts);

    auto* report = app.add_subcommand("report", "render a summary table from run CSVs");
    add_common(report, opts);
    int report_iteration = 5;
    std::string report_dir;
    report->add_option("--iteration", report_iteration, "iteration index to summarize");
    report->add_option("--dir", report_dir, "directory of run CSVs (default: output_dir)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            const auto config = build_config(opts);
            const int solves = baypod::cmd_simulate(config);
            std::cout << "cache populated (" << solves << " fresh solves, "
                      << config.n_kappa << " entries) in " << config.cache_dir << "\n";
        } else if (al_run->parsed()) {
            const auto config = build_config(opts);
            const auto strat = baypod::strategy_from_string(strategy);
            std::vector<baypod::Resolution> resolutions;
            if (resolution == "low") resolutions = {baypod::Resolution::Low};
            else if (resolution == "high") resolutions = {baypod::Resolution::High};
            else if (resolution == "both")
                resolutions = {baypod::Resolution::Low, baypod::Resolution::High};
            else throw std::invalid_argument("resolution must be low|high|both");
            for (auto res : resolutions) {
                const auto history = baypod::cmd_al_run(config, strat, res, seed);
                std::cout << "wrote "
                          << (std::filesystem::path(config.output_dir) /
                              baypod::run_csv_name(strat, res, seed))
                                 .string()
                          << " (" << history.rows.size() << " rows"
                          << (history.truncated ? ", truncated" : "") << ")\n";
            }
        } else if (suite->parsed()) {
            const auto config = build_config(opts);
            const auto result = baypod::cmd_suite(config);
            std::cout << "suite complete: " << result.run_files.size() << " runs, "
                      << result.failed_runs << " failures; report in " << config.output_dir
                      << "\n";
            if (result.failed_runs > 0) return 2;
        } else if (report->parsed()) {
            const auto config = build_config(opts);
            const std::string dir = report_dir.empty() ? config.output_dir : report_dir;
            std::cout << baypod::render_report_table(dir, report_iteration);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
