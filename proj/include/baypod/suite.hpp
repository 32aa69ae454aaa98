#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "baypod/config.hpp"
#include "baypod/driver.hpp"

namespace baypod {

// Solve and cache every kappa trajectory. Idempotent; returns the number of
// fresh solves performed.
int cmd_simulate(const ExperimentConfig& config);

std::string run_csv_name(Strategy strategy, Resolution resolution, std::uint64_t seed);

// Execute one AL run and write its history CSV into output_dir.
ALHistory cmd_al_run(const ExperimentConfig& config, Strategy strategy, Resolution resolution,
                     std::uint64_t seed);

struct CurvePoint {
    int iteration = 0;
    std::string strategy;
    std::string resolution;
    double mean_mse = 0.0;
    double std_mse = 0.0;
    int n_runs = 0;
};

struct SuiteReport {
    std::string config_hash;
    std::vector<CurvePoint> curves;
    std::vector<std::string> run_files;
    int failed_runs = 0;
};

// Aggregate per-iteration statistics. Random runs contribute to both
// resolutions; model-based strategies contribute their own resolution.
std::vector<CurvePoint> aggregate_curves(const std::vector<ALHistory>& runs);

// Run all strategies x seeds (model-based strategies at both resolutions),
// write per-run CSVs, curves.csv, and report.json into output_dir.
SuiteReport cmd_suite(const ExperimentConfig& config);

// Table-1-shaped text summary of the run CSVs found in run_dir.
std::string render_report_table(const std::filesystem::path& run_dir, int iteration);

}  // namespace baypod
