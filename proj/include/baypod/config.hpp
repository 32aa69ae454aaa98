#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "baypod/vi.hpp"

namespace baypod {

struct ExperimentConfig {
    int n_x = 200;
    int n_T = 628;
    double length = 1.0;
    double kappa_min = 0.1;
    double kappa_max = 0.9;
    int n_kappa = 90;
    int n_pool = 70;
    int n_test = 20;
    int pod_dim = 7;
    int n_train_times = 50;
    int n_test_low_times = 50;
    int n_test_high_times = 200;
    int n_acq_high_times = 200;
    int n_iters = 20;
    std::vector<std::string> strategies{"eal", "ual", "random"};
    std::vector<std::uint64_t> run_seeds{1, 2, 3, 4, 5};
    std::uint64_t suite_seed = 2024;
    int mc_samples = 100;
    TrainSchedule schedule;
    int n_ensemble = 3;  // independently initialized members trained per iteration; predictions average them
    int substeps = 4;
    std::string output_dir = "out";
    std::string cache_dir = "cache";
    bool record_timings = true;
    int workers = 1;

    void validate() const;
};

std::string serialize_config(const ExperimentConfig& c);
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_hash(const ExperimentConfig& c);

}  // namespace baypod
