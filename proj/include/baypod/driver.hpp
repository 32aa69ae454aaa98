#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "baypod/config.hpp"
#include "baypod/heat_fom.hpp"
#include "baypod/vi.hpp"

namespace baypod {

enum class Strategy { EAL, UAL, Random };
enum class Resolution { Low, High };

Strategy strategy_from_string(const std::string& s);
std::string to_string(Strategy s);
std::string to_string(Resolution r);

struct ParameterPool {
    std::vector<double> kappas;     // n_kappa equidistant values
    std::vector<int> pool_indices;  // first n_pool, candidates for labeling
    std::vector<int> test_indices;  // last n_test
};

struct TestSets {
    std::vector<int> low_time_indices;   // sorted, distinct
    std::vector<int> high_time_indices;  // sorted, distinct
};

struct PoolSetup {
    ParameterPool pool;
    std::vector<int> train_time_indices;     // per run seed
    TestSets test_sets;                      // per suite seed
    std::vector<int> acq_high_time_indices;  // per suite seed
};

PoolSetup build_pools(const ExperimentConfig& config, std::uint64_t run_seed);

struct ALIterationRecord {
    int iteration = 0;
    double selected_kappa = 0.0;  // kappa most recently added to the labeled set
    int n_labeled = 0;
    double mse_low = 0.0;
    double mse_high = 0.0;
    double elbo_final = 0.0;
    double seconds = 0.0;
};

struct ALHistory {
    Strategy strategy = Strategy::Random;
    Resolution resolution = Resolution::Low;
    std::uint64_t run_seed = 0;
    std::vector<ALIterationRecord> rows;
    bool truncated = false;
};

// One full active-learning run: n_iters + 1 history rows (including the
// initial randomly seeded labeled set).
ALHistory run_al(const ExperimentConfig& config, Strategy strategy, Resolution resolution,
                 std::uint64_t run_seed, FomSource& fom);

// Mean over all test snapshots and positions of the squared posterior-mean
// prediction error, on the physical temperature scale.
double evaluate_mse(const BayPODModel& model, FomSource& fom, const ParameterPool& pool,
                    const std::vector<int>& time_indices, const TimeGrid& tgrid);

// Ensemble variant: the error of the member-averaged prediction.
double evaluate_mse(const ModelEnsemble& ensemble, FomSource& fom, const ParameterPool& pool,
                    const std::vector<int>& time_indices, const TimeGrid& tgrid);

void write_history_csv(const ALHistory& history, const std::filesystem::path& path);
ALHistory read_history_csv(const std::filesystem::path& path);

}  // namespace baypod
