#include "baypod/suite.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

namespace baypod {

namespace {

SnapshotCache make_cache(const ExperimentConfig& config) {
    return SnapshotCache(config.cache_dir, SpatialGrid::uniform(config.n_x, config.length),
                         TimeGrid::uniform(config.n_T), BoundaryConditions::benchmark_default(),
                         config.substeps);
}

std::string format_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct RunSpec {
    Strategy strategy;
    Resolution resolution;
    std::uint64_t seed;
};

std::vector<RunSpec> suite_run_plan(const ExperimentConfig& config) {
    std::vector<RunSpec> plan;
    for (const auto& name : config.strategies) {
        const Strategy strategy = strategy_from_string(name);
        for (std::uint64_t seed : config.run_seeds) {
            if (strategy == Strategy::Random) {
                plan.push_back({strategy, Resolution::Low, seed});
            } else {
                plan.push_back({strategy, Resolution::Low, seed});
                plan.push_back({strategy, Resolution::High, seed});
            }
        }
    }
    return plan;
}

}  // namespace

int cmd_simulate(const ExperimentConfig& config) {
    config.validate();
    SnapshotCache cache = make_cache(config);
    PoolSetup setup = build_pools(config, config.run_seeds.front());
    for (int i = 0; i < config.n_kappa; ++i) cache.trajectory(i, setup.pool.kappas[i]);
    return cache.solve_count();
}

std::string run_csv_name(Strategy strategy, Resolution resolution, std::uint64_t seed) {
    std::ostringstream os;
    os << to_string(strategy);
    if (strategy != Strategy::Random) os << "_" << to_string(resolution);
    os << "_seed" << seed << ".csv";
    return os.str();
}

ALHistory cmd_al_run(const ExperimentConfig& config, Strategy strategy, Resolution resolution,
                     std::uint64_t seed) {
    config.validate();
    std::filesystem::create_directories(config.output_dir);
    SnapshotCache cache = make_cache(config);
    ALHistory history = run_al(config, strategy, resolution, seed, cache);
    write_history_csv(history,
                      std::filesystem::path(config.output_dir) /
                          run_csv_name(strategy, resolution, seed));
    return history;
}

std::vector<CurvePoint> aggregate_curves(const std::vector<ALHistory>& runs) {
    // key: (strategy, resolution, iteration) -> per-run MSE values
    std::map<std::tuple<std::string, std::string, int>, std::vector<double>> buckets;
    for (const auto& run : runs) {
        for (const auto& row : run.rows) {
            if (run.strategy == Strategy::Random) {
                buckets[{to_string(run.strategy), "low", row.iteration}].push_back(row.mse_low);
                buckets[{to_string(run.strategy), "high", row.iteration}].push_back(row.mse_high);
            } else {
                const std::string res = to_string(run.resolution);
                buckets[{to_string(run.strategy), res, row.iteration}].push_back(
                    res == "low" ? row.mse_low : row.mse_high);
            }
        }
    }
    std::vector<CurvePoint> curves;
    for (const auto& [key, values] : buckets) {
        CurvePoint p;
        p.strategy = std::get<0>(key);
        p.resolution = std::get<1>(key);
        p.iteration = std::get<2>(key);
        p.n_runs = static_cast<int>(values.size());
        double sum = 0.0;
        for (double v : values) sum += v;
        p.mean_mse = sum / values.size();
        if (values.size() >= 2) {
            double sq = 0.0;
            for (double v : values) sq += (v - p.mean_mse) * (v - p.mean_mse);
            p.std_mse = std::sqrt(sq / (values.size() - 1));
        }
        curves.push_back(p);
    }
    return curves;
}

SuiteReport cmd_suite(const ExperimentConfig& config) {
    config.validate();
    std::filesystem::create_directories(config.output_dir);
    cmd_simulate(config);  // populate the shared cache up front

    const std::vector<RunSpec> plan = suite_run_plan(config);
    std::vector<ALHistory> histories(plan.size());
    std::vector<std::string> errors(plan.size());
    std::vector<bool> ok(plan.size(), false);

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= plan.size()) return;
            try {
                histories[i] = cmd_al_run(config, plan[i].strategy, plan[i].resolution,
                                          plan[i].seed);
                ok[i] = true;
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const int n_workers = std::max(1, std::min<int>(config.workers,
                                                    static_cast<int>(plan.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int w = 0; w < n_workers; ++w) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    SuiteReport report;
    report.config_hash = config_hash(config);
    std::vector<ALHistory> completed;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        if (ok[i]) {
            completed.push_back(histories[i]);
            report.run_files.push_back(
                run_csv_name(plan[i].strategy, plan[i].resolution, plan[i].seed));
        } else {
            ++report.failed_runs;
            std::cerr << "run failed ("
                      << run_csv_name(plan[i].strategy, plan[i].resolution, plan[i].seed)
                      << "): " << errors[i] << "\n";
        }
    }
    report.curves = aggregate_curves(completed);

    // plot-ready curves
    {
        std::ofstream out(std::filesystem::path(config.output_dir) / "curves.csv");
        out << "iteration,strategy,resolution,mean_mse,std_mse,n_runs\n";
        for (const auto& p : report.curves) {
            out << p.iteration << "," << p.strategy << "," << p.resolution << ","
                << format_g17(p.mean_mse) << "," << format_g17(p.std_mse) << "," << p.n_runs
                << "\n";
        }
    }
    // machine-readable report
    {
        nlohmann::json j;
        j["config_hash"] = report.config_hash;
        j["config"] = serialize_config(config);
        j["failed_runs"] = report.failed_runs;
        j["runs"] = report.run_files;
        nlohmann::json curves = nlohmann::json::array();
        for (const auto& p : report.curves) {
            curves.push_back({{"iteration", p.iteration},
                              {"strategy", p.strategy},
                              {"resolution", p.resolution},
                              {"mean_mse", p.mean_mse},
                              {"std_mse", p.std_mse},
                              {"n_runs", p.n_runs}});
        }
        j["curves"] = std::move(curves);
        std::ofstream out(std::filesystem::path(config.output_dir) / "report.json");
        out << j.dump(2) << "\n";
    }
    return report;
}

std::string render_report_table(const std::filesystem::path& run_dir, int iteration) {
    std::vector<ALHistory> runs;
    std::vector<std::string> files;
    if (!std::filesystem::is_directory(run_dir))
        throw std::runtime_error("report: no such directory: " + run_dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(run_dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.path().extension() != ".csv" || name == "curves.csv") continue;
        runs.push_back(read_history_csv(entry.path()));
        files.push_back(name);
    }
    if (runs.empty()) throw std::runtime_error("report: no run CSVs found in " + run_dir.string());

    const auto curves = aggregate_curves(runs);
    struct Cell {
        double mean = std::nan("");
        double stddev = std::nan("");
        int n = 0;
    };
    std::map<std::string, std::map<std::string, Cell>> table;  // strategy -> resolution -> cell
    for (const auto& p : curves) {
        if (p.iteration != iteration) continue;
        table[p.strategy][p.resolution] = {p.mean_mse, p.std_mse, p.n_runs};
    }
    if (table.empty())
        throw std::runtime_error("report: no rows at iteration " + std::to_string(iteration));

    std::ostringstream os;
    os << "Approximation error at AL iteration " << iteration << " (" << files.size()
       << " runs)\n";
    os << std::left;
    char line[160];
    std::snprintf(line, sizeof(line), "%-10s %12s %12s %12s %12s\n", "Method", "Low mean",
                  "Low std", "High mean", "High std");
    os << line;
    for (const auto& [strategy, cells] : table) {
        auto fmt = [&](const char* res, bool stddev) -> std::string {
            auto it = cells.find(res);
            if (it == cells.end()) return "-";
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.3e", stddev ? it->second.stddev : it->second.mean);
            return buf;
        };
        std::snprintf(line, sizeof(line), "%-10s %12s %12s %12s %12s\n", strategy.c_str(),
                      fmt("low", false).c_str(), fmt("low", true).c_str(),
                      fmt("high", false).c_str(), fmt("high", true).c_str());
        os << line;
    }
    return os.str();
}

}  // namespace baypod
