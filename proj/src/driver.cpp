#include "baypod/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "baypod/acquisition.hpp"
#include "baypod/pod.hpp"

namespace baypod {

namespace {

constexpr std::uint64_t kInitPickTag = 0x517ec7;
constexpr std::uint64_t kTrainTimesTag = 0x7e57a;
constexpr std::uint64_t kTestLowTag = 0x7e571;
constexpr std::uint64_t kTestHighTag = 0x7e572;
constexpr std::uint64_t kAcqHighTag = 0xac9;
constexpr std::uint64_t kModelTag = 0xb0d5;

std::vector<int> sample_distinct_sorted(int population, int count, std::uint64_t seed) {
    std::vector<int> all(population);
    std::iota(all.begin(), all.end(), 0);
    std::vector<int> out;
    out.reserve(count);
    std::mt19937_64 engine(mix64(seed));
    std::sample(all.begin(), all.end(), std::back_inserter(out), count, engine);
    return out;  // std::sample keeps ascending order
}

std::string format_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// For each acquisition time, the labeled training time index nearest in
// absolute distance (ties to the lower index).
std::vector<int> nearest_train_times(const std::vector<int>& acq_tidx,
                                     const std::vector<int>& train_tidx,
                                     const TimeGrid& tgrid) {
    std::vector<int> out;
    out.reserve(acq_tidx.size());
    for (int at : acq_tidx) {
        int best = train_tidx.front();
        double best_d = std::abs(tgrid.times[at] - tgrid.times[best]);
        for (int tt : train_tidx) {
            const double d = std::abs(tgrid.times[at] - tgrid.times[tt]);
            if (d < best_d) {
                best_d = d;
                best = tt;
            }
        }
        out.push_back(best);
    }
    return out;
}

}  // namespace

Strategy strategy_from_string(const std::string& s) {
    if (s == "eal") return Strategy::EAL;
    if (s == "ual") return Strategy::UAL;
    if (s == "random") return Strategy::Random;
    throw std::invalid_argument("unknown strategy: " + s);
}

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::EAL: return "eal";
        case Strategy::UAL: return "ual";
        case Strategy::Random: return "random";
    }
    return "?";
}

std::string to_string(Resolution r) { return r == Resolution::Low ? "low" : "high"; }

PoolSetup build_pools(const ExperimentConfig& config, std::uint64_t run_seed) {
    config.validate();
    PoolSetup setup;
    setup.pool.kappas.resize(config.n_kappa);
    for (int i = 0; i < config.n_kappa; ++i) {
        setup.pool.kappas[i] = config.kappa_min + (config.kappa_max - config.kappa_min) *
                                                      static_cast<double>(i) /
                                                      (config.n_kappa - 1);
    }
    setup.pool.kappas.back() = config.kappa_max;
    for (int i = 0; i < config.n_pool; ++i) setup.pool.pool_indices.push_back(i);
    for (int i = config.n_pool; i < config.n_kappa; ++i) setup.pool.test_indices.push_back(i);

    setup.train_time_indices =
        sample_distinct_sorted(config.n_T, config.n_train_times, mix64(run_seed, kTrainTimesTag));
    setup.test_sets.low_time_indices = sample_distinct_sorted(
        config.n_T, config.n_test_low_times, mix64(config.suite_seed, kTestLowTag));
    setup.test_sets.high_time_indices = sample_distinct_sorted(
        config.n_T, config.n_test_high_times, mix64(config.suite_seed, kTestHighTag));
    setup.acq_high_time_indices = sample_distinct_sorted(
        config.n_T, config.n_acq_high_times, mix64(config.suite_seed, kAcqHighTag));
    return setup;
}

double evaluate_mse(const BayPODModel& model, FomSource& fom, const ParameterPool& pool,
                    const std::vector<int>& time_indices, const TimeGrid& tgrid) {
    const SpatialGrid& sgrid = fom.sgrid();
    std::vector<double> times;
    times.reserve(time_indices.size());
    for (int ti : time_indices) times.push_back(tgrid.times[ti]);

    double sq_sum = 0.0;
    long count = 0;
    for (int ki : pool.test_indices) {
        const double kappa = pool.kappas[ki];
        const Eigen::MatrixXd& traj = fom.trajectory(ki, kappa);
        Eigen::MatrixXd pred = predict_mean_homogenized_batch(model, kappa, times);
        for (std::size_t i = 0; i < times.size(); ++i) {
            const Eigen::VectorXd part = particular_solution_vector(times[i], sgrid);
            const Eigen::VectorXd err =
                pred.row(static_cast<Eigen::Index>(i)).transpose() + part -
                traj.row(time_indices[i]).transpose();
            sq_sum += err.squaredNorm();
            count += sgrid.n_x;
        }
    }
    return sq_sum / static_cast<double>(count);
}

double evaluate_mse(const ModelEnsemble& ensemble, FomSource& fom, const ParameterPool& pool,
                    const std::vector<int>& time_indices, const TimeGrid& tgrid) {
    const SpatialGrid& sgrid = fom.sgrid();
    std::vector<double> times;
    times.reserve(time_indices.size());
    for (int ti : time_indices) times.push_back(tgrid.times[ti]);

    double sq_sum = 0.0;
    long count = 0;
    for (int ki : pool.test_indices) {
        const double kappa = pool.kappas[ki];
        const Eigen::MatrixXd& traj = fom.trajectory(ki, kappa);
        Eigen::MatrixXd pred = predict_mean_homogenized_batch(ensemble.members.front(), kappa, times);
        for (int r = 1; r < ensemble.size(); ++r)
            pred += predict_mean_homogenized_batch(ensemble.members[r], kappa, times);
        pred /= static_cast<double>(ensemble.size());
        for (std::size_t i = 0; i < times.size(); ++i) {
            const Eigen::VectorXd part = particular_solution_vector(times[i], sgrid);
            const Eigen::VectorXd err =
                pred.row(static_cast<Eigen::Index>(i)).transpose() + part -
                traj.row(time_indices[i]).transpose();
            sq_sum += err.squaredNorm();
            count += sgrid.n_x;
        }
    }
    return sq_sum / static_cast<double>(count);
}

ALHistory run_al(const ExperimentConfig& config, Strategy strategy, Resolution resolution,
                 std::uint64_t run_seed, FomSource& fom) {
    const PoolSetup setup = build_pools(config, run_seed);
    const TimeGrid& tgrid = fom.tgrid();
    const SpatialGrid& sgrid = fom.sgrid();
    if (sgrid.n_x != config.n_x || tgrid.n_t != config.n_T)
        throw std::invalid_argument("run_al: FOM source grids do not match configuration");

    ALHistory history;
    history.strategy = strategy;
    history.resolution = resolution;
    history.run_seed = run_seed;

    Rng pick_rng(mix64(run_seed, kInitPickTag));
    std::vector<int> labeled;  // kappa indices, in labeling order
    labeled.push_back(setup.pool.pool_indices[pick_rng.uniform_int(config.n_pool)]);

    // Acquisition time grid per the resolution setting.
    const std::vector<int>& acq_tidx = resolution == Resolution::Low
                                           ? setup.train_time_indices
                                           : setup.acq_high_time_indices;
    std::vector<double> acq_times;
    for (int ti : acq_tidx) acq_times.push_back(tgrid.times[ti]);
    const std::vector<int> gp_target_tidx =
        nearest_train_times(acq_tidx, setup.train_time_indices, tgrid);

    std::vector<Snapshot> homogenized;  // grows with the labeled set

    for (int it = 0;; ++it) {
        const auto t_start = std::chrono::steady_clock::now();

        // Snapshots for the most recently labeled kappa.
        {
            const int ki = labeled.back();
            auto raw = fom.generate_snapshots(ki, setup.pool.kappas[ki], setup.train_time_indices);
            for (const auto& s : raw) homogenized.push_back(homogenize(s, sgrid, tgrid));
        }

        const SnapshotMatrix F = assemble_snapshot_matrix(homogenized);
        const PODBasis basis = pod_basis(F, config.pod_dim);
        const TrainingData data = make_training_data(homogenized, tgrid);
        const ModelEnsemble ensemble = train_ensemble(basis, data, config.schedule,
                                                      mix64(run_seed, kModelTag, it),
                                                      config.n_ensemble);

        ALIterationRecord row;
        row.iteration = it;
        row.selected_kappa = setup.pool.kappas[labeled.back()];
        row.n_labeled = static_cast<int>(homogenized.size());
        row.mse_low =
            evaluate_mse(ensemble, fom, setup.pool, setup.test_sets.low_time_indices, tgrid);
        row.mse_high =
            evaluate_mse(ensemble, fom, setup.pool, setup.test_sets.high_time_indices, tgrid);
        row.elbo_final = ensemble_mean_elbo(ensemble, data);
        if (config.record_timings) {
            row.seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        }
        history.rows.push_back(row);

        if (it == config.n_iters) break;

        std::vector<int> candidates;
        for (int ki : setup.pool.pool_indices)
            if (std::find(labeled.begin(), labeled.end(), ki) == labeled.end())
                candidates.push_back(ki);
        if (candidates.empty()) {
            history.truncated = true;
            break;
        }

        int selected = -1;
        if (strategy == Strategy::Random) {
            selected = random_select(candidates, pick_rng);
        } else {
            GPColumnPosterior gp;
            if (strategy == Strategy::EAL) {
                std::vector<int> sorted_labeled = labeled;
                std::sort(sorted_labeled.begin(), sorted_labeled.end());
                std::vector<double> gp_kappas;
                for (int ki : sorted_labeled) gp_kappas.push_back(setup.pool.kappas[ki]);
                const int n_t_acq = static_cast<int>(acq_tidx.size());
                Eigen::MatrixXd targets(static_cast<int>(sorted_labeled.size()),
                                        static_cast<Eigen::Index>(n_t_acq) * sgrid.n_x);
                for (std::size_t r = 0; r < sorted_labeled.size(); ++r) {
                    const int ki = sorted_labeled[r];
                    const Eigen::MatrixXd& traj = fom.trajectory(ki, setup.pool.kappas[ki]);
                    for (int i = 0; i < n_t_acq; ++i) {
                        targets.row(static_cast<Eigen::Index>(r))
                            .segment(static_cast<Eigen::Index>(i) * sgrid.n_x, sgrid.n_x) =
                            traj.row(gp_target_tidx[i]);
                    }
                }
                gp = gp_fit(gp_kappas, targets);
            }

            std::vector<MeasureMatrix> measures;
            measures.reserve(candidates.size());
            for (int ci : candidates) {
                const std::uint64_t seed =
                    mix64(run_seed, static_cast<std::uint64_t>(it), static_cast<std::uint64_t>(ci));
                const double kappa_c = setup.pool.kappas[ci];
                if (strategy == Strategy::UAL) {
                    measures.push_back(
                        ual_measure(ensemble, kappa_c, acq_times, config.mc_samples, seed));
                } else {
                    measures.push_back(eal_measure(ensemble, gp, kappa_c, acq_times, sgrid,
                                                   config.mc_samples, seed));
                }
                measures.back().resolution = to_string(resolution);
            }
            selected = candidates[select_next(acquisition_scores(measures))];
        }
        labeled.push_back(selected);
    }
    return history;
}

void write_history_csv(const ALHistory& history, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_history_csv: cannot open " + path.string());
    out << "# strategy=" << to_string(history.strategy)
        << " resolution=" << to_string(history.resolution) << " seed=" << history.run_seed
        << " truncated=" << (history.truncated ? 1 : 0) << "\n";
    out << "iteration,selected_kappa,n_labeled,mse_low,mse_high,elbo_final,seconds\n";
    for (const auto& r : history.rows) {
        out << r.iteration << "," << format_g17(r.selected_kappa) << "," << r.n_labeled << ","
            << format_g17(r.mse_low) << "," << format_g17(r.mse_high) << ","
            << format_g17(r.elbo_final) << "," << format_g17(r.seconds) << "\n";
    }
}

ALHistory read_history_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_history_csv: cannot open " + path.string());
    ALHistory h;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream meta(line.substr(1));
            std::string tok;
            while (meta >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = tok.substr(0, eq);
                const std::string value = tok.substr(eq + 1);
                if (key == "strategy") h.strategy = strategy_from_string(value);
                else if (key == "resolution")
                    h.resolution = value == "low" ? Resolution::Low : Resolution::High;
                else if (key == "seed") h.run_seed = std::stoull(value);
                else if (key == "truncated") h.truncated = value == "1";
            }
            continue;
        }
        if (line.rfind("iteration,", 0) == 0) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (cells.size() != 7) throw std::runtime_error("read_history_csv: malformed row");
        ALIterationRecord r;
        r.iteration = std::stoi(cells[0]);
        r.selected_kappa = std::stod(cells[1]);
        r.n_labeled = std::stoi(cells[2]);
        r.mse_low = std::stod(cells[3]);
        r.mse_high = std::stod(cells[4]);
        r.elbo_final = std::stod(cells[5]);
        r.seconds = std::stod(cells[6]);
        h.rows.push_back(r);
    }
    return h;
}

}  // namespace baypod
