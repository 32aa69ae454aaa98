#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "baypod/rng.hpp"
#include "baypod/vi.hpp"

namespace baypod {

// Call/factorization counters used by the performance-contract and
// strategy-isolation tests.
namespace instrument {
inline std::atomic<long> gp_cholesky_count{0};
inline std::atomic<long> ual_measure_calls{0};
inline std::atomic<long> eal_measure_calls{0};
inline void reset() {
    gp_cholesky_count = 0;
    ual_measure_calls = 0;
    eal_measure_calls = 0;
}
}  // namespace instrument

struct MeasureMatrix {
    double kappa = 0.0;
    Eigen::MatrixXd values;  // n_t^p x n_x, finite and >= 0
    std::string resolution;  // "low" or "high"
};

// Shared-kernel GP posterior over the kappa axis, one target column per
// (time, position) pair. The kernel matrix is factorized once per fit.
struct GPColumnPosterior {
    Eigen::VectorXd train_inputs;  // sorted, deduplicated kappas
    double length_scale = 0.1;
    double signal_var = 1.0;
    double jitter = 1e-8;
    Eigen::MatrixXd chol_lower;  // Cholesky factor of K + jitter*I
    Eigen::MatrixXd alpha;       // (K + jitter*I)^{-1} Y, n_train x n_cols
};

GPColumnPosterior gp_fit(const std::vector<double>& labeled_kappas,
                         const Eigen::MatrixXd& targets);

// Predictive means for all columns plus the (column-independent) variance.
void gp_predict(const GPColumnPosterior& gp, double kappa_star, Eigen::VectorXd& means,
                double& variance);

// MC predictive variance per (time, position) on the homogenized scale.
MeasureMatrix ual_measure(const BayPODModel& model, double kappa,
                          const std::vector<double>& times, int S, std::uint64_t seed);

// Ensemble variant: the mixture's predictive variance, estimated as the
// unbiased sample variance of S draws per member pooled across members
// (member r draws with seed for r = 0 and mix64(seed, r) otherwise).
MeasureMatrix ual_measure(const ModelEnsemble& ensemble, double kappa,
                          const std::vector<double>& times, int S, std::uint64_t seed);

// Exact expected posterior loss under the GP posterior over the ground
// truth: (mu_GP - f_tilde)^2 + var_GP, with f_tilde the MC predictive mean
// on the physical scale. gp columns must be ordered time-major to match
// `times` x positions.
MeasureMatrix eal_measure(const BayPODModel& model, const GPColumnPosterior& gp, double kappa,
                          const std::vector<double>& times, const SpatialGrid& sgrid, int S,
                          std::uint64_t seed);

// Ensemble variant: f_tilde is the member-pooled MC predictive mean (the
// ensemble's point prediction), with the same per-member seeding as the
// ensemble ual_measure.
MeasureMatrix eal_measure(const ModelEnsemble& ensemble, const GPColumnPosterior& gp,
                          double kappa, const std::vector<double>& times,
                          const SpatialGrid& sgrid, int S, std::uint64_t seed);

struct AcquisitionScores {
    Eigen::VectorXd scores;
    int argmax = -1;
    std::string tie_break = "lowest-index";
};

// Grand mean of each measure matrix; argmax with lowest-index tie-break.
AcquisitionScores acquisition_scores(const std::vector<MeasureMatrix>& measures);

int select_next(const AcquisitionScores& scores);

// Uniform draw from the remaining pool.
int random_select(const std::vector<int>& pool, Rng& rng);

}  // namespace baypod
