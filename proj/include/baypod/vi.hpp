#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "baypod/grids.hpp"
#include "baypod/pod.hpp"
#include "baypod/rng.hpp"

namespace baypod {

// Inputs are normalized to [0,1] before entering the coefficient network.
inline double normalize_time(double t) { return t / (2.0 * std::numbers::pi); }
inline double normalize_kappa(double kappa) { return (kappa - 0.1) / 0.8; }

// MLP [2, 50, 50, 2K]: ReLU hidden layers, identity output. First K outputs
// are coefficient means, last K are log-variances.
struct CoefficientNet {
    int K = 0;
    Eigen::MatrixXd W1, W2, W3;
    Eigen::VectorXd b1, b2, b3;
};

struct NetGradients {
    Eigen::MatrixXd W1, W2, W3;
    Eigen::VectorXd b1, b2, b3;
};

struct BasisPosterior {
    Eigen::MatrixXd mean;              // n_x x K
    std::vector<Eigen::MatrixXd> cov;  // n_x matrices of size K x K
};

struct PrecisionPosterior {
    Eigen::VectorXd a_x, b_x;  // per-position gamma shape/rate
    double a_alpha = 1.0, b_alpha = 1.0;
};

struct TrainSchedule {
    int outer_rounds = 50;
    int nn_steps_per_round = 100;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Labeled snapshots flattened for training. Fields are homogenized.
struct TrainingData {
    Eigen::MatrixXd fields;     // n_s x n_x
    Eigen::VectorXd t_norm;     // n_s
    Eigen::VectorXd kappa_norm; // n_s

    int n_s() const { return static_cast<int>(fields.rows()); }
    int n_x() const { return static_cast<int>(fields.cols()); }
};

TrainingData make_training_data(const std::vector<Snapshot>& homogenized, const TimeGrid& tgrid);

struct ElboRecord {
    int round;
    double before_updates;
    double after_basis_update;
    double after_precision_update;
};

struct BayPODModel {
    CoefficientNet net;
    BasisPosterior basis;
    PrecisionPosterior prec;
    PODBasis init_basis;
    std::vector<ElboRecord> elbo_log;

    // Labeled range of the normalized diffusivity input. ReLU networks
    // extrapolate linearly without bound, so predictions and predictive
    // samples clamp the input to this hull (constant extrapolation beyond the
    // data). Defaults disable clamping for hand-constructed models.
    double kappa_norm_lo = std::numeric_limits<double>::lowest();
    double kappa_norm_hi = std::numeric_limits<double>::max();

    int K() const { return net.K; }
    int n_x() const { return static_cast<int>(basis.mean.rows()); }
    double clamp_kappa_norm(double k) const {
        return std::clamp(k, kappa_norm_lo, kappa_norm_hi);
    }
};

BayPODModel init_model(const PODBasis& basis, const TrainingData& labeled, std::uint64_t seed);

// Single-input forward pass; returns (mu, var) with var = exp(log-variance head).
std::pair<Eigen::VectorXd, Eigen::VectorXd> nn_forward(const CoefficientNet& net, double t_norm,
                                                       double kappa_norm);

// Batched forward pass; inputs X is 2 x n (row 0 = t_norm, row 1 = kappa_norm).
struct NetForward {
    Eigen::MatrixXd h1, h2;      // hidden activations (post-ReLU), 50 x n
    Eigen::MatrixXd mu, logvar;  // K x n
};
NetForward nn_forward_batch(const CoefficientNet& net, const Eigen::MatrixXd& X);

// Fully analytic evidence lower bound.
double elbo(const BayPODModel& model, const TrainingData& labeled);

// Closed-form coordinate updates. Each is the exact ELBO maximizer of its
// factor given the others, so the ELBO never decreases across a call.
void update_basis_posterior(BayPODModel& model, const TrainingData& labeled);
void update_precision_posteriors(BayPODModel& model, const TrainingData& labeled);

// Gradient of -ELBO with respect to all network parameters.
NetGradients nn_gradients(const BayPODModel& model, const TrainingData& labeled);

void train(BayPODModel& model, const TrainingData& labeled, const TrainSchedule& schedule,
           std::uint64_t seed);

// Deep ensemble of independently initialized VI solutions. The network loss
// is multimodal; member-averaged predictions cancel the per-initialization
// extrapolation error that otherwise dominates test MSE.
struct ModelEnsemble {
    std::vector<BayPODModel> members;

    int size() const { return static_cast<int>(members.size()); }
    int K() const { return members.front().K(); }
    int n_x() const { return members.front().n_x(); }
};

// Member r is trained from scratch with seed for r = 0 and mix64(seed, r)
// for r > 0, so a single-member ensemble reproduces init_model + train.
ModelEnsemble train_ensemble(const PODBasis& basis, const TrainingData& labeled,
                             const TrainSchedule& schedule, std::uint64_t seed, int n_members);

// Average of the members' final ELBOs (diagnostic summary of a fit).
double ensemble_mean_elbo(const ModelEnsemble& ensemble, const TrainingData& labeled);

// Particular solution sampled on the grid, as an Eigen vector.
Eigen::VectorXd particular_solution_vector(double t, const SpatialGrid& sgrid);

// Posterior-mean prediction on the physical (dehomogenized) scale.
Eigen::VectorXd predict_mean(const BayPODModel& model, double kappa, double t,
                             const SpatialGrid& sgrid);

// Ensemble prediction: the average of the members' posterior means.
Eigen::VectorXd predict_mean(const ModelEnsemble& ensemble, double kappa, double t,
                             const SpatialGrid& sgrid);

// Batched posterior-mean prediction, homogenized scale: n_times x n_x.
Eigen::MatrixXd predict_mean_homogenized_batch(const BayPODModel& model, double kappa,
                                               const std::vector<double>& times);

// Draws epistemic-only predictive samples on the homogenized scale. Each
// sample draws alpha ~ N(mu_w, diag Sigma_w) once and u_x ~ N(m_x, S_x)
// independently per position.
Eigen::MatrixXd predictive_samples(const BayPODModel& model, double kappa, double t, int S,
                                   std::uint64_t seed);

// Reusable sampler that precomputes the per-position Cholesky factors.
class PredictiveSampler {
  public:
    explicit PredictiveSampler(const BayPODModel& model);
    void sample(double kappa, double t, int S, Rng& rng, Eigen::MatrixXd& out) const;

  private:
    const BayPODModel& model_;
    std::vector<Eigen::MatrixXd> chol_;
};

void save_model(const BayPODModel& model, const std::filesystem::path& path);
BayPODModel load_model(const std::filesystem::path& path);

double digamma(double x);

}  // namespace baypod
