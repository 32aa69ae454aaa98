#include "baypod/acquisition.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace baypod {

namespace {

double median_pairwise_distance(const Eigen::VectorXd& v) {
    const int n = static_cast<int>(v.size());
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) d.push_back(std::abs(v[i] - v[j]));
    if (d.empty()) return 0.1;
    const std::size_t mid = d.size() / 2;
    std::nth_element(d.begin(), d.begin() + mid, d.end());
    double med = d[mid];
    if (d.size() % 2 == 0) {
        std::nth_element(d.begin(), d.begin() + mid - 1, d.end());
        med = 0.5 * (med + d[mid - 1]);
    }
    return med > 0.0 ? med : 0.1;
}

}  // namespace

GPColumnPosterior gp_fit(const std::vector<double>& labeled_kappas,
                         const Eigen::MatrixXd& targets) {
    if (labeled_kappas.empty()) throw std::invalid_argument("gp_fit: no labeled inputs");

    std::vector<double> sorted = labeled_kappas;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    const int n = static_cast<int>(sorted.size());
    if (n != targets.rows())
        throw std::invalid_argument("gp_fit: target row count must match distinct kappa count");

    GPColumnPosterior gp;
    gp.train_inputs = Eigen::Map<const Eigen::VectorXd>(sorted.data(), n);
    gp.length_scale = n >= 2 ? median_pairwise_distance(gp.train_inputs) : 0.1;

    if (n >= 2) {
        const Eigen::RowVectorXd col_mean = targets.colwise().mean();
        const double var_sum =
            (targets.rowwise() - col_mean).squaredNorm() / static_cast<double>(n - 1);
        gp.signal_var = var_sum / static_cast<double>(targets.cols());
        if (!(gp.signal_var > 0.0)) gp.signal_var = 1.0;
    } else {
        gp.signal_var = 1.0;
    }

    Eigen::MatrixXd kernel(n, n);
    const double inv2l2 = 1.0 / (2.0 * gp.length_scale * gp.length_scale);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double d = gp.train_inputs[i] - gp.train_inputs[j];
            kernel(i, j) = gp.signal_var * std::exp(-d * d * inv2l2);
        }
    kernel.diagonal().array() += gp.jitter;

    Eigen::LLT<Eigen::MatrixXd> llt(kernel);
    ++instrument::gp_cholesky_count;
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("gp_fit: Cholesky factorization failed");
    gp.chol_lower = llt.matrixL();
    gp.alpha = llt.solve(targets);
    return gp;
}

void gp_predict(const GPColumnPosterior& gp, double kappa_star, Eigen::VectorXd& means,
                double& variance) {
    const int n = static_cast<int>(gp.train_inputs.size());
    Eigen::VectorXd k_star(n);
    const double inv2l2 = 1.0 / (2.0 * gp.length_scale * gp.length_scale);
    for (int i = 0; i < n; ++i) {
        const double d = gp.train_inputs[i] - kappa_star;
        k_star[i] = gp.signal_var * std::exp(-d * d * inv2l2);
    }
    means = gp.alpha.transpose() * k_star;
    const Eigen::VectorXd v =
        gp.chol_lower.triangularView<Eigen::Lower>().solve(k_star);
    variance = std::max(0.0, gp.signal_var - v.squaredNorm());
}

MeasureMatrix ual_measure(const BayPODModel& model, double kappa,
                          const std::vector<double>& times, int S, std::uint64_t seed) {
    if (S < 2) throw std::invalid_argument("ual_measure: S must be >= 2");
    ++instrument::ual_measure_calls;
    const int n_t = static_cast<int>(times.size());
    const int n_x = model.n_x();

    MeasureMatrix out;
    out.kappa = kappa;
    out.values.resize(n_t, n_x);

    PredictiveSampler sampler(model);
    Rng rng(seed);
    Eigen::MatrixXd samples;
    for (int i = 0; i < n_t; ++i) {
        sampler.sample(kappa, times[i], S, rng, samples);
        const Eigen::RowVectorXd mean = samples.colwise().mean();
        out.values.row(i) =
            (samples.rowwise() - mean).colwise().squaredNorm() / static_cast<double>(S - 1);
    }
    return out;
}

MeasureMatrix ual_measure(const ModelEnsemble& ensemble, double kappa,
                          const std::vector<double>& times, int S, std::uint64_t seed) {
    if (S < 2) throw std::invalid_argument("ual_measure: S must be >= 2");
    ++instrument::ual_measure_calls;
    const int n_t = static_cast<int>(times.size());
    const int n_x = ensemble.n_x();
    const int R = ensemble.size();
    const long total = static_cast<long>(R) * S;

    MeasureMatrix out;
    out.kappa = kappa;
    out.values.resize(n_t, n_x);

    std::vector<PredictiveSampler> samplers;
    samplers.reserve(R);
    std::vector<Rng> rngs;
    rngs.reserve(R);
    for (int r = 0; r < R; ++r) {
        samplers.emplace_back(ensemble.members[r]);
        rngs.emplace_back(r == 0 ? seed : mix64(seed, static_cast<std::uint64_t>(r)));
    }

    Eigen::MatrixXd samples;
    Eigen::MatrixXd pooled(total, n_x);
    for (int i = 0; i < n_t; ++i) {
        for (int r = 0; r < R; ++r) {
            samplers[r].sample(kappa, times[i], S, rngs[r], samples);
            pooled.middleRows(static_cast<long>(r) * S, S) = samples;
        }
        const Eigen::RowVectorXd mean = pooled.colwise().mean();
        out.values.row(i) =
            (pooled.rowwise() - mean).colwise().squaredNorm() / static_cast<double>(total - 1);
    }
    return out;
}

MeasureMatrix eal_measure(const BayPODModel& model, const GPColumnPosterior& gp, double kappa,
                          const std::vector<double>& times, const SpatialGrid& sgrid, int S,
                          std::uint64_t seed) {
    if (S < 2) throw std::invalid_argument("eal_measure: S must be >= 2");
    ++instrument::eal_measure_calls;
    const int n_t = static_cast<int>(times.size());
    const int n_x = model.n_x();
    if (gp.alpha.cols() != static_cast<Eigen::Index>(n_t) * n_x)
        throw std::invalid_argument("eal_measure: GP column count mismatch");

    Eigen::VectorXd gp_means;
    double gp_var = 0.0;
    gp_predict(gp, kappa, gp_means, gp_var);

    MeasureMatrix out;
    out.kappa = kappa;
    out.values.resize(n_t, n_x);

    PredictiveSampler sampler(model);
    Rng rng(seed);
    Eigen::MatrixXd samples;
    for (int i = 0; i < n_t; ++i) {
        sampler.sample(kappa, times[i], S, rng, samples);
        const Eigen::VectorXd part = particular_solution_vector(times[i], sgrid);
        const Eigen::VectorXd f_tilde = samples.colwise().mean().transpose() + part;
        const auto mu_gp = gp_means.segment(static_cast<Eigen::Index>(i) * n_x, n_x);
        out.values.row(i) =
            ((mu_gp - f_tilde).array().square() + gp_var).matrix().transpose();
    }
    return out;
}

MeasureMatrix eal_measure(const ModelEnsemble& ensemble, const GPColumnPosterior& gp,
                          double kappa, const std::vector<double>& times,
                          const SpatialGrid& sgrid, int S, std::uint64_t seed) {
    if (S < 2) throw std::invalid_argument("eal_measure: S must be >= 2");
    ++instrument::eal_measure_calls;
    const int n_t = static_cast<int>(times.size());
    const int n_x = ensemble.n_x();
    const int R = ensemble.size();
    if (gp.alpha.cols() != static_cast<Eigen::Index>(n_t) * n_x)
        throw std::invalid_argument("eal_measure: GP column count mismatch");

    Eigen::VectorXd gp_means;
    double gp_var = 0.0;
    gp_predict(gp, kappa, gp_means, gp_var);

    MeasureMatrix out;
    out.kappa = kappa;
    out.values.resize(n_t, n_x);

    std::vector<PredictiveSampler> samplers;
    samplers.reserve(R);
    std::vector<Rng> rngs;
    rngs.reserve(R);
    for (int r = 0; r < R; ++r) {
        samplers.emplace_back(ensemble.members[r]);
        rngs.emplace_back(r == 0 ? seed : mix64(seed, static_cast<std::uint64_t>(r)));
    }

    Eigen::MatrixXd samples;
    for (int i = 0; i < n_t; ++i) {
        Eigen::VectorXd f_tilde = particular_solution_vector(times[i], sgrid);
        for (int r = 0; r < R; ++r) {
            samplers[r].sample(kappa, times[i], S, rngs[r], samples);
            f_tilde += samples.colwise().mean().transpose() / static_cast<double>(R);
        }
        const auto mu_gp = gp_means.segment(static_cast<Eigen::Index>(i) * n_x, n_x);
        out.values.row(i) =
            ((mu_gp - f_tilde).array().square() + gp_var).matrix().transpose();
    }
    return out;
}

AcquisitionScores acquisition_scores(const std::vector<MeasureMatrix>& measures) {
    if (measures.empty()) throw std::invalid_argument("acquisition_scores: no measures");
    const Eigen::Index rows = measures.front().values.rows();
    const Eigen::Index cols = measures.front().values.cols();
    AcquisitionScores out;
    out.scores.resize(static_cast<Eigen::Index>(measures.size()));
    for (std::size_t i = 0; i < measures.size(); ++i) {
        const auto& m = measures[i].values;
        if (m.rows() != rows || m.cols() != cols)
            throw std::invalid_argument("acquisition_scores: measure shape mismatch");
        if (!m.allFinite())
            throw std::invalid_argument("acquisition_scores: non-finite measure entries");
        out.scores[static_cast<Eigen::Index>(i)] = m.mean();
    }
    out.argmax = 0;
    for (Eigen::Index i = 1; i < out.scores.size(); ++i)
        if (out.scores[i] > out.scores[out.argmax]) out.argmax = static_cast<int>(i);
    return out;
}

int select_next(const AcquisitionScores& scores) {
    if (scores.scores.size() == 0) throw std::invalid_argument("select_next: empty pool");
    return scores.argmax;
}

int random_select(const std::vector<int>& pool, Rng& rng) {
    if (pool.empty()) throw std::invalid_argument("random_select: empty pool");
    return pool[rng.uniform_int(static_cast<int>(pool.size()))];
}

}  // namespace baypod
