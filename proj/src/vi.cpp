#include "baypod/vi.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

namespace baypod {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// KL(Gamma(a, b) || Gamma(1, 1)), rate parameterization.
double kl_gamma_from_unit(double a, double b) {
    return (a - 1.0) * digamma(a) - std::lgamma(a) + std::log(b) + a * (1.0 - b) / b;
}

Eigen::MatrixXd he_matrix(int rows, int cols, Rng& rng) {
    Eigen::MatrixXd W(rows, cols);
    const double scale = std::sqrt(2.0 / cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) W(i, j) = scale * rng.normal();
    return W;
}

// Per-round constants of the alpha-dependent ELBO terms. They change only
// when the basis or precision posteriors move.
struct AlphaStats {
    Eigen::MatrixXd A;  // K x K: sum_x (a_x/b_x) (S_x + m_x m_x^T)
    Eigen::MatrixXd C;  // K x n_s: column s = sum_x (a_x/b_x) f_sx m_x
    double gamma_alpha_mean = 1.0;
};

AlphaStats alpha_stats(const BayPODModel& model, const TrainingData& labeled) {
    const int K = model.K();
    const int n_x = model.n_x();
    AlphaStats st;
    st.A = Eigen::MatrixXd::Zero(K, K);
    Eigen::MatrixXd weighted_mean(n_x, K);  // (a_x/b_x) m_x rows
    for (int x = 0; x < n_x; ++x) {
        const double w = model.prec.a_x[x] / model.prec.b_x[x];
        const auto m = model.basis.mean.row(x).transpose();
        st.A += w * (model.basis.cov[x] + m * m.transpose());
        weighted_mean.row(x) = w * model.basis.mean.row(x);
    }
    st.C = weighted_mean.transpose() * labeled.fields.transpose();
    st.gamma_alpha_mean = model.prec.a_alpha / model.prec.b_alpha;
    return st;
}

NetGradients nn_gradients_with_stats(const BayPODModel& model, const TrainingData& labeled,
                                     const AlphaStats& st, NetForward& fwd) {
    const int n = labeled.n_s();
    Eigen::MatrixXd X(2, n);
    X.row(0) = labeled.t_norm.transpose();
    X.row(1) = labeled.kappa_norm.transpose();
    fwd = nn_forward_batch(model.net, X);

    const Eigen::MatrixXd var = fwd.logvar.array().exp().matrix();
    Eigen::MatrixXd dmu = st.A * fwd.mu - st.C + st.gamma_alpha_mean * fwd.mu;
    Eigen::MatrixXd dlv =
        (var.array().colwise() * (0.5 * st.A.diagonal().array() + 0.5 * st.gamma_alpha_mean) - 0.5)
            .matrix();

    const int K = model.K();
    Eigen::MatrixXd dout(2 * K, n);
    dout.topRows(K) = dmu;
    dout.bottomRows(K) = dlv;

    NetGradients g;
    g.W3 = dout * fwd.h2.transpose();
    g.b3 = dout.rowwise().sum();
    Eigen::MatrixXd dh2 =
        (model.net.W3.transpose() * dout).cwiseProduct((fwd.h2.array() > 0.0).cast<double>().matrix());
    g.W2 = dh2 * fwd.h1.transpose();
    g.b2 = dh2.rowwise().sum();
    Eigen::MatrixXd dh1 =
        (model.net.W2.transpose() * dh2).cwiseProduct((fwd.h1.array() > 0.0).cast<double>().matrix());
    g.W1 = dh1 * X.transpose();
    g.b1 = dh1.rowwise().sum();
    return g;
}

struct AdamState {
    Eigen::MatrixXd mW1, vW1, mW2, vW2, mW3, vW3;
    Eigen::VectorXd mb1, vb1, mb2, vb2, mb3, vb3;
    long step = 0;

    explicit AdamState(const CoefficientNet& net) {
        mW1 = Eigen::MatrixXd::Zero(net.W1.rows(), net.W1.cols());
        vW1 = mW1;
        mW2 = Eigen::MatrixXd::Zero(net.W2.rows(), net.W2.cols());
        vW2 = mW2;
        mW3 = Eigen::MatrixXd::Zero(net.W3.rows(), net.W3.cols());
        vW3 = mW3;
        mb1 = Eigen::VectorXd::Zero(net.b1.size());
        vb1 = mb1;
        mb2 = Eigen::VectorXd::Zero(net.b2.size());
        vb2 = mb2;
        mb3 = Eigen::VectorXd::Zero(net.b3.size());
        vb3 = mb3;
    }
};

template <typename Mat>
void adam_update(Mat& param, const Mat& grad, Mat& m, Mat& v, long step,
                 const TrainSchedule& sc) {
    m = sc.beta1 * m + (1.0 - sc.beta1) * grad;
    v = (sc.beta2 * v.array() + (1.0 - sc.beta2) * grad.array().square()).matrix();
    const double c1 = 1.0 - std::pow(sc.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(sc.beta2, static_cast<double>(step));
    param.array() -= sc.learning_rate * (m.array() / c1) /
                     ((v.array() / c2).sqrt() + sc.epsilon);
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    const auto rows = j.size();
    const auto cols = rows ? j[0].size() : 0;
    Eigen::MatrixXd m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
    return m;
}

}  // namespace

double digamma(double x) {
    double result = 0.0;
    while (x < 6.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double f = 1.0 / (x * x);
    return result + std::log(x) - 0.5 / x -
           f * (1.0 / 12.0 -
                f * (1.0 / 120.0 - f * (1.0 / 252.0 - f * (1.0 / 240.0 - f * (1.0 / 132.0)))));
}

TrainingData make_training_data(const std::vector<Snapshot>& homogenized, const TimeGrid& tgrid) {
    TrainingData d;
    const int n_s = static_cast<int>(homogenized.size());
    const int n_x = n_s ? static_cast<int>(homogenized.front().field.size()) : 0;
    d.fields.resize(n_s, n_x);
    d.t_norm.resize(n_s);
    d.kappa_norm.resize(n_s);
    for (int s = 0; s < n_s; ++s) {
        const Snapshot& snap = homogenized[s];
        if (!snap.homogenized)
            throw std::logic_error("make_training_data: snapshot not homogenized");
        for (int j = 0; j < n_x; ++j) d.fields(s, j) = snap.field[j];
        d.t_norm[s] = normalize_time(tgrid.times[snap.time_index]);
        d.kappa_norm[s] = normalize_kappa(snap.kappa);
    }
    return d;
}

BayPODModel init_model(const PODBasis& basis, const TrainingData& labeled, std::uint64_t seed) {
    if (basis.K < 1) throw std::invalid_argument("init_model: basis.K must be >= 1");
    if (labeled.n_s() == 0) throw std::invalid_argument("init_model: labeled set is empty");

    const int K = basis.K;
    const int n_x = static_cast<int>(basis.modes.rows());
    BayPODModel model;
    model.init_basis = basis;

    model.basis.mean = basis.modes;
    model.basis.cov.assign(n_x, 1e-4 * Eigen::MatrixXd::Identity(K, K));

    model.prec.a_x = Eigen::VectorXd::Ones(n_x);
    model.prec.b_x = Eigen::VectorXd::Ones(n_x);
    model.prec.a_alpha = 1.0;
    model.prec.b_alpha = 1.0;

    Rng rng(seed);
    model.net.K = K;
    model.net.W1 = he_matrix(50, 2, rng);
    model.net.W2 = he_matrix(50, 50, rng);
    model.net.W3 = he_matrix(2 * K, 50, rng);
    model.net.b1 = Eigen::VectorXd::Zero(50);
    model.net.b2 = Eigen::VectorXd::Zero(50);
    model.net.b3 = Eigen::VectorXd::Zero(2 * K);
    model.net.b3.tail(K).setConstant(-4.0);

    model.kappa_norm_lo = labeled.kappa_norm.minCoeff();
    model.kappa_norm_hi = labeled.kappa_norm.maxCoeff();
    return model;
}

NetForward nn_forward_batch(const CoefficientNet& net, const Eigen::MatrixXd& X) {
    NetForward f;
    f.h1 = ((net.W1 * X).colwise() + net.b1).cwiseMax(0.0);
    f.h2 = ((net.W2 * f.h1).colwise() + net.b2).cwiseMax(0.0);
    Eigen::MatrixXd out = (net.W3 * f.h2).colwise() + net.b3;
    f.mu = out.topRows(net.K);
    f.logvar = out.bottomRows(net.K);
    return f;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> nn_forward(const CoefficientNet& net, double t_norm,
                                                       double kappa_norm) {
    Eigen::MatrixXd X(2, 1);
    X << t_norm, kappa_norm;
    NetForward f = nn_forward_batch(net, X);
    return {f.mu.col(0), f.logvar.col(0).array().exp().matrix()};
}

double elbo(const BayPODModel& model, const TrainingData& labeled) {
    const int K = model.K();
    const int n_x = model.n_x();
    const int n_s = labeled.n_s();

    Eigen::MatrixXd mu(K, n_s), var(K, n_s);
    if (n_s > 0) {
        Eigen::MatrixXd X(2, n_s);
        X.row(0) = labeled.t_norm.transpose();
        X.row(1) = labeled.kappa_norm.transpose();
        NetForward f = nn_forward_batch(model.net, X);
        mu = f.mu;
        var = f.logvar.array().exp().matrix();
    }

    double value = 0.0;

    // Expected log-likelihood.
    Eigen::MatrixXd proj;  // n_x x n_s: m_x^T mu_s
    if (n_s > 0) proj = model.basis.mean * mu;
    for (int x = 0; x < n_x; ++x) {
        const double a = model.prec.a_x[x];
        const double b = model.prec.b_x[x];
        double residual_sum = 0.0;
        if (n_s > 0) {
            const auto m = model.basis.mean.row(x).transpose();
            const Eigen::MatrixXd second_moment = model.basis.cov[x] + m * m.transpose();
            const Eigen::ArrayXd quad =
                (mu.array() * (second_moment * mu).array()).colwise().sum().transpose();
            const Eigen::ArrayXd diag_term =
                (var.array().colwise() * second_moment.diagonal().array()).colwise().sum().transpose();
            const Eigen::ArrayXd f_col = labeled.fields.col(x).array();
            residual_sum =
                (f_col.square() - 2.0 * f_col * proj.row(x).transpose().array() + quad + diag_term)
                    .sum();
        }
        value += n_s * 0.5 * (digamma(a) - std::log(b) - kLog2Pi) - 0.5 * (a / b) * residual_sum;
        if (!std::isfinite(value)) {
            std::ostringstream msg;
            msg << "elbo: non-finite contribution at position " << x;
            throw std::runtime_error(msg.str());
        }
    }

    // Coefficient prior and entropy under q(gamma_alpha).
    if (n_s > 0) {
        const double e_log_ga = digamma(model.prec.a_alpha) - std::log(model.prec.b_alpha);
        const double e_ga = model.prec.a_alpha / model.prec.b_alpha;
        const double second_moment_sum = var.sum() + mu.squaredNorm();
        value += n_s * 0.5 * K * (e_log_ga - kLog2Pi) - 0.5 * e_ga * second_moment_sum;
        value += 0.5 * (var.array().log() + kLog2Pi + 1.0).sum();  // entropy of q(alpha)
    }

    // KL of the basis posterior from N(0, I), per position.
    for (int x = 0; x < n_x; ++x) {
        const Eigen::MatrixXd& S = model.basis.cov[x];
        Eigen::LLT<Eigen::MatrixXd> llt(S);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("elbo: basis covariance not positive definite at position " +
                                     std::to_string(x));
        const double logdet =
            2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        value -= 0.5 * (S.trace() + model.basis.mean.row(x).squaredNorm() - K - logdet);
    }

    // KL of the gamma factors from Gamma(1,1).
    for (int x = 0; x < n_x; ++x)
        value -= kl_gamma_from_unit(model.prec.a_x[x], model.prec.b_x[x]);
    value -= kl_gamma_from_unit(model.prec.a_alpha, model.prec.b_alpha);

    if (!std::isfinite(value)) throw std::runtime_error("elbo: non-finite result");
    return value;
}

void update_basis_posterior(BayPODModel& model, const TrainingData& labeled) {
    const int K = model.K();
    const int n_x = model.n_x();
    const int n_s = labeled.n_s();

    Eigen::MatrixXd coeff_second_moment = Eigen::MatrixXd::Zero(K, K);
    Eigen::MatrixXd mu(K, std::max(n_s, 1));
    if (n_s > 0) {
        Eigen::MatrixXd X(2, n_s);
        X.row(0) = labeled.t_norm.transpose();
        X.row(1) = labeled.kappa_norm.transpose();
        NetForward f = nn_forward_batch(model.net, X);
        mu = f.mu;
        const Eigen::VectorXd var_sum = f.logvar.array().exp().matrix().rowwise().sum();
        coeff_second_moment = mu * mu.transpose();
        coeff_second_moment.diagonal() += var_sum;
    }

    for (int x = 0; x < n_x; ++x) {
        const double w = model.prec.a_x[x] / model.prec.b_x[x];
        if (n_s == 0) {
            model.basis.cov[x] = Eigen::MatrixXd::Identity(K, K);
            model.basis.mean.row(x).setZero();
            continue;
        }
        Eigen::MatrixXd prec_matrix =
            Eigen::MatrixXd::Identity(K, K) + w * coeff_second_moment;
        Eigen::LLT<Eigen::MatrixXd> llt(prec_matrix);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("update_basis_posterior: Cholesky failure at position " +
                                     std::to_string(x));
        Eigen::MatrixXd S = llt.solve(Eigen::MatrixXd::Identity(K, K));
        model.basis.cov[x] = 0.5 * (S + S.transpose());
        model.basis.mean.row(x) =
            llt.solve(w * (mu * labeled.fields.col(x))).transpose();
    }
}

void update_precision_posteriors(BayPODModel& model, const TrainingData& labeled) {
    const int K = model.K();
    const int n_x = model.n_x();
    const int n_s = labeled.n_s();

    Eigen::MatrixXd mu(K, std::max(n_s, 1)), var(K, std::max(n_s, 1));
    if (n_s > 0) {
        Eigen::MatrixXd X(2, n_s);
        X.row(0) = labeled.t_norm.transpose();
        X.row(1) = labeled.kappa_norm.transpose();
        NetForward f = nn_forward_batch(model.net, X);
        mu = f.mu;
        var = f.logvar.array().exp().matrix();
    }

    Eigen::MatrixXd proj;
    if (n_s > 0) proj = model.basis.mean * mu;  // n_x x n_s
    for (int x = 0; x < n_x; ++x) {
        double residual_sum = 0.0;
        if (n_s > 0) {
            const auto m = model.basis.mean.row(x).transpose();
            const Eigen::MatrixXd second_moment = model.basis.cov[x] + m * m.transpose();
            const Eigen::ArrayXd quad =
                (mu.array() * (second_moment * mu).array()).colwise().sum().transpose();
            const Eigen::ArrayXd diag_term =
                (var.array().colwise() * second_moment.diagonal().array()).colwise().sum().transpose();
            const Eigen::ArrayXd f_col = labeled.fields.col(x).array();
            residual_sum =
                (f_col.square() - 2.0 * f_col * proj.row(x).transpose().array() + quad + diag_term)
                    .sum();
        }
        const double b = 1.0 + 0.5 * residual_sum;
        if (!(b > 0.0) || !std::isfinite(b))
            throw std::runtime_error("update_precision_posteriors: invalid rate at position " +
                                     std::to_string(x));
        model.prec.a_x[x] = 1.0 + 0.5 * n_s;
        model.prec.b_x[x] = b;
    }
    model.prec.a_alpha = 1.0 + 0.5 * n_s * K;
    model.prec.b_alpha = 1.0 + 0.5 * (n_s > 0 ? var.sum() + mu.squaredNorm() : 0.0);
}

NetGradients nn_gradients(const BayPODModel& model, const TrainingData& labeled) {
    if (labeled.n_s() == 0) {
        NetGradients g;
        g.W1 = Eigen::MatrixXd::Zero(model.net.W1.rows(), model.net.W1.cols());
        g.W2 = Eigen::MatrixXd::Zero(model.net.W2.rows(), model.net.W2.cols());
        g.W3 = Eigen::MatrixXd::Zero(model.net.W3.rows(), model.net.W3.cols());
        g.b1 = Eigen::VectorXd::Zero(model.net.b1.size());
        g.b2 = Eigen::VectorXd::Zero(model.net.b2.size());
        g.b3 = Eigen::VectorXd::Zero(model.net.b3.size());
        return g;
    }
    const AlphaStats st = alpha_stats(model, labeled);
    NetForward fwd;
    return nn_gradients_with_stats(model, labeled, st, fwd);
}

void train(BayPODModel& model, const TrainingData& labeled, const TrainSchedule& schedule,
           std::uint64_t seed) {
    (void)seed;  // training is deterministic: full-batch gradients, no sampling
    AdamState adam(model.net);
    model.elbo_log.clear();
    model.elbo_log.reserve(schedule.outer_rounds);

    for (int round = 0; round < schedule.outer_rounds; ++round) {
        const AlphaStats st = alpha_stats(model, labeled);
        for (int step = 0; step < schedule.nn_steps_per_round; ++step) {
            NetForward fwd;
            NetGradients g = nn_gradients_with_stats(model, labeled, st, fwd);
            ++adam.step;
            adam_update(model.net.W1, g.W1, adam.mW1, adam.vW1, adam.step, schedule);
            adam_update(model.net.b1, g.b1, adam.mb1, adam.vb1, adam.step, schedule);
            adam_update(model.net.W2, g.W2, adam.mW2, adam.vW2, adam.step, schedule);
            adam_update(model.net.b2, g.b2, adam.mb2, adam.vb2, adam.step, schedule);
            adam_update(model.net.W3, g.W3, adam.mW3, adam.vW3, adam.step, schedule);
            adam_update(model.net.b3, g.b3, adam.mb3, adam.vb3, adam.step, schedule);
        }
        ElboRecord rec;
        rec.round = round;
        rec.before_updates = elbo(model, labeled);
        update_basis_posterior(model, labeled);
        rec.after_basis_update = elbo(model, labeled);
        update_precision_posteriors(model, labeled);
        rec.after_precision_update = elbo(model, labeled);
        if (!std::isfinite(rec.after_precision_update))
            throw std::runtime_error("train: ELBO became non-finite");
        model.elbo_log.push_back(rec);
    }
}

ModelEnsemble train_ensemble(const PODBasis& basis, const TrainingData& labeled,
                             const TrainSchedule& schedule, std::uint64_t seed, int n_members) {
    if (n_members < 1) throw std::invalid_argument("train_ensemble: n_members must be >= 1");
    ModelEnsemble ensemble;
    ensemble.members.reserve(n_members);
    for (int r = 0; r < n_members; ++r) {
        const std::uint64_t sub = (r == 0) ? seed : mix64(seed, static_cast<std::uint64_t>(r));
        BayPODModel member = init_model(basis, labeled, sub);
        train(member, labeled, schedule, sub);
        ensemble.members.push_back(std::move(member));
    }
    return ensemble;
}

double ensemble_mean_elbo(const ModelEnsemble& ensemble, const TrainingData& labeled) {
    double acc = 0.0;
    for (const auto& m : ensemble.members)
        acc += m.elbo_log.empty() ? elbo(m, labeled) : m.elbo_log.back().after_precision_update;
    return acc / static_cast<double>(ensemble.members.size());
}

Eigen::VectorXd particular_solution_vector(double t, const SpatialGrid& sgrid) {
    Eigen::VectorXd part(sgrid.n_x);
    const double a = 3.0 * std::sin(2.0 * t);
    for (int j = 0; j < sgrid.n_x; ++j) {
        const double xi = sgrid.positions[j] / sgrid.length;
        part[j] = a * (1.0 - xi) + 3.0 * xi;
    }
    return part;
}

Eigen::VectorXd predict_mean(const BayPODModel& model, double kappa, double t,
                             const SpatialGrid& sgrid) {
    auto [mu, var] =
        nn_forward(model.net, normalize_time(t), model.clamp_kappa_norm(normalize_kappa(kappa)));
    (void)var;
    Eigen::VectorXd field = model.basis.mean * mu;
    return field + particular_solution_vector(t, sgrid);
}

Eigen::VectorXd predict_mean(const ModelEnsemble& ensemble, double kappa, double t,
                             const SpatialGrid& sgrid) {
    if (ensemble.members.empty()) throw std::invalid_argument("predict_mean: empty ensemble");
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(ensemble.n_x());
    for (const auto& m : ensemble.members) acc += predict_mean(m, kappa, t, sgrid);
    return acc / static_cast<double>(ensemble.members.size());
}

Eigen::MatrixXd predict_mean_homogenized_batch(const BayPODModel& model, double kappa,
                                               const std::vector<double>& times) {
    const int n = static_cast<int>(times.size());
    const double k_norm = model.clamp_kappa_norm(normalize_kappa(kappa));
    Eigen::MatrixXd X(2, n);
    for (int i = 0; i < n; ++i) {
        X(0, i) = normalize_time(times[i]);
        X(1, i) = k_norm;
    }
    NetForward f = nn_forward_batch(model.net, X);
    return (model.basis.mean * f.mu).transpose();  // n x n_x
}

PredictiveSampler::PredictiveSampler(const BayPODModel& model) : model_(model) {
    chol_.reserve(model.n_x());
    for (int x = 0; x < model.n_x(); ++x) {
        Eigen::LLT<Eigen::MatrixXd> llt(model.basis.cov[x]);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("PredictiveSampler: covariance not positive definite");
        chol_.push_back(llt.matrixL());
    }
}

void PredictiveSampler::sample(double kappa, double t, int S, Rng& rng,
                               Eigen::MatrixXd& out) const {
    if (S < 2) throw std::invalid_argument("predictive_samples: S must be >= 2");
    const int K = model_.K();
    const int n_x = model_.n_x();
    auto [mu, var] =
        nn_forward(model_.net, normalize_time(t), model_.clamp_kappa_norm(normalize_kappa(kappa)));
    const Eigen::VectorXd sd = var.array().sqrt().matrix();
    out.resize(S, n_x);
    Eigen::VectorXd alpha(K), z(K), u(K);
    for (int s = 0; s < S; ++s) {
        for (int k = 0; k < K; ++k) alpha[k] = mu[k] + sd[k] * rng.normal();
        for (int x = 0; x < n_x; ++x) {
            for (int k = 0; k < K; ++k) z[k] = rng.normal();
            u = model_.basis.mean.row(x).transpose();
            u.noalias() += chol_[x].triangularView<Eigen::Lower>() * z;
            out(s, x) = u.dot(alpha);
        }
    }
}

Eigen::MatrixXd predictive_samples(const BayPODModel& model, double kappa, double t, int S,
                                   std::uint64_t seed) {
    PredictiveSampler sampler(model);
    Rng rng(seed);
    Eigen::MatrixXd out;
    sampler.sample(kappa, t, S, rng, out);
    return out;
}

void save_model(const BayPODModel& model, const std::filesystem::path& path) {
    nlohmann::json j;
    j["version"] = 1;
    j["K"] = model.net.K;
    j["net"] = {{"W1", matrix_to_json(model.net.W1)}, {"b1", matrix_to_json(model.net.b1)},
                {"W2", matrix_to_json(model.net.W2)}, {"b2", matrix_to_json(model.net.b2)},
                {"W3", matrix_to_json(model.net.W3)}, {"b3", matrix_to_json(model.net.b3)}};
    j["basis_mean"] = matrix_to_json(model.basis.mean);
    nlohmann::json covs = nlohmann::json::array();
    for (const auto& S : model.basis.cov) covs.push_back(matrix_to_json(S));
    j["basis_cov"] = std::move(covs);
    j["a_x"] = matrix_to_json(model.prec.a_x);
    j["b_x"] = matrix_to_json(model.prec.b_x);
    j["a_alpha"] = model.prec.a_alpha;
    j["b_alpha"] = model.prec.b_alpha;
    j["init_modes"] = matrix_to_json(model.init_basis.modes);
    j["init_singular_values"] = matrix_to_json(model.init_basis.singular_values);
    j["init_K"] = model.init_basis.K;
    j["init_energy_fraction"] = model.init_basis.energy_fraction;
    j["kappa_norm_lo"] = model.kappa_norm_lo;
    j["kappa_norm_hi"] = model.kappa_norm_hi;
    std::ofstream out(path);
    out << j.dump() << "\n";
}

BayPODModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_model: cannot open " + path.string());
    nlohmann::json j;
    in >> j;
    BayPODModel model;
    model.net.K = j.at("K").get<int>();
    model.net.W1 = matrix_from_json(j["net"]["W1"]);
    model.net.b1 = matrix_from_json(j["net"]["b1"]);
    model.net.W2 = matrix_from_json(j["net"]["W2"]);
    model.net.b2 = matrix_from_json(j["net"]["b2"]);
    model.net.W3 = matrix_from_json(j["net"]["W3"]);
    model.net.b3 = matrix_from_json(j["net"]["b3"]);
    model.basis.mean = matrix_from_json(j["basis_mean"]);
    for (const auto& S : j["basis_cov"]) model.basis.cov.push_back(matrix_from_json(S));
    model.prec.a_x = matrix_from_json(j["a_x"]);
    model.prec.b_x = matrix_from_json(j["b_x"]);
    model.prec.a_alpha = j["a_alpha"].get<double>();
    model.prec.b_alpha = j["b_alpha"].get<double>();
    model.init_basis.modes = matrix_from_json(j["init_modes"]);
    model.init_basis.singular_values = matrix_from_json(j["init_singular_values"]);
    model.init_basis.K = j["init_K"].get<int>();
    model.init_basis.energy_fraction = j["init_energy_fraction"].get<double>();
    model.kappa_norm_lo = j.value("kappa_norm_lo", std::numeric_limits<double>::lowest());
    model.kappa_norm_hi = j.value("kappa_norm_hi", std::numeric_limits<double>::max());
    return model;
}

}  // namespace baypod
