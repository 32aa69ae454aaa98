#include "baypod/pod.hpp"

#include <Eigen/SVD>
#include <stdexcept>

namespace baypod {

namespace {

// Flip column signs so the first entry of each right-singular column with
// magnitude above 1e-12 is non-negative. Left columns flip in tandem so the
// factorization is preserved.
void canonicalize_signs(Eigen::MatrixXd& left, Eigen::MatrixXd& right) {
    for (Eigen::Index k = 0; k < right.cols(); ++k) {
        for (Eigen::Index j = 0; j < right.rows(); ++j) {
            if (std::abs(right(j, k)) > 1e-12) {
                if (right(j, k) < 0.0) {
                    right.col(k) *= -1.0;
                    left.col(k) *= -1.0;
                }
                break;
            }
        }
    }
}

}  // namespace

SnapshotMatrix assemble_snapshot_matrix(const std::vector<Snapshot>& labeled) {
    if (labeled.empty()) throw std::invalid_argument("assemble_snapshot_matrix: empty input");
    const int n_x = static_cast<int>(labeled.front().field.size());
    SnapshotMatrix F;
    F.data.resize(static_cast<Eigen::Index>(labeled.size()), n_x);
    F.row_meta.reserve(labeled.size());
    for (std::size_t s = 0; s < labeled.size(); ++s) {
        if (!labeled[s].homogenized)
            throw std::logic_error("assemble_snapshot_matrix: snapshot not homogenized");
        if (static_cast<int>(labeled[s].field.size()) != n_x)
            throw std::invalid_argument("assemble_snapshot_matrix: inconsistent field length");
        for (int j = 0; j < n_x; ++j) F.data(static_cast<Eigen::Index>(s), j) = labeled[s].field[j];
        F.row_meta.emplace_back(labeled[s].kappa, labeled[s].time_index);
    }
    return F;
}

ThinSvd thin_svd(const Eigen::MatrixXd& F) {
    if (!F.allFinite()) throw std::invalid_argument("thin_svd: non-finite entries");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(F, Eigen::ComputeThinU | Eigen::ComputeThinV);
    ThinSvd out;
    out.left = svd.matrixU();
    out.singular_values = svd.singularValues();
    out.right = svd.matrixV();
    canonicalize_signs(out.left, out.right);
    return out;
}

PODBasis pod_basis(const SnapshotMatrix& F, int K) {
    const int r = static_cast<int>(std::min(F.data.rows(), F.data.cols()));
    if (K < 1 || K > r)
        throw std::invalid_argument("pod_basis: K must be in [1, min(n_s, n_x)]");
    ThinSvd svd = thin_svd(F.data);
    PODBasis basis;
    basis.K = K;
    basis.modes = svd.right.leftCols(K);
    basis.singular_values = svd.singular_values;
    const double total = svd.singular_values.squaredNorm();
    basis.energy_fraction = total > 0.0 ? svd.singular_values.head(K).squaredNorm() / total : 1.0;
    return basis;
}

Eigen::VectorXd project(const PODBasis& basis, const Eigen::VectorXd& field) {
    if (field.size() != basis.modes.rows())
        throw std::invalid_argument("project: field length mismatch");
    return basis.modes.transpose() * field;
}

Eigen::VectorXd reconstruct(const PODBasis& basis, const Eigen::VectorXd& coeffs) {
    if (coeffs.size() != basis.K) throw std::invalid_argument("reconstruct: coefficient length mismatch");
    return basis.modes * coeffs;
}

}  // namespace baypod
