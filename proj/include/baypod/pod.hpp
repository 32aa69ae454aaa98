#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "baypod/grids.hpp"

namespace baypod {

struct SnapshotMatrix {
    Eigen::MatrixXd data;                          // n_s x n_x, homogenized fields
    std::vector<std::pair<double, int>> row_meta;  // (kappa, time_index) per row

    int n_s() const { return static_cast<int>(data.rows()); }
    int n_x() const { return static_cast<int>(data.cols()); }
};

struct ThinSvd {
    Eigen::MatrixXd left;             // n_s x r
    Eigen::VectorXd singular_values;  // length r, non-increasing
    Eigen::MatrixXd right;            // n_x x r
};

struct PODBasis {
    int K = 0;
    Eigen::MatrixXd modes;            // n_x x K, orthonormal columns
    Eigen::VectorXd singular_values;  // full spectrum
    double energy_fraction = 0.0;
};

SnapshotMatrix assemble_snapshot_matrix(const std::vector<Snapshot>& labeled);

ThinSvd thin_svd(const Eigen::MatrixXd& F);

PODBasis pod_basis(const SnapshotMatrix& F, int K);

Eigen::VectorXd project(const PODBasis& basis, const Eigen::VectorXd& field);
Eigen::VectorXd reconstruct(const PODBasis& basis, const Eigen::VectorXd& coeffs);

}  // namespace baypod
