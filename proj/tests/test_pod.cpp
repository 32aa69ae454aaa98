#include <doctest.h>

#include "baypod/pod.hpp"
#include "baypod/rng.hpp"
#include "oracles.hpp"

using namespace baypod;

namespace {

std::vector<Snapshot> make_homogenized(int n_s, int n_x, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Snapshot> out(n_s);
    for (int s = 0; s < n_s; ++s) {
        out[s].kappa = 0.1 + 0.01 * s;
        out[s].time_index = s;
        out[s].homogenized = true;
        out[s].field.resize(n_x);
        for (auto& v : out[s].field) v = rng.normal();
    }
    return out;
}

Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd M(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) M(i, j) = rng.normal();
    return M;
}

}  // namespace

TEST_CASE("assemble_snapshot_matrix: shapes, ordering, and contract errors") {
    auto snaps = make_homogenized(50, 200, 1);
    const auto F = assemble_snapshot_matrix(snaps);
    CHECK(F.n_s() == 50);
    CHECK(F.n_x() == 200);
    for (int s = 0; s < 50; ++s) {
        CHECK(F.row_meta[s].first == snaps[s].kappa);
        CHECK(F.row_meta[s].second == snaps[s].time_index);
        for (int j = 0; j < 200; ++j) CHECK(F.data(s, j) == snaps[s].field[j]);
    }

    auto two_kappa = make_homogenized(100, 30, 2);
    CHECK(assemble_snapshot_matrix(two_kappa).n_s() == 100);

    CHECK_THROWS_AS(assemble_snapshot_matrix({}), std::invalid_argument);
    snaps[10].homogenized = false;
    CHECK_THROWS_AS(assemble_snapshot_matrix(snaps), std::logic_error);
}

TEST_CASE("thin_svd: rank-1 matrix has a single singular value ||a|| ||b||") {
    Rng rng(3);
    Eigen::VectorXd a(8), b(5);
    for (int i = 0; i < 8; ++i) a[i] = rng.normal();
    for (int i = 0; i < 5; ++i) b[i] = rng.normal();
    const auto svd = thin_svd(a * b.transpose());
    CHECK(svd.singular_values[0] == doctest::Approx(a.norm() * b.norm()).epsilon(1e-12));
    for (int k = 1; k < svd.singular_values.size(); ++k)
        CHECK(svd.singular_values[k] <= 1e-12 * svd.singular_values[0]);
}

TEST_CASE("thin_svd: diagonal matrix recovers sorted absolute diagonal") {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(4, 4);
    D(0, 0) = -2.0;
    D(1, 1) = 5.0;
    D(2, 2) = 1.0;
    D(3, 3) = 3.0;
    const auto svd = thin_svd(D);
    const std::vector<double> expected{5.0, 3.0, 2.0, 1.0};
    for (int k = 0; k < 4; ++k)
        CHECK(svd.singular_values[k] == doctest::Approx(expected[k]).epsilon(1e-12));
}

TEST_CASE("thin_svd: factorization, orthonormality, and Gram-matrix oracle agreement") {
    const Eigen::MatrixXd F = random_matrix(10, 6, 4);
    const auto svd = thin_svd(F);
    REQUIRE(svd.singular_values.size() == 6);

    const Eigen::MatrixXd rebuilt =
        svd.left * svd.singular_values.asDiagonal() * svd.right.transpose();
    CHECK((rebuilt - F).norm() <= 1e-8 * F.norm());
    CHECK((svd.left.transpose() * svd.left - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff()
          <= 1e-10);
    CHECK((svd.right.transpose() * svd.right - Eigen::MatrixXd::Identity(6, 6))
              .cwiseAbs()
              .maxCoeff() <= 1e-10);

    const auto oracle = oracles::gram_svd(F);
    for (int k = 0; k < 6; ++k)
        CHECK(svd.singular_values[k] ==
              doctest::Approx(oracle.singular_values[k]).epsilon(1e-10));
    // Reconstruction through the oracle's right directions must match F too.
    const Eigen::MatrixXd proj = F * oracle.right * oracle.right.transpose();
    CHECK((proj - F).norm() <= 1e-10 * std::max(1.0, F.norm()));

    CHECK_THROWS_AS(thin_svd(Eigen::MatrixXd::Constant(2, 2, std::nan(""))),
                    std::invalid_argument);
}

TEST_CASE("thin_svd: sign canonicalization makes extraction deterministic") {
    const Eigen::MatrixXd F = random_matrix(12, 7, 5);
    const auto a = thin_svd(F);
    const auto b = thin_svd(F);
    CHECK(a.right == b.right);
    CHECK(a.left == b.left);
    for (int k = 0; k < a.right.cols(); ++k) {
        int j = 0;
        while (j < a.right.rows() && std::abs(a.right(j, k)) <= 1e-12) ++j;
        REQUIRE(j < a.right.rows());
        CHECK(a.right(j, k) > 0.0);
    }
}

TEST_CASE("pod_basis: rank-1 snapshot matrix captures all energy with K=1") {
    Rng rng(6);
    Eigen::VectorXd mode(20);
    for (int i = 0; i < 20; ++i) mode[i] = rng.normal();
    SnapshotMatrix F;
    F.data.resize(15, 20);
    for (int s = 0; s < 15; ++s) F.data.row(s) = (0.5 + s) * mode.transpose();
    F.row_meta.assign(15, {0.5, 0});

    const auto basis = pod_basis(F, 1);
    CHECK(basis.energy_fraction == doctest::Approx(1.0).epsilon(1e-12));
    const Eigen::MatrixXd residual = F.data - F.data * basis.modes * basis.modes.transpose();
    CHECK(residual.cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("pod_basis: complete basis reconstructs every row") {
    SnapshotMatrix F;
    F.data = random_matrix(9, 6, 7);
    F.row_meta.assign(9, {0.5, 0});
    const auto basis = pod_basis(F, 6);
    const Eigen::MatrixXd residual = F.data - F.data * basis.modes * basis.modes.transpose();
    CHECK(residual.norm() <= 1e-8 * F.data.norm());
}

TEST_CASE("pod_basis: Eckart-Young tail-energy identity and orthonormal modes") {
    SnapshotMatrix F;
    F.data = random_matrix(40, 20, 8);
    F.row_meta.assign(40, {0.5, 0});
    const int K = 5;
    const auto basis = pod_basis(F, K);

    CHECK((basis.modes.transpose() * basis.modes - Eigen::MatrixXd::Identity(K, K))
              .cwiseAbs()
              .maxCoeff() <= 1e-10);

    const double residual_energy =
        (F.data - F.data * basis.modes * basis.modes.transpose()).squaredNorm();
    // Tail singular values from the independent Gram-matrix oracle.
    const auto oracle = oracles::gram_svd(F.data);
    double tail = 0.0;
    for (int k = K; k < oracle.singular_values.size(); ++k)
        tail += oracle.singular_values[k] * oracle.singular_values[k];
    CHECK(residual_energy == doctest::Approx(tail).epsilon(1e-8));

    double total = 0.0, head = 0.0;
    for (int k = 0; k < basis.singular_values.size(); ++k) {
        const double e = basis.singular_values[k] * basis.singular_values[k];
        total += e;
        if (k < K) head += e;
    }
    CHECK(basis.energy_fraction == doctest::Approx(head / total).epsilon(1e-12));

    CHECK_THROWS_AS(pod_basis(F, 21), std::invalid_argument);
}

TEST_CASE("project/reconstruct: coefficient round trips") {
    SnapshotMatrix F;
    F.data = random_matrix(30, 12, 9);
    F.row_meta.assign(30, {0.5, 0});
    const auto basis = pod_basis(F, 4);

    SUBCASE("unit coefficient returns the corresponding mode") {
        Eigen::VectorXd e1 = Eigen::VectorXd::Zero(4);
        e1[0] = 1.0;
        const Eigen::VectorXd field = reconstruct(basis, e1);
        CHECK((field - basis.modes.col(0)).cwiseAbs().maxCoeff() <= 1e-15);
    }
    SUBCASE("field orthogonal to every mode projects to zero") {
        Rng rng(11);
        Eigen::VectorXd field(12);
        for (int i = 0; i < 12; ++i) field[i] = rng.normal();
        field -= basis.modes * (basis.modes.transpose() * field);
        CHECK(project(basis, field).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("coefficients round trip through the basis") {
        Rng rng(12);
        Eigen::VectorXd c(4);
        for (int i = 0; i < 4; ++i) c[i] = rng.normal();
        const Eigen::VectorXd back = project(basis, reconstruct(basis, c));
        CHECK((back - c).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("length mismatches are contract violations") {
        CHECK_THROWS_AS(project(basis, Eigen::VectorXd::Zero(5)), std::invalid_argument);
        CHECK_THROWS_AS(reconstruct(basis, Eigen::VectorXd::Zero(3)), std::invalid_argument);
    }
}
