#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include "rfm/lsq.hpp"
#include "rfm/rng.hpp"

using namespace rfm;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, SplitMix64& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    return m;
}

/// Independent route: eigendecomposition of the normal equations A^T A,
/// truncated at (tau * sigma_max)^2.
Eigen::VectorXd normal_equation_pinv(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                     double tau) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a.transpose() * a);
    const Eigen::VectorXd& lam = eig.eigenvalues(); // ascending
    const double lam_max = lam[lam.size() - 1];
    const Eigen::VectorXd atb = a.transpose() * b;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(a.cols());
    for (int i = 0; i < lam.size(); ++i) {
        if (lam[i] <= 0.0) continue;
        if (std::sqrt(lam[i]) < tau * std::sqrt(lam_max)) continue;
        const Eigen::VectorXd v = eig.eigenvectors().col(i);
        x += v * (v.dot(atb) / lam[i]);
    }
    return x;
}

} // namespace

TEST_CASE("truncation boundary: singular values below tau*sigma_max are dropped") {
    SplitMix64 rng(2);
    Eigen::MatrixXd u = Eigen::HouseholderQR<Eigen::MatrixXd>(random_matrix(6, 6, rng))
                            .householderQ();
    Eigen::MatrixXd v = Eigen::HouseholderQR<Eigen::MatrixXd>(random_matrix(3, 3, rng))
                            .householderQ();
    Eigen::VectorXd sig(3);
    sig << 1.0, 1e-2, 1e-9;
    Eigen::MatrixXd a = u.leftCols(3) * sig.asDiagonal() * v.transpose();

    TruncatedPinv pinv(a, 1e-6);
    CHECK(pinv.rank() == 2);

    // On the retained subspace the pinv inverts exactly.
    Eigen::VectorXd b = Eigen::VectorXd::Ones(6);
    Eigen::VectorXd x = pinv.apply(b);
    Eigen::MatrixXd rank2 =
        v.leftCols(2) * sig.head(2).cwiseInverse().asDiagonal() * u.leftCols(2).transpose();
    CHECK((x - rank2 * b).norm() < 1e-12);

    TruncatedPinv keep_all(a, 1e-12);
    CHECK(keep_all.rank() == 3);
}

TEST_CASE("consistent square systems are solved exactly") {
    SplitMix64 rng(3);
    Eigen::MatrixXd a = random_matrix(8, 8, rng);
    a += 8.0 * Eigen::MatrixXd::Identity(8, 8); // well conditioned
    Eigen::VectorXd x_true = random_matrix(8, 1, rng);
    Eigen::VectorXd x = solve_lsq(a, a * x_true, 1e-14);
    CHECK((x - x_true).norm() < 1e-11);
}

TEST_CASE("underdetermined systems give the minimum-norm solution") {
    SplitMix64 rng(4);
    Eigen::MatrixXd a = random_matrix(3, 7, rng);
    Eigen::VectorXd b = random_matrix(3, 1, rng);
    Eigen::VectorXd x = solve_lsq(a, b, 1e-14);
    // Residual is zero (full row rank) and x lies in range(A^T).
    CHECK((a * x - b).norm() < 1e-12);
    Eigen::VectorXd x_mn = a.transpose() * (a * a.transpose()).ldlt().solve(b);
    CHECK((x - x_mn).norm() < 1e-10);
}

TEST_CASE("truncated pinv agrees with the normal-equation eigendecomposition route") {
    SplitMix64 rng(5);
    for (int trial = 0; trial < 12; ++trial) {
        Eigen::MatrixXd a = random_matrix(20, 12, rng);
        double tau = 1e-10;
        if (trial % 3 == 1) {
            a.col(7) = a.col(3); // exactly rank deficient
            a.col(11) = 2.0 * a.col(0) - a.col(1);
            tau = 1e-8;
        }
        Eigen::VectorXd b = random_matrix(20, 1, rng);
        Eigen::VectorXd x_svd = solve_lsq(a, b, tau);
        Eigen::VectorXd x_eig = normal_equation_pinv(a, b, tau);
        CHECK((x_svd - x_eig).norm() / std::max(1.0, x_eig.norm()) < 1e-8);
    }
}

TEST_CASE("row scaling of a consistent system does not move the solution") {
    SplitMix64 rng(6);
    Eigen::MatrixXd a = random_matrix(9, 4, rng);
    Eigen::VectorXd x_true = random_matrix(4, 1, rng);
    Eigen::VectorXd b = a * x_true;
    Eigen::VectorXd w(9);
    for (int i = 0; i < 9; ++i) w[i] = rng.uniform(0.5, 3.0);
    Eigen::VectorXd x = solve_lsq(w.asDiagonal() * a, w.cwiseProduct(b), 1e-13);
    CHECK((x - x_true).norm() < 1e-10);
}

TEST_CASE("zero matrix has rank zero and maps to the zero solution") {
    TruncatedPinv pinv(Eigen::MatrixXd::Zero(5, 3), 1e-16);
    CHECK(pinv.rank() == 0);
    CHECK(pinv.apply(Eigen::VectorXd::Ones(5)).norm() == 0.0);
}
