#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <stdexcept>

namespace rfm {

/// Truncated-SVD pseudoinverse. Factorize once, apply to many right-hand
/// sides; singular values below tau * sigma_max are discarded, which both
/// regularizes the ill-conditioned feature matrices and yields the
/// minimum-norm solution on the retained subspace.
class TruncatedPinv {
public:
    TruncatedPinv() = default;

    TruncatedPinv(const Eigen::MatrixXd& a, double tau) { factorize(a, tau); }

    void factorize(const Eigen::MatrixXd& a, double tau) {
        if (!(tau >= 0.0)) throw std::invalid_argument("tau must be >= 0");
        rows_ = a.rows();
        cols_ = a.cols();
        tau_ = tau;
        // BDCSVD for large blocks; it falls back to Jacobi internally for
        // small sizes.
        Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::VectorXd& sv = svd.singularValues();
        const double smax = sv.size() > 0 ? sv[0] : 0.0;
        int r = 0;
        while (r < sv.size() && sv[r] >= tau * smax && sv[r] > 0.0) ++r;
        rank_ = r;
        sigma_ = sv.head(r);
        u_ = svd.matrixU().leftCols(r);
        v_ = svd.matrixV().leftCols(r);
    }

    /// Minimum-norm least-squares solution restricted to the retained
    /// singular subspace.
    Eigen::VectorXd apply(const Eigen::VectorXd& rhs) const {
        if (rhs.size() != rows_) throw std::invalid_argument("rhs size mismatch");
        if (rank_ == 0) return Eigen::VectorXd::Zero(cols_);
        return v_ * (u_.transpose() * rhs).cwiseQuotient(sigma_);
    }

    int rank() const { return rank_; }
    double tau() const { return tau_; }
    Eigen::Index rows() const { return rows_; }
    Eigen::Index cols() const { return cols_; }
    const Eigen::VectorXd& singular_values() const { return sigma_; }

private:
    Eigen::MatrixXd u_, v_;
    Eigen::VectorXd sigma_;
    double tau_ = 0.0;
    int rank_ = 0;
    Eigen::Index rows_ = 0, cols_ = 0;
};

inline Eigen::VectorXd solve_lsq(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tau) {
    return TruncatedPinv(a, tau).apply(b);
}

} // namespace rfm
