#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace rfm {

/// ||predicted - reference||_2 / ||reference||_2 over shared sample points.
inline double relative_l2(const Eigen::VectorXd& predicted, const Eigen::VectorXd& reference) {
    if (predicted.size() != reference.size())
        throw std::invalid_argument("relative_l2 size mismatch");
    const double denom = reference.norm();
    if (denom == 0.0) throw std::invalid_argument("relative_l2 reference is identically zero");
    return (predicted - reference).norm() / denom;
}

/// Least-squares slope of log(error) against log(dt). Positive slopes mean
/// the error decays as dt does; a plateaued error sequence gives slope ~0.
inline double estimate_order(const std::vector<double>& dts, const std::vector<double>& errors) {
    if (dts.size() != errors.size() || dts.size() < 2)
        throw std::invalid_argument("estimate_order needs matching lists of length >= 2");
    const int n = static_cast<int>(dts.size());
    double sx = 0.0, sy = 0.0;
    std::vector<double> xs(n), ys(n);
    for (int i = 0; i < n; ++i) {
        if (!(dts[i] > 0.0) || !(errors[i] > 0.0))
            throw std::invalid_argument("estimate_order needs positive dts and errors");
        xs[i] = std::log(dts[i]);
        ys[i] = std::log(errors[i]);
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / n, my = sy / n;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
        num += (xs[i] - mx) * (ys[i] - my);
        den += (xs[i] - mx) * (xs[i] - mx);
    }
    if (den == 0.0) throw std::invalid_argument("estimate_order needs at least two distinct dts");
    return num / den;
}

} // namespace rfm
