#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfm/features.hpp"
#include "rfm/lsq.hpp"

namespace rfm {

/// Linear combination over a frozen feature bank. The bank is shared, not
/// copied: every trial function of a run points at the same sampled features
/// and only the coefficient vector differs.
struct TrialFunction {
    std::shared_ptr<const FeatureBank> bank;
    Eigen::VectorXd coeffs;

    Eigen::VectorXd evaluate(const Eigen::MatrixXd& points, const DerivOrder& deriv) const {
        return basis_matrix(*bank, points, deriv) * coeffs;
    }

    Eigen::VectorXd evaluate(const Eigen::MatrixXd& points) const {
        return evaluate(points, DerivOrder(bank->decomp.dim(), 0));
    }

    double operator()(const Eigen::VectorXd& x) const {
        Eigen::MatrixXd p = x.transpose();
        return evaluate(p)[0];
    }
};

struct FitResult {
    TrialFunction fn;
    double residual = 0.0; // relative l2 residual of the fit system
    int rank = 0;
};

/// Value rows for fitting: every cell's closed collocation grid against its
/// own block, plus the domain boundary faces (ownership-evaluated). Shared
/// interior face points appear once per adjacent cell on purpose, so both
/// local representatives are pinned to the target there.
template <typename TargetFn>
FitResult fit_function(std::shared_ptr<const FeatureBank> bank, int q_per_dim, TargetFn&& target,
                       double tau) {
    const Decomposition& dec = bank->decomp;
    const int d = dec.dim();
    std::vector<Eigen::MatrixXd> cell_pts(dec.cell_count());
    Eigen::Index n_colloc = 0;
    for (int c = 0; c < dec.cell_count(); ++c) {
        cell_pts[c] = collocation_grid(dec, c, q_per_dim);
        n_colloc += cell_pts[c].rows();
    }
    std::vector<Eigen::MatrixXd> bfaces;
    Eigen::Index n_bnd = 0;
    for (int axis = 0; axis < d; ++axis)
        for (int side : {-1, +1}) {
            bfaces.push_back(boundary_face_points(dec, axis, side, q_per_dim));
            n_bnd += bfaces.back().rows();
        }

    const DerivOrder d0(d, 0);
    Eigen::MatrixXd a(n_colloc + n_bnd, bank->total_features());
    a.topRows(n_colloc) = collocation_rows(*bank, cell_pts, d0);
    Eigen::VectorXd rhs(n_colloc + n_bnd);
    Eigen::Index r = 0;
    for (int c = 0; c < dec.cell_count(); ++c)
        for (Eigen::Index p = 0; p < cell_pts[c].rows(); ++p)
            rhs[r++] = target(Eigen::VectorXd(cell_pts[c].row(p).transpose()));
    for (const auto& f : bfaces) {
        a.middleRows(r, f.rows()) = basis_matrix(*bank, f, d0);
        for (Eigen::Index p = 0; p < f.rows(); ++p)
            rhs[r++] = target(Eigen::VectorXd(f.row(p).transpose()));
    }

    TruncatedPinv pinv(a, tau);
    FitResult out;
    out.fn.bank = std::move(bank);
    out.fn.coeffs = pinv.apply(rhs);
    const double scale = rhs.norm();
    out.residual = (a * out.fn.coeffs - rhs).norm() / (scale > 0.0 ? scale : 1.0);
    out.rank = pinv.rank();
    return out;
}

/// One coefficient per line, printed with 17 significant digits so that a
/// save/load round trip is bit exact.
inline void save_coeffs(const std::string& path, const Eigen::VectorXd& coeffs) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    char buf[40];
    for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", coeffs[i]);
        out << buf << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline Eigen::VectorXd load_coeffs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::vector<double> vals;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        vals.push_back(std::stod(line));
    }
    return Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

} // namespace rfm
