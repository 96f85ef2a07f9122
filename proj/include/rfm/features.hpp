#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rfm/activation.hpp"
#include "rfm/geometry.hpp"
#include "rfm/pou.hpp"
#include "rfm/rng.hpp"

namespace rfm {

/// Partial-derivative multi-index, one entry per dimension.
using DerivOrder = std::vector<int>;

inline int total_order(const DerivOrder& d) {
    int t = 0;
    for (int o : d) {
        if (o < 0) throw std::invalid_argument("derivative orders must be >= 0");
        t += o;
    }
    return t;
}

/// Multi-index with `order` derivatives along `axis` and none elsewhere.
inline DerivOrder axis_deriv(int dim, int axis, int order) {
    DerivOrder d(dim, 0);
    d[axis] = order;
    return d;
}

/// Random features on a decomposition: cell c carries features
///   phi_j(x) = sigma(w_j . x_tilde + b_j),  x_tilde = normalized in cell c,
/// with w_j, b_j ~ U[-r_m, r_m] drawn once and then frozen. Column layout of
/// every assembled matrix is cell-major: column c*features_per_cell + j.
struct FeatureBank {
    Decomposition decomp;
    int features_per_cell = 0;
    double r_m = 1.0;
    Activation activation = Activation::Tanh;
    Pou pou = Pou::PsiA;
    std::uint64_t seed = 0;
    std::vector<Eigen::MatrixXd> weights; // per cell, features_per_cell x dim
    std::vector<Eigen::VectorXd> biases;  // per cell, features_per_cell

    int total_features() const { return decomp.cell_count() * features_per_cell; }
    int col_offset(int cell) const { return cell * features_per_cell; }
};

/// Draw a bank. Each cell uses its own SplitMix64 substream (seed, cell), and
/// within a cell features are drawn in order: w_1..w_d, then b.
inline FeatureBank sample_bank(const Decomposition& dec, int features_per_cell, double r_m,
                               Activation activation, Pou pou, std::uint64_t seed) {
    if (features_per_cell < 1) throw std::invalid_argument("features_per_cell must be >= 1");
    if (!(r_m > 0.0)) throw std::invalid_argument("r_m must be > 0");
    FeatureBank bank;
    bank.decomp = dec;
    bank.features_per_cell = features_per_cell;
    bank.r_m = r_m;
    bank.activation = activation;
    bank.pou = pou;
    bank.seed = seed;
    const int d = dec.dim();
    bank.weights.resize(dec.cell_count());
    bank.biases.resize(dec.cell_count());
    for (int c = 0; c < dec.cell_count(); ++c) {
        SplitMix64 rng = SplitMix64::stream(seed, static_cast<std::uint64_t>(c));
        Eigen::MatrixXd w(features_per_cell, d);
        Eigen::VectorXd b(features_per_cell);
        for (int j = 0; j < features_per_cell; ++j) {
            for (int k = 0; k < d; ++k) w(j, k) = rng.uniform(-r_m, r_m);
            b[j] = rng.uniform(-r_m, r_m);
        }
        bank.weights[c] = std::move(w);
        bank.biases[c] = std::move(b);
    }
    return bank;
}

namespace detail {

/// sigma^(m) applied entrywise. For tanh the precomputed T = tanh(Z) is
/// reused across Leibniz terms.
inline Eigen::ArrayXXd sigma_entrywise(Activation act, int m, const Eigen::ArrayXXd& z,
                                       const Eigen::ArrayXXd& tanh_z) {
    if (act == Activation::Tanh) {
        const Eigen::ArrayXXd& t = tanh_z;
        const Eigen::ArrayXXd s = 1.0 - t.square();
        switch (m) {
            case 0: return t;
            case 1: return s;
            case 2: return -2.0 * t * s;
            case 3: return s * (6.0 * t.square() - 2.0);
            case 4: return s * t * (16.0 - 24.0 * t.square());
            default: throw std::invalid_argument("feature derivative order must be in 0..4");
        }
    }
    if (m > 4) throw std::invalid_argument("feature derivative order must be in 0..4");
    const int phase = act == Activation::Sin ? m & 3 : (m + 1) & 3; // cos = sin shifted
    switch (phase) {
        case 0: return z.sin();
        case 1: return z.cos();
        case 2: return -z.sin();
        default: return -z.cos();
    }
}

/// PoU factor along one axis in normalized coordinates, with the outward
/// blend of domain-edge cells flattened to 1 so the partition still sums to 1
/// on the whole domain (there is no neighbor beyond the edge to blend with).
inline double pou_axis(Pou pou, int order, double xt, bool first, bool last) {
    if (pou == Pou::PsiA) return psi_a(order, xt);
    if ((first && xt < -0.75) || (last && xt > 0.75)) return order == 0 ? 1.0 : 0.0;
    return psi_b(order, xt);
}

inline double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

} // namespace detail

/// Dense block of the local basis of one cell at the given points:
/// entry (p, j) = d^deriv [ psi(x_tilde) * sigma(w_j . x_tilde + b_j) ] at
/// point p, including the PoU weight. Points outside the PoU support give
/// zero rows. psi_a admits orders up to 4, psi_b up to total order 2.
inline Eigen::MatrixXd local_block(const FeatureBank& bank, int cell, const Eigen::MatrixXd& points,
                                   const DerivOrder& deriv) {
    const Decomposition& dec = bank.decomp;
    const int d = dec.dim();
    const int n = static_cast<int>(points.rows());
    const int jn = bank.features_per_cell;
    if (static_cast<int>(deriv.size()) != d)
        throw std::invalid_argument("deriv multi-index size must match dimension");
    const int m_total = total_order(deriv);
    if (m_total > pou_max_order(bank.pou) && bank.pou == Pou::PsiB)
        throw std::invalid_argument("psi_b supports total derivative order <= 2");
    if (m_total > 4) throw std::invalid_argument("feature derivative order must be in 0..4");

    const Subdomain& s = dec.cell(cell);
    Eigen::MatrixXd xt(n, d);
    for (int k = 0; k < d; ++k)
        xt.col(k) = (points.col(k).array() - s.center[k]) / s.half_width[k];

    const Eigen::MatrixXd& w = bank.weights[cell];
    Eigen::ArrayXXd z = (xt * w.transpose()).array();
    z.rowwise() += bank.biases[cell].transpose().array();
    Eigen::ArrayXXd tanh_z;
    if (bank.activation == Activation::Tanh) tanh_z = z.tanh();

    // Per-axis support mask and (for psi_b) PoU derivative factors.
    constexpr double support_tol = 1e-12;
    const double support_half = bank.pou == Pou::PsiA ? 1.0 : 1.25;
    Eigen::ArrayXd in_support = Eigen::ArrayXd::Ones(n);
    for (int k = 0; k < d; ++k)
        in_support *= (xt.col(k).array().abs() <= support_half + support_tol).cast<double>();

    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(n, jn);

    if (bank.pou == Pou::PsiA) {
        // psi_a contributes no derivative terms: block = 1_support * d^deriv phi.
        Eigen::ArrayXd scale = Eigen::ArrayXd::Ones(jn);
        for (int k = 0; k < d; ++k)
            for (int o = 0; o < deriv[k]; ++o)
                scale *= w.col(k).array() / s.half_width[k];
        Eigen::ArrayXXd sig = detail::sigma_entrywise(bank.activation, m_total, z, tanh_z);
        block.array() = sig.colwise() * in_support;
        block.array().rowwise() *= scale.transpose();
        return block;
    }

    // psi_b: Leibniz over beta <= deriv componentwise. The PoU part is a
    // product of per-axis psi_b derivatives in normalized coordinates, one
    // chain-rule factor 1/h per derivative.
    std::vector<bool> first(d), last(d);
    for (int k = 0; k < d; ++k) {
        first[k] = dec.at_domain_edge(cell, k, -1);
        last[k] = dec.at_domain_edge(cell, k, +1);
    }
    DerivOrder beta(d, 0);
    while (true) {
        int beta_total = total_order(beta);
        double comb = 1.0;
        for (int k = 0; k < d; ++k) comb *= detail::binomial(deriv[k], beta[k]);
        Eigen::ArrayXd pou_factor(n);
        for (int p = 0; p < n; ++p) {
            double v = 1.0;
            for (int k = 0; k < d; ++k)
                v *= detail::pou_axis(bank.pou, beta[k], xt(p, k), first[k], last[k]) /
                     std::pow(s.half_width[k], beta[k]);
            pou_factor[p] = v;
        }
        Eigen::ArrayXd scale = Eigen::ArrayXd::Ones(jn);
        for (int k = 0; k < d; ++k)
            for (int o = 0; o < deriv[k] - beta[k]; ++o)
                scale *= w.col(k).array() / s.half_width[k];
        Eigen::ArrayXXd sig =
            detail::sigma_entrywise(bank.activation, m_total - beta_total, z, tanh_z);
        block.array() += (sig.colwise() * (pou_factor * comb)).rowwise() * scale.transpose();

        int k = d - 1;
        while (k >= 0 && beta[k] == deriv[k]) beta[k--] = 0;
        if (k < 0) break;
        ++beta[k];
    }
    block.array().colwise() *= in_support;
    return block;
}

/// Global basis matrix at arbitrary points, one row per point, columns
/// cell-major over the whole bank. With psi_a each point is evaluated against
/// its owning cell only; with psi_b all overlapping cells contribute.
inline Eigen::MatrixXd basis_matrix(const FeatureBank& bank, const Eigen::MatrixXd& points,
                                    const DerivOrder& deriv) {
    const Decomposition& dec = bank.decomp;
    const int n = static_cast<int>(points.rows());
    const int jn = bank.features_per_cell;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, bank.total_features());

    if (bank.pou == Pou::PsiA) {
        // Group rows by owner, evaluate each owner block once.
        std::vector<std::vector<int>> rows_of_cell(dec.cell_count());
        for (int p = 0; p < n; ++p) rows_of_cell[dec.owner(points.row(p).transpose())].push_back(p);
        for (int c = 0; c < dec.cell_count(); ++c) {
            const auto& rows = rows_of_cell[c];
            if (rows.empty()) continue;
            Eigen::MatrixXd sub(rows.size(), dec.dim());
            for (size_t r = 0; r < rows.size(); ++r) sub.row(r) = points.row(rows[r]);
            Eigen::MatrixXd blk = local_block(bank, c, sub, deriv);
            for (size_t r = 0; r < rows.size(); ++r)
                out.row(rows[r]).segment(bank.col_offset(c), jn) = blk.row(r);
        }
        return out;
    }

    for (int c = 0; c < dec.cell_count(); ++c) {
        Eigen::MatrixXd blk = local_block(bank, c, points, deriv);
        out.middleCols(bank.col_offset(c), jn) = blk;
    }
    return out;
}

/// Stacked per-cell rows: cell c's points evaluated against cell c's own
/// block only (rows grouped cell-major). This is the psi_a collocation-row
/// layout: shared face points appear once per adjacent cell, each
/// constraining that cell's local representative.
inline Eigen::MatrixXd stacked_local_rows(const FeatureBank& bank,
                                          const std::vector<Eigen::MatrixXd>& cell_points,
                                          const DerivOrder& deriv) {
    const Decomposition& dec = bank.decomp;
    if (static_cast<int>(cell_points.size()) != dec.cell_count())
        throw std::invalid_argument("cell_points must have one entry per cell");
    Eigen::Index n = 0;
    for (const auto& p : cell_points) n += p.rows();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, bank.total_features());
    Eigen::Index row0 = 0;
    for (int c = 0; c < dec.cell_count(); ++c) {
        const Eigen::Index nc = cell_points[c].rows();
        if (nc == 0) continue;
        out.block(row0, bank.col_offset(c), nc, bank.features_per_cell) =
            local_block(bank, c, cell_points[c], deriv);
        row0 += nc;
    }
    return out;
}

/// Rows used for collocation (PDE and fit) at the concatenated per-cell
/// grids. With psi_a the trial function restricted to a cell closure is the
/// cell's own block, so rows are the stacked local blocks. With psi_b the
/// global function is a sum over overlapping cells everywhere, so each row
/// must carry every supporting cell's contribution; the row order (cell-major
/// concatenation of the grids) is the same in both modes.
inline Eigen::MatrixXd collocation_rows(const FeatureBank& bank,
                                        const std::vector<Eigen::MatrixXd>& cell_points,
                                        const DerivOrder& deriv) {
    if (bank.pou == Pou::PsiA) return stacked_local_rows(bank, cell_points, deriv);
    Eigen::Index n = 0;
    for (const auto& p : cell_points) n += p.rows();
    Eigen::MatrixXd all(n, bank.decomp.dim());
    Eigen::Index r = 0;
    for (const auto& p : cell_points) {
        all.middleRows(r, p.rows()) = p;
        r += p.rows();
    }
    return basis_matrix(bank, all, deriv);
}

} // namespace rfm
