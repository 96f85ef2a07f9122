#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace rfm {

/// Axis-aligned box [lo_1,hi_1] x ... x [lo_d,hi_d].
struct Domain {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    int dim() const { return static_cast<int>(lo.size()); }

    static Domain unit_box(int d) {
        Domain dom;
        dom.lo = Eigen::VectorXd::Constant(d, -1.0);
        dom.hi = Eigen::VectorXd::Constant(d, 1.0);
        return dom;
    }
};

/// One cell of the tensor decomposition. Normalized coordinates are
/// x_tilde = (x - center) / half_width, componentwise, so the cell closure is
/// [-1,1]^d in x_tilde.
struct Subdomain {
    Eigen::VectorXd center;
    Eigen::VectorXd half_width;
};

/// Interior face between two adjacent cells, with its interface points.
struct Interface {
    int axis = 0;
    int left_cell = 0;  // lower coordinate side
    int right_cell = 0;
    Eigen::MatrixXd points; // one row per point
};

/// Uniform tensor decomposition of a box into prod(m_per_dim) subdomains.
/// Cell linear index is C-ordered: the last dimension varies fastest.
class Decomposition {
public:
    Decomposition() = default;

    Decomposition(Domain domain, std::vector<int> m_per_dim)
        : domain_(std::move(domain)), m_per_dim_(std::move(m_per_dim)) {
        const int d = domain_.dim();
        if (static_cast<int>(m_per_dim_.size()) != d)
            throw std::invalid_argument("m_per_dim size must match domain dimension");
        cell_count_ = 1;
        for (int m : m_per_dim_) {
            if (m < 1) throw std::invalid_argument("m_per_dim entries must be >= 1");
            cell_count_ *= m;
        }
        width_ = Eigen::VectorXd(d);
        for (int k = 0; k < d; ++k)
            width_[k] = (domain_.hi[k] - domain_.lo[k]) / m_per_dim_[k];
        cells_.resize(cell_count_);
        std::vector<int> idx(d, 0);
        for (int c = 0; c < cell_count_; ++c) {
            unravel(c, idx);
            Subdomain s;
            s.center = Eigen::VectorXd(d);
            s.half_width = 0.5 * width_;
            for (int k = 0; k < d; ++k)
                s.center[k] = domain_.lo[k] + (idx[k] + 0.5) * width_[k];
            cells_[c] = std::move(s);
        }
    }

    const Domain& domain() const { return domain_; }
    int dim() const { return domain_.dim(); }
    int cell_count() const { return cell_count_; }
    const std::vector<int>& m_per_dim() const { return m_per_dim_; }
    const Subdomain& cell(int c) const { return cells_[c]; }

    /// Linear index of a multi-index (C order, last dim fastest).
    int cell_index(const std::vector<int>& idx) const {
        int lin = 0;
        for (int k = 0; k < dim(); ++k) lin = lin * m_per_dim_[k] + idx[k];
        return lin;
    }

    void unravel(int lin, std::vector<int>& idx) const {
        for (int k = dim() - 1; k >= 0; --k) {
            idx[k] = lin % m_per_dim_[k];
            lin /= m_per_dim_[k];
        }
    }

    /// Cell whose half-open tile [face_k, face_{k+1}) contains x; points on an
    /// interior face belong to the higher-index cell, the domain's max face to
    /// the last cell. Out-of-range coordinates clamp to the nearest cell.
    int owner(const Eigen::VectorXd& x) const {
        int lin = 0;
        for (int k = 0; k < dim(); ++k) {
            int i = static_cast<int>(std::floor((x[k] - domain_.lo[k]) / width_[k]));
            if (i < 0) i = 0;
            if (i >= m_per_dim_[k]) i = m_per_dim_[k] - 1;
            lin = lin * m_per_dim_[k] + i;
        }
        return lin;
    }

    Eigen::VectorXd normalize(int c, const Eigen::VectorXd& x) const {
        const Subdomain& s = cells_[c];
        return (x - s.center).cwiseQuotient(s.half_width);
    }

    /// True if cell c is first (side -1) or last (side +1) along axis k.
    bool at_domain_edge(int c, int axis, int side) const {
        std::vector<int> idx(dim());
        unravel(c, idx);
        return side < 0 ? idx[axis] == 0 : idx[axis] == m_per_dim_[axis] - 1;
    }

private:
    Domain domain_;
    std::vector<int> m_per_dim_;
    std::vector<Subdomain> cells_;
    Eigen::VectorXd width_;
    int cell_count_ = 0;
};

inline Decomposition decompose(const Domain& domain, const std::vector<int>& m_per_dim) {
    return Decomposition(domain, m_per_dim);
}

namespace detail {

/// Tensor grid from per-axis coordinate lists, C order (last axis fastest).
inline Eigen::MatrixXd tensor_points(const std::vector<Eigen::VectorXd>& axes) {
    const int d = static_cast<int>(axes.size());
    Eigen::Index n = 1;
    for (const auto& a : axes) n *= a.size();
    Eigen::MatrixXd pts(n, d);
    for (Eigen::Index r = 0; r < n; ++r) {
        Eigen::Index rem = r;
        for (int k = d - 1; k >= 0; --k) {
            const Eigen::Index nk = axes[k].size();
            pts(r, k) = axes[k][rem % nk];
            rem /= nk;
        }
    }
    return pts;
}

} // namespace detail

/// Closed uniform grid with q points per dimension on the closure of cell c
/// (q >= 2 so both faces are sampled). One row per point, C order.
inline Eigen::MatrixXd collocation_grid(const Decomposition& dec, int c, int q_per_dim) {
    if (q_per_dim < 2) throw std::invalid_argument("q_per_dim must be >= 2");
    const Subdomain& s = dec.cell(c);
    std::vector<Eigen::VectorXd> axes(dec.dim());
    for (int k = 0; k < dec.dim(); ++k)
        axes[k] = Eigen::VectorXd::LinSpaced(q_per_dim, s.center[k] - s.half_width[k],
                                             s.center[k] + s.half_width[k]);
    return detail::tensor_points(axes);
}

/// Union of the per-cell closed grids along one axis, deduplicated at shared
/// faces: a uniform closed grid with m*(q-1)+1 points over the full extent.
inline Eigen::VectorXd global_axis_points(const Decomposition& dec, int axis, int q_per_dim) {
    const int m = dec.m_per_dim()[axis];
    const int n = m * (q_per_dim - 1) + 1;
    return Eigen::VectorXd::LinSpaced(n, dec.domain().lo[axis], dec.domain().hi[axis]);
}

/// Points on the domain face {x_axis = lo or hi}: tensor product of the
/// deduplicated global per-axis grids over the remaining dimensions. In 1D
/// this is the single corner point.
inline Eigen::MatrixXd boundary_face_points(const Decomposition& dec, int axis, int side,
                                            int q_per_dim) {
    const int d = dec.dim();
    const double coord = side < 0 ? dec.domain().lo[axis] : dec.domain().hi[axis];
    std::vector<Eigen::VectorXd> axes(d);
    for (int k = 0; k < d; ++k) {
        if (k == axis)
            axes[k] = Eigen::VectorXd::Constant(1, coord);
        else
            axes[k] = global_axis_points(dec, k, q_per_dim);
    }
    return detail::tensor_points(axes);
}

/// Interior interfaces with per_face_count points per transverse dimension,
/// uniformly placed on the closed face. Faces are ordered axis-major, then by
/// the C order of (face layer, transverse cell index).
inline std::vector<Interface> interface_points(const Decomposition& dec, int per_face_count) {
    if (per_face_count < 1) throw std::invalid_argument("per_face_count must be >= 1");
    const int d = dec.dim();
    std::vector<Interface> faces;
    std::vector<int> idx(d);
    for (int axis = 0; axis < d; ++axis) {
        const int m_axis = dec.m_per_dim()[axis];
        for (int c = 0; c < dec.cell_count(); ++c) {
            dec.unravel(c, idx);
            if (idx[axis] >= m_axis - 1) continue; // pair with the +1 neighbor only
            std::vector<int> nb = idx;
            nb[axis] += 1;
            Interface f;
            f.axis = axis;
            f.left_cell = c;
            f.right_cell = dec.cell_index(nb);
            const Subdomain& s = dec.cell(c);
            std::vector<Eigen::VectorXd> axes(d);
            for (int k = 0; k < d; ++k) {
                if (k == axis) {
                    axes[k] = Eigen::VectorXd::Constant(1, s.center[k] + s.half_width[k]);
                } else if (per_face_count == 1) {
                    axes[k] = Eigen::VectorXd::Constant(1, s.center[k]);
                } else {
                    axes[k] = Eigen::VectorXd::LinSpaced(per_face_count, s.center[k] - s.half_width[k],
                                                         s.center[k] + s.half_width[k]);
                }
            }
            f.points = detail::tensor_points(axes);
            faces.push_back(std::move(f));
        }
    }
    return faces;
}

} // namespace rfm
