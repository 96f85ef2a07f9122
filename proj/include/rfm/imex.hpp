#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rfm/features.hpp"
#include "rfm/lsq.hpp"
#include "rfm/model.hpp"
#include "rfm/problems.hpp"
#include "rfm/tableau.hpp"

namespace rfm {

/// A stage solve produced a non-finite result: the step size is outside the
/// stable region for this problem, or the system lost rank. stage is 1-based;
/// step counts completed steps before the failure.
class NumericalError : public std::runtime_error {
public:
    NumericalError(int stage, int step, const std::string& msg)
        : std::runtime_error(msg), stage_(stage), step_(step) {}

    int stage() const { return stage_; }
    int step() const { return step_; }

private:
    int stage_;
    int step_;
};

/// Relative scaling of the three row blocks of the stage system. A block's
/// factor multiplies its rows and its right-hand-side entries alike, so it
/// biases the least-squares balance without changing any exactly satisfiable
/// system.
struct RowWeights {
    double collocation = 1.0;
    double boundary = 1.0;
    double continuity = 1.0;
};

/// Every cell's closed q^d grid, concatenated cell-major. Shared face points
/// appear once per adjacent cell on purpose: with the indicator partition
/// each copy constrains its own cell's local representative (the row
/// semantics of collocation_rows).
struct CollocationLayout {
    std::vector<Eigen::MatrixXd> cell_points;
    Eigen::MatrixXd points; // stacked cell-major, one row per point
    std::vector<Eigen::Index> offsets;
    int q_per_dim = 0;

    Eigen::Index total() const { return points.rows(); }
};

inline CollocationLayout make_collocation_layout(const Decomposition& dec, int q_per_dim) {
    CollocationLayout lay;
    lay.q_per_dim = q_per_dim;
    lay.cell_points.resize(dec.cell_count());
    lay.offsets.resize(dec.cell_count());
    Eigen::Index n = 0;
    for (int c = 0; c < dec.cell_count(); ++c) {
        lay.cell_points[c] = collocation_grid(dec, c, q_per_dim);
        lay.offsets[c] = n;
        n += lay.cell_points[c].rows();
    }
    lay.points.resize(n, dec.dim());
    for (int c = 0; c < dec.cell_count(); ++c)
        lay.points.middleRows(lay.offsets[c], lay.cell_points[c].rows()) = lay.cell_points[c];
    return lay;
}

/// Wall-clock accounting, seconds. factorize covers the stage-operator SVD
/// (once per (dt, bank) pair), assemble the one-time row construction, ic_fit
/// the initial projection. The per-step phases (rhs, solve, explicit_eval,
/// update) are all dense matrix-vector work.
struct PhaseTimings {
    int factorize_count = 0;
    double factorize_seconds = 0.0;
    double assemble_seconds = 0.0;
    double ic_fit_seconds = 0.0;
    double rhs_seconds = 0.0;
    double solve_seconds = 0.0;
    double explicit_seconds = 0.0;
    double update_seconds = 0.0;
    double total_seconds = 0.0;

    double per_step_matvec_seconds() const {
        return rhs_seconds + solve_seconds + explicit_seconds + update_seconds;
    }
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

} // namespace detail

/// Marching state. The solution is carried as VALUES at the collocation
/// layout points; coeffs is the latest trial-space representative (the
/// initial-condition fit at n = 0, the final stage afterwards), used for
/// derivative-coupled explicit terms and for dense output. The update weights
/// equal the last stage row in both tableau parts, so coeffs tracks values to
/// least-squares-residual accuracy.
struct State {
    Eigen::VectorXd values;
    Eigen::VectorXd coeffs;
    double time = 0.0;
    int step = 0;
};

struct StageSolution {
    Eigen::VectorXd coeffs;
    Eigen::VectorXd l_values; // (L U_i) at collocation points
    Eigen::VectorXd g_values; // G(U_i) at collocation points (empty when unused)
};

/// Factorized least-squares system of one implicit stage,
///
///   rows = [ w_coll * ((I - dt a_ii L) phi at collocation points) ]
///          [ w_bnd  * (boundary rows)                             ]
///          [ w_cont * (interface-continuity jump rows)            ]
///
/// Periodic boundary rows are difference rows (basis at the low face minus
/// basis at the high face, zero data) per listed derivative order; Dirichlet
/// rows are plain value rows. Continuity rows constrain the jump of the
/// 0..continuity_order face-normal derivatives of adjacent local
/// representatives; they apply to the indicator partition only, since the
/// blended partition already sums its overlapping pieces into one globally
/// smooth function. Because every shipped tableau has a constant implicit
/// diagonal, one factorization serves all stages of a step and every step of
/// equal dt: the solver's main performance lever.
class StageOperator {
public:
    StageOperator() = default;

    StageOperator(const ProblemSpec& problem, std::shared_ptr<const FeatureBank> bank,
                  CollocationLayout layout, double dt, double a_ii, double tau,
                  RowWeights weights = {}, PhaseTimings* timings = nullptr)
        : bank_(std::move(bank)),
          layout_(std::move(layout)),
          nl_(problem.nonlinear),
          dt_(dt),
          a_ii_(a_ii),
          weights_(weights) {
        if (!bank_) throw std::invalid_argument("stage operator needs a feature bank");
        if (bank_->decomp.dim() != problem.dim)
            throw std::invalid_argument("bank dimension does not match the problem");
        if (!(dt >= 0.0)) throw std::invalid_argument("dt must be >= 0");
        if (!(weights.collocation > 0.0 && weights.boundary > 0.0 && weights.continuity > 0.0))
            throw std::invalid_argument("row weights must be > 0");
        if (nl_.max_u_order() > 0 && problem.dim != 1)
            throw std::invalid_argument("derivative-coupled nonlinearities are 1D only");

        const int pou_cap = pou_max_order(bank_->pou);
        int need = std::max(problem.linear.max_order(), nl_.max_u_order());
        for (const auto& bc : problem.bcs)
            for (int o : bc.orders) need = std::max(need, o);
        const bool jump_rows = bank_->pou == Pou::PsiA;
        if (jump_rows) need = std::max(need, problem.continuity_order);
        if (need > 4)
            throw std::invalid_argument("problem needs derivative order > 4, unsupported");
        if (need > pou_cap)
            throw std::invalid_argument("partition of unity admits derivative order <= " +
                                        std::to_string(pou_cap) + ", problem needs " +
                                        std::to_string(need));

        const auto t_assemble = detail::Clock::now();
        const Decomposition& dec = bank_->decomp;
        const int d = dec.dim();
        const int nfeat = bank_->total_features();
        const DerivOrder d0(d, 0);
        n_colloc_ = layout_.total();

        value_rows_ = collocation_rows(*bank_, layout_.cell_points, d0);
        l_rows_ = Eigen::MatrixXd::Zero(n_colloc_, nfeat);
        for (const auto& term : problem.linear.terms)
            l_rows_ += term.coeff * collocation_rows(*bank_, layout_.cell_points, term.deriv);
        u_rows_.clear();
        for (int k = 1; k <= nl_.max_u_order(); ++k)
            u_rows_.push_back(collocation_rows(*bank_, layout_.cell_points, axis_deriv(d, 0, k)));

        // Boundary rows and their (time-independent) data.
        std::vector<Eigen::MatrixXd> brows;
        std::vector<double> bdata;
        for (const auto& bc : problem.bcs) {
            if (bc.kind == BoundaryCondition::Kind::Periodic) {
                const Eigen::MatrixXd lo = boundary_face_points(dec, bc.axis, -1, layout_.q_per_dim);
                const Eigen::MatrixXd hi = boundary_face_points(dec, bc.axis, +1, layout_.q_per_dim);
                for (int o : bc.orders) {
                    const DerivOrder dv = axis_deriv(d, bc.axis, o);
                    brows.push_back(basis_matrix(*bank_, lo, dv) - basis_matrix(*bank_, hi, dv));
                    for (Eigen::Index r = 0; r < lo.rows(); ++r) bdata.push_back(0.0);
                }
            } else {
                for (int side : bc.sides) {
                    const Eigen::MatrixXd pts =
                        boundary_face_points(dec, bc.axis, side, layout_.q_per_dim);
                    for (int o : bc.orders) {
                        brows.push_back(basis_matrix(*bank_, pts, axis_deriv(d, bc.axis, o)));
                        for (Eigen::Index r = 0; r < pts.rows(); ++r) bdata.push_back(bc.value);
                    }
                }
            }
        }
        n_boundary_ = 0;
        for (const auto& m : brows) n_boundary_ += m.rows();

        // Interface jump rows, indicator partition only.
        std::vector<Interface> faces;
        if (jump_rows) faces = interface_points(dec, layout_.q_per_dim);
        n_continuity_ = 0;
        for (const auto& f : faces)
            n_continuity_ += f.points.rows() * (problem.continuity_order + 1);

        const Eigen::Index n_rows = n_colloc_ + n_boundary_ + n_continuity_;
        Eigen::MatrixXd a(n_rows, nfeat);
        a.topRows(n_colloc_) = weights_.collocation * (value_rows_ - (dt_ * a_ii_) * l_rows_);
        Eigen::Index r0 = n_colloc_;
        for (const auto& m : brows) {
            a.middleRows(r0, m.rows()) = weights_.boundary * m;
            r0 += m.rows();
        }
        bc_rhs_.resize(n_boundary_);
        for (Eigen::Index i = 0; i < n_boundary_; ++i)
            bc_rhs_[i] = weights_.boundary * bdata[static_cast<size_t>(i)];
        for (const auto& f : faces) {
            const int jn = bank_->features_per_cell;
            for (int o = 0; o <= problem.continuity_order; ++o) {
                const DerivOrder dv = axis_deriv(d, f.axis, o);
                const Eigen::Index nr = f.points.rows();
                a.middleRows(r0, nr).setZero();
                a.block(r0, bank_->col_offset(f.left_cell), nr, jn) =
                    weights_.continuity * local_block(*bank_, f.left_cell, f.points, dv);
                a.block(r0, bank_->col_offset(f.right_cell), nr, jn) -=
                    weights_.continuity * local_block(*bank_, f.right_cell, f.points, dv);
                r0 += nr;
            }
        }
        if (timings) timings->assemble_seconds += detail::seconds_since(t_assemble);

        const auto t_fact = detail::Clock::now();
        pinv_.factorize(a, tau);
        if (timings) {
            timings->factorize_seconds += detail::seconds_since(t_fact);
            timings->factorize_count += 1;
        }
    }

    double dt() const { return dt_; }
    double a_ii() const { return a_ii_; }
    int rank() const { return pinv_.rank(); }
    Eigen::Index rows() const { return pinv_.rows(); }
    Eigen::Index cols() const { return pinv_.cols(); }
    Eigen::Index collocation_count() const { return n_colloc_; }
    const CollocationLayout& layout() const { return layout_; }
    const std::shared_ptr<const FeatureBank>& bank() const { return bank_; }
    const Nonlinearity& nonlinearity() const { return nl_; }
    const Eigen::MatrixXd& value_rows() const { return value_rows_; }
    const TruncatedPinv& pinv() const { return pinv_; }

    /// Right-hand side of stage i (1-based): collocation entries
    /// u^n + dt * (sum_{j<i} a_ij l_j + sum_{j<=i-1} a_hat_ij g_j) with g_0
    /// the explicit term at u^n, then boundary data, then zero jump rows.
    /// Block weights are applied to match the factorized matrix.
    Eigen::VectorXd stage_rhs(const Eigen::VectorXd& state_values, const Eigen::VectorXd& g0,
                              const std::vector<StageSolution>& prior, const Tableau& tab,
                              int stage) const {
        if (stage < 1 || stage > tab.stages) throw std::invalid_argument("stage index out of range");
        if (static_cast<int>(prior.size()) < stage - 1)
            throw std::invalid_argument("stage_rhs needs the earlier stage solutions");
        if (state_values.size() != n_colloc_)
            throw std::invalid_argument("state values do not match the collocation layout");

        Eigen::VectorXd colloc = state_values;
        for (int j = 0; j < stage - 1; ++j)
            colloc += (dt_ * tab.a(stage - 1, j)) * prior[j].l_values;
        if (nl_.kind != Nonlinearity::Kind::Zero) {
            if (tab.a_hat(stage, 0) != 0.0) colloc += (dt_ * tab.a_hat(stage, 0)) * g0;
            for (int j = 1; j < stage; ++j)
                if (tab.a_hat(stage, j) != 0.0)
                    colloc += (dt_ * tab.a_hat(stage, j)) * prior[j - 1].g_values;
        }

        Eigen::VectorXd rhs(rows());
        rhs.head(n_colloc_) = weights_.collocation * colloc;
        rhs.segment(n_colloc_, n_boundary_) = bc_rhs_;
        rhs.tail(n_continuity_).setZero();
        return rhs;
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return pinv_.apply(rhs); }

    Eigen::VectorXd l_values(const Eigen::VectorXd& coeffs) const { return l_rows_ * coeffs; }

    /// G(U) at the collocation points of a trial-space element given by
    /// coefficients, via the precomputed derivative samplers.
    Eigen::VectorXd g_values(const Eigen::VectorXd& coeffs) const {
        std::vector<Eigen::VectorXd> u(nl_.max_u_order() + 1);
        u[0] = value_rows_ * coeffs;
        for (int k = 1; k <= nl_.max_u_order(); ++k) u[k] = u_rows_[k - 1] * coeffs;
        return nl_.evaluate(u);
    }

    /// G(u^n). Pointwise forms read the authoritative value state directly;
    /// derivative-coupled forms read the trial-space representative, the only
    /// object carrying spatial derivatives of u^n.
    Eigen::VectorXd explicit_at_state(const State& s) const {
        if (nl_.kind == Nonlinearity::Kind::Zero) return Eigen::VectorXd();
        if (nl_.max_u_order() == 0) return nl_.evaluate({s.values});
        return g_values(s.coeffs);
    }

private:
    std::shared_ptr<const FeatureBank> bank_;
    CollocationLayout layout_;
    Nonlinearity nl_;
    double dt_ = 0.0;
    double a_ii_ = 0.0;
    RowWeights weights_;
    Eigen::Index n_colloc_ = 0, n_boundary_ = 0, n_continuity_ = 0;
    Eigen::MatrixXd value_rows_;            // basis values at collocation points
    Eigen::MatrixXd l_rows_;                // L applied to the basis there
    std::vector<Eigen::MatrixXd> u_rows_;   // d^k/dx^k samplers, k = 1..max_u_order
    Eigen::VectorXd bc_rhs_;                // weighted boundary data
    TruncatedPinv pinv_;
};

inline StageOperator build_stage_operator(const ProblemSpec& problem,
                                          std::shared_ptr<const FeatureBank> bank, int q_per_dim,
                                          double dt, double a_ii, double tau,
                                          RowWeights weights = {},
                                          PhaseTimings* timings = nullptr) {
    CollocationLayout layout = make_collocation_layout(bank->decomp, q_per_dim);
    return StageOperator(problem, std::move(bank), std::move(layout), dt, a_ii, tau, weights,
                         timings);
}

/// G at arbitrary points of a trial function: pointwise forms need only
/// values; derivative-coupled forms (1D) chain-rule through the function's
/// spatial derivatives.
inline Eigen::VectorXd evaluate_explicit_term(const ProblemSpec& problem, const TrialFunction& fn,
                                              const Eigen::MatrixXd& points) {
    std::vector<Eigen::VectorXd> u(problem.nonlinear.max_u_order() + 1);
    for (int k = 0; k <= problem.nonlinear.max_u_order(); ++k)
        u[k] = fn.evaluate(points, axis_deriv(problem.dim, 0, k));
    return problem.nonlinear.evaluate(u);
}

namespace detail {

/// Whether stage i's explicit term is ever read: by a later stage row or by
/// the update weights. The final stage's term is dead under both shipped
/// tableaus, so its evaluation is skipped.
inline bool explicit_term_used(const Tableau& tab, int stage) {
    if (tab.b_hat[stage] != 0.0) return true;
    for (int k = stage + 1; k <= tab.stages; ++k)
        if (tab.a_hat(k, stage) != 0.0) return true;
    return false;
}

} // namespace detail

/// One step of the additive scheme: solve stages i = 1..s against the shared
/// factorization, then combine
///   values^{n+1} = values^n + dt sum_i b_i l_i + dt sum_i b_hat_i g_i
/// (g_0 is the explicit term at u^n). The new representative is the final
/// stage's coefficients, which the stiffly accurate update reproduces up to
/// least-squares residual.
inline State advance_step(const State& state, const StageOperator& op, const Tableau& tab,
                          PhaseTimings* tm = nullptr) {
    for (int i = 0; i < tab.stages; ++i)
        if (std::abs(tab.a(i, i) - op.a_ii()) > 1e-14)
            throw std::invalid_argument("tableau implicit diagonal does not match the operator");

    const double dt = op.dt();
    const bool has_g = op.nonlinearity().kind != Nonlinearity::Kind::Zero;

    Eigen::VectorXd g0;
    if (has_g) {
        const auto t0 = detail::Clock::now();
        g0 = op.explicit_at_state(state);
        if (tm) tm->explicit_seconds += detail::seconds_since(t0);
    }

    std::vector<StageSolution> stages;
    stages.reserve(tab.stages);
    for (int i = 1; i <= tab.stages; ++i) {
        auto t0 = detail::Clock::now();
        const Eigen::VectorXd rhs = op.stage_rhs(state.values, g0, stages, tab, i);
        if (tm) tm->rhs_seconds += detail::seconds_since(t0);

        t0 = detail::Clock::now();
        Eigen::VectorXd coeffs = op.solve(rhs);
        if (tm) tm->solve_seconds += detail::seconds_since(t0);
        if (!coeffs.allFinite()) {
            char msg[96];
            std::snprintf(msg, sizeof(msg), "non-finite stage solution (stage %d, step %d)", i,
                          state.step);
            throw NumericalError(i, state.step, msg);
        }

        t0 = detail::Clock::now();
        StageSolution s;
        s.l_values = op.l_values(coeffs);
        if (has_g && detail::explicit_term_used(tab, i)) s.g_values = op.g_values(coeffs);
        s.coeffs = std::move(coeffs);
        if (tm) tm->explicit_seconds += detail::seconds_since(t0);
        stages.push_back(std::move(s));
    }

    const auto t0 = detail::Clock::now();
    State out;
    out.values = state.values;
    for (int i = 0; i < tab.stages; ++i)
        if (tab.b[i] != 0.0) out.values += (dt * tab.b[i]) * stages[i].l_values;
    if (has_g) {
        if (tab.b_hat[0] != 0.0) out.values += (dt * tab.b_hat[0]) * g0;
        for (int i = 1; i <= tab.stages; ++i)
            if (tab.b_hat[i] != 0.0) out.values += (dt * tab.b_hat[i]) * stages[i - 1].g_values;
    }
    out.coeffs = std::move(stages.back().coeffs);
    out.time = state.time + dt;
    out.step = state.step + 1;
    if (tm) tm->update_seconds += detail::seconds_since(t0);
    if (!out.values.allFinite()) {
        char msg[96];
        std::snprintf(msg, sizeof(msg), "non-finite state update (step %d)", state.step);
        throw NumericalError(tab.stages, state.step, msg);
    }
    return out;
}

struct SolveSettings {
    double dt = 1e-2;
    double t_final = 1.0;
    int q_per_dim = 50;
    double tau = 1e-16;
    Tableau tableau = ars443();
    RowWeights weights{};
    std::vector<double> snapshot_times{};
};

struct RunResult {
    State final_state;
    std::vector<State> snapshots; // requested times, deduped, ascending
    CollocationLayout layout;
    PhaseTimings timings;
    int operator_rank = 0;
    Eigen::Index operator_rows = 0;
    Eigen::Index operator_cols = 0;
    int num_steps = 0;
    double t_final_actual = 0.0;
    double ic_residual = 0.0;
};

/// Number of whole steps of size dt inside [0, t_final]. The slack keeps
/// exact grids like T = 0.5, dt = 1e-2 at their intended count; a dt that
/// does not divide T marches to the largest K dt <= T (callers that demand
/// exact division validate before calling).
inline int num_whole_steps(double t_final, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
    if (!(t_final >= 0.0)) throw std::invalid_argument("t_final must be >= 0");
    return static_cast<int>(std::floor(t_final / dt + 1e-9));
}

/// Step index a snapshot request at time t maps to: the last completed step
/// at or before t (requests round down, never forward in time).
inline int snapshot_step(double t, double dt, int num_steps) {
    int k = static_cast<int>(std::floor(t / dt + 1e-9));
    if (k < 0) k = 0;
    if (k > num_steps) k = num_steps;
    return k;
}

/// Full march: fit the initial condition, build the stage operator once,
/// advance num_whole_steps(T, dt) steps, collecting snapshots at the
/// requested times (rounded down to completed steps). The initial state is
/// the trial-space projection of the initial data, so values and coefficients
/// agree exactly at n = 0.
inline RunResult run_simulation(const ProblemSpec& problem,
                                std::shared_ptr<const FeatureBank> bank,
                                const SolveSettings& st) {
    if (!bank) throw std::invalid_argument("run_simulation needs a feature bank");
    const auto t_total = detail::Clock::now();
    RunResult out;
    const int steps = num_whole_steps(st.t_final, st.dt);
    out.num_steps = steps;
    out.t_final_actual = steps * st.dt;
    out.layout = make_collocation_layout(bank->decomp, st.q_per_dim);

    const auto t_fit = detail::Clock::now();
    FitResult fit = fit_function(bank, st.q_per_dim, problem.initial, st.tau);
    out.timings.ic_fit_seconds = detail::seconds_since(t_fit);
    out.ic_residual = fit.residual;

    std::set<int> snap_steps;
    for (double t : st.snapshot_times) snap_steps.insert(snapshot_step(t, st.dt, steps));

    State state;
    state.coeffs = std::move(fit.fn.coeffs);
    state.time = 0.0;
    state.step = 0;

    if (steps == 0) {
        state.values = collocation_rows(*bank, out.layout.cell_points,
                                        DerivOrder(bank->decomp.dim(), 0)) *
                       state.coeffs;
        if (snap_steps.count(0)) out.snapshots.push_back(state);
        out.final_state = std::move(state);
        out.timings.total_seconds = detail::seconds_since(t_total);
        return out;
    }

    StageOperator op(problem, bank, out.layout, st.dt, st.tableau.a(0, 0), st.tau, st.weights,
                     &out.timings);
    out.operator_rank = op.rank();
    out.operator_rows = op.rows();
    out.operator_cols = op.cols();

    state.values = op.value_rows() * state.coeffs;
    if (snap_steps.count(0)) out.snapshots.push_back(state);

    for (int n = 0; n < steps; ++n) {
        state = advance_step(state, op, st.tableau, &out.timings);
        if (snap_steps.count(state.step)) out.snapshots.push_back(state);
    }

    out.final_state = std::move(state);
    out.timings.total_seconds = detail::seconds_since(t_total);
    return out;
}

} // namespace rfm
