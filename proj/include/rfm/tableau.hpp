#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfm {

/// Implicit-explicit additive Runge-Kutta tableau.
///
/// The implicit part is an s-stage DIRK (lower triangular `a` with nonzero
/// diagonal, weights `b`, abscissae `c`). The explicit part acts on the
/// padded argument list W_0 = u^n, W_1..W_s = stage solutions: `a_hat` is
/// (s+1) x (s+1) strictly lower triangular whose row i (i = 1..s) weights the
/// explicit term at W_0..W_{i-1} inside stage i, and `b_hat`/`c_hat` have
/// length s+1. Both parts here are stiffly accurate: b equals the last row of
/// a, b_hat the last row of a_hat, so the step ends at the final stage up to
/// least-squares residual.
struct Tableau {
    std::string name;
    int stages = 0;
    int order = 0;
    Eigen::MatrixXd a;     // s x s
    Eigen::VectorXd b, c;  // s
    Eigen::MatrixXd a_hat; // (s+1) x (s+1)
    Eigen::VectorXd b_hat, c_hat; // s+1
};

/// Third-order, four-stage L-stable scheme of Ascher, Ruuth and Spiteri
/// (ARS(4,4,3)).
inline Tableau ars443() {
    Tableau t;
    t.name = "ars443";
    t.stages = 4;
    t.order = 3;
    t.a.setZero(4, 4);
    t.a << 0.5, 0.0, 0.0, 0.0,
        1.0 / 6.0, 0.5, 0.0, 0.0,
        -0.5, 0.5, 0.5, 0.0,
        1.5, -1.5, 0.5, 0.5;
    t.b.resize(4);
    t.b << 1.5, -1.5, 0.5, 0.5;
    t.c.resize(4);
    t.c << 0.5, 2.0 / 3.0, 0.5, 1.0;
    t.a_hat.setZero(5, 5);
    t.a_hat(1, 0) = 0.5;
    t.a_hat(2, 0) = 11.0 / 18.0;
    t.a_hat(2, 1) = 1.0 / 18.0;
    t.a_hat(3, 0) = 5.0 / 6.0;
    t.a_hat(3, 1) = -5.0 / 6.0;
    t.a_hat(3, 2) = 0.5;
    t.a_hat(4, 0) = 0.25;
    t.a_hat(4, 1) = 7.0 / 4.0;
    t.a_hat(4, 2) = 0.75;
    t.a_hat(4, 3) = -7.0 / 4.0;
    t.b_hat.resize(5);
    t.b_hat << 0.25, 7.0 / 4.0, 0.75, -7.0 / 4.0, 0.0;
    t.c_hat.resize(5);
    t.c_hat << 0.0, 0.5, 2.0 / 3.0, 0.5, 1.0;
    return t;
}

/// First-order IMEX Euler: backward Euler in the stiff part, forward Euler in
/// the explicit part.
inline Tableau imex1() {
    Tableau t;
    t.name = "imex1";
    t.stages = 1;
    t.order = 1;
    t.a.setZero(1, 1);
    t.a(0, 0) = 1.0;
    t.b.resize(1);
    t.b << 1.0;
    t.c.resize(1);
    t.c << 1.0;
    t.a_hat.setZero(2, 2);
    t.a_hat(1, 0) = 1.0;
    t.b_hat.resize(2);
    t.b_hat << 1.0, 0.0;
    t.c_hat.resize(2);
    t.c_hat << 0.0, 1.0;
    return t;
}

inline Tableau tableau_by_name(const std::string& name) {
    if (name == "ars443") return ars443();
    if (name == "imex1") return imex1();
    throw std::invalid_argument("unknown tableau: " + name);
}

struct ConditionResidual {
    std::string name;
    double residual;
};

/// Structural consistency plus order conditions up to the tableau's order.
/// All residuals should sit at rounding level for the shipped tableaus.
inline std::vector<ConditionResidual> order_condition_residuals(const Tableau& t) {
    std::vector<ConditionResidual> out;
    auto add = [&out](const std::string& n, double r) { out.push_back({n, std::abs(r)}); };

    for (int i = 0; i < t.stages; ++i)
        add("implicit row sum " + std::to_string(i + 1) + " = c", t.a.row(i).sum() - t.c[i]);
    for (int i = 1; i <= t.stages; ++i)
        add("explicit row sum " + std::to_string(i) + " = c_hat", t.a_hat.row(i).sum() - t.c_hat[i]);
    add("implicit sum(b) = 1", t.b.sum() - 1.0);
    add("explicit sum(b_hat) = 1", t.b_hat.sum() - 1.0);
    if (t.order >= 2) {
        add("implicit b.c = 1/2", t.b.dot(t.c) - 0.5);
        add("explicit b_hat.c_hat = 1/2", t.b_hat.dot(t.c_hat) - 0.5);
    }
    if (t.order >= 3) {
        add("implicit b.c^2 = 1/3", t.b.dot(t.c.cwiseProduct(t.c)) - 1.0 / 3.0);
        add("explicit b_hat.c_hat^2 = 1/3",
            t.b_hat.dot(t.c_hat.cwiseProduct(t.c_hat)) - 1.0 / 3.0);
        // Coupling conditions between the two parts.
        add("coupling b.(a_hat c_hat) = 1/6",
            t.b.dot((t.a_hat * t.c_hat).tail(t.stages)) - 1.0 / 6.0);
        Eigen::VectorXd ac = Eigen::VectorXd::Zero(t.stages + 1);
        ac.tail(t.stages) = t.a * t.c;
        add("coupling b_hat.(a c) = 1/6", t.b_hat.dot(ac) - 1.0 / 6.0);
    }
    return out;
}

inline double max_condition_residual(const Tableau& t) {
    double m = 0.0;
    for (const auto& r : order_condition_residuals(t)) m = std::max(m, r.residual);
    return m;
}

} // namespace rfm
