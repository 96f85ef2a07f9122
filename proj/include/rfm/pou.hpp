#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rfm {

enum class Pou { PsiA, PsiB };

inline const char* to_string(Pou p) {
    return p == Pou::PsiA ? "psi_a" : "psi_b";
}

inline Pou pou_from_string(const std::string& s) {
    if (s == "psi_a") return Pou::PsiA;
    if (s == "psi_b") return Pou::PsiB;
    throw std::invalid_argument("unknown partition of unity: " + s);
}

/// Hard indicator of [-1, 1] in normalized coordinates. Derivatives are zero
/// wherever they exist; the two jump points are measure zero and also return 0
/// so that collocation rows never see distributional terms.
inline double psi_a(int order, double x) {
    if (order > 0) return 0.0;
    return (x >= -1.0 && x <= 1.0) ? 1.0 : 0.0;
}

/// C^1 bump: sin-ramp on [-5/4,-3/4], plateau 1 on [-3/4,3/4], sin-ramp down
/// on [3/4,5/4], zero outside. Shifted copies on the lattice of subdomain
/// centers sum to 1. Supports derivative orders 0..2; at the four breakpoints
/// order 2 takes the interior-limit value (order 1 is continuous there).
inline double psi_b(int order, double x) {
    if (order < 0 || order > 2) throw std::invalid_argument("psi_b supports derivative orders 0..2");
    constexpr double pi = std::numbers::pi;
    const double ax = std::abs(x);
    if (ax > 1.25) return 0.0;
    if (ax <= 0.75) {
        return order == 0 ? 1.0 : 0.0;
    }
    // Transition bands. Rising ramp (1+sin(2 pi x))/2 for x<0, falling
    // (1-sin(2 pi x))/2 for x>0; the sign applies to odd trig factors.
    const double sgn = x < 0.0 ? 1.0 : -1.0;
    switch (order) {
        case 0: return 0.5 * (1.0 + sgn * std::sin(2.0 * pi * x));
        case 1: return sgn * pi * std::cos(2.0 * pi * x);
        default: return -sgn * 2.0 * pi * pi * std::sin(2.0 * pi * x);
    }
}

inline double pou_value(Pou p, int order, double x) {
    return p == Pou::PsiA ? psi_a(order, x) : psi_b(order, x);
}

/// Highest derivative order a PoU admits inside feature columns.
inline int pou_max_order(Pou p) {
    return p == Pou::PsiA ? 4 : 2;
}

} // namespace rfm
