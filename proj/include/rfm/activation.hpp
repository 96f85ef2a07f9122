#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace rfm {

enum class Activation { Tanh, Sin, Cos };

inline const char* to_string(Activation a) {
    switch (a) {
        case Activation::Tanh: return "tanh";
        case Activation::Sin: return "sin";
        case Activation::Cos: return "cos";
    }
    return "?";
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::Tanh;
    if (s == "sin") return Activation::Sin;
    if (s == "cos") return Activation::Cos;
    throw std::invalid_argument("unknown activation: " + s);
}

/// n-th derivative of the activation at z, for n in 0..4.
/// tanh derivatives are closed-form polynomials in t = tanh(z), so repeated
/// evaluation shares the single tanh() call.
inline double activation_derivative(Activation a, int n, double z) {
    if (n < 0 || n > 4) throw std::invalid_argument("activation derivative order must be in 0..4");
    switch (a) {
        case Activation::Tanh: {
            const double t = std::tanh(z);
            const double s = 1.0 - t * t; // sech^2
            switch (n) {
                case 0: return t;
                case 1: return s;
                case 2: return -2.0 * t * s;
                case 3: return s * (6.0 * t * t - 2.0);
                case 4: return s * t * (16.0 - 24.0 * t * t);
            }
            break;
        }
        case Activation::Sin:
            switch (n & 3) {
                case 0: return std::sin(z);
                case 1: return std::cos(z);
                case 2: return -std::sin(z);
                case 3: return -std::cos(z);
            }
            break;
        case Activation::Cos:
            switch (n & 3) {
                case 0: return std::cos(z);
                case 1: return -std::sin(z);
                case 2: return -std::cos(z);
                case 3: return std::sin(z);
            }
            break;
    }
    return 0.0;
}

} // namespace rfm
