#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfm/problems.hpp"
#include "rfm/tableau.hpp"

namespace rfm {

/// Iterative radix-2 FFT with precomputed twiddles. Sizes are restricted to
/// powers of two on purpose: reference grids are always chosen that way, and
/// the restriction keeps the transform dependency-free and bit-stable.
class Fft {
public:
    explicit Fft(int n) : n_(n) {
        if (n < 2 || (n & (n - 1)) != 0)
            throw std::invalid_argument("fft size must be a power of two >= 2");
        rev_.resize(n);
        int log2n = 0;
        while ((1 << log2n) < n) ++log2n;
        for (int i = 0; i < n; ++i) {
            int r = 0;
            for (int b = 0; b < log2n; ++b)
                if (i & (1 << b)) r |= 1 << (log2n - 1 - b);
            rev_[i] = r;
        }
        // Twiddle table in binary-indexed layout: tw[len/2 + k] = exp(-i pi k * 2/len).
        tw_.resize(n);
        for (int len = 2; len <= n; len <<= 1)
            for (int k = 0; k < len / 2; ++k) {
                const double ang = -2.0 * std::numbers::pi * k / len;
                tw_[len / 2 + k] = {std::cos(ang), std::sin(ang)};
            }
    }

    void forward(Eigen::VectorXcd& a) const { transform(a, false); }

    void inverse(Eigen::VectorXcd& a) const {
        transform(a, true);
        a /= static_cast<double>(n_);
    }

    int size() const { return n_; }

private:
    void transform(Eigen::VectorXcd& a, bool invert) const {
        if (a.size() != n_) throw std::invalid_argument("fft input size mismatch");
        for (int i = 0; i < n_; ++i)
            if (i < rev_[i]) std::swap(a[i], a[rev_[i]]);
        for (int len = 2; len <= n_; len <<= 1) {
            const int half = len / 2;
            for (int i = 0; i < n_; i += len) {
                for (int k = 0; k < half; ++k) {
                    std::complex<double> w = tw_[half + k];
                    if (invert) w = std::conj(w);
                    const std::complex<double> u = a[i + k];
                    const std::complex<double> v = a[i + k + half] * w;
                    a[i + k] = u + v;
                    a[i + k + half] = u - v;
                }
            }
        }
    }

    int n_;
    std::vector<int> rev_;
    std::vector<std::complex<double>> tw_;
};

struct SpectralConfig {
    int modes = 512;
    double dt_ref = 1e-5;
    std::string integrator = "ars443_spectral"; // or "rk4"
};

struct SpectralReference {
    Eigen::VectorXd grid;         // x_j = -1 + 2 j / N
    std::vector<double> times;    // realized snapshot times (multiples of dt_ref)
    Eigen::MatrixXd values;       // one row per time
};

namespace detail {

/// Signed wavenumber multiplier (i xi)^order per FFT bin on [-1,1] (period 2,
/// xi_m = pi m). Odd orders are ambiguous at the Nyquist bin, which is set to
/// zero there in the standard way.
inline Eigen::VectorXcd symbol_power(int n, int order) {
    constexpr double pi = std::numbers::pi;
    Eigen::VectorXcd s(n);
    for (int j = 0; j < n; ++j) {
        const int m = j <= n / 2 ? j : j - n;
        if (order % 2 == 1 && j == n / 2) {
            s[j] = 0.0;
            continue;
        }
        s[j] = std::pow(std::complex<double>(0.0, pi * m), order);
    }
    return s;
}

inline Eigen::VectorXcd linear_symbol(const LinearOp& op, int n) {
    Eigen::VectorXcd sym = Eigen::VectorXcd::Zero(n);
    for (const auto& t : op.terms) sym += t.coeff * symbol_power(n, total_order(t.deriv));
    return sym;
}

class SpectralRhs {
public:
    SpectralRhs(const ProblemSpec& p, int n) : fft_(n), nl_(p.nonlinear) {
        if (p.dim != 1)
            throw std::invalid_argument("spectral reference supports 1D problems only");
        lsym_ = linear_symbol(p.linear, n);
        dx_ = symbol_power(n, 1);
        d2_ = symbol_power(n, 2);
    }

    const Eigen::VectorXcd& linear_symbol_vec() const { return lsym_; }
    const Fft& fft() const { return fft_; }

    /// Fourier-side explicit term G_hat(u_hat).
    Eigen::VectorXcd nonlinear_hat(const Eigen::VectorXcd& u_hat) const {
        const int n = fft_.size();
        switch (nl_.kind) {
            case Nonlinearity::Kind::Zero: return Eigen::VectorXcd::Zero(n);
            case Nonlinearity::Kind::CubicWell: {
                Eigen::VectorXcd u = u_hat;
                fft_.inverse(u);
                for (int j = 0; j < n; ++j) {
                    const double v = u[j].real();
                    u[j] = nl_.alpha * (v - v * v * v);
                }
                fft_.forward(u);
                return u;
            }
            case Nonlinearity::Kind::Advection1D: {
                Eigen::VectorXcd u = u_hat;
                Eigen::VectorXcd ux = dx_.cwiseProduct(u_hat);
                fft_.inverse(u);
                fft_.inverse(ux);
                for (int j = 0; j < n; ++j) u[j] = -u[j].real() * ux[j].real();
                fft_.forward(u);
                return u;
            }
            case Nonlinearity::Kind::CubicWellLaplacian1D: {
                Eigen::VectorXcd u = u_hat;
                fft_.inverse(u);
                for (int j = 0; j < n; ++j) {
                    const double v = u[j].real();
                    u[j] = nl_.alpha * (v - v * v * v);
                }
                fft_.forward(u);
                return d2_.cwiseProduct(u);
            }
        }
        return Eigen::VectorXcd::Zero(n);
    }

private:
    Fft fft_;
    Nonlinearity nl_;
    Eigen::VectorXcd lsym_, dx_, d2_;
};

} // namespace detail

/// March u_t = L u + G(u) with periodic boundary conditions by Fourier
/// pseudospectral collocation and snapshot at the requested times. Times snap
/// to the nearest step of dt_ref; the realized times are reported back.
///
/// integrator "ars443_spectral" applies the same additive tableau as the
/// solver but with exact diagonal stage solves; "rk4" is the classical
/// explicit scheme and refuses operators stiff enough to leave its stability
/// region.
inline SpectralReference spectral_reference(const ProblemSpec& p, std::vector<double> times,
                                            const SpectralConfig& cfg) {
    if (times.empty()) throw std::invalid_argument("no reference times requested");
    std::sort(times.begin(), times.end());
    if (times.front() < 0.0) throw std::invalid_argument("reference times must be >= 0");
    const int n = cfg.modes;
    detail::SpectralRhs rhs(p, n);
    const Eigen::VectorXcd& lsym = rhs.linear_symbol_vec();
    const double dt = cfg.dt_ref;
    if (!(dt > 0.0)) throw std::invalid_argument("dt_ref must be > 0");

    SpectralReference out;
    out.grid = Eigen::VectorXd(n);
    for (int j = 0; j < n; ++j) out.grid[j] = -1.0 + 2.0 * j / n;

    Eigen::VectorXcd u_hat(n);
    for (int j = 0; j < n; ++j) {
        Eigen::VectorXd x(1);
        x << out.grid[j];
        u_hat[j] = p.initial(x);
    }
    rhs.fft().forward(u_hat);

    std::vector<long> target_steps;
    for (double t : times) {
        const long k = std::lround(t / dt);
        target_steps.push_back(k);
        out.times.push_back(k * dt);
    }

    const bool use_rk4 = cfg.integrator == "rk4";
    if (!use_rk4 && cfg.integrator != "ars443_spectral")
        throw std::invalid_argument("unknown reference integrator: " + cfg.integrator);
    if (use_rk4 && lsym.cwiseAbs().maxCoeff() * dt > 2.5)
        throw std::invalid_argument(
            "rk4 reference would be unstable for this operator; use ars443_spectral");

    Tableau tab = ars443();
    const int s = tab.stages;

    out.values.resize(static_cast<Eigen::Index>(times.size()), n);
    size_t next_snap = 0;
    auto snapshot = [&](long step) {
        while (next_snap < target_steps.size() && target_steps[next_snap] == step) {
            Eigen::VectorXcd u = u_hat;
            rhs.fft().inverse(u);
            for (int j = 0; j < n; ++j) out.values(static_cast<Eigen::Index>(next_snap), j) = u[j].real();
            ++next_snap;
        }
    };

    snapshot(0);
    const long last_step = target_steps.back();
    std::vector<Eigen::VectorXcd> lu(s), g(s + 1);
    for (long step = 0; step < last_step; ++step) {
        if (use_rk4) {
            auto f = [&](const Eigen::VectorXcd& v) {
                return (lsym.cwiseProduct(v) + rhs.nonlinear_hat(v)).eval();
            };
            const Eigen::VectorXcd k1 = f(u_hat);
            const Eigen::VectorXcd k2 = f(u_hat + 0.5 * dt * k1);
            const Eigen::VectorXcd k3 = f(u_hat + 0.5 * dt * k2);
            const Eigen::VectorXcd k4 = f(u_hat + dt * k3);
            u_hat += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        } else {
            g[0] = rhs.nonlinear_hat(u_hat);
            for (int i = 0; i < s; ++i) {
                Eigen::VectorXcd r = u_hat;
                for (int j = 0; j < i; ++j) r += dt * tab.a(i, j) * lu[j];
                for (int j = 0; j <= i; ++j) r += dt * tab.a_hat(i + 1, j) * g[j];
                Eigen::VectorXcd stage =
                    r.cwiseQuotient(Eigen::VectorXcd::Ones(n) - dt * tab.a(i, i) * lsym);
                lu[i] = lsym.cwiseProduct(stage);
                if (i + 1 < s || tab.b_hat[s] != 0.0) g[i + 1] = rhs.nonlinear_hat(stage);
                else g[i + 1] = Eigen::VectorXcd::Zero(n);
            }
            for (int i = 0; i < s; ++i) u_hat += dt * tab.b[i] * lu[i];
            for (int j = 0; j <= s; ++j) u_hat += dt * tab.b_hat[j] * g[j];
        }
        snapshot(step + 1);
    }
    return out;
}

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string reference_cache_key(const ProblemSpec& p, const std::vector<double>& times,
                                       const SpectralConfig& cfg) {
    char buf[64];
    std::string s = p.name;
    for (const auto& [k, v] : p.params) {
        std::snprintf(buf, sizeof(buf), "|%s=%.17g", k.c_str(), v);
        s += buf;
    }
    std::snprintf(buf, sizeof(buf), "|modes=%d|dt=%.17g|%s", cfg.modes, cfg.dt_ref,
                  cfg.integrator.c_str());
    s += buf;
    for (double t : times) {
        std::snprintf(buf, sizeof(buf), "|t=%.17g", t);
        s += buf;
    }
    return s;
}

} // namespace detail

/// Disk-backed wrapper: the reference is keyed by problem, parameters,
/// spectral settings and snapshot times. Cached values are reread bit-exactly
/// (raw little-endian doubles), so cached and fresh references are
/// interchangeable in every comparison.
inline SpectralReference spectral_reference_cached(const ProblemSpec& p,
                                                   const std::vector<double>& times,
                                                   const SpectralConfig& cfg,
                                                   const std::string& cache_dir) {
    namespace fs = std::filesystem;
    std::vector<double> sorted = times;
    std::sort(sorted.begin(), sorted.end());
    const std::string key = detail::reference_cache_key(p, sorted, cfg);
    char name[40];
    std::snprintf(name, sizeof(name), "ref_%016llx.bin",
                  static_cast<unsigned long long>(detail::fnv1a(key)));
    const fs::path path = fs::path(cache_dir) / name;

    auto read_all = [&](SpectralReference& out) -> bool {
        std::ifstream in(path, std::ios::binary);
        if (!in) return false;
        std::uint64_t nt = 0, n = 0;
        in.read(reinterpret_cast<char*>(&nt), 8);
        in.read(reinterpret_cast<char*>(&n), 8);
        if (!in || nt == 0 || n == 0 || nt > 1u << 20 || n > 1u << 20) return false;
        out.times.resize(nt);
        out.grid.resize(static_cast<Eigen::Index>(n));
        out.values.resize(static_cast<Eigen::Index>(nt), static_cast<Eigen::Index>(n));
        in.read(reinterpret_cast<char*>(out.times.data()), 8 * nt);
        in.read(reinterpret_cast<char*>(out.grid.data()), 8 * n);
        in.read(reinterpret_cast<char*>(out.values.data()), 8 * nt * n);
        return static_cast<bool>(in);
    };

    SpectralReference cached;
    if (read_all(cached)) return cached;

    SpectralReference fresh = spectral_reference(p, sorted, cfg);
    std::error_code ec;
    fs::create_directories(cache_dir, ec);
    std::ofstream outf(path, std::ios::binary);
    if (outf) {
        const std::uint64_t nt = fresh.times.size();
        const std::uint64_t n = static_cast<std::uint64_t>(fresh.grid.size());
        outf.write(reinterpret_cast<const char*>(&nt), 8);
        outf.write(reinterpret_cast<const char*>(&n), 8);
        outf.write(reinterpret_cast<const char*>(fresh.times.data()), 8 * nt);
        outf.write(reinterpret_cast<const char*>(fresh.grid.data()), 8 * n);
        outf.write(reinterpret_cast<const char*>(fresh.values.data()), 8 * nt * n);
    }
    return fresh;
}

} // namespace rfm
