#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>

#include "tfa/errors.hpp"
#include "tfa/linalg.hpp"
#include "tfa/rng.hpp"

namespace tfa {

// Target map [0,1]^{d_x x n} -> R^{d_x x n} plus declared smoothness.
// K_H bounds both the sup norm and the Hoelder seminorm, and is the constant
// used in every error bound.
struct TargetFunction {
    std::string name;
    std::size_t d_x = 1;
    std::size_t n = 1;
    std::function<Matrix(const Matrix&)> oracle;
    std::optional<double> gamma;
    std::optional<double> K_H;
    std::optional<double> p;
    std::optional<double> K_W;

    Matrix operator()(const Matrix& X) const {
        Matrix Y = oracle(X);
        require_shape(Y, static_cast<Index>(d_x), static_cast<Index>(n), "target output");
        return Y;
    }

    double holder_gamma() const {
        if (!gamma || !K_H) throw ConfigError("target '" + name + "' has no declared Hoelder smoothness");
        if (!(*gamma > 0.0 && *gamma <= 1.0)) throw ConfigError("target: gamma must lie in (0, 1]");
        return *gamma;
    }
};

struct SmoothnessCheck {
    std::size_t pairs = 0;
    std::size_t violations = 0;
    double worst_ratio = 0.0;  // max |f(X)-f(Y)|_entry / (K_H |X-Y|_F^gamma)
    bool ok() const { return violations == 0; }
};

// Samples random pairs and checks |F_ij(X) - F_ij(Y)| <= K_H |X - Y|_F^gamma.
inline SmoothnessCheck holder_spot_check(const TargetFunction& F, std::size_t pairs, std::uint64_t seed) {
    const double gamma = F.holder_gamma();
    const double K_H = *F.K_H;
    SmoothnessCheck out;
    out.pairs = pairs;
    const auto dx = static_cast<Index>(F.d_x);
    const auto n = static_cast<Index>(F.n);
    for (std::size_t s = 0; s < pairs; ++s) {
        Stream rng(seed, s);
        Matrix X(dx, n), Y(dx, n);
        for (Index k = 0; k < X.size(); ++k) X.data()[k] = rng.uniform();
        // Mix far and near pairs.
        const double scale = std::pow(10.0, -3.0 * rng.uniform());
        for (Index k = 0; k < Y.size(); ++k)
            Y.data()[k] = std::clamp(X.data()[k] + scale * (2.0 * rng.uniform() - 1.0), 0.0, 1.0);
        const double dist = (X - Y).norm();
        if (dist == 0.0) continue;
        const double diff = (F(X) - F(Y)).cwiseAbs().maxCoeff();
        const double ratio = K_H > 0.0 ? diff / (K_H * std::pow(dist, gamma)) : (diff > 0.0 ? INFINITY : 0.0);
        out.worst_ratio = std::max(out.worst_ratio, ratio);
        if (ratio > 1.0 + 1e-12) ++out.violations;
    }
    return out;
}

namespace targets {

inline TargetFunction constant(std::size_t d_x, std::size_t n, double c) {
    TargetFunction F;
    F.name = "constant";
    F.d_x = d_x;
    F.n = n;
    F.oracle = [=](const Matrix&) { return Matrix::Constant(static_cast<Index>(d_x), static_cast<Index>(n), c); };
    F.gamma = 1.0;
    F.K_H = std::abs(c);
    F.p = 2.0;
    F.K_W = std::abs(c);
    return F;
}

// Every output entry equals X_{0,0}.
inline TargetFunction first_coordinate(std::size_t d_x, std::size_t n) {
    TargetFunction F;
    F.name = "first_coordinate";
    F.d_x = d_x;
    F.n = n;
    F.oracle = [=](const Matrix& X) {
        return Matrix::Constant(static_cast<Index>(d_x), static_cast<Index>(n), X(0, 0));
    };
    F.gamma = 1.0;
    F.K_H = 1.0;
    F.p = 2.0;
    F.K_W = 2.0;
    return F;
}

inline TargetFunction identity(std::size_t d_x, std::size_t n) {
    TargetFunction F;
    F.name = "identity";
    F.d_x = d_x;
    F.n = n;
    F.oracle = [](const Matrix& X) { return X; };
    F.gamma = 1.0;
    F.K_H = 1.0;
    F.p = 2.0;
    F.K_W = 2.0;
    return F;
}

// amplitude * prod sin(pi X_pq / 2) in every entry; amplitude chosen so the
// Lipschitz constant (gradient norm) is at most K_H.
inline TargetFunction sine_product(std::size_t d_x, std::size_t n, double K_H = 1.0) {
    TargetFunction F;
    F.name = "sine_product";
    F.d_x = d_x;
    F.n = n;
    const double amp = K_H / (std::numbers::pi / 2.0 * std::sqrt(static_cast<double>(d_x * n)));
    F.oracle = [=](const Matrix& X) {
        double prod = amp;
        for (Index k = 0; k < X.size(); ++k) prod *= std::sin(std::numbers::pi * X.data()[k] / 2.0);
        return Matrix::Constant(static_cast<Index>(d_x), static_cast<Index>(n), prod);
    };
    F.gamma = 1.0;
    F.K_H = K_H;
    F.p = 2.0;
    F.K_W = 2.0 * K_H;
    return F;
}

// K_H (|X - X0|_F / sqrt(d_x n))^gamma with X0 the all-(1/3) matrix.
inline TargetFunction distance_power(std::size_t d_x, std::size_t n, double gamma, double K_H = 1.0) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("distance_power: gamma must lie in (0, 1]");
    TargetFunction F;
    F.name = "distance_power";
    F.d_x = d_x;
    F.n = n;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d_x * n));
    F.oracle = [=](const Matrix& X) {
        const double r = (X.array() - 1.0 / 3.0).matrix().norm() * scale;
        return Matrix::Constant(static_cast<Index>(d_x), static_cast<Index>(n), K_H * std::pow(r, gamma));
    };
    F.gamma = gamma;
    F.K_H = K_H;
    F.p = 2.0;
    F.K_W = 2.0 * K_H;
    return F;
}

inline TargetFunction by_name(const std::string& name, std::size_t d_x, std::size_t n, double gamma = 1.0,
                              double K_H = 1.0, double c = 1.0) {
    if (name == "constant") return constant(d_x, n, c);
    if (name == "first_coordinate") return first_coordinate(d_x, n);
    if (name == "identity") return identity(d_x, n);
    if (name == "sine_product") return sine_product(d_x, n, K_H);
    if (name == "distance_power") return distance_power(d_x, n, gamma, K_H);
    throw ConfigError("unknown target '" + name + "'");
}

}  // namespace targets

}  // namespace tfa
