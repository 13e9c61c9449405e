#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tfa/linalg.hpp"

namespace tfa {

inline constexpr std::uint64_t kDefaultGridCap = std::uint64_t{1} << 20;

// K^e with an overflow-safe cap check; returns cap + 1 when exceeded.
inline std::uint64_t capped_pow(std::uint64_t base, std::uint64_t exp, std::uint64_t cap) {
    std::uint64_t r = 1;
    for (std::uint64_t i = 0; i < exp; ++i) {
        if (base != 0 && r > cap / base) return cap + 1;
        r *= base;
    }
    return r;
}

// The uniform grid {1/K, ..., 1}^{d_x x n}; points[i] is the i-th matrix in
// lexicographic order of the column-major entry sequence (entry (0,0) varies
// slowest).
struct Grid {
    std::size_t K = 1;
    std::size_t d_x = 1;
    std::size_t n = 1;
    std::vector<Matrix> points;

    std::size_t size() const { return points.size(); }
};

// Level index in {0, ..., K-1} of each grid value k/K (k = index + 1).
inline std::uint64_t grid_index(const Matrix& G, std::size_t K) {
    std::uint64_t idx = 0;
    for (Index j = 0; j < G.cols(); ++j)
        for (Index i = 0; i < G.rows(); ++i) {
            const auto level = static_cast<std::uint64_t>(std::llround(G(i, j) * static_cast<double>(K))) - 1;
            idx = idx * K + level;
        }
    return idx;
}

inline Matrix grid_point(std::uint64_t index, std::size_t K, std::size_t d_x, std::size_t n) {
    Matrix G(static_cast<Index>(d_x), static_cast<Index>(n));
    for (Index j = static_cast<Index>(n) - 1; j >= 0; --j)
        for (Index i = static_cast<Index>(d_x) - 1; i >= 0; --i) {
            G(i, j) = static_cast<double>(index % K + 1) / static_cast<double>(K);
            index /= K;
        }
    return G;
}

inline Grid grid_points(std::size_t K, std::size_t d_x, std::size_t n, std::uint64_t cap = kDefaultGridCap) {
    if (K < 1) throw ConfigError("grid_points: K must be >= 1");
    const std::uint64_t count = capped_pow(K, d_x * n, cap);
    if (count > cap)
        throw ResourceError("grid_points: K^(d_x n) exceeds cap " + std::to_string(cap));
    Grid g{K, d_x, n, {}};
    g.points.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) g.points.push_back(grid_point(i, K, d_x, n));
    return g;
}

// Per entry: the cell of G is (G - 1/K, G], except [0, 1/K] for G = 1/K.
inline double cell_value(double x, std::size_t K) {
    const double Kd = static_cast<double>(K);
    double k = std::ceil(x * Kd);
    if (k < 1.0) k = 1.0;
    if (k > Kd) k = Kd;
    return k / Kd;
}

inline bool in_unit_cube(const Matrix& X) {
    return (X.array() >= 0.0).all() && (X.array() <= 1.0).all();
}

inline Matrix cell_of(const Matrix& X, std::size_t K) {
    if (!in_unit_cube(X)) throw ConfigError("cell_of: input outside the unit cube");
    return X.unaryExpr([K](double x) { return cell_value(x, K); });
}

// Strips (t/K, t/K + delta), t = 1..K-1, around interior cell boundaries.
inline bool trifling_contains_value(double x, std::size_t K, double delta) {
    const double Kd = static_cast<double>(K);
    const double t = std::floor(x * Kd);
    if (t < 1.0 || t > Kd - 1.0) return false;
    const double lo = t / Kd;
    return x > lo && x < lo + delta;
}

inline void check_trifling_delta(std::size_t K, double delta) {
    if (!(delta > 0.0) || !(delta < 1.0 / static_cast<double>(K)))
        throw ConfigError("trifling region: delta must lie in (0, 1/K)");
}

inline bool trifling_contains(const Matrix& X, std::size_t K, double delta) {
    check_trifling_delta(K, delta);
    for (Index j = 0; j < X.cols(); ++j)
        for (Index i = 0; i < X.rows(); ++i)
            if (trifling_contains_value(X(i, j), K, delta)) return true;
    return false;
}

inline double trifling_measure_bound(std::size_t K, double delta, std::size_t d_x, std::size_t n) {
    check_trifling_delta(K, delta);
    return static_cast<double>(d_x * n * K) * delta;
}

// Exact measure of the region: 1 - (1 - (K-1) delta)^(d_x n).
inline double trifling_measure(std::size_t K, double delta, std::size_t d_x, std::size_t n) {
    check_trifling_delta(K, delta);
    return 1.0 - std::pow(1.0 - static_cast<double>(K - 1) * delta, static_cast<double>(d_x * n));
}

// Digit-extraction region used by the Cantor-code builders: at stage k the
// residual r = 2^{k-1} x mod 1 avoids the open interval (1/2 - 2 margin, 1/2)
// just below the digit threshold. Residual 1/2 itself has digit 1, so every
// K-bit dyadic value lies in the region.
inline bool omega_k_contains_value(double x, std::size_t K, double margin) {
    if (x < 0.0 || x > 1.0) return false;
    if (x == 1.0) return true;  // all-ones digits, residual stays 1
    double r = x;
    for (std::size_t k = 0; k < K; ++k) {
        if (r < 0.5 && r > 0.5 - 2.0 * margin) return false;
        const double digit = r >= 0.5 ? 1.0 : 0.0;
        r = 2.0 * r - digit;
    }
    return true;
}

inline bool omega_k_contains(const Matrix& X, std::size_t K, double margin) {
    for (Index j = 0; j < X.cols(); ++j)
        for (Index i = 0; i < X.rows(); ++i)
            if (!omega_k_contains_value(X(i, j), K, margin)) return false;
    return true;
}

// Per-coordinate measure: K stages, each excluding residual width 2 margin.
inline double omega_k_measure(std::size_t K, double margin) { return 1.0 - 2.0 * static_cast<double>(K) * margin; }

}  // namespace tfa
