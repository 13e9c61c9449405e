#pragma once

#include <fmt/format.h>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "tfa/grid.hpp"
#include "tfa/parallel.hpp"
#include "tfa/rng.hpp"

namespace tfa {

using MatrixMap = std::function<Matrix(const Matrix&)>;

// Subset of [0,1]^{d_x x n} on which an error is measured.
struct RegionFilter {
    enum class Kind { full, exclude_trifling, omega_k };
    Kind kind = Kind::full;
    std::size_t K = 1;
    double param = 0.0;  // delta for the trifling region, margin for omega_k

    static RegionFilter full() { return {}; }
    static RegionFilter exclude_trifling(std::size_t K, double delta) {
        check_trifling_delta(K, delta);
        return {Kind::exclude_trifling, K, delta};
    }
    static RegionFilter omega_k(std::size_t K, double margin) { return {Kind::omega_k, K, margin}; }

    bool contains(const Matrix& X) const {
        switch (kind) {
            case Kind::full: return true;
            case Kind::exclude_trifling: return !trifling_contains(X, K, param);
            case Kind::omega_k: return omega_k_contains(X, K, param);
        }
        return true;
    }

    std::string name() const {
        switch (kind) {
            case Kind::full: return "full";
            case Kind::exclude_trifling: return "excl-trifling";
            case Kind::omega_k: return "omega_K";
        }
        return "?";
    }
};

// Pointwise error between two matrix outputs.
enum class ErrorNorm { frobenius, max_entry };

inline double error_norm(const Matrix& a, const Matrix& b, ErrorNorm norm) {
    return norm == ErrorNorm::frobenius ? (a - b).norm() : (a - b).cwiseAbs().maxCoeff();
}

struct ErrorEstimate {
    double p = 0.0;  // 0 marks a sup estimate
    double value = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    std::string region = "full";
    double acceptance = 1.0;
};

inline std::string csv_header() { return "p,region,value,std_error,samples,seed,acceptance"; }

inline std::string to_csv_row(const ErrorEstimate& e) {
    return fmt::format("{},{},{:.17g},{:.17g},{},{},{:.17g}", e.p, e.region, e.value, e.std_error, e.samples, e.seed,
                       e.acceptance);
}

inline constexpr std::size_t kMaxRejections = 100000;

// Uniform sample conditioned on the region, drawn from stream `index`.
// Returns the number of proposals used.
inline std::size_t sample_uniform_filtered_into(Matrix& X, const RegionFilter& region, std::uint64_t seed,
                                                std::uint64_t index) {
    Stream rng(seed, index);
    for (std::size_t tries = 1; tries <= kMaxRejections; ++tries) {
        for (Index k = 0; k < X.size(); ++k) X.data()[k] = rng.uniform();
        if (region.contains(X)) return tries;
    }
    throw ConfigError("sampler: region '" + region.name() + "' rejected " + std::to_string(kMaxRejections) +
                      " proposals in a row");
}

inline Matrix sample_uniform_filtered(const RegionFilter& region, std::size_t d_x, std::size_t n, std::uint64_t seed,
                                      std::uint64_t index = 0) {
    Matrix X(static_cast<Index>(d_x), static_cast<Index>(n));
    sample_uniform_filtered_into(X, region, seed, index);
    return X;
}

// Refuses regions whose acceptance rate is below 1% on a pilot batch.
inline double region_acceptance(const RegionFilter& region, std::size_t d_x, std::size_t n, std::uint64_t seed,
                                std::size_t pilot = 2000) {
    if (region.kind == RegionFilter::Kind::full) return 1.0;
    Matrix X(static_cast<Index>(d_x), static_cast<Index>(n));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pilot; ++i) {
        Stream rng(seed ^ 0x5eedULL, i);
        for (Index k = 0; k < X.size(); ++k) X.data()[k] = rng.uniform();
        if (region.contains(X)) ++hits;
    }
    const double rate = static_cast<double>(hits) / static_cast<double>(pilot);
    if (rate < 0.01) throw ConfigError(fmt::format("sampler: region '{}' acceptance {:.4f} below 1%", region.name(), rate));
    return rate;
}

// Monte Carlo (E |f - g|^p)^{1/p} over the region with a delta-method standard
// error. Sample i always uses stream i, so results do not depend on threads.
inline ErrorEstimate lp_error_mc(const MatrixMap& f, const MatrixMap& g, double p, const RegionFilter& region,
                                 std::size_t d_x, std::size_t n, std::size_t samples, std::uint64_t seed,
                                 ErrorNorm norm = ErrorNorm::frobenius) {
    if (!(p >= 1.0)) throw ConfigError("lp_error_mc: p must be >= 1");
    if (samples < 2) throw ConfigError("lp_error_mc: need at least 2 samples");
    ErrorEstimate est;
    est.p = p;
    est.samples = samples;
    est.seed = seed;
    est.region = region.name();
    est.acceptance = region_acceptance(region, d_x, n, seed);
    std::vector<double> terms(samples);
    parallel_for(samples, [&](std::size_t i) {
        Matrix X(static_cast<Index>(d_x), static_cast<Index>(n));
        sample_uniform_filtered_into(X, region, seed, i);
        terms[i] = std::pow(error_norm(f(X), g(X), norm), p);
    });
    const double N = static_cast<double>(samples);
    const double mean = pairwise_sum(terms) / N;
    std::vector<double> sq(samples);
    for (std::size_t i = 0; i < samples; ++i) sq[i] = (terms[i] - mean) * (terms[i] - mean);
    const double var = pairwise_sum(sq) / (N - 1.0);
    est.value = std::pow(mean, 1.0 / p);
    est.std_error = mean > 0.0 ? std::pow(mean, 1.0 / p - 1.0) / p * std::sqrt(var / N) : 0.0;
    return est;
}

// Max error over sampled points of the region.
inline ErrorEstimate sup_error_mc(const MatrixMap& f, const MatrixMap& g, const RegionFilter& region, std::size_t d_x,
                                  std::size_t n, std::size_t samples, std::uint64_t seed,
                                  ErrorNorm norm = ErrorNorm::frobenius) {
    ErrorEstimate est;
    est.samples = samples;
    est.seed = seed;
    est.region = region.name();
    est.acceptance = region_acceptance(region, d_x, n, seed);
    std::vector<double> errs(samples);
    parallel_for(samples, [&](std::size_t i) {
        Matrix X(static_cast<Index>(d_x), static_cast<Index>(n));
        sample_uniform_filtered_into(X, region, seed, i);
        errs[i] = error_norm(f(X), g(X), norm);
    });
    for (double e : errs) est.value = std::max(est.value, e);
    return est;
}

inline constexpr std::uint64_t kMaxGridEvaluations = std::uint64_t{1} << 24;

// Max error over the tensor grid {i/(res-1)}^{d_x n} restricted to the region.
inline ErrorEstimate sup_error_grid(const MatrixMap& f, const MatrixMap& g, std::size_t resolution,
                                    const RegionFilter& region, std::size_t d_x, std::size_t n,
                                    ErrorNorm norm = ErrorNorm::frobenius) {
    if (resolution < 2) throw ConfigError("sup_error_grid: resolution must be >= 2");
    const std::uint64_t total = capped_pow(resolution, d_x * n, kMaxGridEvaluations);
    if (total > kMaxGridEvaluations) throw ResourceError("sup_error_grid: grid exceeds 2^24 points");
    ErrorEstimate est;
    est.region = region.name();
    std::vector<double> errs(total, 0.0);
    std::vector<char> used(total, 0);
    parallel_for(total, [&](std::size_t idx) {
        Matrix X(static_cast<Index>(d_x), static_cast<Index>(n));
        std::uint64_t r = idx;
        for (Index k = X.size() - 1; k >= 0; --k) {
            X.data()[k] = static_cast<double>(r % resolution) / static_cast<double>(resolution - 1);
            r /= resolution;
        }
        if (!region.contains(X)) return;
        used[idx] = 1;
        errs[idx] = error_norm(f(X), g(X), norm);
    });
    std::size_t count = 0;
    for (std::uint64_t i = 0; i < total; ++i) {
        if (!used[i]) continue;
        ++count;
        est.value = std::max(est.value, errs[i]);
    }
    est.samples = count;
    est.acceptance = static_cast<double>(count) / static_cast<double>(total);
    return est;
}

}  // namespace tfa
