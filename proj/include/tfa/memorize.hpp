#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "tfa/layers.hpp"
#include "tfa/rng.hpp"

namespace tfa {

struct SeparationOptions {
    std::optional<Vector> hint;  // tried first when present
    std::uint64_t seed = 0;
    int random_retries = 16;
};

struct Separation {
    Vector v;
    double min_gap = 0.0;
    double max_abs = 0.0;
    int attempt = 0;  // 0 hint, 1 power vector, 2.. random
};

namespace detail {

inline void projection_stats(const std::vector<Vector>& tokens, const Vector& v, double& gap, double& max_abs) {
    std::vector<double> proj;
    proj.reserve(tokens.size());
    max_abs = 0.0;
    for (const auto& t : tokens) {
        proj.push_back(v.dot(t));
        max_abs = std::max(max_abs, std::abs(proj.back()));
    }
    std::sort(proj.begin(), proj.end());
    gap = INFINITY;
    for (std::size_t i = 1; i < proj.size(); ++i) gap = std::min(gap, proj[i] - proj[i - 1]);
}

inline bool separates(double gap, double max_abs) {
    return std::isfinite(max_abs) && gap > 1e-9 * std::max(1.0, max_abs) && gap > 1e-9;
}

inline void require_distinct(const std::vector<Vector>& tokens) {
    std::vector<std::size_t> order(tokens.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto less = [&](std::size_t a, std::size_t b) {
        return std::lexicographical_compare(tokens[a].data(), tokens[a].data() + tokens[a].size(), tokens[b].data(),
                                            tokens[b].data() + tokens[b].size());
    };
    std::sort(order.begin(), order.end(), less);
    for (std::size_t i = 1; i < order.size(); ++i)
        if (tokens[order[i]] == tokens[order[i - 1]]) throw ConfigError("memorization: duplicate tokens");
}

}  // namespace detail

// Finds v whose projections keep the tokens apart. Order: hint, (1, M, M^2, ...)
// with M = 1 + max coordinate spread, then seeded random unit vectors.
inline Separation find_separating_vector(const std::vector<Vector>& tokens, const SeparationOptions& opt = {}) {
    if (tokens.empty()) throw ConfigError("memorization: no tokens");
    detail::require_distinct(tokens);
    const Index d = tokens.front().size();
    Separation s;
    auto attempt = [&](const Vector& v, int id) {
        double gap = 0.0, mx = 0.0;
        detail::projection_stats(tokens, v, gap, mx);
        if (tokens.size() == 1) gap = 1.0;
        if (!detail::separates(gap, mx)) return false;
        s = Separation{v, gap, mx, id};
        return true;
    };
    if (opt.hint && attempt(*opt.hint, 0)) return s;
    {
        double spread = 0.0;
        for (Index k = 0; k < d; ++k) {
            double lo = INFINITY, hi = -INFINITY;
            for (const auto& t : tokens) {
                lo = std::min(lo, t(k));
                hi = std::max(hi, t(k));
            }
            spread = std::max(spread, hi - lo);
        }
        const double M = 1.0 + spread;
        Vector v(d);
        double w = 1.0;
        for (Index k = 0; k < d; ++k, w *= M) v(k) = w;
        if (attempt(v, 1)) return s;
    }
    for (int r = 0; r < opt.random_retries; ++r) {
        Stream rng(opt.seed, 0x5e9a0000ULL + static_cast<std::uint64_t>(r));
        Vector v(d);
        for (Index k = 0; k < d; ++k) v(k) = rng.normal();
        v /= v.norm();
        if (attempt(v, 2 + r)) return s;
    }
    throw NumericError("memorization: no separating vector found within the retry budget");
}

struct MemorizationSpec {
    Index dim = 0;            // hidden rows
    Index token_rows = 0;     // tokens read from rows [0, token_rows)
    Index out_offset = 0;     // outputs written to rows [out_offset, out_offset + d_out)
    bool cancel_skip = true;  // subtract the input so the layer output is the recalled value alone
    // Recall y_i as mean(y) + (y_i - mean(y)) so that off-token outputs are
    // convex combinations of mean(y) and one y_i; constant targets become exact.
    bool center = true;
};

// Hat functions relu(t-1) - 2 relu(t) + relu(t+1) with t = R v^T (x - x_i) and
// R = 4 / min gap, so supports are disjoint. Each token maps to its output
// (plus the input when cancel_skip is false).
inline FeedForwardLayer build_memorization_layer(const std::vector<Vector>& tokens, const std::vector<Vector>& outputs,
                                                 const MemorizationSpec& ms, const SeparationOptions& opt = {},
                                                 Separation* used = nullptr) {
    if (tokens.size() != outputs.size()) throw ConfigError("memorization: token/output count mismatch");
    const Separation sep = find_separating_vector(tokens, opt);
    if (used) *used = sep;
    const Index r = static_cast<Index>(tokens.size());
    const Index D = ms.dim;
    const Index d_out = outputs.front().size();
    if (ms.token_rows > D || ms.out_offset + d_out > D) throw StructuralError("memorization: rows out of range");
    const double R = 4.0 / sep.min_gap;
    const Index cancel = ms.cancel_skip ? 2 * D : 0;
    FeedForwardLayer ff{Matrix::Zero(3 * r + cancel, D), Vector::Zero(3 * r + cancel), Matrix::Zero(D, 3 * r + cancel),
                        Vector::Zero(D)};
    Vector mean = Vector::Zero(d_out);
    if (ms.center) {
        for (const auto& y : outputs) mean += y;
        mean /= static_cast<double>(r);
        ff.b2.segment(ms.out_offset, d_out) = mean;
    }
    for (Index i = 0; i < r; ++i) {
        const auto& x = tokens[static_cast<std::size_t>(i)];
        const Vector y = outputs[static_cast<std::size_t>(i)] - mean;
        require_size(x, ms.token_rows, "memorization token");
        require_size(outputs[static_cast<std::size_t>(i)], d_out, "memorization output");
        const double center = R * sep.v.dot(x);
        for (Index k = 0; k < 3; ++k) {
            ff.W1.row(3 * i + k).head(ms.token_rows) = R * sep.v.transpose();
            ff.b1(3 * i + k) = -center + static_cast<double>(k - 1);
        }
        ff.W2.block(ms.out_offset, 3 * i, d_out, 1) = y;
        ff.W2.block(ms.out_offset, 3 * i + 1, d_out, 1) = -2.0 * y;
        ff.W2.block(ms.out_offset, 3 * i + 2, d_out, 1) = y;
    }
    if (ms.cancel_skip) {
        const Index o = 3 * r;
        ff.W1.block(o, 0, D, D) = Matrix::Identity(D, D);
        ff.W1.block(o + D, 0, D, D) = -Matrix::Identity(D, D);
        ff.W2.block(0, o, D, D) = -Matrix::Identity(D, D);
        ff.W2.block(0, o + D, D, D) = Matrix::Identity(D, D);
    }
    return ff;
}

// Lemma-style readout on R^d: token x_i -> (y_i, 0), norm <= max |y_i| elsewhere.
inline FeedForwardLayer build_readout_layer(const std::vector<std::pair<Vector, Vector>>& pairs,
                                            const SeparationOptions& opt = {}, Separation* used = nullptr) {
    if (pairs.empty()) throw ConfigError("readout: no pairs");
    std::vector<Vector> tokens, outputs;
    for (const auto& [x, y] : pairs) {
        tokens.push_back(x);
        outputs.push_back(y);
    }
    const Index d = tokens.front().size();
    if (outputs.front().size() > d) throw ConfigError("readout: outputs wider than tokens");
    return build_memorization_layer(tokens, outputs, MemorizationSpec{d, d, 0, true, true}, opt, used);
}

}  // namespace tfa
