#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "tfa/network.hpp"

namespace tfa {

// Scalar operation tally of one forward pass. Every add, multiply, compare,
// exp and divide counts once.
struct OpTally {
    std::uint64_t add = 0, mul = 0, cmp = 0, exp = 0, div = 0;
    std::uint64_t total() const { return add + mul + cmp + exp + div; }
};

struct OpCounts {
    std::uint64_t d = 0;  // parameters
    std::uint64_t t = 0;  // operations
    std::uint64_t q = 0;  // exponential evaluations
};

namespace detail {

// y = A x + (bias), loop form, tallying every scalar operation.
inline void counted_matvec(const Matrix& A, const double* x, double* y, OpTally& t) {
    for (Index i = 0; i < A.rows(); ++i) {
        double s = A(i, 0) * x[0];
        ++t.mul;
        for (Index k = 1; k < A.cols(); ++k) {
            s += A(i, k) * x[k];
            ++t.mul;
            ++t.add;
        }
        y[i] = s;
    }
}

inline Matrix counted_matmul(const Matrix& A, const Matrix& B, OpTally& t) {
    Matrix C(A.rows(), B.cols());
    const Matrix Bc = B;  // column-major, columns contiguous
    for (Index j = 0; j < B.cols(); ++j) counted_matvec(A, Bc.col(j).data(), C.col(j).data(), t);
    return C;
}

inline void counted_add(Matrix& A, const Matrix& B, OpTally& t) {
    A += B;
    t.add += static_cast<std::uint64_t>(A.size());
}

}  // namespace detail

// Naive evaluator of a standard network. Attention always goes through the
// full softmax, even for zero key/query maps, so the tally depends only on
// the network dims.
inline Matrix reference_forward(const TransformerNetwork& net, const Matrix& X, OpTally& tally) {
    using detail::counted_add;
    using detail::counted_matmul;
    if (net.kind() != NetworkKind::standard) throw StructuralError("reference_forward: standard networks only");
    net.validate();
    Matrix Z = counted_matmul(net.embedding.E_in, X, tally);
    counted_add(Z, net.embedding.P, tally);
    const Index n = Z.cols();
    for (const auto& block : net.blocks) {
        Matrix out = Z;
        for (const auto& h : block.attention.heads) {
            const Matrix V = counted_matmul(h.W_V, Z, tally);
            const Matrix Kz = counted_matmul(h.W_K, Z, tally);
            const Matrix Qz = counted_matmul(h.W_Q, Z, tally);
            const Matrix scores = counted_matmul(Kz.transpose(), Qz, tally);
            Matrix A(n, n);
            for (Index j = 0; j < n; ++j) {
                double mx = scores(0, j);
                for (Index i = 1; i < n; ++i) {
                    mx = std::max(mx, scores(i, j));
                    ++tally.cmp;
                }
                double s = 0.0;
                for (Index i = 0; i < n; ++i) {
                    A(i, j) = std::exp(scores(i, j) - mx);
                    ++tally.add;
                    ++tally.exp;
                    if (i > 0) ++tally.add;
                    s += A(i, j);
                }
                for (Index i = 0; i < n; ++i) {
                    A(i, j) /= s;
                    ++tally.div;
                }
            }
            const Matrix mixed = counted_matmul(V, A, tally);
            counted_add(out, counted_matmul(h.W_O, mixed, tally), tally);
        }
        Z = out;
        const auto& ff = std::get<FeedForwardLayer>(block.feedforward);
        if (ff.width() > 0) {
            Matrix hid = counted_matmul(ff.W1, Z, tally);
            counted_add(hid, ff.b1.replicate(1, n), tally);
            hid = relu(hid);
            tally.cmp += static_cast<std::uint64_t>(hid.size());
            counted_add(Z, counted_matmul(ff.W2, hid, tally), tally);
        }
        counted_add(Z, ff.b2.replicate(1, n), tally);
    }
    return counted_matmul(net.projection.E_out, Z, tally);
}

// Closed form of the reference_forward tally for a materialized network.
//   embedding   D n (2 d_x)
//   per head    3 S n (2D-1) + n^2 (2S-1) + n (5n-2) + S n (2n-1) + D n (2S-1) + D n
//   feed-forward W n (2D+1) + D n (2W+1)
//   projection  d_y n (2D-1)
// The softmax column costs n-1 compares, n subtractions, n exps, n-1 adds and
// n divisions.
inline OpCounts op_counts(const ArchSpec& s) {
    s.validate();
    const std::uint64_t dx = s.d_x, dy = s.d_y, n = s.n, D = s.D, H = s.H, S = s.S, W = s.W, L = s.L;
    const std::uint64_t head = 3 * S * n * (2 * D - 1) + n * n * (2 * S - 1) + n * (5 * n - 2) + S * n * (2 * n - 1) +
                               D * n * (2 * S - 1) + D * n;
    const std::uint64_t ff = W * n * (2 * D + 1) + D * n * (2 * W + 1);
    OpCounts c;
    c.d = param_count(s);
    c.t = 2 * D * n * dx + L * (H * head + ff) + dy * n * (2 * D - 1);
    c.q = L * H * n * n;
    return c;
}

// Asymptotic forms with unit constants: (HS + W) D L, L(HDSn + HSn^2 + WDn), L H n^2.
struct OpEnvelope {
    double d = 0, t = 0, q = 0;
};

inline OpEnvelope op_envelope(const ArchSpec& s) {
    const double n = static_cast<double>(s.n), D = static_cast<double>(s.D), H = static_cast<double>(s.H),
                 S = static_cast<double>(s.S), W = static_cast<double>(s.W), L = static_cast<double>(s.L);
    return {(H * S + W) * D * L, L * (H * D * S * n + H * S * n * n + W * D * n), L * H * n * n};
}

// (d(q+1))^2 + 11 d (q+1) (t + log2(9 d (q+1))).
inline double vc_bound(double d, double t, double q) {
    const double a = d * (q + 1.0);
    return a * a + 11.0 * a * (t + std::log2(9.0 * a));
}

inline double vc_bound(const OpCounts& c) {
    return vc_bound(static_cast<double>(c.d), static_cast<double>(c.t), static_cast<double>(c.q));
}

// Pseudo-dimension bound times log(e m B / delta).
inline double covering_bound(const ArchSpec& spec, double delta, double m, double B) {
    if (!(delta > 0.0) || !(m >= 1.0) || !(B > 0.0)) throw ConfigError("covering_bound: need delta > 0, m >= 1, B > 0");
    return vc_bound(op_counts(spec)) * std::log(std::numbers::e * m * B / delta);
}

struct CapacityRow {
    ArchSpec spec;
    OpCounts counts;
    OpEnvelope envelope;
    double vc = 0;
    double covering = 0;
};

inline CapacityRow capacity_row(const ArchSpec& spec, double delta, double m, double B) {
    CapacityRow r{spec, op_counts(spec), op_envelope(spec), 0, 0};
    r.vc = vc_bound(r.counts);
    r.covering = covering_bound(spec, delta, m, B);
    return r;
}

inline std::string capacity_csv_header() {
    return "d_x,d_y,n,D,H,S,W,L,d,t,q,d_envelope,t_envelope,q_envelope,vc_bound,covering_bound";
}

inline std::string to_csv_row(const CapacityRow& r) {
    const auto& s = r.spec;
    return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}", s.d_x, s.d_y, s.n, s.D,
                       s.H, s.S, s.W, s.L, r.counts.d, r.counts.t, r.counts.q, r.envelope.d, r.envelope.t,
                       r.envelope.q, r.vc, r.covering);
}

}  // namespace tfa
