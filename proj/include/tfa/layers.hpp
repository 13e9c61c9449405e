#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tfa/linalg.hpp"

namespace tfa {

struct EmbeddingLayer {
    Matrix E_in;  // D x d_x
    Matrix P;     // D x n, positional encoding

    Matrix apply(const Matrix& X) const {
        require_shape(X, E_in.cols(), P.cols(), "embedding input");
        return E_in * X + P;
    }
};

struct ProjectionLayer {
    Matrix E_out;  // d_y x D

    Matrix apply(const Matrix& Z) const {
        if (Z.rows() != E_out.cols()) throw StructuralError("projection: hidden dim mismatch");
        return E_out * Z;
    }
};

struct AttentionHead {
    Matrix W_V, W_K, W_Q;  // S x D
    Matrix W_O;            // D x S

    Index head_size() const { return W_V.rows(); }
    Index dim() const { return W_V.cols(); }

    // Zero key and query maps give all-zero scores; the softmax is then the
    // constant 1/n and is evaluated symbolically.
    bool uniform() const { return W_K.isZero(0.0) && W_Q.isZero(0.0); }

    void validate(Index D) const {
        const Index S = W_V.rows();
        require_shape(W_V, S, D, "W_V");
        require_shape(W_K, S, D, "W_K");
        require_shape(W_Q, S, D, "W_Q");
        require_shape(W_O, D, S, "W_O");
    }

    static AttentionHead zero(Index S, Index D) {
        return {Matrix::Zero(S, D), Matrix::Zero(S, D), Matrix::Zero(S, D), Matrix::Zero(D, S)};
    }
};

// Column-wise softmax: column j holds the weights query j puts on every key.
inline Matrix softmax_columns(const Matrix& scores) {
    Matrix out(scores.rows(), scores.cols());
    for (Index j = 0; j < scores.cols(); ++j) {
        const double mx = scores.col(j).maxCoeff();
        out.col(j) = (scores.col(j).array() - mx).exp().matrix();
        out.col(j) /= out.col(j).sum();
    }
    return out;
}

struct SelfAttentionLayer {
    std::vector<AttentionHead> heads;  // empty: identity layer

    bool is_identity() const {
        for (const auto& h : heads)
            if (!h.W_O.isZero(0.0)) return false;
        return true;
    }

    Matrix apply(const Matrix& Z) const {
        if (!Z.allFinite()) throw NumericError("attention: non-finite input");
        Matrix out = Z;
        const double n = static_cast<double>(Z.cols());
        for (const auto& h : heads) {
            h.validate(Z.rows());
            if (h.W_O.isZero(0.0)) continue;
            const Matrix V = h.W_V * Z;
            Matrix mixed;
            if (h.uniform()) {
                const Vector mean = V.rowwise().sum() / n;
                mixed = mean.replicate(1, Z.cols());
            } else {
                const Matrix scores = (h.W_K * Z).transpose() * (h.W_Q * Z);
                mixed = V * softmax_columns(scores);
            }
            out.noalias() += h.W_O * mixed;
        }
        return out;
    }
};

struct FeedForwardLayer {
    Matrix W1;  // W x D
    Vector b1;  // W
    Matrix W2;  // D x W
    Vector b2;  // D

    Index width() const { return W1.rows(); }
    Index dim() const { return W2.rows(); }

    void validate(Index D) const {
        const Index W = W1.rows();
        require_shape(W1, W, D, "FF W1");
        require_size(b1, W, "FF b1");
        require_shape(W2, D, W, "FF W2");
        require_size(b2, D, "FF b2");
    }

    Matrix apply(const Matrix& Z) const {
        validate(Z.rows());
        Matrix hidden = W1 * Z;
        hidden.colwise() += b1;
        Matrix out = Z + W2 * relu(hidden);
        out.colwise() += b2;
        return out;
    }

    Vector apply_column(const Vector& z) const {
        return z + W2 * relu(W1 * z + b1) + b2;
    }

    static FeedForwardLayer identity(Index D) {
        return {Matrix::Zero(0, D), Vector::Zero(0), Matrix::Zero(D, 0), Vector::Zero(D)};
    }
};

// Feed-forward layer whose biases may differ between columns.
struct GeneralizedFeedForwardLayer {
    Matrix W1;  // W x D
    Matrix B1;  // W x n
    Matrix W2;  // D x W
    Matrix B2;  // D x n

    Index width() const { return W1.rows(); }
    Index dim() const { return W2.rows(); }

    void validate(Index D, Index n) const {
        const Index W = W1.rows();
        require_shape(W1, W, D, "GFF W1");
        require_shape(B1, W, n, "GFF B1");
        require_shape(W2, D, W, "GFF W2");
        require_shape(B2, D, n, "GFF B2");
    }

    Matrix apply(const Matrix& Z) const {
        validate(Z.rows(), Z.cols());
        return Z + W2 * relu(W1 * Z + B1) + B2;
    }

    static GeneralizedFeedForwardLayer from_standard(const FeedForwardLayer& ff, Index n) {
        return {ff.W1, ff.b1.replicate(1, n), ff.W2, ff.b2.replicate(1, n)};
    }

    // Reduces to a standard layer when every bias matrix has equal columns.
    bool has_uniform_bias() const {
        for (Index j = 1; j < B1.cols(); ++j)
            if (B1.col(j) != B1.col(0)) return false;
        for (Index j = 1; j < B2.cols(); ++j)
            if (B2.col(j) != B2.col(0)) return false;
        return true;
    }
};

using AnyFeedForward = std::variant<FeedForwardLayer, GeneralizedFeedForwardLayer>;

inline Matrix ff_forward(const AnyFeedForward& layer, const Matrix& Z) {
    return std::visit([&](const auto& l) { return l.apply(Z); }, layer);
}

inline Index ff_width(const AnyFeedForward& layer) {
    return std::visit([](const auto& l) { return l.width(); }, layer);
}

inline Matrix attention_forward(const SelfAttentionLayer& layer, const Matrix& Z) { return layer.apply(Z); }

// Entrywise clamp to [-B, B] as one feed-forward layer. The skip connection
// carries x, so the hidden part only adds clamp(x) - x = -sigma[x-B] + sigma[-x-B].
inline FeedForwardLayer truncation_layer(double B, Index D) {
    if (!(B > 0.0)) throw ConfigError("truncation_layer: B must be positive");
    const Index W = 2 * D;
    FeedForwardLayer ff{Matrix::Zero(W, D), Vector::Zero(W), Matrix::Zero(D, W), Vector::Zero(D)};
    for (Index i = 0; i < D; ++i) {
        ff.W1(2 * i, i) = 1.0;
        ff.b1(2 * i) = -B;
        ff.W1(2 * i + 1, i) = -1.0;
        ff.b1(2 * i + 1) = -B;
        ff.W2(i, 2 * i) = -1.0;
        ff.W2(i, 2 * i + 1) = 1.0;
    }
    return ff;
}

}  // namespace tfa
