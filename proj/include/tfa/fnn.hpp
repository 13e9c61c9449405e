#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "tfa/layers.hpp"

namespace tfa {

// Plain ReLU network: h_0 = x, h_{l+1} = relu(A_l h_l + b_l) for all but the
// last layer, which is affine.
struct Fnn {
    struct Layer {
        Matrix A;
        Vector b;
    };
    std::vector<Layer> layers;

    Index input_dim() const { return layers.front().A.cols(); }
    Index output_dim() const { return layers.back().A.rows(); }
    // Number of hidden (ReLU) layers.
    std::size_t depth() const { return layers.empty() ? 0 : layers.size() - 1; }
    Index width() const {
        Index w = 0;
        for (std::size_t l = 0; l + 1 < layers.size(); ++l) w = std::max(w, layers[l].A.rows());
        return w;
    }

    void validate() const {
        if (layers.empty()) throw StructuralError("Fnn: no layers");
        for (std::size_t l = 0; l < layers.size(); ++l) {
            require_size(layers[l].b, layers[l].A.rows(), "Fnn bias");
            if (l > 0 && layers[l].A.cols() != layers[l - 1].A.rows())
                throw StructuralError("Fnn: layer " + std::to_string(l) + " input does not match previous output");
        }
    }
};

inline Vector fnn_forward(const Fnn& fnn, const Vector& x) {
    fnn.validate();
    require_size(x, fnn.input_dim(), "fnn_forward input");
    Vector h = x;
    for (std::size_t l = 0; l < fnn.layers.size(); ++l) {
        h = fnn.layers[l].A * h + fnn.layers[l].b;
        if (l + 1 < fnn.layers.size()) h = relu(h);
    }
    return h;
}

// Applies an Fnn to every column of X.
inline Matrix fnn_forward_columns(const Fnn& fnn, const Matrix& X) {
    Matrix out(fnn.output_dim(), X.cols());
    for (Index j = 0; j < X.cols(); ++j) out.col(j) = fnn_forward(fnn, X.col(j));
    return out;
}

// g o f as one network; f's output affine map is folded into g's first layer.
inline Fnn compose(const Fnn& g, const Fnn& f) {
    f.validate();
    g.validate();
    if (g.input_dim() != f.output_dim()) throw StructuralError("compose: dimension mismatch");
    Fnn out;
    out.layers.assign(f.layers.begin(), f.layers.end() - 1);
    const auto& last = f.layers.back();
    const auto& first = g.layers.front();
    out.layers.push_back({first.A * last.A, first.A * last.b + first.b});
    out.layers.insert(out.layers.end(), g.layers.begin() + 1, g.layers.end());
    return out;
}

// Runs networks side by side on disjoint input slices and stacks their outputs.
// All parts must share the same depth.
inline Fnn parallel(const std::vector<Fnn>& parts) {
    if (parts.empty()) throw StructuralError("parallel: no parts");
    const std::size_t depth = parts.front().layers.size();
    for (const auto& p : parts) {
        p.validate();
        if (p.layers.size() != depth) throw StructuralError("parallel: depth mismatch");
    }
    Fnn out;
    for (std::size_t l = 0; l < depth; ++l) {
        Matrix A(0, 0);
        Vector b(0);
        for (const auto& p : parts) {
            A = block_diag(A, p.layers[l].A);
            b = vstack(b, p.layers[l].b);
        }
        out.layers.push_back({A, b});
    }
    return out;
}

// Appends ReLU identity layers before the output map. Exact only when the last
// hidden activations are nonnegative, which holds for any ReLU output.
inline Fnn pad_depth(const Fnn& fnn, std::size_t depth) {
    fnn.validate();
    if (fnn.depth() > depth) throw StructuralError("pad_depth: network already deeper");
    Fnn out = fnn;
    const Index w = out.layers[out.layers.size() - 2].A.rows();
    while (out.depth() < depth) {
        out.layers.insert(out.layers.end() - 1, {Matrix::Identity(w, w), Vector::Zero(w)});
    }
    return out;
}

// Exact middle value of three reals, depth 2 and width 7:
// with m = max(x1, x2) and l = min(x1, x2),
// mid = m - relu(m - x3) + relu(l - x3).
inline Fnn build_mid_fnn() {
    Fnn f;
    // hidden 1: relu(x1-x2), relu(x1), relu(-x1), relu(x2), relu(-x2), relu(x3), relu(-x3)
    Matrix A0 = Matrix::Zero(7, 3);
    A0.row(0) << 1, -1, 0;
    A0.row(1) << 1, 0, 0;
    A0.row(2) << -1, 0, 0;
    A0.row(3) << 0, 1, 0;
    A0.row(4) << 0, -1, 0;
    A0.row(5) << 0, 0, 1;
    A0.row(6) << 0, 0, -1;
    f.layers.push_back({A0, Vector::Zero(7)});
    // Linear read-outs of hidden 1.
    Eigen::RowVectorXd mx(7), mn(7), x3(7);
    mx << 1, 0, 0, 1, -1, 0, 0;   // relu(x1-x2) + x2
    mn << -1, 1, -1, 0, 0, 0, 0;  // x1 - relu(x1-x2)
    x3 << 0, 0, 0, 0, 0, 1, -1;
    // hidden 2: relu(m), relu(-m), relu(m - x3), relu(l - x3)
    Matrix A1(4, 7);
    A1.row(0) = mx;
    A1.row(1) = -mx;
    A1.row(2) = mx - x3;
    A1.row(3) = mn - x3;
    f.layers.push_back({A1, Vector::Zero(4)});
    Matrix A2(1, 4);
    A2 << 1, -1, -1, 1;
    f.layers.push_back({A2, Vector::Zero(1)});
    return f;
}

// Feed-forward layers that reproduce an Fnn token-wise. The hidden state has
// `dim` rows; the input sits in the first d_in rows and the output is written
// to the first d_out rows with zeros below.
struct FfStack {
    Index dim = 0;
    Index d_in = 0;
    Index d_out = 0;
    std::vector<FeedForwardLayer> layers;

    Matrix embed(const Matrix& X) const { return pad_to(X, dim, X.cols()); }
    Matrix project(const Matrix& Z) const { return Z.topRows(d_out); }

    Matrix apply(const Matrix& X) const {
        Matrix Z = embed(X);
        for (const auto& l : layers) Z = l.apply(Z);
        return project(Z);
    }
};

// Each layer cancels the skip connection with relu(x) - relu(-x) = x.
// Widths are at most 3W for d_in <= W; `min_dim` lets callers embed the stack
// in a wider hidden state.
inline FfStack fnn_to_ff_stack(const Fnn& fnn, Index min_dim = 0) {
    fnn.validate();
    if (fnn.depth() < 2) throw StructuralError("fnn_to_ff_stack: depth must be >= 2 (pad with an identity layer)");
    const Index d_in = fnn.input_dim();
    const Index d_out = fnn.output_dim();
    const Index W = fnn.width();
    const Index D = std::max({W, d_in, d_out, min_dim});
    FfStack stack{D, d_in, d_out, {}};
    const std::size_t L = fnn.depth();

    auto identity_units = [&](Index rows) {
        Matrix I = Matrix::Zero(rows, D);
        I.leftCols(rows) = Matrix::Identity(rows, rows);
        return I;
    };

    // Layer 1: N_1 = relu(A_0 x + b_0).
    {
        const auto& [A0, b0] = fnn.layers[0];
        const Index w = A0.rows();
        FeedForwardLayer ff;
        ff.W1 = Matrix::Zero(w + 2 * d_in, D);
        ff.W1.topLeftCorner(w, d_in) = A0;
        ff.W1.middleRows(w, d_in) = identity_units(d_in);
        ff.W1.bottomRows(d_in) = -identity_units(d_in);
        ff.b1 = Vector::Zero(w + 2 * d_in);
        ff.b1.head(w) = b0;
        ff.W2 = Matrix::Zero(D, w + 2 * d_in);
        ff.W2.block(0, 0, w, w) = Matrix::Identity(w, w);
        ff.W2.block(0, w, d_in, d_in) = -Matrix::Identity(d_in, d_in);
        ff.W2.block(0, w + d_in, d_in, d_in) = Matrix::Identity(d_in, d_in);
        ff.b2 = Vector::Zero(D);
        stack.layers.push_back(std::move(ff));
    }
    // Layers 2..L-1: N_{l+1} = relu(A_l N_l + b_l).
    for (std::size_t l = 1; l + 1 < L; ++l) {
        const auto& [A, b] = fnn.layers[l];
        const Index w_in = A.cols();
        const Index w = A.rows();
        FeedForwardLayer ff;
        ff.W1 = Matrix::Zero(w + 2 * w_in, D);
        ff.W1.topLeftCorner(w, w_in) = A;
        ff.W1.middleRows(w, w_in) = identity_units(w_in);
        ff.W1.bottomRows(w_in) = -identity_units(w_in);
        ff.b1 = Vector::Zero(w + 2 * w_in);
        ff.b1.head(w) = b;
        ff.W2 = Matrix::Zero(D, w + 2 * w_in);
        ff.W2.block(0, 0, w, w) = Matrix::Identity(w, w);
        ff.W2.block(0, w, w_in, w_in) = -Matrix::Identity(w_in, w_in);
        ff.W2.block(0, w + w_in, w_in, w_in) = Matrix::Identity(w_in, w_in);
        ff.b2 = Vector::Zero(D);
        stack.layers.push_back(std::move(ff));
    }
    // Layer L: A_L relu(A_{L-1} N_{L-1} + b_{L-1}) + b_L, skip cancelled.
    {
        const auto& [A, b] = fnn.layers[L - 1];
        const auto& [Aout, bout] = fnn.layers[L];
        const Index w_in = A.cols();
        const Index w = A.rows();
        FeedForwardLayer ff;
        ff.W1 = Matrix::Zero(w + 2 * w_in, D);
        ff.W1.topLeftCorner(w, w_in) = A;
        ff.W1.middleRows(w, w_in) = identity_units(w_in);
        ff.W1.bottomRows(w_in) = -identity_units(w_in);
        ff.b1 = Vector::Zero(w + 2 * w_in);
        ff.b1.head(w) = b;
        ff.W2 = Matrix::Zero(D, w + 2 * w_in);
        ff.W2.block(0, 0, d_out, w) = Aout;
        ff.W2.block(0, w, w_in, w_in) = -Matrix::Identity(w_in, w_in);
        ff.W2.block(0, w + w_in, w_in, w_in) = Matrix::Identity(w_in, w_in);
        ff.b2 = Vector::Zero(D);
        ff.b2.head(d_out) = bout;
        stack.layers.push_back(std::move(ff));
    }
    return stack;
}

}  // namespace tfa
