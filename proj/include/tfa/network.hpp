#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "tfa/arch.hpp"
#include "tfa/fnn.hpp"
#include "tfa/layers.hpp"

namespace tfa {

enum class NetworkKind { standard, generalized };

struct Block {
    SelfAttentionLayer attention;
    AnyFeedForward feedforward;
};

// E_out o (FF_L o SA_L) o ... o (FF_1 o SA_1) o E_in. Layers may be narrower
// than the class dims in `spec` (fewer heads, smaller width); materialize()
// zero-pads every slot to exactly those dims.
struct TransformerNetwork {
    ArchSpec spec;
    EmbeddingLayer embedding;
    std::vector<Block> blocks;
    ProjectionLayer projection;

    NetworkKind kind() const {
        for (const auto& b : blocks)
            if (std::holds_alternative<GeneralizedFeedForwardLayer>(b.feedforward)) return NetworkKind::generalized;
        return NetworkKind::standard;
    }

    void validate() const {
        spec.validate();
        const auto D = static_cast<Index>(spec.D);
        const auto n = static_cast<Index>(spec.n);
        require_shape(embedding.E_in, D, static_cast<Index>(spec.d_x), "E_in");
        require_shape(embedding.P, D, n, "positional encoding");
        require_shape(projection.E_out, static_cast<Index>(spec.d_y), D, "E_out");
        if (blocks.size() != spec.L)
            throw StructuralError("network: block count " + std::to_string(blocks.size()) + " != L=" +
                                  std::to_string(spec.L));
        for (std::size_t l = 0; l < blocks.size(); ++l) {
            const auto& b = blocks[l];
            if (b.attention.heads.size() > spec.H) throw StructuralError("network: too many heads in block " + std::to_string(l));
            for (const auto& h : b.attention.heads) {
                h.validate(D);
                if (static_cast<std::size_t>(h.head_size()) > spec.S) throw StructuralError("network: head size exceeds S");
            }
            std::visit(
                [&](const auto& ff) {
                    using T = std::decay_t<decltype(ff)>;
                    if constexpr (std::is_same_v<T, FeedForwardLayer>)
                        ff.validate(D);
                    else
                        ff.validate(D, n);
                    if (static_cast<std::size_t>(ff.width()) > spec.W)
                        throw StructuralError("network: feed-forward width exceeds W in block " + std::to_string(l));
                },
                b.feedforward);
        }
    }

    // Hidden representation before the projection.
    Matrix hidden(const Matrix& X) const {
        Matrix Z = embedding.apply(X);
        if (!Z.allFinite()) throw NumericError("network: non-finite embedding output");
        for (std::size_t l = 0; l < blocks.size(); ++l) {
            Z = blocks[l].attention.apply(Z);
            Z = ff_forward(blocks[l].feedforward, Z);
            if (!Z.allFinite()) throw NumericError("network: non-finite value after block " + std::to_string(l));
        }
        return Z;
    }

    Matrix operator()(const Matrix& X) const { return projection.apply(hidden(X)); }
};

inline Matrix network_forward(const TransformerNetwork& net, const Matrix& X) {
    require_shape(X, static_cast<Index>(net.spec.d_x), static_cast<Index>(net.spec.n), "network input");
    return net(X);
}

// Class dims that tightly fit the layers actually present (H, S, W >= 1).
inline ArchSpec fitted_spec(const TransformerNetwork& net) {
    ArchSpec s = net.spec;
    s.H = 1;
    s.S = 1;
    s.W = 1;
    s.L = net.blocks.size();
    for (const auto& b : net.blocks) {
        s.H = std::max(s.H, b.attention.heads.size());
        for (const auto& h : b.attention.heads) s.S = std::max(s.S, static_cast<std::size_t>(h.head_size()));
        s.W = std::max(s.W, static_cast<std::size_t>(ff_width(b.feedforward)));
    }
    return s;
}

namespace detail {

inline AttentionHead pad_head(const AttentionHead& h, Index S, Index D, Index row_offset) {
    AttentionHead out = AttentionHead::zero(S, D);
    const Index s = h.head_size();
    const Index d = h.dim();
    out.W_V.block(0, row_offset, s, d) = h.W_V;
    out.W_K.block(0, row_offset, s, d) = h.W_K;
    out.W_Q.block(0, row_offset, s, d) = h.W_Q;
    out.W_O.block(row_offset, 0, d, s) = h.W_O;
    return out;
}

inline GeneralizedFeedForwardLayer as_generalized(const AnyFeedForward& ff, Index n) {
    if (const auto* g = std::get_if<GeneralizedFeedForwardLayer>(&ff)) return *g;
    return GeneralizedFeedForwardLayer::from_standard(std::get<FeedForwardLayer>(ff), n);
}

// Block-diagonal combination of two blocks acting on stacked hidden states.
inline Block combine_blocks(const Block& a, Index Da, const Block& b, Index Db, Index n) {
    Block out;
    const Index D = Da + Db;
    (void)Db;
    Index S = 0;
    for (const auto& h : a.attention.heads) S = std::max(S, h.head_size());
    for (const auto& h : b.attention.heads) S = std::max(S, h.head_size());
    for (const auto& h : a.attention.heads) out.attention.heads.push_back(pad_head(h, S, D, 0));
    for (const auto& h : b.attention.heads) out.attention.heads.push_back(pad_head(h, S, D, Da));

    const bool general = std::holds_alternative<GeneralizedFeedForwardLayer>(a.feedforward) ||
                         std::holds_alternative<GeneralizedFeedForwardLayer>(b.feedforward);
    if (general) {
        const auto ga = as_generalized(a.feedforward, n);
        const auto gb = as_generalized(b.feedforward, n);
        out.feedforward = GeneralizedFeedForwardLayer{block_diag(ga.W1, gb.W1), vstack(ga.B1, gb.B1),
                                                      block_diag(ga.W2, gb.W2), vstack(ga.B2, gb.B2)};
    } else {
        const auto& fa = std::get<FeedForwardLayer>(a.feedforward);
        const auto& fb = std::get<FeedForwardLayer>(b.feedforward);
        out.feedforward = FeedForwardLayer{block_diag(fa.W1, fb.W1), vstack(fa.b1, fb.b1), block_diag(fa.W2, fb.W2),
                                           vstack(fa.b2, fb.b2)};
    }
    return out;
}

inline Block identity_block(Index D) { return Block{SelfAttentionLayer{}, FeedForwardLayer::identity(D)}; }

// Pads the shorter network with identity blocks at the end.
inline std::vector<Block> padded_blocks(const TransformerNetwork& net, std::size_t L) {
    std::vector<Block> out = net.blocks;
    while (out.size() < L) out.push_back(identity_block(static_cast<Index>(net.spec.D)));
    return out;
}

// Shared core of concatenation and summation: block-diagonal hidden state.
inline TransformerNetwork stack_hidden(const TransformerNetwork& n1, const TransformerNetwork& n2) {
    n1.validate();
    n2.validate();
    if (n1.spec.n != n2.spec.n) throw StructuralError("concat: sequence lengths differ");
    const auto n = static_cast<Index>(n1.spec.n);
    const auto D1 = static_cast<Index>(n1.spec.D);
    const auto D2 = static_cast<Index>(n2.spec.D);
    const std::size_t L = std::max(n1.spec.L, n2.spec.L);
    const auto b1 = padded_blocks(n1, L);
    const auto b2 = padded_blocks(n2, L);

    TransformerNetwork out;
    out.spec = ArchSpec{n1.spec.d_x + n2.spec.d_x,
                        n1.spec.d_y + n2.spec.d_y,
                        n1.spec.n,
                        n1.spec.D + n2.spec.D,
                        n1.spec.H + n2.spec.H,
                        std::max(n1.spec.S, n2.spec.S),
                        n1.spec.W + n2.spec.W,
                        L};
    out.embedding.E_in = block_diag(n1.embedding.E_in, n2.embedding.E_in);
    out.embedding.P = vstack(n1.embedding.P, n2.embedding.P);
    for (std::size_t l = 0; l < L; ++l) out.blocks.push_back(combine_blocks(b1[l], D1, b2[l], D2, n));
    out.projection.E_out = block_diag(n1.projection.E_out, n2.projection.E_out);
    return out;
}

}  // namespace detail

// N(X; Y) = (N1(X); N2(Y)).
inline TransformerNetwork concat_networks(const TransformerNetwork& n1, const TransformerNetwork& n2) {
    auto out = detail::stack_hidden(n1, n2);
    out.validate();
    return out;
}

// N(X) = N1(X) + N2(X).
inline TransformerNetwork sum_networks(const TransformerNetwork& n1, const TransformerNetwork& n2) {
    if (n1.spec.d_x != n2.spec.d_x || n1.spec.d_y != n2.spec.d_y || n1.spec.n != n2.spec.n)
        throw StructuralError("sum_networks: (d_x, d_y, n) must agree");
    auto out = detail::stack_hidden(n1, n2);
    out.spec.d_x = n1.spec.d_x;
    out.spec.d_y = n1.spec.d_y;
    out.embedding.E_in = vstack(n1.embedding.E_in, n2.embedding.E_in);
    out.projection.E_out = hstack(n1.projection.E_out, n2.projection.E_out);
    out.validate();
    return out;
}

// Copies evaluated on the same input, outputs stacked vertically.
inline TransformerNetwork parallel_networks(const std::vector<TransformerNetwork>& nets) {
    if (nets.empty()) throw StructuralError("parallel_networks: empty list");
    TransformerNetwork acc = nets.front();
    Matrix E_in = nets.front().embedding.E_in;
    for (std::size_t i = 1; i < nets.size(); ++i) {
        if (nets[i].spec.d_x != nets.front().spec.d_x) throw StructuralError("parallel_networks: d_x mismatch");
        acc = detail::stack_hidden(acc, nets[i]);
        E_in = vstack(E_in, nets[i].embedding.E_in);
    }
    acc.spec.d_x = nets.front().spec.d_x;
    acc.embedding.E_in = E_in;
    acc.validate();
    return acc;
}

// Embeds the hidden state into D rows (extra rows stay zero).
inline TransformerNetwork pad_hidden(const TransformerNetwork& net, std::size_t D) {
    if (D < net.spec.D) throw StructuralError("pad_hidden: cannot shrink hidden dim");
    const auto Dn = static_cast<Index>(D);
    const auto n = static_cast<Index>(net.spec.n);
    TransformerNetwork out;
    out.spec = net.spec;
    out.spec.D = D;
    out.embedding.E_in = pad_to(net.embedding.E_in, Dn, net.embedding.E_in.cols());
    out.embedding.P = pad_to(net.embedding.P, Dn, n);
    for (const auto& b : net.blocks) {
        Block nb;
        for (const auto& h : b.attention.heads) nb.attention.heads.push_back(detail::pad_head(h, h.head_size(), Dn, 0));
        std::visit(
            [&](const auto& ff) {
                using T = std::decay_t<decltype(ff)>;
                if constexpr (std::is_same_v<T, FeedForwardLayer>) {
                    nb.feedforward = FeedForwardLayer{pad_to(ff.W1, ff.W1.rows(), Dn), ff.b1, pad_to(ff.W2, Dn, ff.W2.cols()),
                                                      pad_to(ff.b2, Dn)};
                } else {
                    nb.feedforward = GeneralizedFeedForwardLayer{pad_to(ff.W1, ff.W1.rows(), Dn), ff.B1,
                                                                 pad_to(ff.W2, Dn, ff.W2.cols()), pad_to(ff.B2, Dn, n)};
                }
            },
            b.feedforward);
        out.blocks.push_back(std::move(nb));
    }
    out.projection.E_out = pad_to(net.projection.E_out, net.projection.E_out.rows(), Dn);
    out.validate();
    return out;
}

// Zero-pads every slot to exactly the class dims in `spec`: H heads of size S
// per block and feed-forward width W. The map computed is unchanged.
inline TransformerNetwork materialize(const TransformerNetwork& net) {
    net.validate();
    const auto D = static_cast<Index>(net.spec.D);
    const auto S = static_cast<Index>(net.spec.S);
    const auto W = static_cast<Index>(net.spec.W);
    const auto n = static_cast<Index>(net.spec.n);
    TransformerNetwork out = net;
    for (auto& b : out.blocks) {
        std::vector<AttentionHead> heads;
        for (const auto& h : b.attention.heads) heads.push_back(detail::pad_head(h, S, D, 0));
        while (heads.size() < net.spec.H) heads.push_back(AttentionHead::zero(S, D));
        b.attention.heads = std::move(heads);
        std::visit(
            [&](auto& ff) {
                using T = std::decay_t<decltype(ff)>;
                if constexpr (std::is_same_v<T, FeedForwardLayer>) {
                    ff.W1 = pad_to(ff.W1, W, D);
                    ff.b1 = pad_to(ff.b1, W);
                    ff.W2 = pad_to(ff.W2, D, W);
                } else {
                    ff.W1 = pad_to(ff.W1, W, D);
                    ff.B1 = pad_to(ff.B1, W, n);
                    ff.W2 = pad_to(ff.W2, D, W);
                }
            },
            b.feedforward);
    }
    return out;
}

// Number of stored scalars. For a materialized standard network this equals
// param_count(spec).
inline std::uint64_t enumerate_weights(const TransformerNetwork& net) {
    std::uint64_t count = static_cast<std::uint64_t>(net.embedding.E_in.size() + net.embedding.P.size() +
                                                     net.projection.E_out.size());
    for (const auto& b : net.blocks) {
        for (const auto& h : b.attention.heads)
            count += static_cast<std::uint64_t>(h.W_V.size() + h.W_K.size() + h.W_Q.size() + h.W_O.size());
        std::visit(
            [&](const auto& ff) {
                using T = std::decay_t<decltype(ff)>;
                if constexpr (std::is_same_v<T, FeedForwardLayer>)
                    count += static_cast<std::uint64_t>(ff.W1.size() + ff.b1.size() + ff.W2.size() + ff.b2.size());
                else
                    count += static_cast<std::uint64_t>(ff.W1.size() + ff.B1.size() + ff.W2.size() + ff.B2.size());
            },
            b.feedforward);
    }
    return count;
}

// A network made only of feed-forward layers (identity attention).
inline TransformerNetwork network_from_ff_stack(const FfStack& stack, std::size_t n) {
    TransformerNetwork net;
    net.spec = ArchSpec{static_cast<std::size_t>(stack.d_in), static_cast<std::size_t>(stack.d_out), n,
                        static_cast<std::size_t>(stack.dim), 1, 1, 1, stack.layers.size()};
    net.embedding.E_in = Matrix::Identity(stack.dim, stack.d_in);
    net.embedding.P = Matrix::Zero(stack.dim, static_cast<Index>(n));
    for (const auto& l : stack.layers) net.blocks.push_back(Block{SelfAttentionLayer{}, l});
    net.projection.E_out = Matrix::Identity(stack.d_out, stack.dim);
    net.spec = fitted_spec(net);
    net.validate();
    return net;
}

}  // namespace tfa
