#pragma once

#include <random>

#include "tfa/network.hpp"

namespace tfa::testing {

inline Matrix random_matrix(std::mt19937_64& gen, Index rows, Index cols, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = dist(gen);
    return m;
}

inline Vector random_vector(std::mt19937_64& gen, Index size, double scale = 1.0) {
    return random_matrix(gen, size, 1, scale).col(0);
}

inline Fnn random_fnn(std::mt19937_64& gen, Index d_in, Index width, std::size_t depth, Index d_out) {
    Fnn f;
    Index prev = d_in;
    for (std::size_t l = 0; l < depth; ++l) {
        f.layers.push_back({random_matrix(gen, width, prev, 0.7), random_vector(gen, width, 0.3)});
        prev = width;
    }
    f.layers.push_back({random_matrix(gen, d_out, prev, 0.7), random_vector(gen, d_out, 0.3)});
    return f;
}

inline AttentionHead random_head(std::mt19937_64& gen, Index S, Index D, double scale = 0.5) {
    return {random_matrix(gen, S, D, scale), random_matrix(gen, S, D, scale), random_matrix(gen, S, D, scale),
            random_matrix(gen, D, S, scale)};
}

inline FeedForwardLayer random_ff(std::mt19937_64& gen, Index W, Index D, double scale = 0.5) {
    return {random_matrix(gen, W, D, scale), random_vector(gen, W, scale), random_matrix(gen, D, W, scale),
            random_vector(gen, D, scale)};
}

// Fully populated standard network with exactly the dims of `spec`.
inline TransformerNetwork random_network(std::mt19937_64& gen, const ArchSpec& spec, double scale = 0.5) {
    TransformerNetwork net;
    net.spec = spec;
    const auto D = static_cast<Index>(spec.D);
    net.embedding.E_in = random_matrix(gen, D, static_cast<Index>(spec.d_x), scale);
    net.embedding.P = random_matrix(gen, D, static_cast<Index>(spec.n), scale);
    for (std::size_t l = 0; l < spec.L; ++l) {
        Block b;
        for (std::size_t h = 0; h < spec.H; ++h) b.attention.heads.push_back(random_head(gen, static_cast<Index>(spec.S), D, scale));
        b.feedforward = random_ff(gen, static_cast<Index>(spec.W), D, scale);
        net.blocks.push_back(std::move(b));
    }
    net.projection.E_out = random_matrix(gen, static_cast<Index>(spec.d_y), D, scale);
    net.validate();
    return net;
}

inline ArchSpec random_spec(std::mt19937_64& gen) {
    std::uniform_int_distribution<std::size_t> small(1, 4);
    ArchSpec s;
    s.d_x = small(gen);
    s.d_y = small(gen);
    s.n = small(gen);
    s.D = small(gen) + 1;
    s.H = small(gen);
    s.S = std::uniform_int_distribution<std::size_t>(1, s.D)(gen);
    s.W = small(gen) * 2;
    s.L = small(gen);
    return s;
}

}  // namespace tfa::testing
