#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "tfa/errors.hpp"

namespace tfa {

// Dimensions of a Transformer class: token dims, sequence length, embedding
// dim, heads, head size, feed-forward width and number of blocks.
struct ArchSpec {
    std::size_t d_x = 1;
    std::size_t d_y = 1;
    std::size_t n = 1;
    std::size_t D = 1;
    std::size_t H = 1;
    std::size_t S = 1;
    std::size_t W = 1;
    std::size_t L = 1;

    void validate() const {
        if (d_x == 0 || d_y == 0 || n == 0 || D == 0 || H == 0 || S == 0 || W == 0 || L == 0) {
            throw StructuralError("ArchSpec: all fields must be >= 1 (" + to_string() + ")");
        }
        if (S > D) throw StructuralError("ArchSpec: head size S must not exceed D (" + to_string() + ")");
    }

    std::string to_string() const {
        return "d_x=" + std::to_string(d_x) + ",d_y=" + std::to_string(d_y) + ",n=" + std::to_string(n) +
               ",D=" + std::to_string(D) + ",H=" + std::to_string(H) + ",S=" + std::to_string(S) +
               ",W=" + std::to_string(W) + ",L=" + std::to_string(L);
    }

    friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

// Number of trainable scalars in a fully materialized network of this class:
// D*d_x + D*n + d_y*D + L*(4HSD + 2WD + W + D).
inline std::uint64_t param_count(const ArchSpec& s) {
    s.validate();
    const std::uint64_t D = s.D, H = s.H, S = s.S, W = s.W, L = s.L;
    return D * s.d_x + D * s.n + s.d_y * D + L * (4 * H * S * D + 2 * W * D + W + D);
}

}  // namespace tfa
