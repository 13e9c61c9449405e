#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace tfa {

// Counter-based uniform stream: the value at (seed, stream, index) is a pure
// function of the triple, so parallel samplers reproduce sequential results.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t bits(std::uint64_t index) const {
        return mix(mix(mix(seed_) ^ stream_) ^ index);
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform(std::uint64_t index) const {
        return static_cast<double>(bits(index) >> 11) * 0x1.0p-53;
    }

    CounterRng substream(std::uint64_t s) const { return CounterRng(mix(seed_ ^ mix(stream_)), s); }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
};

// Sequential draws on top of a counter stream.
class Stream {
public:
    explicit Stream(CounterRng rng) : rng_(rng) {}
    Stream(std::uint64_t seed, std::uint64_t stream) : rng_(seed, stream) {}

    double uniform() { return rng_.uniform(next_++); }

    // Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t position() const { return next_; }

private:
    CounterRng rng_;
    std::uint64_t next_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Pairwise summation; the reduction tree depends only on the length.
inline double pairwise_sum(const double* x, std::size_t len) {
    if (len <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < len; ++i) s += x[i];
        return s;
    }
    const std::size_t half = len / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, len - half);
}

inline double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

}  // namespace tfa
