#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tfa/fnn.hpp"
#include "tfa/network.hpp"
#include "tfa/rng.hpp"
#include "tfa/serialize.hpp"

namespace tfa {

struct CheckResult {
    std::string name;
    std::size_t cases = 0;
    double max_error = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

inline nlohmann::json check_to_json(const CheckResult& c) {
    return {{"name", c.name}, {"cases", c.cases}, {"max_error", c.max_error}, {"tolerance", c.tolerance}, {"pass", c.pass}};
}

namespace detail {

inline Matrix gauss_matrix(Stream& rng, Index r, Index c, double scale) {
    Matrix M(r, c);
    for (Index k = 0; k < M.size(); ++k) M.data()[k] = scale * rng.normal();
    return M;
}

inline ArchSpec random_small_spec(Stream& rng) {
    auto pick = [&](std::size_t lo, std::size_t hi) {
        return lo + static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi - lo + 1));
    };
    ArchSpec s;
    s.d_x = pick(1, 3);
    s.d_y = pick(1, 3);
    s.n = pick(1, 4);
    s.D = pick(2, 6);
    s.H = pick(1, 3);
    s.S = pick(1, s.D);
    s.W = pick(1, 8);
    s.L = pick(1, 3);
    return s;
}

// Every slot populated at exactly the class dims.
inline TransformerNetwork random_full_network(Stream& rng, const ArchSpec& s, double scale = 0.5) {
    const auto D = static_cast<Index>(s.D), S = static_cast<Index>(s.S), W = static_cast<Index>(s.W);
    TransformerNetwork net;
    net.spec = s;
    net.embedding.E_in = gauss_matrix(rng, D, static_cast<Index>(s.d_x), scale);
    net.embedding.P = gauss_matrix(rng, D, static_cast<Index>(s.n), scale);
    for (std::size_t l = 0; l < s.L; ++l) {
        Block b;
        for (std::size_t h = 0; h < s.H; ++h)
            b.attention.heads.push_back({gauss_matrix(rng, S, D, scale), gauss_matrix(rng, S, D, scale),
                                         gauss_matrix(rng, S, D, scale), gauss_matrix(rng, D, S, scale)});
        b.feedforward = FeedForwardLayer{gauss_matrix(rng, W, D, scale), gauss_matrix(rng, W, 1, scale).col(0),
                                         gauss_matrix(rng, D, W, scale), gauss_matrix(rng, D, 1, scale).col(0)};
        net.blocks.push_back(std::move(b));
    }
    net.projection.E_out = gauss_matrix(rng, static_cast<Index>(s.d_y), D, scale);
    net.validate();
    return net;
}

inline Fnn random_fnn(Stream& rng, Index d_in, Index width, std::size_t depth, Index d_out) {
    Fnn f;
    Index prev = d_in;
    for (std::size_t l = 0; l < depth; ++l) {
        f.layers.push_back({gauss_matrix(rng, width, prev, 0.7), gauss_matrix(rng, width, 1, 0.3).col(0)});
        prev = width;
    }
    f.layers.push_back({gauss_matrix(rng, d_out, prev, 0.7), gauss_matrix(rng, d_out, 1, 0.3).col(0)});
    return f;
}

inline double middle_of_three(double a, double b, double c) {
    double v[3] = {a, b, c};
    std::sort(v, v + 3);
    return v[1];
}

}  // namespace detail

inline CheckResult check_param_count(std::size_t specs, std::uint64_t seed) {
    CheckResult r{"param_count_vs_enumeration", specs, 0.0, 0.0, true};
    for (std::size_t i = 0; i < specs; ++i) {
        Stream rng(seed, i);
        const ArchSpec s = detail::random_small_spec(rng);
        const auto net = detail::random_full_network(rng, s);
        const double diff = std::abs(static_cast<double>(param_count(s)) - static_cast<double>(enumerate_weights(net)));
        r.max_error = std::max(r.max_error, diff);
    }
    r.pass = r.max_error == 0.0;
    return r;
}

inline CheckResult check_mid_fnn(std::size_t triples, std::uint64_t seed, double tol = 1e-9) {
    CheckResult r{"mid_fnn_vs_sort", triples, 0.0, tol, true};
    const Fnn mid = build_mid_fnn();
    Matrix X(3, static_cast<Index>(triples));
    for (std::size_t i = 0; i < triples; ++i) {
        Stream rng(seed, i);
        const double scale = std::pow(10.0, 4.0 * rng.uniform() - 2.0);
        for (Index k = 0; k < 3; ++k) X(k, static_cast<Index>(i)) = scale * (2.0 * rng.uniform() - 1.0);
        if (i % 7 == 0) X(1, static_cast<Index>(i)) = X(0, static_cast<Index>(i));  // ties
    }
    const Matrix Y = fnn_forward_columns(mid, X);
    for (std::size_t i = 0; i < triples; ++i) {
        const auto j = static_cast<Index>(i);
        r.max_error = std::max(r.max_error, std::abs(Y(0, j) - detail::middle_of_three(X(0, j), X(1, j), X(2, j))));
    }
    r.pass = r.max_error <= tol;
    return r;
}

inline CheckResult check_ff_stack(std::size_t inputs, std::uint64_t seed, double tol = 1e-9) {
    CheckResult r{"fnn_to_ff_stack_vs_fnn", inputs, 0.0, tol, true};
    for (std::size_t t = 0; t < 5; ++t) {
        Stream rng(seed, 1000 + t);
        const Index d_in = 1 + static_cast<Index>(t % 3), d_out = 1 + static_cast<Index>((t + 1) % 3);
        const Fnn f = detail::random_fnn(rng, d_in, 4 + static_cast<Index>(t), 2 + t % 3, d_out);
        const std::size_t n = 1 + t % 3;
        const TransformerNetwork net = network_from_ff_stack(fnn_to_ff_stack(f), n);
        for (std::size_t i = 0; i < inputs / 5 + 1; ++i) {
            const Matrix X = detail::gauss_matrix(rng, d_in, static_cast<Index>(n), 1.0);
            const Matrix want = fnn_forward_columns(f, X);
            r.max_error = std::max(r.max_error, (net(X) - want).cwiseAbs().maxCoeff());
        }
    }
    r.pass = r.max_error <= tol;
    return r;
}

inline CheckResult check_concat_sum(std::size_t pairs, std::uint64_t seed, double tol = 1e-9) {
    CheckResult r{"concat_and_sum_networks", pairs, 0.0, tol, true};
    for (std::size_t i = 0; i < pairs; ++i) {
        Stream rng(seed, 2000 + i);
        ArchSpec a = detail::random_small_spec(rng), b = detail::random_small_spec(rng);
        b.n = a.n;
        b.d_y = a.d_y;
        const auto n1 = detail::random_full_network(rng, a), n2 = detail::random_full_network(rng, b);
        const Matrix X = detail::gauss_matrix(rng, static_cast<Index>(a.d_x), static_cast<Index>(a.n), 1.0);
        const Matrix Y = detail::gauss_matrix(rng, static_cast<Index>(b.d_x), static_cast<Index>(b.n), 1.0);
        const Matrix c = concat_networks(n1, n2)(vstack(X, Y));
        r.max_error = std::max(r.max_error, (c - vstack(n1(X), n2(Y))).cwiseAbs().maxCoeff());
        if (a.d_x == b.d_x) {
            const Matrix s = sum_networks(n1, n2)(X);
            r.max_error = std::max(r.max_error, (s - (n1(X) + n2(X))).cwiseAbs().maxCoeff());
        }
    }
    r.pass = r.max_error <= tol;
    return r;
}

inline CheckResult check_truncation(std::size_t points, std::uint64_t seed) {
    CheckResult r{"truncation_layer_vs_clamp", points, 0.0, 0.0, true};
    const double B = 1.0 + static_cast<double>(seed % 5);
    const auto layer = truncation_layer(B, 1);
    Stream rng(seed, 3000);
    Matrix x(1, static_cast<Index>(points));
    for (Index i = 0; i < x.cols(); ++i) x(0, i) = 6.0 * B * (rng.uniform() - 0.5);
    const Matrix y = layer.apply(x);
    for (Index i = 0; i < x.cols(); ++i) r.max_error = std::max(r.max_error, std::abs(y(0, i) - std::clamp(x(0, i), -B, B)));
    r.pass = r.max_error == 0.0;
    return r;
}

inline CheckResult check_serialization(std::size_t nets, std::uint64_t seed) {
    CheckResult r{"json_round_trip", nets, 0.0, 0.0, true};
    for (std::size_t i = 0; i < nets; ++i) {
        Stream rng(seed, 4000 + i);
        const auto net = detail::random_full_network(rng, detail::random_small_spec(rng));
        const auto back = network_from_json(network_to_json(net));
        const Matrix X = detail::gauss_matrix(rng, static_cast<Index>(net.spec.d_x), static_cast<Index>(net.spec.n), 1.0);
        r.max_error = std::max(r.max_error, (net(X) - back(X)).cwiseAbs().maxCoeff());
    }
    r.pass = r.max_error == 0.0;
    return r;
}

inline std::vector<CheckResult> verify_core(std::size_t cases, std::uint64_t seed) {
    return {check_param_count(std::max<std::size_t>(cases / 50, 20), seed),
            check_mid_fnn(cases, seed),
            check_ff_stack(std::max<std::size_t>(cases / 10, 100), seed),
            check_concat_sum(std::max<std::size_t>(cases / 100, 10), seed),
            check_truncation(cases, seed),
            check_serialization(std::max<std::size_t>(cases / 100, 10), seed)};
}

}  // namespace tfa
