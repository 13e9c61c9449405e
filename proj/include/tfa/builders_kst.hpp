#pragma once

#include <cmath>
#include <vector>

#include "tfa/builders_grid.hpp"

namespace tfa {

// Binary digit k >= 1 of x in [0,1], terminating expansion; x = 1 has all ones.
inline int binary_digit(double x, std::size_t k) {
    if (x >= 1.0) return 1;
    if (x <= 0.0) return 0;
    const double scaled = std::floor(std::ldexp(x, static_cast<int>(k)));
    return static_cast<int>(std::fmod(scaled, 2.0));
}

inline double phi_truncated(double x, std::size_t K, std::size_t d) {
    double s = 0.0;
    for (std::size_t j = 1; j <= K; ++j)
        if (binary_digit(x, j)) s += 2.0 * std::pow(3.0, -static_cast<double>(1 + d * (j - 1)));
    return s;
}

struct CantorCode {
    double value = 0.0;
    std::size_t K = 0;
    std::size_t d = 0;
    std::vector<int> digits;  // ternary digits, each 0 or 2
};

// sum_j digits_j 3^{-j} by Horner from the last digit.
inline double ternary_value(const std::vector<int>& digits) {
    double v = 0.0;
    for (std::size_t j = digits.size(); j-- > 0;) v = (v + digits[j]) / 3.0;
    return v;
}

// Digit (k-1) d + (q-1) d_x + p carries bit k of entry (p, q).
inline CantorCode cantor_encode(const Matrix& X, std::size_t K) {
    const auto dx = static_cast<std::size_t>(X.rows());
    const auto n = static_cast<std::size_t>(X.cols());
    CantorCode c{0.0, K, dx * n, std::vector<int>(dx * n * K, 0)};
    for (std::size_t k = 1; k <= K; ++k)
        for (std::size_t q = 0; q < n; ++q)
            for (std::size_t p = 0; p < dx; ++p)
                c.digits[(k - 1) * c.d + q * dx + p] =
                    2 * binary_digit(X(static_cast<Index>(p), static_cast<Index>(q)), k);
    c.value = ternary_value(c.digits);
    return c;
}

inline Matrix cantor_decode(const CantorCode& code, std::size_t d_x, std::size_t n) {
    if (code.d != d_x * n || code.digits.size() != code.d * code.K)
        throw ConfigError("cantor_decode: digit count does not match d_x n K");
    Matrix X = Matrix::Zero(static_cast<Index>(d_x), static_cast<Index>(n));
    for (std::size_t k = 1; k <= code.K; ++k)
        for (std::size_t q = 0; q < n; ++q)
            for (std::size_t p = 0; p < d_x; ++p) {
                const int digit = code.digits[(k - 1) * code.d + q * d_x + p];
                if (digit != 0 && digit != 2) throw ConfigError("cantor_decode: digits must be 0 or 2");
                if (digit == 2) X(static_cast<Index>(p), static_cast<Index>(q)) += std::ldexp(1.0, -static_cast<int>(k));
            }
    return X;
}

// Code whose ternary digits are 2 t_j, t the binary expansion of `index` over
// `bits` digits with t_1 most significant.
inline CantorCode cantor_code_from_index(std::uint64_t index, std::size_t K, std::size_t d) {
    CantorCode c{0.0, K, d, std::vector<int>(d * K, 0)};
    for (std::size_t j = d * K; j-- > 0;) {
        c.digits[j] = 2 * static_cast<int>(index & 1u);
        index >>= 1;
    }
    c.value = ternary_value(c.digits);
    return c;
}

inline constexpr std::uint64_t kMaxInterpolationPoints = std::uint64_t{1} << 20;

// {sum 2 t_j 3^{-j}} over t in {0,1}^{d_x n K}, plus 1, ascending. Ternary
// digits in {0,2} preserve the binary order, so index order is sorted order.
inline std::vector<double> interpolation_points(std::size_t K, std::size_t d_x, std::size_t n,
                                                std::uint64_t cap = kMaxInterpolationPoints) {
    const std::size_t bits = d_x * n * K;
    const std::uint64_t count = capped_pow(2, bits, cap);
    if (count > cap) throw ResourceError("interpolation_points: 2^(d_x n K) exceeds cap");
    std::vector<double> s;
    s.reserve(count + 1);
    for (std::uint64_t i = 0; i < count; ++i) s.push_back(cantor_code_from_index(i, K, d_x * n).value);
    s.push_back(1.0);
    return s;
}

inline double default_margin(std::size_t K) { return std::ldexp(1.0, -static_cast<int>(K) - 4); }

inline void check_margin(std::size_t K, double margin) {
    if (!(margin > 0.0 && margin < std::ldexp(1.0, -static_cast<int>(K) - 1)))
        throw ConfigError("digit margin must lie in (0, 2^{-K-1})");
}

// Width 4, depth 2K. First layer: relu(x), relu(x-1) give the clamp c to [0,1];
// relu((x-1)/m), relu((x-1)/m - 1) give a saturation flag s for x >= 1 + m.
// Stage k holds two ramp units for digit k of the residual r_k (rising on
// [1/2 - 2m, 1/2]), relu(r_k) and relu(acc_k);
// r_{k+1} = 2 r_k - a_k and acc_{k+1} = acc_k + 2 a_k 3^{-(1+d(k-1))}.
inline Fnn build_phi_tilde_fnn(std::size_t K, std::size_t d, double margin) {
    check_margin(K, margin);
    if (K < 1) throw ConfigError("phi network: K must be >= 1");
    const double top = phi_truncated(1.0, K, d);
    Fnn f;
    {
        Matrix A(4, 1);
        A << 1.0, 1.0, 1.0 / margin, 1.0 / margin;
        Vector b(4);
        b << 0.0, -1.0, -1.0 / margin, -1.0 / margin - 1.0;
        f.layers.push_back({A, b});
    }
    // Linear read of (r, acc) from the previous hidden layer.
    Matrix read_r(1, 4), read_acc(1, 4);
    read_r << 1.0, -1.0, 0.0, 0.0;
    read_acc << 0.0, 0.0, 1.0 - top, -(1.0 - top);
    const double slope = 1.0 / (2.0 * margin);
    for (std::size_t k = 1; k <= K; ++k) {
        Matrix A(4, 4);
        A.row(0) = slope * read_r;
        A.row(1) = slope * read_r;
        A.row(2) = read_r;
        A.row(3) = read_acc;
        Vector b(4);
        b << -0.5 * slope + 1.0, -0.5 * slope, 0.0, 0.0;
        f.layers.push_back({A, b});
        const double w = 2.0 * std::pow(3.0, -static_cast<double>(1 + d * (k - 1)));
        read_r << -1.0, 1.0, 2.0, 0.0;
        read_acc << w, -w, 0.0, 1.0;
    }
    f.layers.push_back({read_acc, Vector::Zero(1)});
    return pad_depth(f, 2 * K);
}

inline std::vector<double> kst_b(std::size_t d_x, std::size_t n) {
    std::vector<double> b(n, 0.0);
    for (std::size_t j = 1; j < n; ++j) b[j] = b[j - 1] + std::pow(3.0, -static_cast<double>((j - 1) * d_x));
    return b;
}

inline std::vector<double> kst_c(std::size_t d_x, std::size_t n) {
    double row = 0.0;
    for (std::size_t p = 1; p <= d_x; ++p) row += std::pow(3.0, 1.0 - static_cast<double>(p));
    auto c = kst_b(d_x, n);
    for (double& v : c) v *= row;
    return c;
}

// Token-wise network z -> sum_{p,q} 3^{1-p} 3^{-(q-1) d_x} phi(z_p - 2(q-1)),
// replicated into d_x outputs.
inline Fnn build_code_fnn(std::size_t K, std::size_t d_x, std::size_t n, double margin) {
    const Fnn phi = build_phi_tilde_fnn(K, d_x * n, margin);
    std::vector<Fnn> bank;
    Matrix out_weights(static_cast<Index>(d_x), static_cast<Index>(d_x * n));
    Fnn spread;  // z -> (z_p - 2(q-1)) for every (p, q)
    spread.layers.push_back({Matrix::Zero(static_cast<Index>(d_x * n), static_cast<Index>(d_x)),
                             Vector::Zero(static_cast<Index>(d_x * n))});
    for (std::size_t q = 0; q < n; ++q)
        for (std::size_t p = 0; p < d_x; ++p) {
            const auto idx = static_cast<Index>(q * d_x + p);
            spread.layers[0].A(idx, static_cast<Index>(p)) = 1.0;
            spread.layers[0].b(idx) = -2.0 * static_cast<double>(q);
            bank.push_back(phi);
            out_weights.col(idx).setConstant(std::pow(3.0, -static_cast<double>(p) - static_cast<double>(q * d_x)));
        }
    Fnn combine;
    combine.layers.push_back({out_weights, Vector::Zero(static_cast<Index>(d_x))});
    return compose(combine, compose(parallel(bank), spread));
}

// 2K + 2 layers on D = 4 d_x n rows: offsets +2(j-1), the code network as
// skip-cancelling layers, then -c_j. Column j of rows [0, d_x) ends at
// 3 sum_p a_{p,j} phi(X_{p,j}).
inline std::vector<GeneralizedFeedForwardLayer> build_inner_stack(std::size_t K, std::size_t d_x, std::size_t n,
                                                                  double margin) {
    const auto D = static_cast<Index>(4 * d_x * n);
    const auto dx = static_cast<Index>(d_x);
    const auto nn = static_cast<Index>(n);
    std::vector<GeneralizedFeedForwardLayer> layers;
    auto offset_layer = [&](const std::vector<double>& per_col, double sign) {
        GeneralizedFeedForwardLayer g{Matrix::Zero(0, D), Matrix::Zero(0, nn), Matrix::Zero(D, 0), Matrix::Zero(D, nn)};
        for (Index j = 0; j < nn; ++j) g.B2.block(0, j, dx, 1).setConstant(sign * per_col[static_cast<std::size_t>(j)]);
        return g;
    };
    std::vector<double> shifts(n);
    for (std::size_t j = 0; j < n; ++j) shifts[j] = 2.0 * static_cast<double>(j);
    layers.push_back(offset_layer(shifts, 1.0));
    const FfStack stack = fnn_to_ff_stack(build_code_fnn(K, d_x, n, margin), D);
    if (stack.dim != D) throw StructuralError("inner stack: code network wider than 4 d_x n");
    for (const auto& l : stack.layers) layers.push_back(GeneralizedFeedForwardLayer::from_standard(l, nn));
    layers.push_back(offset_layer(kst_c(d_x, n), -1.0));
    return layers;
}

struct ColumnSumBlock {
    SelfAttentionLayer attention;
    GeneralizedFeedForwardLayer feedforward;
};

// Attention writes n * mean = column sum of rows [0, d_x) into rows [d_x, 2 d_x);
// the feed-forward layer moves it to rows [0, d_x) plus 2(v-1) and clears the scratch rows.
inline ColumnSumBlock build_column_sum_block(std::size_t d_x, std::size_t n, std::size_t D = 0) {
    if (D == 0) D = 4 * d_x * n;
    if (D < 2 * d_x) throw StructuralError("column sum block: D < 2 d_x");
    const auto Dn = static_cast<Index>(D);
    const auto dx = static_cast<Index>(d_x);
    const auto nn = static_cast<Index>(n);
    const Matrix I = Matrix::Identity(dx, dx);
    AttentionHead h = AttentionHead::zero(dx, Dn);
    h.W_V.leftCols(dx) = I;
    h.W_O.middleRows(dx, dx) = static_cast<double>(n) * I;
    ColumnSumBlock out;
    out.attention.heads.push_back(h);
    GeneralizedFeedForwardLayer& g = out.feedforward;
    g.W1 = Matrix::Zero(4 * dx, Dn);
    g.W1.block(0, 0, dx, dx) = I;
    g.W1.block(dx, 0, dx, dx) = -I;
    g.W1.block(2 * dx, dx, dx, dx) = I;
    g.W1.block(3 * dx, dx, dx, dx) = -I;
    g.B1 = Matrix::Zero(4 * dx, nn);
    g.W2 = Matrix::Zero(Dn, 4 * dx);
    g.W2.block(0, 0, dx, dx) = -I;
    g.W2.block(0, dx, dx, dx) = I;
    g.W2.block(0, 2 * dx, dx, dx) = I;
    g.W2.block(0, 3 * dx, dx, dx) = -I;
    g.W2.block(dx, 2 * dx, dx, dx) = -I;
    g.W2.block(dx, 3 * dx, dx, dx) = I;
    g.B2 = Matrix::Zero(Dn, nn);
    for (Index v = 0; v < nn; ++v) g.B2.block(0, v, dx, 1).setConstant(2.0 * static_cast<double>(v));
    return out;
}

// Values G_{u,v}(s_i) = F(decode(s_i))_{u,v}; the last point s = 1 decodes to
// the all-ones matrix.
inline std::vector<Matrix> outer_values(const TargetFunction& F, std::size_t K) {
    const std::size_t d = F.d_x * F.n;
    const std::uint64_t count = capped_pow(2, d * K, kMaxInterpolationPoints);
    if (count > kMaxInterpolationPoints) throw ResourceError("outer layer: 2^(d_x n K) exceeds cap");
    std::vector<Matrix> vals;
    vals.reserve(count + 1);
    for (std::uint64_t i = 0; i < count; ++i) vals.push_back(F(cantor_decode(cantor_code_from_index(i, K, d), F.d_x, F.n)));
    vals.push_back(F(Matrix::Ones(static_cast<Index>(F.d_x), static_cast<Index>(F.n))));
    return vals;
}

// Row u becomes the piecewise-linear interpolant through (s_i + 2(v-1), G_{u,v}(s_i)),
// constant outside [0, 2n-1]; one unit per breakpoint plus a skip cancel pair.
inline GeneralizedFeedForwardLayer build_outer_interp_layer(const TargetFunction& F, std::size_t K, std::size_t D = 0) {
    const std::size_t d_x = F.d_x, n = F.n;
    if (D == 0) D = 4 * d_x * n;
    const auto s = interpolation_points(K, d_x, n);
    const auto vals = outer_values(F, K);
    const auto Dn = static_cast<Index>(D);
    const auto dx = static_cast<Index>(d_x);
    const auto M = static_cast<Index>(s.size() * n);  // breakpoints per row
    std::vector<double> knots(static_cast<std::size_t>(M));
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t i = 0; i < s.size(); ++i) knots[v * s.size() + i] = s[i] + 2.0 * static_cast<double>(v);
    const Index W = dx * (M + 2);
    GeneralizedFeedForwardLayer g{Matrix::Zero(W, Dn), Matrix::Zero(W, static_cast<Index>(n)), Matrix::Zero(Dn, W),
                                  Matrix::Zero(Dn, static_cast<Index>(n))};
    for (Index u = 0; u < dx; ++u) {
        std::vector<double> y(static_cast<std::size_t>(M));
        for (std::size_t v = 0; v < n; ++v)
            for (std::size_t i = 0; i < s.size(); ++i)
                y[v * s.size() + i] = vals[i](u, static_cast<Index>(v));
        const Index o = u * (M + 2);
        double prev_slope = 0.0;
        for (Index i = 0; i < M; ++i) {
            const auto iu = static_cast<std::size_t>(i);
            const double slope = i + 1 < M ? (y[iu + 1] - y[iu]) / (knots[iu + 1] - knots[iu]) : 0.0;
            g.W1(o + i, u) = 1.0;
            g.B1.row(o + i).setConstant(-knots[iu]);
            g.W2(u, o + i) = slope - prev_slope;
            prev_slope = slope;
        }
        g.W1(o + M, u) = 1.0;
        g.W1(o + M + 1, u) = -1.0;
        g.W2(u, o + M) = -1.0;
        g.W2(u, o + M + 1) = 1.0;
        g.B2.row(u).setConstant(y.front());
    }
    return g;
}

inline TransformerNetwork build_kst_network(const TargetFunction& F, std::size_t K, double margin) {
    const std::size_t d_x = F.d_x, n = F.n;
    const std::size_t D = 4 * d_x * n;
    const auto Dn = static_cast<Index>(D);
    const auto dx = static_cast<Index>(d_x);
    TransformerNetwork net;
    net.embedding.E_in = Matrix::Zero(Dn, dx);
    net.embedding.E_in.topRows(dx) = Matrix::Identity(dx, dx);
    net.embedding.P = Matrix::Zero(Dn, static_cast<Index>(n));
    for (auto& l : build_inner_stack(K, d_x, n, margin)) net.blocks.push_back(Block{SelfAttentionLayer{}, std::move(l)});
    auto cs = build_column_sum_block(d_x, n, D);
    net.blocks.push_back(Block{std::move(cs.attention), std::move(cs.feedforward)});
    net.blocks.push_back(Block{SelfAttentionLayer{}, build_outer_interp_layer(F, K, D)});
    net.projection.E_out = Matrix::Zero(dx, Dn);
    net.projection.E_out.leftCols(dx) = Matrix::Identity(dx, dx);
    net.spec = ArchSpec{d_x, d_x, n, D, 1, d_x, 1, net.blocks.size()};
    net.spec = fitted_spec(net);
    net.validate();
    return net;
}

// Pointwise bound 2 (d_x n)^{1/2} K_H 2^{-gamma K} on Omega_K and L^p bound
// 4 (d_x n)^3 K_H 2^{-gamma K} over the cube.
inline ApproxCertificate assemble_kst(const TargetFunction& F, std::size_t K, double margin = 0.0,
                                      const MeasureOptions& mo = {}) {
    const double gamma = F.holder_gamma();
    if (margin == 0.0) margin = default_margin(K);
    check_margin(K, margin);
    const double dn = static_cast<double>(F.d_x * F.n);
    ApproxCertificate c;
    c.builder = "kst";
    c.target = F.name;
    c.K = K;
    c.delta = margin;
    c.network = build_kst_network(F, K, margin);
    c.built_dims = c.network.spec;
    const std::size_t points = static_cast<std::size_t>(std::pow(2.0, dn * static_cast<double>(K))) + 1;
    c.claimed_dims = ArchSpec{F.d_x, F.d_x, F.n, 4 * F.d_x * F.n, 1, F.d_x, F.d_x * F.n * points + 2 * F.d_x, 2 * K + 4};
    const double decay = std::pow(2.0, -gamma * static_cast<double>(K));
    c.theoretical_bound = 2.0 * std::sqrt(dn) * *F.K_H * decay;
    const double lp_bound = 4.0 * dn * dn * dn * *F.K_H * decay;
    c.bound_kind = "sup";
    const auto region = RegionFilter::omega_k(K, margin);
    c.region = region.name();
    const auto f = detail::as_map(c.network);
    const auto g = detail::as_map(F);
    c.measured_sup = mo.grid_resolution
                         ? sup_error_grid(f, g, mo.grid_resolution, region, F.d_x, F.n, ErrorNorm::max_entry)
                         : sup_error_mc(f, g, region, F.d_x, F.n, mo.samples, mo.seed, ErrorNorm::max_entry);
    c.measured_lp = lp_error_mc(f, g, mo.p, RegionFilter::full(), F.d_x, F.n, mo.samples, mo.seed + 1, ErrorNorm::max_entry);
    const double per_coord = omega_k_measure(K, margin);
    c.details["lp_bound"] = lp_bound;
    c.details["lp_pass"] = c.measured_lp.value <= lp_bound;
    c.details["omega_measure_per_coordinate"] = per_coord;
    c.details["omega_measure"] = std::pow(per_coord, dn);
    c.details["omega_measure_target"] = 1.0 - std::pow(2.0, -gamma * mo.p * static_cast<double>(K));
    c.details["interpolation_points"] = points;
    c.pass = c.measured_sup.value <= c.theoretical_bound && c.measured_lp.value <= lp_bound;
    return c;
}

}  // namespace tfa
