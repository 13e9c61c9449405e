#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tfa/certificate.hpp"
#include "tfa/grid.hpp"
#include "tfa/memorize.hpp"
#include "tfa/metrics.hpp"
#include "tfa/network.hpp"
#include "tfa/target.hpp"

namespace tfa {

inline constexpr std::uint64_t kMaxShiftedCopies = 729;  // 3^6

struct MeasureOptions {
    std::size_t samples = 10000;      // Monte Carlo points for sup and L^p estimates
    double p = 2.0;                   // L^p exponent for the integrated estimate
    std::uint64_t seed = 0;
    std::size_t grid_resolution = 0;  // > 0: sup over a tensor grid instead of samples
    std::uint64_t cap = kDefaultGridCap;
};

// ---------------------------------------------------------------------------
// Building blocks

inline Matrix positional_encoding(std::size_t d_x, std::size_t n) {
    Matrix P(static_cast<Index>(d_x), static_cast<Index>(n));
    for (Index j = 0; j < P.cols(); ++j) P.col(j).setConstant(2.0 * static_cast<double>(j));
    return P;
}

// Scalar staircase: on [2j, 2j+1] minus the trifling strips it maps z to
// cell_value(z - 2j) + 2j. Ramps of width delta start at each t/K, and bridge
// ramps on [2j+1, 2j+2] lift the level by 1 + 1/K between blocks.
inline Fnn build_step_fnn(std::size_t K, double delta, std::size_t n) {
    check_trifling_delta(K, delta);
    const double Kd = static_cast<double>(K);
    std::vector<double> w, b, out;
    for (std::size_t j = 0; j < n; ++j) {
        const double shift = 2.0 * static_cast<double>(j);
        for (std::size_t t = 1; t < K; ++t) {
            const double start = (shift + static_cast<double>(t) / Kd) / delta;
            w.push_back(1.0 / delta);
            b.push_back(-start);
            out.push_back(1.0 / Kd);
            w.push_back(1.0 / delta);
            b.push_back(-start - 1.0);
            out.push_back(-1.0 / Kd);
        }
    }
    for (std::size_t j = 1; j < n; ++j) {
        const double lo = 2.0 * static_cast<double>(j) - 1.0;
        w.push_back(1.0);
        b.push_back(-lo);
        out.push_back(1.0 + 1.0 / Kd);
        w.push_back(1.0);
        b.push_back(-lo - 1.0);
        out.push_back(-(1.0 + 1.0 / Kd));
    }
    const auto units = static_cast<Index>(w.size());
    Fnn f;
    f.layers.push_back({Eigen::Map<Vector>(w.data(), units), Eigen::Map<Vector>(b.data(), units)});
    f.layers.push_back({Eigen::Map<Vector>(out.data(), units).transpose(), Vector::Constant(1, 1.0 / Kd)});
    if (units == 0) {
        f.layers[0] = {Matrix::Zero(0, 1), Vector::Zero(0)};
        f.layers[1] = {Matrix::Zero(1, 0), Vector::Constant(1, 1.0 / Kd)};
    }
    return f;
}

// Step function on each of the first d_x rows of a D-row hidden state; the
// skip connection is cancelled on those rows only.
inline FeedForwardLayer build_discretization_layer(std::size_t K, double delta, std::size_t d_x, std::size_t n,
                                                   std::size_t D = 0) {
    if (D == 0) D = d_x;
    if (D < d_x) throw StructuralError("discretization layer: D < d_x");
    const Fnn step = build_step_fnn(K, delta, n);
    const Index u = step.layers[0].A.rows();
    const Index per_row = u + 2;
    const auto Dn = static_cast<Index>(D);
    const auto dx = static_cast<Index>(d_x);
    FeedForwardLayer ff{Matrix::Zero(per_row * dx, Dn), Vector::Zero(per_row * dx), Matrix::Zero(Dn, per_row * dx),
                        Vector::Zero(Dn)};
    for (Index i = 0; i < dx; ++i) {
        const Index o = i * per_row;
        ff.W1.block(o, i, u, 1) = step.layers[0].A;
        ff.b1.segment(o, u) = step.layers[0].b;
        ff.W2.block(i, o, 1, u) = step.layers[1].A;
        ff.W1(o + u, i) = 1.0;
        ff.W1(o + u + 1, i) = -1.0;
        ff.W2(i, o + u) = -1.0;
        ff.W2(i, o + u + 1) = 1.0;
        ff.b2(i) = step.layers[1].b(0);
    }
    return ff;
}

// Code base B = n K^{d_x}; column j of a grid sequence gets code enc(G_j) B^j.
struct TokenCodeScheme {
    std::size_t K = 1, d_x = 1, n = 1;
    double base = 1.0;

    TokenCodeScheme(std::size_t K_, std::size_t d_x_, std::size_t n_) : K(K_), d_x(d_x_), n(n_) {
        const std::uint64_t cap = std::uint64_t{1} << 53;
        const std::uint64_t B = capped_pow(K, d_x, cap);
        if (B > cap / n) throw NumericError("token code: base exceeds 2^53");
        const std::uint64_t Bn = capped_pow(B * n, n, cap);
        if (Bn > cap) throw NumericError("token code: (n K^d_x)^n exceeds 2^53");
        base = static_cast<double>(B * n);
    }

    double code(std::uint64_t enc, std::size_t j) const { return static_cast<double>(enc) * std::pow(base, static_cast<double>(j)); }

    // Sum of the column codes of a grid sequence (n times the mean code).
    double code_sum(const Matrix& G) const {
        double s = 0.0;
        for (Index j = 0; j < G.cols(); ++j) s += code(grid_index(G.col(j), K), static_cast<std::size_t>(j));
        return s;
    }
};

// Writes c_j into `code_row` for tokens G_{:,j} + 2j (skip connection kept).
inline FeedForwardLayer build_token_code_layer(std::size_t K, std::size_t d_x, std::size_t n, std::size_t D = 0,
                                               std::size_t code_row = 0, std::uint64_t cap = kDefaultGridCap,
                                               std::uint64_t seed = 0) {
    if (D == 0) D = d_x + 2;
    if (code_row == 0) code_row = d_x;
    const TokenCodeScheme scheme(K, d_x, n);
    const std::uint64_t per_col = capped_pow(K, d_x, cap);
    if (per_col * n > cap) throw ResourceError("token code layer: token count exceeds cap");
    std::vector<Vector> tokens, outputs;
    for (std::size_t j = 0; j < n; ++j)
        for (std::uint64_t e = 0; e < per_col; ++e) {
            Vector t = grid_point(e, K, d_x, 1).col(0).array() + 2.0 * static_cast<double>(j);
            tokens.push_back(t);
            outputs.push_back(Vector::Constant(1, scheme.code(e, j)));
        }
    // K x is an integer in [1, 2nK]; base 2nK + 1 digits separate exactly.
    SeparationOptions opt;
    opt.seed = seed;
    Vector hint(static_cast<Index>(d_x));
    const double Q = 2.0 * static_cast<double>(n * K) + 1.0;
    for (Index k = 0; k < hint.size(); ++k) hint(k) = static_cast<double>(K) * std::pow(Q, static_cast<double>(k));
    opt.hint = hint;
    MemorizationSpec ms{static_cast<Index>(D), static_cast<Index>(d_x), static_cast<Index>(code_row), false, false};
    return build_memorization_layer(tokens, outputs, ms, opt);
}

// One uniform head copying the column mean of `code_row` into `out_row`.
inline SelfAttentionLayer build_average_attention(std::size_t D, std::size_t code_row, std::size_t out_row) {
    if (code_row >= D || out_row >= D) throw StructuralError("average attention: row out of range");
    const auto Dn = static_cast<Index>(D);
    AttentionHead h = AttentionHead::zero(1, Dn);
    h.W_V(0, static_cast<Index>(code_row)) = 1.0;
    h.W_O(static_cast<Index>(out_row), 0) = 1.0;
    return SelfAttentionLayer{{h}};
}

// Token after discretization, coding and averaging for column j of G.
inline Vector augmented_token(const Matrix& G, std::size_t j, const TokenCodeScheme& scheme) {
    const auto dx = G.rows();
    Vector t(dx + 2);
    t.head(dx) = G.col(static_cast<Index>(j)).array() + 2.0 * static_cast<double>(j);
    t(dx) = scheme.code(grid_index(G.col(static_cast<Index>(j)), scheme.K), j);
    t(dx + 1) = scheme.code_sum(G) / static_cast<double>(G.cols());
    return t;
}

// ---------------------------------------------------------------------------
// Holder / Sobolev L^p builds

namespace detail {

inline std::uint64_t grid_count(std::size_t K, std::size_t d_x, std::size_t n, std::uint64_t cap) {
    const std::uint64_t c = capped_pow(K, d_x * n, cap);
    if (c > cap) throw ResourceError("grid builder: K^(d_x n) exceeds cap " + std::to_string(cap));
    return c;
}

// Embedding, discretization, token code, averaging and readout keyed on
// per-grid-point targets. Hidden rows: tokens [0, d_x), code d_x, mean d_x+1.
inline TransformerNetwork grid_network(std::size_t K, double delta, std::size_t d_x, std::size_t n,
                                       const std::vector<Matrix>& targets, std::uint64_t cap, std::uint64_t seed,
                                       nlohmann::json* details) {
    const std::size_t D = d_x + 2;
    const auto Dn = static_cast<Index>(D);
    const auto dx = static_cast<Index>(d_x);
    const TokenCodeScheme scheme(K, d_x, n);
    TransformerNetwork net;
    net.embedding.E_in = Matrix::Zero(Dn, dx);
    net.embedding.E_in.topRows(dx) = Matrix::Identity(dx, dx);
    net.embedding.P = Matrix::Zero(Dn, static_cast<Index>(n));
    net.embedding.P.topRows(dx) = positional_encoding(d_x, n);
    net.blocks.push_back(Block{SelfAttentionLayer{}, build_discretization_layer(K, delta, d_x, n, D)});
    net.blocks.push_back(Block{SelfAttentionLayer{}, build_token_code_layer(K, d_x, n, D, d_x, cap, seed)});

    std::vector<Vector> tokens, outputs;
    const std::uint64_t count = grid_count(K, d_x, n, cap);
    if (targets.size() != count) throw StructuralError("grid_network: one target per grid point required");
    tokens.reserve(count * n);
    for (std::uint64_t g = 0; g < count; ++g) {
        const Matrix G = grid_point(g, K, d_x, n);
        for (std::size_t j = 0; j < n; ++j) {
            tokens.push_back(augmented_token(G, j, scheme));
            outputs.push_back(targets[g].col(static_cast<Index>(j)));
        }
    }
    // Projection x_0 + 2n * (sum of codes): distinct and integer-spaced in the sum.
    SeparationOptions opt;
    opt.seed = seed;
    Vector hint = Vector::Zero(Dn);
    hint(0) = 1.0;
    hint(dx + 1) = 2.0 * static_cast<double>(n) * static_cast<double>(n);
    opt.hint = hint;
    Separation sep;
    MemorizationSpec ms{Dn, Dn, 0, true, true};
    FeedForwardLayer readout = build_memorization_layer(tokens, outputs, ms, opt, &sep);
    net.blocks.push_back(Block{build_average_attention(D, d_x, d_x + 1), std::move(readout)});
    net.projection.E_out = Matrix::Zero(dx, Dn);
    net.projection.E_out.leftCols(dx) = Matrix::Identity(dx, dx);
    net.spec = ArchSpec{d_x, d_x, n, D, 1, 1, 1, 3};
    net.spec = fitted_spec(net);
    net.validate();
    if (details) {
        (*details)["readout_separation"] = {{"min_gap", sep.min_gap}, {"max_projection", sep.max_abs},
                                            {"attempt", sep.attempt}, {"R", 4.0 / sep.min_gap}};
        (*details)["tokens"] = tokens.size();
        (*details)["code_base"] = scheme.base;
    }
    return net;
}

inline ArchSpec claimed_lp_dims(std::size_t K, std::size_t d_x, std::size_t n) {
    return ArchSpec{d_x, d_x, n, d_x, 1, 1, 5 * n * static_cast<std::size_t>(std::pow(K, d_x * n)), 2};
}

inline double holder_bound(const TargetFunction& F, std::size_t K) {
    const double g = F.holder_gamma();
    return *F.K_H * std::pow(static_cast<double>(F.d_x * F.n), g / 2.0) * std::pow(static_cast<double>(K), -g);
}

inline MatrixMap as_map(const TransformerNetwork& net) {
    return [&net](const Matrix& X) { return net(X); };
}

inline MatrixMap as_map(const TargetFunction& F) {
    return [&F](const Matrix& X) { return F(X); };
}

}  // namespace detail

inline double default_lp_delta(std::size_t K, double gamma, double p) {
    const double Kd = static_cast<double>(K);
    return std::min(std::pow(Kd, -p * gamma - 1.0), 1.0 / (3.0 * Kd)) / 2.0;
}

inline double default_sup_delta(std::size_t K) { return 1.0 / (3.0 * static_cast<double>(K)) * std::ldexp(1.0, -10); }

inline TransformerNetwork build_holder_lp_network(const TargetFunction& F, std::size_t K, double delta,
                                                  std::uint64_t cap = kDefaultGridCap, std::uint64_t seed = 0,
                                                  nlohmann::json* details = nullptr) {
    check_trifling_delta(K, delta);
    const std::uint64_t count = detail::grid_count(K, F.d_x, F.n, cap);
    std::vector<Matrix> targets;
    targets.reserve(count);
    for (std::uint64_t g = 0; g < count; ++g) targets.push_back(F(grid_point(g, K, F.d_x, F.n)));
    return detail::grid_network(K, delta, F.d_x, F.n, targets, cap, seed, details);
}

// Sup error outside the trifling region is bounded by K_H (d_x n)^{gamma/2} K^{-gamma}
// (entrywise); L^p error over the full cube is reported alongside.
inline ApproxCertificate assemble_holder_lp(const TargetFunction& F, std::size_t K, double delta = 0.0,
                                            const MeasureOptions& mo = {}) {
    const double gamma = F.holder_gamma();
    if (delta == 0.0) delta = default_lp_delta(K, gamma, mo.p);
    ApproxCertificate c;
    c.builder = "holder_lp";
    c.target = F.name;
    c.K = K;
    c.delta = delta;
    const auto smooth = holder_spot_check(F, 200, mo.seed);
    c.details["smoothness_check"] = {{"pairs", smooth.pairs}, {"violations", smooth.violations},
                                     {"worst_ratio", smooth.worst_ratio}};
    c.network = build_holder_lp_network(F, K, delta, mo.cap, mo.seed, &c.details);
    c.built_dims = c.network.spec;
    c.claimed_dims = detail::claimed_lp_dims(K, F.d_x, F.n);
    c.theoretical_bound = detail::holder_bound(F, K);
    c.bound_kind = "sup";
    const auto region = RegionFilter::exclude_trifling(K, delta);
    c.region = region.name();
    const auto f = detail::as_map(c.network);
    const auto g = detail::as_map(F);
    c.measured_sup = mo.grid_resolution
                         ? sup_error_grid(f, g, mo.grid_resolution, region, F.d_x, F.n, ErrorNorm::max_entry)
                         : sup_error_mc(f, g, region, F.d_x, F.n, mo.samples, mo.seed, ErrorNorm::max_entry);
    c.measured_lp =
        lp_error_mc(f, g, mo.p, RegionFilter::full(), F.d_x, F.n, mo.samples, mo.seed + 1, ErrorNorm::max_entry);
    c.details["trifling_measure_bound"] = trifling_measure_bound(K, delta, F.d_x, F.n);
    c.pass = c.measured_sup.value <= c.theoretical_bound;
    return c;
}

// ---------------------------------------------------------------------------
// Sup-norm extension: 3^{d_x n} shifted copies and a tree of middle values.

// Middle-value tree over stacked copies. Input: d_x rows per copy, copy index
// sum_l (c_l + 1) 3^l for shifts c in {-1,0,1}^{d_x n}; the fastest index is
// folded first.
inline Fnn build_mid_fold_fnn(std::size_t d_x, std::size_t n) {
    const std::size_t dn = d_x * n;
    const std::uint64_t copies = capped_pow(3, dn, kMaxShiftedCopies);
    if (copies > kMaxShiftedCopies) throw ResourceError("mid fold: 3^(d_x n) exceeds 3^6");
    const Fnn mid = build_mid_fnn();
    Fnn total;
    std::size_t blocks = copies;
    for (std::size_t level = 0; level < dn; ++level) {
        const std::size_t groups = blocks / 3;
        const auto in_dim = static_cast<Index>(blocks * d_x);
        const auto out_units = static_cast<Index>(groups * d_x);
        // Gather (block 3g+k, row i) into input slot 3*(g d_x + i) + k.
        Matrix gather = Matrix::Zero(3 * out_units, in_dim);
        for (std::size_t g = 0; g < groups; ++g)
            for (std::size_t i = 0; i < d_x; ++i)
                for (std::size_t k = 0; k < 3; ++k)
                    gather(static_cast<Index>(3 * (g * d_x + i) + k), static_cast<Index>((3 * g + k) * d_x + i)) = 1.0;
        Fnn gather_fnn;
        gather_fnn.layers.push_back({gather, Vector::Zero(gather.rows())});
        const Fnn level_fnn = compose(parallel(std::vector<Fnn>(static_cast<std::size_t>(out_units), mid)), gather_fnn);
        total = level == 0 ? level_fnn : compose(level_fnn, total);
        blocks = groups;
    }
    return total;
}

// Feed-forward layers folding the copies. `readout` maps the hidden state of
// width `hidden_dim` to the stacked copy outputs.
inline FfStack mid_selector_layers(std::size_t d_x, std::size_t n, const Matrix& readout, Index hidden_dim = 0) {
    const Fnn fold = build_mid_fold_fnn(d_x, n);
    Fnn read;
    read.layers.push_back({readout, Vector::Zero(readout.rows())});
    return fnn_to_ff_stack(compose(fold, read), std::max(hidden_dim, readout.cols()));
}

inline std::vector<Matrix> shift_offsets(std::size_t d_x, std::size_t n, double delta) {
    const std::size_t dn = d_x * n;
    const std::uint64_t copies = capped_pow(3, dn, kMaxShiftedCopies);
    if (copies > kMaxShiftedCopies) throw ResourceError("sup-norm build: 3^(d_x n) copies exceed 3^6");
    std::vector<Matrix> out;
    for (std::uint64_t c = 0; c < copies; ++c) {
        Matrix S(static_cast<Index>(d_x), static_cast<Index>(n));
        std::uint64_t r = c;
        for (Index k = 0; k < S.size(); ++k) {
            S.data()[k] = (static_cast<double>(r % 3) - 1.0) * delta;
            r /= 3;
        }
        out.push_back(S);
    }
    return out;
}

inline TransformerNetwork build_sup_norm_network(const TransformerNetwork& base, double delta) {
    const std::size_t d_x = base.spec.d_x;
    const std::size_t n = base.spec.n;
    std::vector<TransformerNetwork> copies;
    for (const Matrix& S : shift_offsets(d_x, n, delta)) {
        TransformerNetwork c = base;
        c.embedding.P += c.embedding.E_in * S;
        copies.push_back(std::move(c));
    }
    const TransformerNetwork par = parallel_networks(copies);
    const FfStack stack = mid_selector_layers(d_x, n, par.projection.E_out, static_cast<Index>(par.spec.D));
    TransformerNetwork net = pad_hidden(par, static_cast<std::size_t>(stack.dim));
    for (const auto& l : stack.layers) net.blocks.push_back(Block{SelfAttentionLayer{}, l});
    net.projection.E_out = Matrix::Zero(static_cast<Index>(d_x), stack.dim);
    net.projection.E_out.leftCols(static_cast<Index>(d_x)) = Matrix::Identity(static_cast<Index>(d_x), static_cast<Index>(d_x));
    net.spec.d_y = d_x;
    net.spec.L = net.blocks.size();
    net.spec = fitted_spec(net);
    net.validate();
    return net;
}

// Bound K_H (d_x n)^{gamma/2} K^{-gamma} + d_x n K_H delta^gamma on the whole cube.
inline ApproxCertificate assemble_sup_norm(const TargetFunction& F, std::size_t K, double delta = 0.0,
                                           const MeasureOptions& mo = {}) {
    const double gamma = F.holder_gamma();
    if (delta == 0.0) delta = default_sup_delta(K);
    if (!(delta > 0.0 && delta <= 1.0 / (3.0 * static_cast<double>(K))))
        throw ConfigError("sup-norm build: delta must lie in (0, 1/(3K)]");
    ApproxCertificate c;
    c.builder = "sup_norm";
    c.target = F.name;
    c.K = K;
    c.delta = delta;
    const TransformerNetwork base = build_holder_lp_network(F, K, delta, mo.cap, mo.seed, &c.details);
    c.network = build_sup_norm_network(base, delta);
    c.built_dims = c.network.spec;
    const std::size_t dn = F.d_x * F.n;
    const auto copies = static_cast<std::size_t>(std::pow(3, dn));
    c.claimed_dims = ArchSpec{F.d_x, F.d_x, F.n, 5 * F.d_x * copies, copies, 1,
                              5 * F.n * copies * static_cast<std::size_t>(std::pow(K, dn)), 2 + 2 * dn};
    c.details["copies"] = copies;
    c.theoretical_bound =
        detail::holder_bound(F, K) + static_cast<double>(dn) * *F.K_H * std::pow(delta, gamma);
    c.bound_kind = "sup";
    const auto region = RegionFilter::full();
    c.region = region.name();
    const auto f = detail::as_map(c.network);
    const auto g = detail::as_map(F);
    c.measured_sup = mo.grid_resolution
                         ? sup_error_grid(f, g, mo.grid_resolution, region, F.d_x, F.n, ErrorNorm::max_entry)
                         : sup_error_mc(f, g, region, F.d_x, F.n, mo.samples, mo.seed, ErrorNorm::max_entry);
    c.measured_lp = lp_error_mc(f, g, mo.p, region, F.d_x, F.n, mo.samples, mo.seed + 1, ErrorNorm::max_entry);
    c.pass = c.measured_sup.value <= c.theoretical_bound;
    return c;
}

// ---------------------------------------------------------------------------
// Sobolev build: readout targets are cell averages.

enum class Quadrature { midpoint, monte_carlo };

struct QuadratureOptions {
    Quadrature rule = Quadrature::midpoint;
    std::size_t points = 4;  // per axis (midpoint) or total (Monte Carlo)
    std::uint64_t seed = 0;
};

// Estimate of K^{d_x n} times the integral of F over the cell of G.
inline Matrix cell_average(const TargetFunction& F, const Matrix& G, std::size_t K, const QuadratureOptions& q = {}) {
    if (q.points < 1) throw ConfigError("cell_average: need at least one quadrature point");
    const double h = 1.0 / static_cast<double>(K);
    const Matrix lo = G.array() - h;
    Matrix acc = Matrix::Zero(static_cast<Index>(F.d_x), static_cast<Index>(F.n));
    Matrix X(G.rows(), G.cols());
    if (q.rule == Quadrature::midpoint) {
        const std::uint64_t total = capped_pow(q.points, static_cast<std::uint64_t>(G.size()), kDefaultGridCap);
        if (total > kDefaultGridCap) throw ResourceError("cell_average: midpoint rule exceeds 2^20 points");
        for (std::uint64_t idx = 0; idx < total; ++idx) {
            std::uint64_t r = idx;
            for (Index k = 0; k < X.size(); ++k) {
                X.data()[k] = lo.data()[k] + (static_cast<double>(r % q.points) + 0.5) * h / static_cast<double>(q.points);
                r /= q.points;
            }
            acc += F(X);
        }
        return acc / static_cast<double>(total);
    }
    for (std::size_t s = 0; s < q.points; ++s) {
        Stream rng(q.seed, s);
        for (Index k = 0; k < X.size(); ++k) X.data()[k] = lo.data()[k] + h * rng.uniform();
        acc += F(X);
    }
    return acc / static_cast<double>(q.points);
}

struct SobolevOptions {
    QuadratureOptions quadrature;
    double C = 1.0;  // constant in the Poincare-type bound, reported with the measured ratio
};

// Entrywise L^p error outside the trifling region against
// C (d_x n)^{max(0, 1/2 - 1/p)} K_W / K.
inline ApproxCertificate assemble_sobolev_lp(const TargetFunction& F, std::size_t K, double delta = 0.0,
                                             const SobolevOptions& so = {}, const MeasureOptions& mo_in = {}) {
    if (!F.p || !F.K_W) throw ConfigError("target '" + F.name + "' has no declared Sobolev smoothness");
    const double p = *F.p;
    if (!(p >= 1.0) || std::isinf(p)) throw ConfigError("Sobolev build: p must lie in [1, inf)");
    MeasureOptions mo = mo_in;
    mo.p = p;
    if (delta == 0.0) delta = default_lp_delta(K, 1.0, p);
    check_trifling_delta(K, delta);
    ApproxCertificate c;
    c.builder = "sobolev_lp";
    c.target = F.name;
    c.K = K;
    c.delta = delta;
    const std::uint64_t count = detail::grid_count(K, F.d_x, F.n, mo.cap);
    std::vector<Matrix> targets;
    targets.reserve(count);
    for (std::uint64_t g = 0; g < count; ++g) targets.push_back(cell_average(F, grid_point(g, K, F.d_x, F.n), K, so.quadrature));
    c.network = detail::grid_network(K, delta, F.d_x, F.n, targets, mo.cap, mo.seed, &c.details);
    c.built_dims = c.network.spec;
    c.claimed_dims = detail::claimed_lp_dims(K, F.d_x, F.n);
    const double dn = static_cast<double>(F.d_x * F.n);
    const double dim_factor = std::pow(dn, std::max(0.0, 0.5 - 1.0 / p));
    c.theoretical_bound = so.C * dim_factor * *F.K_W / static_cast<double>(K);
    c.bound_kind = "lp";
    const auto region = RegionFilter::exclude_trifling(K, delta);
    c.region = region.name();
    const auto f = detail::as_map(c.network);
    const auto g = detail::as_map(F);
    c.measured_lp = lp_error_mc(f, g, p, region, F.d_x, F.n, mo.samples, mo.seed, ErrorNorm::max_entry);
    c.measured_sup = sup_error_mc(f, g, region, F.d_x, F.n, mo.samples, mo.seed + 1, ErrorNorm::max_entry);
    c.details["C"] = so.C;
    c.details["empirical_ratio"] = c.measured_lp.value * static_cast<double>(K) / *F.K_W;
    c.details["quadrature"] = {{"rule", so.quadrature.rule == Quadrature::midpoint ? "midpoint" : "monte_carlo"},
                               {"points", so.quadrature.points}};
    c.pass = c.measured_lp.value <= c.theoretical_bound;
    return c;
}

}  // namespace tfa
