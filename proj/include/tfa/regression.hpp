#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "tfa/mixing.hpp"
#include "tfa/network.hpp"

namespace tfa {

// Hypothesis X -> <N(X), E> with N a standard network of output dim 1.
struct RegressionModel {
    TransformerNetwork net;
    Matrix E;  // 1 x n

    double operator()(const Matrix& X) const { return net(X).cwiseProduct(E).sum(); }
};

// Visits every trainable array in a fixed order.
template <typename Model, typename Fn>
void for_each_param(Model& model, Fn&& fn) {
    auto& net = model.net;
    fn(net.embedding.E_in.data(), net.embedding.E_in.size());
    fn(net.embedding.P.data(), net.embedding.P.size());
    for (auto& block : net.blocks) {
        for (auto& h : block.attention.heads) {
            fn(h.W_V.data(), h.W_V.size());
            fn(h.W_K.data(), h.W_K.size());
            fn(h.W_Q.data(), h.W_Q.size());
            fn(h.W_O.data(), h.W_O.size());
        }
        auto& ff = std::get<FeedForwardLayer>(block.feedforward);
        fn(ff.W1.data(), ff.W1.size());
        fn(ff.b1.data(), ff.b1.size());
        fn(ff.W2.data(), ff.W2.size());
        fn(ff.b2.data(), ff.b2.size());
    }
    fn(net.projection.E_out.data(), net.projection.E_out.size());
    fn(model.E.data(), model.E.size());
}

inline std::vector<double> flatten(const RegressionModel& model) {
    std::vector<double> out;
    for_each_param(model, [&](const double* p, Index size) { out.insert(out.end(), p, p + size); });
    return out;
}

inline void unflatten(RegressionModel& model, const std::vector<double>& theta) {
    std::size_t pos = 0;
    for_each_param(model, [&](double* p, Index size) {
        if (pos + static_cast<std::size_t>(size) > theta.size()) throw StructuralError("unflatten: vector too short");
        std::copy_n(theta.begin() + static_cast<std::ptrdiff_t>(pos), size, p);
        pos += static_cast<std::size_t>(size);
    });
    if (pos != theta.size()) throw StructuralError("unflatten: vector too long");
}

struct InitOptions {
    double scale = 0.1;
    bool zero_output = false;
};

// Embedding and projection near identity, zero keys (uniform attention at
// start), Gaussian values/queries/outputs and feed-forward weights of the
// given scale, E = 1/(d_x n) ones.
inline RegressionModel init_model(const ArchSpec& spec, std::uint64_t seed, const InitOptions& opt = {}) {
    ArchSpec s = spec;
    s.d_y = 1;
    s.validate();
    if (s.D < s.d_x) throw ConfigError("init_model: D must be >= d_x");
    Stream rng(seed, 0x696e6974ULL);
    auto gauss = [&](Index r, Index c, double sc) {
        Matrix M(r, c);
        for (Index j = 0; j < c; ++j)
            for (Index i = 0; i < r; ++i) M(i, j) = sc * rng.normal();
        return M;
    };
    const auto D = static_cast<Index>(s.D), dx = static_cast<Index>(s.d_x), n = static_cast<Index>(s.n);
    const auto S = static_cast<Index>(s.S), W = static_cast<Index>(s.W);
    RegressionModel m;
    m.net.spec = s;
    m.net.embedding.E_in = Matrix::Identity(D, dx) + gauss(D, dx, 0.1 * opt.scale);
    m.net.embedding.P = gauss(D, n, opt.scale);
    for (std::size_t l = 0; l < s.L; ++l) {
        Block b;
        for (std::size_t h = 0; h < s.H; ++h)
            b.attention.heads.push_back({gauss(S, D, opt.scale), Matrix::Zero(S, D), gauss(S, D, opt.scale), gauss(D, S, opt.scale)});
        FeedForwardLayer ff{gauss(W, D, opt.scale), gauss(W, 1, opt.scale).col(0), gauss(D, W, opt.scale), Vector::Zero(D)};
        b.feedforward = ff;
        m.net.blocks.push_back(std::move(b));
    }
    m.net.projection.E_out = Matrix::Zero(1, D);
    m.net.projection.E_out(0, 0) = 1.0;
    m.E = Matrix::Constant(1, n, 1.0 / static_cast<double>(s.d_x * s.n));
    if (opt.zero_output) m.E.setZero();
    m.net.validate();
    return m;
}

namespace detail {

struct HeadCache {
    Matrix V, Kz, Qz, A, M;  // A: n x (n B), block b holds the softmax of sample b
};

struct BlockCache {
    Matrix Zin;
    std::vector<HeadCache> heads;
    Matrix Za, Hpre;
};

struct ForwardCache {
    Matrix X;  // d_x x (n B)
    std::vector<BlockCache> blocks;
    Matrix Z;  // final hidden
    Matrix Y;  // 1 x (n B)
};

inline Matrix concat_windows(const std::vector<Matrix>& windows, std::size_t lo, std::size_t hi) {
    const Index n = windows.at(lo).cols();
    Matrix X(windows[lo].rows(), n * static_cast<Index>(hi - lo));
    for (std::size_t b = lo; b < hi; ++b) X.middleCols(static_cast<Index>(b - lo) * n, n) = windows[b];
    return X;
}

inline std::vector<double> batched_forward(const RegressionModel& model, const Matrix& X, ForwardCache* cache) {
    const auto& net = model.net;
    const Index n = static_cast<Index>(net.spec.n);
    const Index cols = X.cols();
    const Index B = cols / n;
    Matrix Z = net.embedding.E_in * X;
    for (Index b = 0; b < B; ++b) Z.middleCols(b * n, n) += net.embedding.P;
    if (cache) {
        cache->X = X;
        cache->blocks.clear();
    }
    for (const auto& block : net.blocks) {
        BlockCache bc;
        Matrix Za = Z;
        for (const auto& h : block.attention.heads) {
            HeadCache hc;
            hc.V = h.W_V * Z;
            hc.Kz = h.W_K * Z;
            hc.Qz = h.W_Q * Z;
            hc.A.resize(n, cols);
            hc.M.resize(hc.V.rows(), cols);
            for (Index b = 0; b < B; ++b) {
                Matrix sc = hc.Kz.middleCols(b * n, n).transpose() * hc.Qz.middleCols(b * n, n);
                for (Index j = 0; j < n; ++j) {
                    const double mx = sc.col(j).maxCoeff();
                    sc.col(j) = (sc.col(j).array() - mx).exp().matrix();
                    sc.col(j) /= sc.col(j).sum();
                }
                hc.A.middleCols(b * n, n) = sc;
                hc.M.middleCols(b * n, n).noalias() = hc.V.middleCols(b * n, n) * sc;
            }
            Za.noalias() += h.W_O * hc.M;
            if (cache) bc.heads.push_back(std::move(hc));
        }
        const auto& ff = std::get<FeedForwardLayer>(block.feedforward);
        Matrix Hpre = ff.W1 * Za;
        Hpre.colwise() += ff.b1;
        Matrix Zout = Za;
        Zout.noalias() += ff.W2 * Hpre.cwiseMax(0.0);
        Zout.colwise() += ff.b2;
        if (cache) {
            bc.Zin = std::move(Z);
            bc.Za = std::move(Za);
            bc.Hpre = std::move(Hpre);
            cache->blocks.push_back(std::move(bc));
        }
        Z = std::move(Zout);
    }
    Matrix Y = net.projection.E_out * Z;
    std::vector<double> pred(static_cast<std::size_t>(B));
    for (Index b = 0; b < B; ++b) pred[static_cast<std::size_t>(b)] = Y.middleCols(b * n, n).cwiseProduct(model.E).sum();
    if (cache) {
        cache->Z = std::move(Z);
        cache->Y = std::move(Y);
    }
    return pred;
}

// Gradient of sum_b w_b pred_b, with dpred = w, written into a model-shaped holder.
inline void batched_backward(const RegressionModel& model, const ForwardCache& cache, const std::vector<double>& dpred,
                             RegressionModel& grad) {
    const auto& net = model.net;
    const Index n = static_cast<Index>(net.spec.n);
    const Index cols = cache.X.cols();
    const Index B = cols / n;
    Matrix dY(1, cols);
    grad.E.setZero();
    for (Index b = 0; b < B; ++b) {
        const double w = dpred[static_cast<std::size_t>(b)];
        grad.E += w * cache.Y.middleCols(b * n, n);
        dY.middleCols(b * n, n) = w * model.E;
    }
    grad.net.projection.E_out = dY * cache.Z.transpose();
    Matrix dZ = net.projection.E_out.transpose() * dY;
    for (std::size_t l = net.blocks.size(); l-- > 0;) {
        const auto& block = net.blocks[l];
        const auto& bc = cache.blocks[l];
        auto& gblock = grad.net.blocks[l];
        const auto& ff = std::get<FeedForwardLayer>(block.feedforward);
        auto& gff = std::get<FeedForwardLayer>(gblock.feedforward);
        const Matrix Hh = bc.Hpre.cwiseMax(0.0);
        gff.W2 = dZ * Hh.transpose();
        gff.b2 = dZ.rowwise().sum();
        Matrix dH = ff.W2.transpose() * dZ;
        dH = dH.cwiseProduct((bc.Hpre.array() > 0.0).cast<double>().matrix());
        gff.W1 = dH * bc.Za.transpose();
        gff.b1 = dH.rowwise().sum();
        Matrix dZa = dZ;
        dZa.noalias() += ff.W1.transpose() * dH;
        Matrix dZin = dZa;
        for (std::size_t hi = 0; hi < block.attention.heads.size(); ++hi) {
            const auto& h = block.attention.heads[hi];
            const auto& hc = bc.heads[hi];
            auto& gh = gblock.attention.heads[hi];
            gh.W_O = dZa * hc.M.transpose();
            const Matrix dM = h.W_O.transpose() * dZa;
            Matrix dV(hc.V.rows(), cols), dK(hc.Kz.rows(), cols), dQ(hc.Qz.rows(), cols);
            for (Index b = 0; b < B; ++b) {
                const auto A = hc.A.middleCols(b * n, n);
                const auto dMb = dM.middleCols(b * n, n);
                dV.middleCols(b * n, n).noalias() = dMb * A.transpose();
                const Matrix dA = hc.V.middleCols(b * n, n).transpose() * dMb;
                Matrix dS(n, n);
                for (Index j = 0; j < n; ++j) {
                    const double dot = A.col(j).dot(dA.col(j));
                    dS.col(j) = A.col(j).cwiseProduct((dA.col(j).array() - dot).matrix());
                }
                dK.middleCols(b * n, n).noalias() = hc.Qz.middleCols(b * n, n) * dS.transpose();
                dQ.middleCols(b * n, n).noalias() = hc.Kz.middleCols(b * n, n) * dS;
            }
            gh.W_V = dV * bc.Zin.transpose();
            gh.W_K = dK * bc.Zin.transpose();
            gh.W_Q = dQ * bc.Zin.transpose();
            dZin.noalias() += h.W_V.transpose() * dV + h.W_K.transpose() * dK + h.W_Q.transpose() * dQ;
        }
        dZ = std::move(dZin);
    }
    grad.net.embedding.E_in = dZ * cache.X.transpose();
    grad.net.embedding.P.setZero();
    for (Index b = 0; b < B; ++b) grad.net.embedding.P += dZ.middleCols(b * n, n);
}

}  // namespace detail

inline std::vector<double> predict_batch(const RegressionModel& model, const std::vector<Matrix>& windows) {
    if (windows.empty()) return {};
    return detail::batched_forward(model, detail::concat_windows(windows, 0, windows.size()), nullptr);
}

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

// Mean squared error over the dataset and its gradient in flatten() order.
inline LossGrad loss_and_gradient(const RegressionModel& model, const std::vector<Matrix>& windows,
                                  const std::vector<double>& y) {
    if (windows.empty() || windows.size() != y.size()) throw ConfigError("loss_and_gradient: empty or mismatched data");
    detail::ForwardCache cache;
    const Matrix X = detail::concat_windows(windows, 0, windows.size());
    const auto pred = detail::batched_forward(model, X, &cache);
    const double inv = 1.0 / static_cast<double>(y.size());
    std::vector<double> resid(y.size()), dpred(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        resid[i] = (pred[i] - y[i]) * (pred[i] - y[i]);
        dpred[i] = 2.0 * (pred[i] - y[i]) * inv;
    }
    RegressionModel grad = model;
    detail::batched_backward(model, cache, dpred, grad);
    return {pairwise_sum(resid) * inv, flatten(grad)};
}

inline double empirical_risk(const RegressionModel& model, const std::vector<Matrix>& windows,
                             const std::vector<double>& y) {
    const auto pred = predict_batch(model, windows);
    std::vector<double> resid(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) resid[i] = (pred[i] - y[i]) * (pred[i] - y[i]);
    return pairwise_sum(resid) / static_cast<double>(y.size());
}

enum class LrSchedule { constant, cosine };

struct TrainConfig {
    ArchSpec arch;
    std::size_t steps = 400;
    double lr = 0.01;
    LrSchedule schedule = LrSchedule::cosine;
    double lr_floor = 0.05;  // cosine decays to lr * lr_floor
    InitOptions init;
    std::uint64_t seed = 0;
    double B_m = 1.0;

    void validate() const {
        arch.validate();
        if (!(B_m > 0.0)) throw ConfigError("train: truncation level B_m must be > 0");
        if (!(lr > 0.0)) throw ConfigError("train: learning rate must be > 0");
    }
};

struct TrainResult {
    RegressionModel model;
    double initial_risk = 0.0;
    double best_risk = 0.0;
    std::size_t best_step = 0;
    std::vector<double> risk_trace;
};

// Approximate ERM: full-batch gradients with Adam steps; returns the iterate
// with the lowest training risk.
inline TrainResult train_erm(const RegressionDataset& ds, const TrainConfig& cfg) {
    cfg.validate();
    if (ds.size() == 0) throw ConfigError("train_erm: empty dataset");
    ArchSpec arch = cfg.arch;
    arch.d_x = ds.d_x;
    arch.n = ds.n;
    arch.d_y = 1;
    RegressionModel model = init_model(arch, cfg.seed, cfg.init);
    std::vector<double> theta = flatten(model);
    std::vector<double> m1(theta.size(), 0.0), m2(theta.size(), 0.0);
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    TrainResult out;
    out.best_risk = INFINITY;
    std::vector<double> best = theta;
    for (std::size_t step = 0; step <= cfg.steps; ++step) {
        unflatten(model, theta);
        const LossGrad lg = loss_and_gradient(model, ds.windows, ds.y);
        if (step == 0) out.initial_risk = lg.loss;
        out.risk_trace.push_back(lg.loss);
        if (!std::isfinite(lg.loss) || lg.loss > 1e3 * std::max(out.initial_risk, 1e-12))
            throw TrainingError(fmt::format("train_erm: diverged at step {} (risk {:.6g}, initial {:.6g}, lr {:.3g})", step,
                                            lg.loss, out.initial_risk, cfg.lr));
        if (lg.loss < out.best_risk) {
            out.best_risk = lg.loss;
            out.best_step = step;
            best = theta;
        }
        if (step == cfg.steps) break;
        double lr = cfg.lr;
        if (cfg.schedule == LrSchedule::cosine) {
            const double frac = static_cast<double>(step) / static_cast<double>(std::max<std::size_t>(cfg.steps, 1));
            lr = cfg.lr * (cfg.lr_floor + (1.0 - cfg.lr_floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * frac)));
        }
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step + 1));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step + 1));
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m1[i] = beta1 * m1[i] + (1.0 - beta1) * lg.grad[i];
            m2[i] = beta2 * m2[i] + (1.0 - beta2) * lg.grad[i] * lg.grad[i];
            theta[i] -= lr * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + eps);
        }
    }
    unflatten(model, best);
    out.model = std::move(model);
    return out;
}

inline double truncate(double v, double B) { return std::clamp(v, -B, B); }

struct RiskReport {
    std::string regime;
    std::size_t m = 0;
    std::uint64_t seed = 0;
    double empirical_risk = 0.0;
    double excess_risk = 0.0;
    double std_error = 0.0;
    std::size_t eval_samples = 0;
    double B_m = 0.0;
    ArchSpec spec;
};

struct RiskEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

// E[(C_B f_hat - f*)^2] over N fresh stationary windows.
inline RiskEstimate excess_risk(const std::function<std::vector<double>(const std::vector<Matrix>&)>& predictor,
                                double B, const RegressionTarget& target, const MixingProcess& proc, std::size_t N,
                                std::uint64_t seed) {
    if (N < 1000) throw ConfigError("excess_risk: need N >= 1000");
    const auto windows = sample_stationary_windows(proc, target.n, N, seed);
    const auto pred = predictor(windows);
    std::vector<double> sq(N), sq2(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double e = truncate(pred[i], B) - target(windows[i]);
        sq[i] = e * e;
        sq2[i] = sq[i] * sq[i];
    }
    const double mean = pairwise_sum(sq) / static_cast<double>(N);
    const double var = std::max(0.0, pairwise_sum(sq2) / static_cast<double>(N) - mean * mean);
    return {mean, std::sqrt(var / static_cast<double>(N))};
}

inline RiskEstimate excess_risk(const RegressionModel& model, double B, const RegressionTarget& target,
                                const MixingProcess& proc, std::size_t N, std::uint64_t seed) {
    return excess_risk([&](const std::vector<Matrix>& w) { return predict_batch(model, w); }, B, target, proc, N, seed);
}

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double slope_std_error = 0.0;
};

// Least squares of log risk on log m.
inline RateFit rate_fit(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw ConfigError("rate_fit: need at least 3 points");
    std::vector<double> x, y;
    for (const auto& [m, risk] : points) {
        if (!(risk > 0.0)) throw ConfigError("rate_fit: risks must be positive");
        if (!(m > 0.0)) throw ConfigError("rate_fit: sample sizes must be positive");
        x.push_back(std::log(m));
        y.push_back(std::log(risk));
    }
    const double k = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / k;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / k;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw ConfigError("rate_fit: sample sizes must be distinct");
    RateFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        sse += r * r;
    }
    f.r2 = syy == 0.0 ? 1.0 : 1.0 - sse / syy;
    f.slope_std_error = x.size() > 2 ? std::sqrt(sse / (k - 2.0) / sxx) : 0.0;
    return f;
}

struct Regime {
    ProcessKind kind = ProcessKind::iid;
    double r = 1.0;
};

inline double predicted_exponent(const Regime& regime, double gamma, std::size_t d_x, std::size_t n) {
    const double dn = static_cast<double>(d_x * n);
    if (regime.kind == ProcessKind::algebraic_renewal) {
        const double r = regime.r;
        return -r * gamma / ((r + 2.0) * gamma + (r + 1.0) * dn);
    }
    return -gamma / (gamma + dn);
}

struct Budget {
    ArchSpec spec;
    std::size_t k_m = 1;
    double B_m = 1.0;
};

struct BudgetConstants {
    std::size_t D = 4;
    std::size_t H = 1;
    std::size_t S = 2;
    std::size_t L = 1;
};

// Hypothesis-class size, blocking length and truncation level with unit
// constants. iid data needs no blocking (k_m = 1).
inline Budget theorem7_budget(double m, double gamma, std::size_t d_x, std::size_t n, const Regime& regime,
                              const BudgetConstants& c = {}) {
    if (!(m >= 2.0)) throw ConfigError("budget: m must be >= 2");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("budget: gamma must lie in (0, 1]");
    const double dn = static_cast<double>(d_x * n);
    const double logm = std::log(m);
    auto ceil_tol = [](double v) { return std::max(1.0, std::ceil(v - 1e-9)); };
    Budget b;
    double w_exp = dn / (2.0 * gamma + 2.0 * dn);
    switch (regime.kind) {
        case ProcessKind::iid: b.k_m = 1; break;
        case ProcessKind::geometric_markov:
            if (!(regime.r > 0.0)) throw ConfigError("budget: r must be > 0");
            b.k_m = static_cast<std::size_t>(ceil_tol(std::pow(logm, 1.0 / regime.r)));
            break;
        case ProcessKind::algebraic_renewal: {
            const double r = regime.r;
            if (!(r > 0.0)) throw ConfigError("budget: r must be > 0");
            w_exp = r * dn / (2.0 * (r + 2.0) * gamma + 2.0 * (r + 1.0) * dn);
            b.k_m = static_cast<std::size_t>(
                ceil_tol(std::pow(m, (2.0 * gamma + dn) / ((r + 2.0) * gamma + (r + 1.0) * dn))));
            break;
        }
    }
    b.B_m = ceil_tol(logm);
    b.spec.d_x = d_x;
    b.spec.d_y = 1;
    b.spec.n = n;
    b.spec.D = std::max(c.D, d_x);
    b.spec.H = c.H;
    b.spec.S = std::min(c.S, b.spec.D);
    b.spec.L = c.L;
    b.spec.W = static_cast<std::size_t>(ceil_tol(std::pow(m, w_exp)));
    return b;
}

struct SweepConfig {
    MixingProcess process;
    Regime regime;
    std::string target = "sine_product";
    double gamma = 1.0;
    double K_H = 1.0;
    std::size_t n = 2;
    std::vector<std::size_t> m_list{256, 512, 1024, 2048, 4096};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    double sigma = 0.1;
    std::size_t steps = 1500;
    double lr = 0.01;
    double init_scale = 0.1;
    std::size_t eval_samples = 10000;
    BudgetConstants constants;
};

inline RegressionTarget sweep_target(const SweepConfig& cfg) {
    return scalar_target(targets::by_name(cfg.target, cfg.process.d_x, cfg.n, cfg.gamma, cfg.K_H));
}

inline RiskReport run_regression(const SweepConfig& cfg, std::size_t m, std::uint64_t seed) {
    const RegressionTarget target = sweep_target(cfg);
    const Budget budget = theorem7_budget(static_cast<double>(m), cfg.gamma, cfg.process.d_x, cfg.n, cfg.regime, cfg.constants);
    const RegressionDataset ds = make_dataset(cfg.process, m, cfg.n, target, cfg.sigma, CounterRng::mix(seed * 0x10001ULL + m));
    TrainConfig tc;
    tc.arch = budget.spec;
    tc.steps = cfg.steps;
    tc.lr = cfg.lr;
    tc.init.scale = cfg.init_scale;
    tc.seed = seed;
    tc.B_m = budget.B_m;
    const TrainResult tr = train_erm(ds, tc);
    const RiskEstimate risk = excess_risk(tr.model, budget.B_m, target, cfg.process, cfg.eval_samples,
                                          CounterRng::mix(seed ^ 0x6576616cULL) + m);
    RiskReport rep;
    rep.regime = to_string(cfg.process.kind);
    rep.m = m;
    rep.seed = seed;
    rep.empirical_risk = tr.best_risk;
    rep.excess_risk = risk.value;
    rep.std_error = risk.std_error;
    rep.eval_samples = cfg.eval_samples;
    rep.B_m = budget.B_m;
    rep.spec = budget.spec;
    return rep;
}

struct SweepSummaryRow {
    std::size_t m = 0;
    double median_risk = 0.0;
    double mean_risk = 0.0;
    std::size_t runs = 0;
};

struct SweepResult {
    std::vector<RiskReport> runs;
    std::vector<SweepSummaryRow> summary;
    RateFit fit;
    double predicted_exponent = 0.0;
};

inline double median(std::vector<double> v) {
    if (v.empty()) throw ConfigError("median of empty set");
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// Runs every (m, seed) pair, parallel across runs; results are ordered by
// (m, seed) regardless of thread count.
inline SweepResult regression_sweep(const SweepConfig& cfg) {
    if (cfg.m_list.size() < 3) throw ConfigError("regress: rate fit needs at least 3 sample sizes");
    if (cfg.seeds.empty()) throw ConfigError("regress: need at least one seed");
    for (std::size_t m : cfg.m_list)
        if (m < cfg.n + 2) throw ConfigError("regress: every m must exceed n + 1");
    cfg.process.validate();
    SweepResult out;
    const std::size_t total = cfg.m_list.size() * cfg.seeds.size();
    out.runs.resize(total);
    parallel_for(total, [&](std::size_t i) {
        out.runs[i] = run_regression(cfg, cfg.m_list[i / cfg.seeds.size()], cfg.seeds[i % cfg.seeds.size()]);
    });
    std::vector<std::pair<double, double>> pts;
    for (std::size_t a = 0; a < cfg.m_list.size(); ++a) {
        std::vector<double> risks;
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s) risks.push_back(out.runs[a * cfg.seeds.size() + s].excess_risk);
        SweepSummaryRow row{cfg.m_list[a], median(risks),
                            std::accumulate(risks.begin(), risks.end(), 0.0) / static_cast<double>(risks.size()),
                            risks.size()};
        out.summary.push_back(row);
        pts.emplace_back(static_cast<double>(row.m), std::max(row.median_risk, 1e-300));
    }
    out.fit = rate_fit(pts);
    out.predicted_exponent = predicted_exponent(cfg.regime, cfg.gamma, cfg.process.d_x, cfg.n);
    return out;
}

inline std::string risk_csv_header() { return "regime,m,seed,empirical_risk,excess_risk,std_error,eval_samples,B_m,D,H,S,W,L"; }

inline std::string to_csv_row(const RiskReport& r) {
    return fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{},{:.17g},{},{},{},{},{}", r.regime, r.m, r.seed, r.empirical_risk,
                       r.excess_risk, r.std_error, r.eval_samples, r.B_m, r.spec.D, r.spec.H, r.spec.S, r.spec.W, r.spec.L);
}

inline std::string summary_csv_header() { return "m,median_risk,mean_risk,runs,fitted_slope,predicted_exponent"; }

inline std::vector<std::string> summary_csv_rows(const SweepResult& res) {
    std::vector<std::string> rows;
    for (const auto& s : res.summary)
        rows.push_back(fmt::format("{},{:.17g},{:.17g},{},{:.17g},{:.17g}", s.m, s.median_risk, s.mean_risk, s.runs,
                                   res.fit.slope, res.predicted_exponent));
    return rows;
}

}  // namespace tfa
