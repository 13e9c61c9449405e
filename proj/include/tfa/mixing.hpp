#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tfa/parallel.hpp"
#include "tfa/rng.hpp"
#include "tfa/target.hpp"

namespace tfa {

enum class ProcessKind { iid, geometric_markov, algebraic_renewal };

inline std::string to_string(ProcessKind k) {
    switch (k) {
        case ProcessKind::iid: return "iid";
        case ProcessKind::geometric_markov: return "geometric";
        case ProcessKind::algebraic_renewal: return "algebraic";
    }
    return "?";
}

inline ProcessKind process_kind_from_string(const std::string& s) {
    if (s == "iid") return ProcessKind::iid;
    if (s == "geometric" || s == "geometric-markov") return ProcessKind::geometric_markov;
    if (s == "algebraic" || s == "algebraic-renewal") return ProcessKind::algebraic_renewal;
    throw ConfigError("unknown process kind '" + s + "'");
}

// Stationary process on [0,1]^{d_x} with independent coordinates.
//   iid        uniform draws
//   geometric  two-state chain per coordinate, P(0->1) = a, P(1->0) = b; the
//              state s is reported as (s + U)/2 with fresh U ~ U(0,1)
//   algebraic  renewal chain per coordinate: a uniform value held for
//              holding times T with P(T >= t) = t^{-(r+1)}
struct MixingProcess {
    ProcessKind kind = ProcessKind::iid;
    std::size_t d_x = 1;
    double a = 0.25;
    double b = 0.25;
    double r = 1.0;

    void validate() const {
        if (d_x == 0) throw ConfigError("process: d_x must be >= 1");
        if (kind == ProcessKind::geometric_markov && !(a > 0.0 && a <= 1.0 && b > 0.0 && b <= 1.0))
            throw ConfigError("process: chain parameters need a, b in (0, 1]");
        if (kind == ProcessKind::algebraic_renewal && !(r > 0.0)) throw ConfigError("process: renewal rate r must be > 0");
    }

    double pi1() const { return a / (a + b); }
    double lambda() const { return 1.0 - a - b; }
    bool finite_state() const { return kind != ProcessKind::algebraic_renewal; }
};

namespace detail {

// zeta(s) for s > 1: partial sum plus Euler-Maclaurin tail.
inline double zeta(double s) {
    constexpr int M = 64;
    double sum = 0.0;
    for (int t = 1; t < M; ++t) sum += std::pow(t, -s);
    const double m = M;
    return sum + std::pow(m, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(m, -s) + s * std::pow(m, -s - 1.0) / 12.0 -
           s * (s + 1.0) * (s + 2.0) * std::pow(m, -s - 3.0) / 720.0;
}

// Holding time with P(T >= t) = t^{-(r+1)}, t >= 1.
inline std::uint64_t pareto_holding(Stream& rng, double r) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    const double t = std::floor(std::pow(u, -1.0 / (r + 1.0)));
    return t > 1e15 ? std::uint64_t{1000000000000000} : static_cast<std::uint64_t>(t);
}

// Zeta(s) law P(R = j) = j^{-s} / zeta(s), Devroye's rejection sampler.
inline std::uint64_t zeta_draw(Stream& rng, double s) {
    const double b = std::pow(2.0, s - 1.0);
    for (;;) {
        double u = rng.uniform();
        while (u <= 0.0) u = rng.uniform();
        const double v = rng.uniform();
        const double x = std::floor(std::pow(u, -1.0 / (s - 1.0)));
        if (x > 1e15) continue;
        const double t = std::pow(1.0 + 1.0 / x, s - 1.0);
        if (v * x * (t - 1.0) / (b - 1.0) <= t / b) return static_cast<std::uint64_t>(x);
    }
}

}  // namespace detail

// Sequence x_1..x_m as columns of a d_x x m matrix. Coordinate c draws from
// stream c of the seed; chains start from their stationary law.
inline Matrix gen_process(const MixingProcess& proc, std::size_t m, std::uint64_t seed) {
    proc.validate();
    if (m == 0) throw ConfigError("gen_process: m must be >= 1");
    Matrix X(static_cast<Index>(proc.d_x), static_cast<Index>(m));
    for (std::size_t c = 0; c < proc.d_x; ++c) {
        Stream rng(seed, c);
        const auto row = static_cast<Index>(c);
        switch (proc.kind) {
            case ProcessKind::iid:
                for (std::size_t t = 0; t < m; ++t) X(row, static_cast<Index>(t)) = rng.uniform();
                break;
            case ProcessKind::geometric_markov: {
                int s = rng.uniform() < proc.pi1() ? 1 : 0;
                for (std::size_t t = 0; t < m; ++t) {
                    if (t > 0) {
                        const double u = rng.uniform();
                        s = s == 0 ? (u < proc.a ? 1 : 0) : (u < proc.b ? 0 : 1);
                    }
                    X(row, static_cast<Index>(t)) = 0.5 * (s + rng.uniform());
                }
                break;
            }
            case ProcessKind::algebraic_renewal: {
                // Residual life at time 1 has the stationary law P(R = j) = P(T >= j) / E T.
                std::uint64_t left = detail::zeta_draw(rng, proc.r + 1.0);
                double value = rng.uniform();
                for (std::size_t t = 0; t < m; ++t) {
                    if (left == 0) {
                        left = detail::pareto_holding(rng, proc.r);
                        value = rng.uniform();
                    }
                    X(row, static_cast<Index>(t)) = value;
                    --left;
                }
                break;
            }
        }
    }
    return X;
}

// Per-coordinate beta(k) of a stationary renewal chain with P(T >= t) = t^{-(r+1)}.
// Given the residual life R_0 = j: if j > k the value at time k is the current
// one (total variation 1 against the continuous marginal), otherwise the
// residual at time k has law q_{k-j}(i) = sum_{l <= k-j} u(l) f(i + k - j - l),
// u the renewal sequence and f the holding-time law. States above N are
// lumped into one tail atom whose mass is added in full, so the result is an
// upper bound that is tight up to that tail mass.
inline double renewal_beta(std::size_t k, double r, std::size_t N = 1u << 14) {
    if (k == 0) return 1.0;
    const double s = r + 1.0;
    const double mu = detail::zeta(s);
    std::vector<double> surv(N + k + 2, 0.0), f(N + k + 1, 0.0);  // P(T >= t), P(T = t)
    for (std::size_t t = 1; t < surv.size(); ++t) surv[t] = std::pow(static_cast<double>(t), -s);
    for (std::size_t t = 1; t < f.size(); ++t) f[t] = surv[t] - surv[t + 1];
    std::vector<double> u(k + 1, 0.0);
    u[0] = 1.0;
    for (std::size_t l = 1; l <= k; ++l)
        for (std::size_t t = 1; t <= l; ++t) u[l] += f[t] * u[l - t];
    std::vector<double> pi(N + 1, 0.0);
    double pi_head = 0.0;
    for (std::size_t i = 1; i <= N; ++i) {
        pi[i] = surv[i] / mu;
        pi_head += pi[i];
    }
    const double pi_tail = std::max(0.0, 1.0 - pi_head);
    double beta = 0.0;
    double head_mass = 0.0;
    for (std::size_t j = 1; j <= k; ++j) {
        const std::size_t g = k - j;
        double tv = 0.0, q_head = 0.0;
        for (std::size_t i = 1; i <= N; ++i) {
            double q = 0.0;
            for (std::size_t l = 0; l <= g; ++l) q += u[l] * f[i + g - l];
            q_head += q;
            tv += std::abs(q - pi[i]);
        }
        tv = 0.5 * (tv + std::max(0.0, 1.0 - q_head) + pi_tail);
        beta += pi[j] * std::min(1.0, tv);
        head_mass += pi[j];
    }
    return std::min(1.0, beta + (1.0 - head_mass));
}

// beta(k) of the process. Exact for one coordinate of the finite-state kinds;
// for d_x > 1 the sum over coordinates (an upper bound); for the renewal
// chain the bound from renewal_beta.
inline double beta_coefficient(const MixingProcess& proc, std::size_t k) {
    proc.validate();
    const double dx = static_cast<double>(proc.d_x);
    if (k == 0) return 1.0;
    switch (proc.kind) {
        case ProcessKind::iid: return 0.0;
        case ProcessKind::geometric_markov: {
            const double p1 = proc.pi1();
            return std::min(1.0, dx * 2.0 * (1.0 - p1) * p1 * std::pow(std::abs(proc.lambda()), static_cast<double>(k)));
        }
        case ProcessKind::algebraic_renewal: return std::min(1.0, dx * renewal_beta(k, proc.r));
    }
    return 1.0;
}

// beta_0 in beta(k) <= beta_0 k^{-r}, evaluated as max_{k <= k_max} k^r beta(k).
inline double renewal_beta0(const MixingProcess& proc, std::size_t k_max = 64) {
    double b0 = 0.0;
    for (std::size_t k = 1; k <= k_max; ++k)
        b0 = std::max(b0, std::pow(static_cast<double>(k), proc.r) * beta_coefficient(proc, k));
    return b0;
}

struct BetaEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t draws = 0;
};

// Monte Carlo estimate of E_{s ~ pi} TV(P^k(s, .), pi) for the finite-state
// kinds: draws (s_0, s_k) pairs from the stationary chain on the joint state
// {0,1}^{d_x}, estimates each conditional k-step law by counts and compares it
// with the exact stationary law.
inline BetaEstimate empirical_beta(const MixingProcess& proc, std::size_t k, std::size_t n_mc, std::uint64_t seed) {
    proc.validate();
    if (!proc.finite_state()) throw ConfigError("empirical_beta: finite-state processes only");
    if (proc.kind == ProcessKind::iid) return {k == 0 ? 1.0 : 0.0, 0.0, n_mc};
    if (proc.d_x > 16) throw ResourceError("empirical_beta: at most 16 coordinates");
    if (n_mc == 0) throw ConfigError("empirical_beta: need draws");
    const std::size_t states = std::size_t{1} << proc.d_x;
    std::vector<double> pi(states, 1.0);
    for (std::size_t s = 0; s < states; ++s)
        for (std::size_t c = 0; c < proc.d_x; ++c) pi[s] *= (s >> c & 1u) ? proc.pi1() : 1.0 - proc.pi1();
    // counts[s0 * states + sk]
    const unsigned threads = default_threads();
    const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(threads, n_mc));
    std::vector<std::vector<std::uint64_t>> partial(chunks, std::vector<std::uint64_t>(states * states, 0));
    parallel_for(chunks, [&](std::size_t ch) {
        const std::size_t lo = n_mc * ch / chunks, hi = n_mc * (ch + 1) / chunks;
        for (std::size_t i = lo; i < hi; ++i) {
            Stream rng(seed, i);
            std::size_t s0 = 0, sk = 0;
            for (std::size_t c = 0; c < proc.d_x; ++c) {
                int s = rng.uniform() < proc.pi1() ? 1 : 0;
                s0 |= static_cast<std::size_t>(s) << c;
                for (std::size_t t = 0; t < k; ++t) {
                    const double u = rng.uniform();
                    s = s == 0 ? (u < proc.a ? 1 : 0) : (u < proc.b ? 0 : 1);
                }
                sk |= static_cast<std::size_t>(s) << c;
            }
            ++partial[ch][s0 * states + sk];
        }
    });
    std::vector<double> counts(states * states, 0.0);
    for (const auto& p : partial)
        for (std::size_t i = 0; i < p.size(); ++i) counts[i] += static_cast<double>(p[i]);
    BetaEstimate out;
    out.draws = n_mc;
    double var = 0.0;
    for (std::size_t s0 = 0; s0 < states; ++s0) {
        double row = 0.0;
        for (std::size_t sk = 0; sk < states; ++sk) row += counts[s0 * states + sk];
        if (row == 0.0) continue;
        double tv = 0.0;
        for (std::size_t sk = 0; sk < states; ++sk) tv += std::abs(counts[s0 * states + sk] / row - pi[sk]);
        tv *= 0.5;
        const double w = row / static_cast<double>(n_mc);
        out.value += w * tv;
        // Binomial error of the conditional frequencies, first order.
        var += w * w * 0.25 * static_cast<double>(states) / row;
    }
    out.std_error = std::sqrt(var);
    return out;
}

// Scalar regression target: entry (0,0) of a target map.
struct RegressionTarget {
    std::string name;
    std::size_t d_x = 1;
    std::size_t n = 1;
    double gamma = 1.0;
    std::function<double(const Matrix&)> f;

    double operator()(const Matrix& X) const { return f(X); }
};

inline RegressionTarget scalar_target(const TargetFunction& F) {
    return {F.name, F.d_x, F.n, F.gamma.value_or(1.0), [F](const Matrix& X) { return F(X)(0, 0); }};
}

struct RegressionDataset {
    std::size_t m = 0;
    std::size_t n = 0;
    std::size_t d_x = 0;
    double sigma = 0.0;
    std::vector<Matrix> windows;  // d_x x n, columns x_{t-n+1} .. x_t
    std::vector<double> y;
    std::vector<double> clean;    // f*(window)

    std::size_t size() const { return windows.size(); }
};

// Windows t = n..m of one stationary path, y_t = f*(window) + N(0, sigma^2).
inline RegressionDataset make_dataset(const MixingProcess& proc, std::size_t m, std::size_t n,
                                      const RegressionTarget& target, double sigma, std::uint64_t seed) {
    if (n == 0 || m < n) throw ConfigError("make_dataset: need 1 <= n <= m");
    if (target.d_x != proc.d_x || target.n != n) throw ConfigError("make_dataset: target shape does not match process");
    if (!(sigma >= 0.0)) throw ConfigError("make_dataset: sigma must be >= 0");
    const Matrix path = gen_process(proc, m, CounterRng::mix(seed));
    RegressionDataset ds{m, n, proc.d_x, sigma, {}, {}, {}};
    Stream noise(seed, 0x6e6f697365ULL);
    for (std::size_t t = n; t <= m; ++t) {
        Matrix W = path.middleCols(static_cast<Index>(t - n), static_cast<Index>(n));
        const double clean = target(W);
        ds.clean.push_back(clean);
        ds.y.push_back(clean + sigma * noise.normal());
        ds.windows.push_back(std::move(W));
    }
    return ds;
}

// Fresh windows from the stationary law: one independent path per window.
inline std::vector<Matrix> sample_stationary_windows(const MixingProcess& proc, std::size_t n, std::size_t count,
                                                     std::uint64_t seed) {
    std::vector<Matrix> out(count);
    parallel_for(count, [&](std::size_t i) { out[i] = gen_process(proc, n, CounterRng::mix(seed ^ CounterRng::mix(i + 1))); });
    return out;
}

}  // namespace tfa
