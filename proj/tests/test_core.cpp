#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "support.hpp"
#include "tfa/serialize.hpp"

using namespace tfa;
using namespace tfa::testing;

namespace {

// Straight-line evaluation with explicit loops, independent of Eigen products.
Vector naive_fnn(const Fnn& f, const Vector& x) {
    std::vector<double> h(x.data(), x.data() + x.size());
    for (std::size_t l = 0; l < f.layers.size(); ++l) {
        const auto& A = f.layers[l].A;
        std::vector<double> next(static_cast<std::size_t>(A.rows()));
        for (Index i = 0; i < A.rows(); ++i) {
            double s = f.layers[l].b(i);
            for (Index k = 0; k < A.cols(); ++k) s += A(i, k) * h[static_cast<std::size_t>(k)];
            next[static_cast<std::size_t>(i)] = (l + 1 < f.layers.size()) ? std::max(s, 0.0) : s;
        }
        h = std::move(next);
    }
    return Eigen::Map<Vector>(h.data(), static_cast<Index>(h.size()));
}

// Dense attention oracle: explicit loops over heads, keys and queries.
Matrix naive_attention(const SelfAttentionLayer& layer, const Matrix& Z) {
    const Index D = Z.rows(), n = Z.cols();
    Matrix out = Z;
    for (const auto& h : layer.heads) {
        const Index S = h.head_size();
        Matrix V = Matrix::Zero(S, n), K = Matrix::Zero(S, n), Q = Matrix::Zero(S, n);
        for (Index s = 0; s < S; ++s)
            for (Index j = 0; j < n; ++j)
                for (Index d = 0; d < D; ++d) {
                    V(s, j) += h.W_V(s, d) * Z(d, j);
                    K(s, j) += h.W_K(s, d) * Z(d, j);
                    Q(s, j) += h.W_Q(s, d) * Z(d, j);
                }
        for (Index j = 0; j < n; ++j) {
            std::vector<double> w(static_cast<std::size_t>(n));
            double total = 0.0;
            for (Index i = 0; i < n; ++i) {
                double score = 0.0;
                for (Index s = 0; s < S; ++s) score += K(s, i) * Q(s, j);
                w[static_cast<std::size_t>(i)] = std::exp(score);
                total += w[static_cast<std::size_t>(i)];
            }
            for (Index d = 0; d < D; ++d) {
                double acc = 0.0;
                for (Index s = 0; s < S; ++s) {
                    double mixed = 0.0;
                    for (Index i = 0; i < n; ++i) mixed += V(s, i) * w[static_cast<std::size_t>(i)] / total;
                    acc += h.W_O(d, s) * mixed;
                }
                out(d, j) += acc;
            }
        }
    }
    return out;
}

double mid_oracle(double a, double b, double c) {
    std::array<double, 3> v{a, b, c};
    std::sort(v.begin(), v.end());
    return v[1];
}

}  // namespace

TEST(Fnn, IdentityAffine) {
    Fnn f;
    f.layers.push_back({Matrix::Identity(2, 2), Vector::Zero(2)});
    Vector x(2);
    x << 1, -2;
    EXPECT_EQ(fnn_forward(f, x), x);
}

TEST(Fnn, RandomMatchesStraightLineOracle) {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Fnn f = random_fnn(gen, 3, 5, 2, 2);
        const Vector x = random_vector(gen, 3);
        EXPECT_LE((fnn_forward(f, x) - naive_fnn(f, x)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Fnn, ShapeMismatchIsStructural) {
    std::mt19937_64 gen(1);
    const Fnn f = random_fnn(gen, 3, 4, 2, 1);
    EXPECT_THROW(fnn_forward(f, Vector::Zero(2)), StructuralError);
}

TEST(MidFnn, ExamplesAndDims) {
    const Fnn mid = build_mid_fnn();
    EXPECT_EQ(mid.depth(), 2u);
    EXPECT_LE(mid.width(), 14);
    EXPECT_EQ(fnn_forward(mid, Eigen::Vector3d(1, 3, 2))(0), 2.0);
    EXPECT_EQ(fnn_forward(mid, Eigen::Vector3d(5, 5, 1))(0), 5.0);
}

TEST(MidFnn, AgreesWithSortingOracle) {
    const Fnn mid = build_mid_fnn();
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    double worst = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const Eigen::Vector3d x(u(gen), u(gen), u(gen));
        worst = std::max(worst, std::abs(fnn_forward(mid, x)(0) - mid_oracle(x(0), x(1), x(2))));
    }
    EXPECT_LE(worst, 1e-9);
}

TEST(Attention, ZeroOutputMatrixIsIdentity) {
    std::mt19937_64 gen(2);
    SelfAttentionLayer layer;
    auto h = random_head(gen, 2, 3);
    h.W_O.setZero();
    layer.heads.push_back(h);
    const Matrix Z = random_matrix(gen, 3, 4);
    EXPECT_EQ(attention_forward(layer, Z), Z);
}

TEST(Attention, UniformScoresAverage) {
    SelfAttentionLayer layer;
    layer.heads.push_back({Matrix::Ones(1, 1), Matrix::Zero(1, 1), Matrix::Zero(1, 1), Matrix::Ones(1, 1)});
    Matrix Z(1, 2);
    Z << 0, 2;
    Matrix expected(1, 2);
    expected << 1, 3;
    EXPECT_EQ(attention_forward(layer, Z), expected);
}

TEST(Attention, UniformWeightsDoNotDriftWithMagnitude) {
    SelfAttentionLayer layer;
    layer.heads.push_back({Matrix::Ones(1, 1), Matrix::Zero(1, 1), Matrix::Zero(1, 1), Matrix::Ones(1, 1)});
    for (double scale : {1.0, 1e6, 1e12}) {
        Matrix Z(1, 4);
        Z << 1 * scale, 2 * scale, 3 * scale, 6 * scale;
        const Matrix out = attention_forward(layer, Z);
        for (Index j = 0; j < 4; ++j) EXPECT_EQ(out(0, j) - Z(0, j), 3 * scale);
    }
}

TEST(Attention, RandomTwoHeadMatchesDenseOracle) {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 10; ++trial) {
        SelfAttentionLayer layer;
        layer.heads.push_back(random_head(gen, 2, 4));
        layer.heads.push_back(random_head(gen, 3, 4));
        const Matrix Z = random_matrix(gen, 4, 5);
        EXPECT_LE((attention_forward(layer, Z) - naive_attention(layer, Z)).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Attention, NonFiniteInputRejected) {
    SelfAttentionLayer layer;
    Matrix Z = Matrix::Zero(2, 2);
    Z(0, 0) = std::nan("");
    EXPECT_THROW(attention_forward(layer, Z), NumericError);
}

TEST(FeedForward, ZeroSecondWeightIsIdentity) {
    std::mt19937_64 gen(4);
    auto ff = random_ff(gen, 5, 3);
    ff.W2.setZero();
    ff.b2.setZero();
    const Matrix Z = random_matrix(gen, 3, 4);
    EXPECT_EQ(ff_forward(ff, Z), Z);
}

TEST(FeedForward, TruncationClamps) {
    const auto trunc = truncation_layer(1.0, 1);
    Matrix Z(1, 3);
    Z << 0.5, 3, -2;
    Matrix expected(1, 3);
    expected << 0.5, 1, -1;
    EXPECT_EQ(ff_forward(trunc, Z), expected);
}

TEST(FeedForward, TruncationRejectsNonPositiveBound) { EXPECT_THROW(truncation_layer(0.0, 1), ConfigError); }

TEST(FeedForward, TruncationEqualsScalarClampExactly) {
    const auto trunc = truncation_layer(1.0, 1);
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    Matrix Z(1, 10000);
    for (Index j = 0; j < Z.cols(); ++j) Z(0, j) = u(gen);
    const Matrix out = ff_forward(trunc, Z);
    for (Index j = 0; j < Z.cols(); ++j) ASSERT_EQ(out(0, j), std::clamp(Z(0, j), -1.0, 1.0));
}

TEST(FeedForward, GeneralizedPerColumnBias) {
    GeneralizedFeedForwardLayer g{Matrix::Zero(1, 1), Matrix::Zero(1, 2), Matrix::Zero(1, 1), Matrix::Zero(1, 2)};
    g.B2(0, 1) = 2.0;
    Matrix expected(1, 2);
    expected << 0, 2;
    EXPECT_EQ(ff_forward(g, Matrix::Zero(1, 2)), expected);
}

TEST(FeedForward, GeneralizedWithEqualColumnsReducesToStandard) {
    std::mt19937_64 gen(6);
    const auto ff = random_ff(gen, 4, 3);
    const auto g = GeneralizedFeedForwardLayer::from_standard(ff, 5);
    EXPECT_TRUE(g.has_uniform_bias());
    const Matrix Z = random_matrix(gen, 3, 5);
    EXPECT_LE((g.apply(Z) - ff.apply(Z)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(FeedForward, TokenWisePermutation) {
    std::mt19937_64 gen(7);
    const auto ff = random_ff(gen, 6, 3);
    const Matrix Z = random_matrix(gen, 3, 5);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(5);
    perm.indices() << 3, 0, 4, 1, 2;
    EXPECT_LE((ff.apply(Z * perm) - ff.apply(Z) * perm).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Network, AllIdentityReturnsInput) {
    TransformerNetwork net;
    net.spec = ArchSpec{2, 2, 3, 2, 1, 1, 1, 2};
    net.embedding = {Matrix::Identity(2, 2), Matrix::Zero(2, 3)};
    net.blocks = {detail::identity_block(2), detail::identity_block(2)};
    net.projection.E_out = Matrix::Identity(2, 2);
    std::mt19937_64 gen(8);
    const Matrix X = random_matrix(gen, 2, 3);
    EXPECT_EQ(network_forward(net, X), X);
    EXPECT_THROW(network_forward(net, Matrix::Zero(2, 2)), StructuralError);
}

TEST(Network, ParamCountExamples) {
    EXPECT_EQ(param_count(ArchSpec{1, 1, 2, 1, 1, 1, 10, 2}), 74u);
    EXPECT_EQ(param_count(ArchSpec{1, 1, 1, 1, 1, 1, 1, 1}), 11u);
    const ArchSpec s{2, 3, 4, 5, 2, 3, 7, 3};
    ArchSpec s2 = s;
    s2.W *= 2;
    EXPECT_EQ(param_count(s2) - param_count(s), s.L * (2 * s.D + 1) * s.W);
}

TEST(Network, ParamCountMatchesMaterializedWeights) {
    std::mt19937_64 gen(10);
    for (int i = 0; i < 20; ++i) {
        const ArchSpec spec = random_spec(gen);
        const auto net = random_network(gen, spec);
        EXPECT_EQ(enumerate_weights(materialize(net)), param_count(spec)) << spec.to_string();
    }
}

TEST(Network, MaterializeKeepsTheMap) {
    std::mt19937_64 gen(12);
    auto net = random_network(gen, ArchSpec{2, 2, 3, 4, 2, 2, 5, 2});
    net.blocks[0].attention.heads.pop_back();
    net.blocks[1].feedforward = random_ff(gen, 3, 4);
    const auto full = materialize(net);
    EXPECT_EQ(enumerate_weights(full), param_count(net.spec));
    const Matrix X = random_matrix(gen, 2, 3);
    EXPECT_LE((full(X) - net(X)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Network, ConcatOfIdentitiesIsIdentity) {
    TransformerNetwork id;
    id.spec = ArchSpec{1, 1, 2, 1, 1, 1, 1, 1};
    id.embedding = {Matrix::Identity(1, 1), Matrix::Zero(1, 2)};
    id.blocks = {detail::identity_block(1)};
    id.projection.E_out = Matrix::Identity(1, 1);
    const auto both = concat_networks(id, id);
    Matrix X(2, 2);
    X << 1, 2, 3, 4;
    EXPECT_EQ(network_forward(both, X), X);
}

TEST(Network, ConcatSpecArithmetic) {
    std::mt19937_64 gen(13);
    const auto a = random_network(gen, ArchSpec{1, 1, 2, 2, 1, 1, 3, 1});
    const auto b = random_network(gen, ArchSpec{1, 1, 2, 3, 2, 2, 4, 2});
    const auto c = concat_networks(a, b);
    EXPECT_EQ(c.spec.D, 5u);
    EXPECT_EQ(c.spec.H, 3u);
    EXPECT_EQ(c.spec.S, 2u);
    EXPECT_EQ(c.spec.W, 7u);
    EXPECT_EQ(c.spec.L, 2u);
    const auto s = sum_networks(a, b);
    EXPECT_EQ(s.spec.D, 5u);
    EXPECT_EQ(s.spec.H, 3u);
    EXPECT_EQ(s.spec.W, 7u);
    EXPECT_EQ(s.spec.L, 2u);
    EXPECT_EQ(s.spec.d_x, 1u);
}

TEST(Network, ConcatStackedForward) {
    std::mt19937_64 gen(14);
    for (int trial = 0; trial < 10; ++trial) {
        const auto a = random_network(gen, ArchSpec{2, 1, 3, 3, 2, 2, 4, 2});
        const auto b = random_network(gen, ArchSpec{1, 2, 3, 2, 1, 1, 3, 3});
        const auto c = concat_networks(a, b);
        const Matrix X = random_matrix(gen, 2, 3);
        const Matrix Y = random_matrix(gen, 1, 3);
        const Matrix expected = vstack(a(X), b(Y));
        EXPECT_LE((network_forward(c, vstack(X, Y)) - expected).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Network, ConcatRejectsDifferentSequenceLength) {
    std::mt19937_64 gen(15);
    const auto a = random_network(gen, ArchSpec{1, 1, 2, 2, 1, 1, 2, 1});
    const auto b = random_network(gen, ArchSpec{1, 1, 3, 2, 1, 1, 2, 1});
    EXPECT_THROW(concat_networks(a, b), StructuralError);
}

TEST(Network, SumForward) {
    std::mt19937_64 gen(16);
    const auto a = random_network(gen, ArchSpec{2, 2, 3, 3, 2, 2, 4, 2});
    auto zero = random_network(gen, ArchSpec{2, 2, 3, 2, 1, 1, 3, 1});
    zero.projection.E_out.setZero();
    const Matrix X = random_matrix(gen, 2, 3);
    EXPECT_LE((sum_networks(a, zero)(X) - a(X)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((sum_networks(a, a)(X) - 2.0 * a(X)).cwiseAbs().maxCoeff(), 1e-10);
    const auto other = random_network(gen, ArchSpec{1, 2, 3, 2, 1, 1, 3, 1});
    EXPECT_THROW(sum_networks(a, other), StructuralError);
}

TEST(FfStack, MidNetworkOnColumn) {
    const auto stack = fnn_to_ff_stack(build_mid_fnn());
    Matrix X(3, 1);
    X << 1, 3, 2;
    EXPECT_EQ(stack.apply(X)(0, 0), 2.0);
}

TEST(FfStack, MatchesSourceFnnColumnwise) {
    std::mt19937_64 gen(17);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const Fnn f = random_fnn(gen, 3, 6, 2 + static_cast<std::size_t>(trial % 3), 2);
        const auto stack = fnn_to_ff_stack(f);
        const auto net = network_from_ff_stack(stack, 100);
        const Matrix X = random_matrix(gen, 3, 100);
        worst = std::max(worst, (network_forward(net, X) - fnn_forward_columns(f, X)).cwiseAbs().maxCoeff());
    }
    EXPECT_LE(worst, 1e-9);
}

TEST(FfStack, WidthAtMostThreeW) {
    std::mt19937_64 gen(18);
    const Fnn f = random_fnn(gen, 3, 14, 3, 2);
    const auto stack = fnn_to_ff_stack(f);
    EXPECT_EQ(stack.layers.size(), 3u);
    for (const auto& l : stack.layers) EXPECT_LE(l.width(), 42);
}

TEST(FfStack, DepthOneUnsupported) {
    std::mt19937_64 gen(19);
    EXPECT_THROW(fnn_to_ff_stack(random_fnn(gen, 2, 3, 1, 1)), StructuralError);
    EXPECT_NO_THROW(fnn_to_ff_stack(pad_depth(random_fnn(gen, 2, 3, 1, 1), 2)));
}

TEST(Serialize, RoundTripIsBitExact) {
    std::mt19937_64 gen(20);
    for (int trial = 0; trial < 5; ++trial) {
        auto net = random_network(gen, random_spec(gen));
        if (trial % 2 == 1)
            net.blocks[0].feedforward = GeneralizedFeedForwardLayer::from_standard(
                std::get<FeedForwardLayer>(net.blocks[0].feedforward), static_cast<Index>(net.spec.n));
        const auto text = network_to_json(net);
        const auto back = network_from_json(text);
        EXPECT_EQ(network_to_json(back), text);
        const Matrix X = random_matrix(gen, static_cast<Index>(net.spec.d_x), static_cast<Index>(net.spec.n));
        EXPECT_EQ(back(X), net(X));
    }
}
