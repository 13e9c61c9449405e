#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "tfa/capacity.hpp"

using namespace tfa;
using namespace tfa::testing;

TEST(Capacity, VcSpotValues) {
    // 30^2 + 11*30*(100 + log2 270) = 900 + 330 * 108.0768156 = 36565.349.
    EXPECT_NEAR(vc_bound(10, 100, 2), 900.0 + 330.0 * (100.0 + std::log(270.0) / std::log(2.0)), 1e-9);
    EXPECT_NEAR(vc_bound(10, 100, 2), 36565.349, 0.001);
    EXPECT_NEAR(vc_bound(1, 1, 0), 1.0 + 11.0 * (1.0 + std::log2(9.0)), 1e-12);
    EXPECT_NEAR(vc_bound(1, 1, 0), 46.87, 0.01);
}

TEST(Capacity, VcMonotoneSweep) {
    const std::vector<double> ds{1, 3, 10, 100, 1000}, ts{1, 5, 50, 500, 5e4}, qs{0, 1, 2, 8, 64};
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j)
            for (std::size_t k = 0; k < 5; ++k) {
                const double v = vc_bound(ds[i], ts[j], qs[k]);
                EXPECT_GT(v, 0.0);
                if (i + 1 < 5) EXPECT_LT(v, vc_bound(ds[i + 1], ts[j], qs[k]));
                if (j + 1 < 5) EXPECT_LT(v, vc_bound(ds[i], ts[j + 1], qs[k]));
                if (k + 1 < 5) EXPECT_LT(v, vc_bound(ds[i], ts[j], qs[k + 1]));
            }
}

TEST(Capacity, CountsMatchCountedEvaluator) {
    std::mt19937_64 gen(11);
    for (int r = 0; r < 20; ++r) {
        const ArchSpec s = random_spec(gen);
        const TransformerNetwork net = random_network(gen, s, 0.3);
        const Matrix X = random_matrix(gen, static_cast<Index>(s.d_x), static_cast<Index>(s.n));
        OpTally tally;
        const Matrix Y = reference_forward(net, X, tally);
        EXPECT_LE((Y - net(X)).cwiseAbs().maxCoeff(), 1e-10) << s.to_string();
        const OpCounts c = op_counts(s);
        EXPECT_EQ(c.t, tally.total()) << s.to_string();
        EXPECT_EQ(c.q, tally.exp) << s.to_string();
        EXPECT_EQ(c.d, param_count(s));
        EXPECT_EQ(c.d, enumerate_weights(net));
        EXPECT_LE(c.q, c.t);
    }
}

TEST(Capacity, ExpCountExample) {
    ArchSpec s;
    s.L = 2;
    s.H = 1;
    s.n = 2;
    s.D = 3;
    EXPECT_EQ(op_counts(s).q, 8u);
}

TEST(Capacity, CountsMonotoneInEveryField) {
    std::mt19937_64 gen(12);
    for (int r = 0; r < 50; ++r) {
        const ArchSpec s = random_spec(gen);
        const OpCounts base = op_counts(s);
        for (int f = 0; f < 8; ++f) {
            ArchSpec t = s;
            std::size_t* fields[] = {&t.d_x, &t.d_y, &t.n, &t.D, &t.H, &t.S, &t.W, &t.L};
            ++*fields[f];
            if (t.S > t.D) continue;
            const OpCounts c = op_counts(t);
            EXPECT_GT(c.t, base.t) << f;
            EXPECT_GE(c.d, base.d);
            EXPECT_GE(c.q, base.q);
        }
    }
}

TEST(Capacity, CoveringBound) {
    ArchSpec s;
    s.D = 4;
    s.W = 8;
    s.n = 2;
    const double vc = vc_bound(op_counts(s));
    EXPECT_NEAR(covering_bound(s, 0.5, 1.0, std::numbers::e * 0.5), 2.0 * vc, 1e-9 * vc);
    double prev = covering_bound(s, 1e-4, 100, 1);
    for (double delta : {1e-3, 1e-2, 1e-1, 1.0}) {
        const double c = covering_bound(s, delta, 100, 1);
        EXPECT_LT(c, prev);
        prev = c;
    }
    EXPECT_NEAR(covering_bound(s, 0.01, 50, 2) / vc, std::log(std::numbers::e * 50 * 2 / 0.01), 1e-12);
    EXPECT_THROW(covering_bound(s, 0.0, 1, 1), ConfigError);
}

TEST(Capacity, QuadraticInWidth) {
    ArchSpec s;
    s.D = 4;
    s.n = 2;
    s.H = 2;
    s.S = 2;
    s.L = 2;
    for (std::size_t W = 1024; W <= (1u << 16); W *= 2) {
        ArchSpec s2 = s;
        s.W = W;
        s2.W = 2 * W;
        const double ratio = vc_bound(op_counts(s2)) / vc_bound(op_counts(s));
        EXPECT_GE(ratio, 3.5) << W;
        EXPECT_LE(ratio, 4.0) << W;
    }
}

TEST(Capacity, CsvRow) {
    ArchSpec s;
    const CapacityRow r = capacity_row(s, 0.1, 10, 1);
    const std::string row = to_csv_row(r);
    const std::string header = capacity_csv_header();
    EXPECT_EQ(std::count(row.begin(), row.end(), ','), std::count(header.begin(), header.end(), ','));
    EXPECT_EQ(row.substr(0, 16), "1,1,1,1,1,1,1,1,");
}
