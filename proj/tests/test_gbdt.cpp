#include <gtest/gtest.h>

#include <random>

#include "hgml/gbdt.hpp"
#include "hgml/metrics.hpp"

using namespace hgml;

namespace {

struct Sample {
    Matrix x;
    Labels y;
};

Sample random_sample(std::uint64_t seed, std::size_t n, std::size_t d, double noise) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Sample s{Matrix(n, d), {}};
    for (std::size_t i = 0; i < n; ++i) {
        double score = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            s.x(i, j) = g(rng);
            score += j % 2 ? s.x(i, j) : -0.5 * s.x(i, j);
        }
        int label = score > 0.0 ? 1 : 0;
        if (u(rng) < noise) label = 1 - label;
        s.y.push_back(label);
    }
    if (std::count(s.y.begin(), s.y.end(), 1) == 0) s.y[0] = 1;
    if (std::count(s.y.begin(), s.y.end(), 0) == 0) s.y[0] = 0;
    return s;
}

Sample threshold_1d(std::size_t n) {
    Sample s{Matrix(n, 1), {}};
    for (std::size_t i = 0; i < n; ++i) {
        s.x(i, 0) = static_cast<double>(i) / static_cast<double>(n);
        s.y.push_back(s.x(i, 0) >= 0.5 ? 1 : 0);
    }
    return s;
}

}  // namespace

TEST(Gbdt, FitsSeparableData) {
    const auto s = threshold_1d(200);
    GbdtParams p;
    p.max_depth = 2;
    p.rounds = 50;
    const auto m = train_gbdt(s.x, s.y, p);
    EXPECT_EQ(evaluate_accuracy(m, s.x, s.y), 1.0);
    EXPECT_LT(m.loss_curve.back(), m.loss_curve.front());
}

TEST(Gbdt, SingleRoundSingleTree) {
    const auto s = threshold_1d(50);
    GbdtParams p;
    p.rounds = 1;
    const auto m = train_gbdt(s.x, s.y, p);
    EXPECT_EQ(m.trees.size(), 1u);
    EXPECT_EQ(m.loss_curve.size(), 1u);
    EXPECT_EQ(evaluate_accuracy(m, s.x, s.y), 1.0);
}

TEST(Gbdt, TrainingLossNeverIncreases) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = random_sample(seed, 120, 4, 0.1);
        GbdtParams p;
        p.max_depth = 3;
        p.rounds = 30;
        p.learning_rate = 0.2;
        const auto m = train_gbdt(s.x, s.y, p);
        ASSERT_EQ(m.loss_curve.size(), 30u);
        for (std::size_t r = 1; r < m.loss_curve.size(); ++r) EXPECT_LE(m.loss_curve[r], m.loss_curve[r - 1] + 1e-12);
        EXPECT_NEAR(m.loss_curve.back(), mean_logistic_loss(m, s.x, s.y), 1e-12);
    }
}

TEST(Gbdt, ZeroTreesPredictsPrevalence) {
    const auto s = random_sample(4, 80, 3, 0.0);
    const auto m = train_gbdt(s.x, s.y, GbdtParams{});
    GbdtModel empty = m;
    empty.trees.clear();
    const double prevalence = static_cast<double>(std::count(s.y.begin(), s.y.end(), 1)) / 80.0;
    EXPECT_NEAR(predict_proba(empty, s.x.row(0)), prevalence, 1e-12);

    Matrix x(2, 3, 0.0);
    Labels y{0, 1};
    const auto balanced = train_gbdt(x, y, GbdtParams{});
    GbdtModel none = balanced;
    none.trees.clear();
    EXPECT_DOUBLE_EQ(predict_proba(none, x.row(0)), 0.5);
}

TEST(Gbdt, BatchMatchesPerRow) {
    const auto s = random_sample(5, 100, 5, 0.2);
    const auto m = train_gbdt(s.x, s.y, GbdtParams{});
    const auto batch = predict_proba(m, s.x);
    const auto labels = predict(m, s.x);
    for (std::size_t i = 0; i < s.x.rows; ++i) {
        EXPECT_EQ(batch[i], predict_proba(m, s.x.row(i)));
        EXPECT_EQ(labels[i], batch[i] >= 0.5 ? 1 : 0);
        EXPECT_GT(batch[i], 0.0);
        EXPECT_LT(batch[i], 1.0);
    }
}

TEST(Gbdt, PrefixOfTreesEqualsShorterTraining) {
    const auto s = random_sample(6, 150, 4, 0.15);
    GbdtParams p;
    p.rounds = 40;
    p.max_depth = 3;
    const auto full = train_gbdt(s.x, s.y, p);
    p.rounds = 15;
    const auto part = train_gbdt(s.x, s.y, p);
    EXPECT_EQ(predict(full, s.x, 15), predict(part, s.x));
    for (std::size_t i = 0; i < s.x.rows; ++i) EXPECT_EQ(full.margin(s.x.row(i), 15), part.margin(s.x.row(i)));
}

TEST(Gbdt, TreesRespectMaxDepth) {
    const auto s = random_sample(7, 300, 6, 0.3);
    for (std::size_t depth : {1u, 2u, 4u}) {
        GbdtParams p;
        p.max_depth = depth;
        p.rounds = 10;
        const auto m = train_gbdt(s.x, s.y, p);
        for (const auto& t : m.trees) EXPECT_LE(t.depth(), depth);
    }
}

TEST(Gbdt, DeterministicAcrossSeeds) {
    const auto s = random_sample(8, 100, 3, 0.1);
    const auto a = train_gbdt(s.x, s.y, GbdtParams{}, 1);
    const auto b = train_gbdt(s.x, s.y, GbdtParams{}, 2);
    EXPECT_EQ(predict_proba(a, s.x), predict_proba(b, s.x));
}

TEST(Gbdt, InputErrors) {
    const auto s = random_sample(9, 20, 2, 0.0);
    EXPECT_THROW(train_gbdt(Matrix{}, {}, GbdtParams{}), Error);
    Labels short_y(s.y.begin(), s.y.end() - 1);
    EXPECT_THROW(train_gbdt(s.x, short_y, GbdtParams{}), Error);
    EXPECT_THROW(train_gbdt(s.x, Labels(20, 1), GbdtParams{}), Error);
    Labels bad = s.y;
    bad[0] = 2;
    EXPECT_THROW(train_gbdt(s.x, bad, GbdtParams{}), Error);
    GbdtParams p;
    p.rounds = 0;
    EXPECT_THROW(train_gbdt(s.x, s.y, p), Error);
    const auto m = train_gbdt(s.x, s.y, GbdtParams{});
    EXPECT_THROW(predict(m, Matrix(3, 5)), Error);
}
