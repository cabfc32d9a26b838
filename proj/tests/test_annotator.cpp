#include <gtest/gtest.h>

#include "hgml/annotator.hpp"

using namespace hgml;

namespace {

// Two informative columns followed by pure noise columns.
struct Case {
    Dataset ds;
    SplitSet split;
};

Case make_case(double spread, std::uint64_t seed) {
    Case c;
    c.ds = synth_clusters(4, 2, 300, spread, seed);
    c.split = make_splits(c.ds, {100, 100, 200, 500}, seed);
    return c;
}

void expect_well_formed(const PolygonModel& m, const AnnotatorBudget& budget) {
    EXPECT_NO_THROW(m.validate());
    EXPECT_GE(m.rectangles.size(), 1u);
    EXPECT_LE(m.rectangles.size(), budget.max_rectangles);
    EXPECT_EQ(m.provenance.kind, Provenance::Kind::synthetic);
    EXPECT_FALSE(m.accuracy.has_value());
}

}  // namespace

TEST(Annotator, SeparatedClustersNeedFewRectangles) {
    const auto c = make_case(0.1, 1);
    const AnnotatorBudget budget;
    auto m = propose_model(c.ds, c.split, {0, 1}, budget, 1);
    expect_well_formed(m, budget);
    EXPECT_LE(m.rectangles.size(), 2u);
    ASSERT_TRUE(accept_model(m, c.ds, c.split));
    EXPECT_GT(*m.validation_accuracy, 0.9);
}

TEST(Annotator, NoisePairsAreMostlyRejected) {
    std::size_t rejected = 0;
    const AnnotatorBudget budget;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto c = make_case(0.5, 1000 + seed);
        auto m = propose_model(c.ds, c.split, {2, 3}, budget, seed);
        expect_well_formed(m, budget);
        if (!accept_model(m, c.ds, c.split)) ++rejected;
    }
    EXPECT_GT(rejected, 50u);
}

TEST(Annotator, InformativePairsAreAccepted) {
    std::size_t accepted = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto c = make_case(0.8, 2000 + seed);
        auto m = propose_model(c.ds, c.split, {0, 1}, AnnotatorBudget{}, seed);
        if (accept_model(m, c.ds, c.split)) ++accepted;
    }
    EXPECT_EQ(accepted, 20u);
}

TEST(Annotator, SingleRectangleBudget) {
    const auto c = make_case(0.8, 3);
    AnnotatorBudget budget;
    budget.max_rectangles = 1;
    budget.target_accuracy = 1.0;
    for (DimensionPair p : {DimensionPair{0, 1}, DimensionPair{1, 2}, DimensionPair{2, 3}}) {
        const auto m = propose_model(c.ds, c.split, p, budget, 5);
        expect_well_formed(m, budget);
        EXPECT_EQ(m.rectangles.size(), 1u);
    }
}

TEST(Annotator, DeterministicUnderSeed) {
    const auto c = make_case(0.8, 4);
    AnnotatorBudget budget;
    budget.target_accuracy = 1.0;
    const auto a = propose_model(c.ds, c.split, {0, 2}, budget, 9);
    EXPECT_EQ(a, propose_model(c.ds, c.split, {0, 2}, budget, 9));
}

TEST(Annotator, BudgetValidation) {
    const auto c = make_case(0.8, 5);
    AnnotatorBudget budget;
    budget.max_rectangles = 0;
    EXPECT_THROW(propose_model(c.ds, c.split, {0, 1}, budget), Error);
    budget = {};
    budget.target_accuracy = 0.5;
    EXPECT_THROW(propose_model(c.ds, c.split, {0, 1}, budget), Error);
}
