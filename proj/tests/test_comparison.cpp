#include <gtest/gtest.h>

#include <sstream>

#include "hgml/annotator.hpp"
#include "hgml/comparison.hpp"
#include "hgml/pipeline.hpp"

using namespace hgml;

namespace {

struct Fixture {
    Dataset ds;
    SplitSet split;
    std::vector<PolygonModel> models;
};

const Fixture& fixture() {
    static const Fixture f = [] {
        Fixture f;
        f.ds = synth_clusters(6, 2, 300, 0.6, 13);
        f.split = make_splits(f.ds, {60, 60, 100, 400}, 13);
        const std::vector<DimensionPair> pairs{{0, 1}, {0, 2}, {1, 3}, {2, 4}};
        auto res = auto_annotate(f.ds, f.split, pairs, 2, AnnotatorBudget{}, AcceptanceGate{}, 13, "h");
        for (auto& r : res.accepted) f.models.push_back(r.model);
        return f;
    }();
    return f;
}

std::vector<GbdtParams> small_grid() {
    const double lr[] = {0.3};
    const std::size_t depth[] = {2, 3};
    const std::size_t rounds[] = {20};
    return make_grid(lr, depth, rounds);
}

}  // namespace

TEST(Comparison, RowCountsMatchSplit) {
    const auto& f = fixture();
    ASSERT_FALSE(f.models.empty());
    const auto grid = small_grid();
    const auto res = run_comparison(f.ds, f.split, f.models, FeatureMode::literal, grid, {3, 1, 1});
    EXPECT_EQ(res.row.name, "synth");
    EXPECT_EQ(res.row.m_prime, f.split.learner_train.size());
    EXPECT_EQ(res.row.test_count, 200u);
    EXPECT_EQ(res.row.n_models, f.models.size());
    EXPECT_EQ(res.row.d_prime, used_dimensions(f.models).size());
    EXPECT_GT(res.row.data_accuracy, 0.8);
    EXPECT_GT(res.row.feature_accuracy, 0.8);
    EXPECT_EQ(res.raw.loss_curve.size(), res.raw.cv.chosen.rounds);
}

TEST(Comparison, DeterministicUnderSeed) {
    const auto& f = fixture();
    const auto grid = small_grid();
    const auto a = run_comparison(f.ds, f.split, f.models, FeatureMode::signed_, grid, {3, 5, 1});
    const auto b = run_comparison(f.ds, f.split, f.models, FeatureMode::signed_, grid, {3, 5, 4});
    EXPECT_EQ(a.row, b.row);
    EXPECT_EQ(a.raw.loss_curve, b.raw.loss_curve);
    EXPECT_EQ(a.features.loss_curve, b.features.loss_curve);
}

TEST(Comparison, UninformativeFeaturesScoreNearChance) {
    const auto& f = fixture();
    PolygonModel far;
    far.id = "far";
    far.stats = f.models.front().stats;
    far.rectangles = {{100, 101, 100, 101, 1, 0}};
    far.validation_accuracy = 1.0;
    far.accuracy = 1.0;
    const std::vector<PolygonModel> models{far};
    const auto res = run_comparison(f.ds, f.split, models, FeatureMode::literal, small_grid(), {3, 1, 1});
    EXPECT_NEAR(res.row.feature_accuracy, 0.5, 0.05);
}

TEST(Comparison, RequiresModels) {
    const auto& f = fixture();
    EXPECT_THROW(run_comparison(f.ds, f.split, std::vector<PolygonModel>{}, FeatureMode::literal, small_grid()), Error);
}

TEST(Report, TextTable) {
    ComparisonReport report;
    report.rows = {{"Credit", 2000, 1000, 6, 0.7543, 12, 0.7311}, {"synth", 1600, 400, 2, 0.99, 3, 0.9875}};
    std::ostringstream out;
    write_report_text(report, out);
    const std::string expected =
        "Name   |   M' | M-M' | D' |  Data |  N | Features\n"
        "-------+------+------+----+-------+----+---------\n"
        "Credit | 2000 | 1000 |  6 | 0.754 | 12 |    0.731\n"
        "synth  | 1600 |  400 |  2 | 0.990 |  3 |    0.988\n";
    EXPECT_EQ(out.str(), expected);
}

TEST(Report, CsvAndJson) {
    ComparisonReport report;
    report.rows = {{"synth", 1600, 400, 2, 0.99, 3, 0.9875}};
    std::ostringstream out;
    write_report_csv(report, out);
    EXPECT_EQ(out.str(),
              "name,m_prime,m_minus_m_prime,d_prime,data_accuracy,n,feature_accuracy\n"
              "synth,1600,400,2,0.990000,3,0.987500\n");
    EXPECT_EQ(comparison_row_from_json(to_json(report.rows[0])), report.rows[0]);
}
