#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "hgml/feature_transform.hpp"
#include "oracles.hpp"

using namespace hgml;
using oracle::LabeledPoint;

namespace {

PolygonModel scored(std::string id, std::vector<Rectangle> rects, double macc, DimensionPair pair = {0, 1}) {
    PolygonModel m;
    m.id = std::move(id);
    m.stats = oracle::identity_stats();
    m.stats.pair = pair;
    m.rectangles = std::move(rects);
    m.validation_accuracy = macc;
    m.accuracy = macc;
    return m;
}

}  // namespace

TEST(FeatureValue, UncoveredSampleIsZero) {
    const auto m = scored("a", {{0, 1, 0, 1, 1, 0}}, 0.9);
    const std::vector<double> x{5.0, 5.0};
    EXPECT_EQ(feature_value(x, m, FeatureMode::literal), 0.0);
    EXPECT_EQ(feature_value(x, m, FeatureMode::signed_), 0.0);
}

TEST(FeatureValue, LiteralAndSigned) {
    const auto pos = scored("a", {{0, 1, 0, 1, 1, 0}}, 0.75);
    const auto neg = scored("b", {{0, 1, 0, 1, 0, 0}}, 0.6);
    const std::vector<double> x{0.5, 0.5};
    EXPECT_EQ(feature_value(x, pos, FeatureMode::literal), 0.75);
    EXPECT_EQ(feature_value(x, neg, FeatureMode::literal), 0.6);
    EXPECT_EQ(feature_value(x, neg, FeatureMode::signed_), -0.6);
}

TEST(FeatureValue, UnscoredModelIsError) {
    auto m = scored("a", {{0, 1, 0, 1, 1, 0}}, 0.75);
    m.accuracy.reset();
    const std::vector<double> x{0.5, 0.5};
    EXPECT_THROW(feature_value(x, m, FeatureMode::literal), Error);
}

TEST(FeatureMatrix, CoveredAndUncoveredColumn) {
    const auto ds = oracle::plane_dataset({{0.5, 0.5, 1}, {3.0, 3.0, 0}});
    const std::vector<PolygonModel> models{scored("m0", {{0, 1, 0, 1, 1, 0}}, 0.8)};
    const auto fm = build_feature_matrix(ds, oracle::iota_indices(2), models, FeatureMode::literal);
    EXPECT_EQ(fm.values.data, (std::vector<double>{0.8, 0.0}));
    EXPECT_EQ(fm.labels, (Labels{1, 0}));
    EXPECT_EQ(fm.column_ids, (std::vector<std::string>{"m0"}));
}

TEST(FeatureMatrix, MatchesOracleOnRandomInstances) {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> acc(0.5, 1.0);
    for (int t = 0; t < 50; ++t) {
        std::vector<PolygonModel> models;
        for (int k = 0; k < 4; ++k) models.push_back(scored("m" + std::to_string(k), oracle::random_rectangles(rng, 5), acc(rng)));
        const auto pts = oracle::random_points(rng, 30, models[0].rectangles);
        const auto ds = oracle::plane_dataset(pts);
        for (auto mode : {FeatureMode::literal, FeatureMode::signed_}) {
            const auto fm = build_feature_matrix(ds, oracle::iota_indices(pts.size()), models, mode);
            for (std::size_t r = 0; r < pts.size(); ++r)
                for (std::size_t c = 0; c < models.size(); ++c)
                    EXPECT_EQ(fm.values(r, c), oracle::feature_oracle(models[c].rectangles, pts[r].u, pts[r].v,
                                                                      *models[c].accuracy,
                                                                      mode == FeatureMode::signed_));
        }
    }
}

TEST(FeatureMatrix, PermutingModelsPermutesColumns) {
    std::mt19937_64 rng(42);
    std::vector<PolygonModel> models;
    for (int k = 0; k < 5; ++k) models.push_back(scored("m" + std::to_string(k), oracle::random_rectangles(rng, 4), 0.6 + 0.05 * k));
    const auto ds = oracle::plane_dataset(oracle::random_points(rng, 40, {}));
    const auto idx = oracle::iota_indices(ds.rows());
    const auto base = build_feature_matrix(ds, idx, models, FeatureMode::signed_);
    const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    std::vector<PolygonModel> shuffled;
    for (auto p : perm) shuffled.push_back(models[p]);
    const auto moved = build_feature_matrix(ds, idx, shuffled, FeatureMode::signed_);
    for (std::size_t r = 0; r < ds.rows(); ++r)
        for (std::size_t c = 0; c < perm.size(); ++c) EXPECT_EQ(moved.values(r, c), base.values(r, perm[c]));
}

TEST(FeatureMatrix, NoModelsIsError) {
    const auto ds = oracle::plane_dataset({{0, 0, 0}});
    EXPECT_THROW(build_feature_matrix(ds, oracle::iota_indices(1), std::vector<PolygonModel>{}, FeatureMode::literal),
                 Error);
}

TEST(UsedDimensions, UnionOfPairs) {
    const std::vector<PolygonModel> models{scored("a", {{0, 1, 0, 1, 1, 0}}, 0.7, {0, 3}),
                                           scored("b", {{0, 1, 0, 1, 1, 0}}, 0.7, {3, 7}),
                                           scored("c", {{0, 1, 0, 1, 1, 0}}, 0.7, {0, 7})};
    EXPECT_EQ(used_dimensions(models), (IndexList{0, 3, 7}));
}

TEST(FeatureCsv, RoundTripWithComment) {
    std::mt19937_64 rng(43);
    std::vector<PolygonModel> models;
    for (int k = 0; k < 3; ++k) models.push_back(scored("id" + std::to_string(k), oracle::random_rectangles(rng, 4), 0.123456789 + k * 0.1));
    const auto ds = oracle::plane_dataset(oracle::random_points(rng, 25, {}));
    const auto fm = build_feature_matrix(ds, oracle::iota_indices(ds.rows()), models, FeatureMode::signed_);
    std::stringstream io;
    write_feature_csv(fm, io, "dataset_hash=abc");
    std::vector<std::string> comments;
    const auto back = read_feature_csv(io, &comments);
    EXPECT_EQ(comments, (std::vector<std::string>{"dataset_hash=abc"}));
    EXPECT_EQ(back.values, fm.values);
    EXPECT_EQ(back.column_ids, fm.column_ids);
    EXPECT_EQ(back.sample_ids, fm.sample_ids);
    EXPECT_EQ(back.labels, fm.labels);
}

TEST(FeatureCsv, MalformedInput) {
    std::istringstream empty("");
    EXPECT_THROW(read_feature_csv(empty), Error);
    std::istringstream header("id,a,label\n");
    EXPECT_THROW(read_feature_csv(header), Error);
    std::istringstream short_row("sample_id,a,label\n0,1\n");
    EXPECT_THROW(read_feature_csv(short_row), Error);
    std::istringstream bad_label("sample_id,a,label\n0,1,3\n");
    EXPECT_THROW(read_feature_csv(bad_label), Error);
}
