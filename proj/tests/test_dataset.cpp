#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "hgml/dataset.hpp"

using namespace hgml;

namespace {

Schema continuous2() { return {{"a", ColumnKind::continuous}, {"b", ColumnKind::continuous}}; }

Dataset parse(const std::string& text, const Schema& schema, const std::string& label = "y") {
    std::istringstream in(text);
    return parse_csv(in, schema, label, "t");
}

Dataset labeled(std::size_t ones, std::size_t zeros) {
    Dataset ds;
    ds.columns = continuous2();
    for (std::size_t i = 0; i < ones + zeros; ++i) {
        ds.values.push_back(static_cast<double>(i));
        ds.values.push_back(static_cast<double>(i % 7));
        ds.labels.push_back(i < ones ? 1 : 0);
    }
    return ds;
}

std::multiset<std::vector<double>> row_multiset(const Dataset& ds) {
    std::multiset<std::vector<double>> rows;
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        auto r = ds.row(i);
        std::vector<double> v(r.begin(), r.end());
        v.push_back(ds.labels[i]);
        rows.insert(v);
    }
    return rows;
}

}  // namespace

TEST(LoadCsv, SmallestWellFormedFile) {
    const auto ds = parse("a,b,y\n1,2,b\n3,4,a\n5,6,a\n7,8,b\n", continuous2());
    EXPECT_EQ(ds.dims(), 2u);
    EXPECT_EQ(ds.rows(), 4u);
    EXPECT_EQ(ds.labels, (Labels{1, 0, 0, 1}));
    EXPECT_DOUBLE_EQ(ds.at(2, 1), 6.0);
}

TEST(LoadCsv, CreditShapedFileHasTenDimensions) {
    Schema schema;
    std::string header, row;
    for (int k = 0; k < 6; ++k) {
        schema.push_back({"i" + std::to_string(k), ColumnKind::integer});
        header += "i" + std::to_string(k) + ",";
        row += std::to_string(k) + ",";
    }
    for (int k = 0; k < 4; ++k) {
        schema.push_back({"c" + std::to_string(k), ColumnKind::continuous});
        header += "c" + std::to_string(k) + ",";
        row += "0.5,";
    }
    const auto ds = parse(header + "y\n" + row + "0\n" + row + "1\n", schema);
    EXPECT_EQ(ds.dims(), 10u);
}

TEST(LoadCsv, IntegerColumnRejectsFraction) {
    const Schema schema{{"a", ColumnKind::integer}, {"b", ColumnKind::continuous}};
    EXPECT_THROW(parse("a,b,y\n3.5,1,0\n2,1,1\n", schema), Error);
}

TEST(LoadCsv, NominalCodedByFirstAppearance) {
    const Schema schema{{"color", ColumnKind::nominal}, {"b", ColumnKind::continuous}};
    const auto ds = parse("color,b,y\nred,1,0\nblue,2,1\nred,3,1\ngreen,4,0\n", schema);
    EXPECT_EQ(ds.at(0, 0), 0.0);
    EXPECT_EQ(ds.at(1, 0), 1.0);
    EXPECT_EQ(ds.at(2, 0), 0.0);
    EXPECT_EQ(ds.at(3, 0), 2.0);
}

TEST(LoadCsv, LabelColumnAnywhereAndLexicographicMapping) {
    const auto ds = parse("y,a,b\npos,1,2\nneg,3,4\n", continuous2());
    EXPECT_EQ(ds.labels, (Labels{1, 0}));
}

TEST(LoadCsv, Errors) {
    EXPECT_THROW(parse("", continuous2()), Error);
    EXPECT_THROW(parse("a,b,y\n", continuous2()), Error);
    EXPECT_THROW(parse("a,c,y\n1,2,0\n", continuous2()), Error);
    EXPECT_THROW(parse("a,b,y\n1,2,0\n1,2,1\n1,2,2\n", continuous2()), Error);
    EXPECT_THROW(parse("a,b,y\n1,x,0\n", continuous2()), Error);
    EXPECT_THROW(parse("a,b,y\n1,2\n", continuous2()), Error);
    EXPECT_THROW(parse("a,b\n1,2\n", continuous2()), Error);
    EXPECT_THROW(load_csv("/nonexistent/file.csv", continuous2(), "y"), Error);
}

TEST(Schema, ParsesSidecarAndRejectsUnknownKinds) {
    std::istringstream ok("# comment\nage,integer\ncity,nominal\n\nincome,continuous\n");
    const auto schema = parse_schema(ok);
    ASSERT_EQ(schema.size(), 3u);
    EXPECT_EQ(schema[1].kind, ColumnKind::nominal);
    std::istringstream bad("age,ordinal\n");
    EXPECT_THROW(parse_schema(bad), Error);
}

TEST(BalanceClasses, DownsamplesMajority) {
    const auto ds = labeled(60, 40);
    const auto out = balance_classes(ds, 3);
    const auto counts = out.label_counts();
    EXPECT_EQ(counts[0], 40u);
    EXPECT_EQ(counts[1], 40u);
    // Output rows are drawn from the input rows.
    const auto in_rows = row_multiset(ds);
    for (const auto& r : row_multiset(out)) EXPECT_TRUE(in_rows.count(r));
}

TEST(BalanceClasses, BalancedInputKeepsEveryRow) {
    const auto ds = labeled(50, 50);
    EXPECT_EQ(row_multiset(balance_classes(ds, 9)), row_multiset(ds));
}

TEST(BalanceClasses, DeterministicUnderSeed) {
    const auto ds = labeled(70, 30);
    EXPECT_EQ(balance_classes(ds, 5), balance_classes(ds, 5));
    EXPECT_NE(balance_classes(ds, 5), balance_classes(ds, 6));
}

TEST(BalanceClasses, MissingLabelIsError) { EXPECT_THROW(balance_classes(labeled(10, 0), 1), Error); }

namespace {

void expect_split_invariants(const SplitSet& s, const Dataset& ds) {
    std::set<std::size_t> seen;
    for (const auto* list :
         {&s.annotation_train, &s.annotation_valid, &s.annotation_test, &s.learner_train, &s.learner_test}) {
        std::size_t ones = 0;
        for (auto i : *list) {
            EXPECT_LT(i, ds.rows());
            EXPECT_TRUE(seen.insert(i).second) << "index " << i << " repeated";
            ones += static_cast<std::size_t>(ds.labels[i]);
        }
        const auto zeros = list->size() - ones;
        EXPECT_LE(ones > zeros ? ones - zeros : zeros - ones, 1u);
    }
    EXPECT_EQ(seen.size(), ds.rows());
}

}  // namespace

TEST(MakeSplits, SizesAndDisjointness) {
    const auto ds = labeled(2000, 2000);
    const auto s = make_splits(ds, {100, 100, 200, 2000}, 1);
    EXPECT_EQ(s.learner_test.size(), 2000u);
    EXPECT_EQ(s.annotation_train.size(), 100u);
    EXPECT_EQ(s.annotation_valid.size(), 100u);
    EXPECT_EQ(s.annotation_test.size(), 200u);
    EXPECT_EQ(s.learner_train.size(), 1600u);
    expect_split_invariants(s, ds);
}

TEST(MakeSplits, MadelonShape) {
    const auto ds = labeled(1300, 1300);
    const auto s = make_splits(ds, {100, 100, 200, 2000}, 4);
    EXPECT_EQ(s.learner_test.size(), 600u);
    expect_split_invariants(s, ds);
}

TEST(MakeSplits, OddSizesStayWithinOne) {
    const auto ds = labeled(101, 100);
    const auto s = make_splits(ds, {11, 13, 15, 150}, 8);
    expect_split_invariants(s, ds);
}

TEST(MakeSplits, Errors) {
    const auto ds = labeled(50, 50);
    EXPECT_THROW(make_splits(ds, {100, 100, 200, 2000}, 1), Error);  // sizes over M
    EXPECT_THROW(make_splits(ds, {40, 40, 40, 90}, 1), Error);       // annotation exceeds m_prime
    EXPECT_THROW(make_splits(ds, {0, 10, 10, 50}, 1), Error);
    EXPECT_THROW(make_splits(labeled(90, 10), {10, 10, 10, 40}, 1), Error);  // label-1 stratum too small
}

TEST(MakeSplits, DeterministicUnderSeed) {
    const auto ds = labeled(300, 300);
    EXPECT_EQ(make_splits(ds, {50, 50, 100, 400}, 2), make_splits(ds, {50, 50, 100, 400}, 2));
}

TEST(SynthClusters, ShapeAndBalance) {
    const auto ds = synth_clusters(10, 2, 1000, 0.5, 7);
    EXPECT_EQ(ds.rows(), 2000u);
    EXPECT_EQ(ds.dims(), 10u);
    const auto c = ds.label_counts();
    EXPECT_EQ(c[0], 1000u);
    EXPECT_EQ(c[1], 1000u);
}

TEST(SynthClusters, ZeroSpreadGivesTwoPointClusters) {
    const auto ds = synth_clusters(2, 2, 50, 0.0, 3);
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        const double c = ds.labels[i] == 1 ? 1.0 : -1.0;
        EXPECT_EQ(ds.at(i, 0), c);
        EXPECT_EQ(ds.at(i, 1), c);
    }
}

TEST(SynthClusters, DeterministicBytes) {
    std::ostringstream a, b;
    write_csv(synth_clusters(6, 3, 40, 0.3, 11), a);
    write_csv(synth_clusters(6, 3, 40, 0.3, 11), b);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(dataset_hash(synth_clusters(6, 3, 40, 0.3, 11)), dataset_hash(synth_clusters(6, 3, 40, 0.3, 11)));
    EXPECT_NE(dataset_hash(synth_clusters(6, 3, 40, 0.3, 11)), dataset_hash(synth_clusters(6, 3, 40, 0.3, 12)));
}

TEST(SynthClusters, InvalidCounts) {
    EXPECT_THROW(synth_clusters(3, 1, 10, 0.5, 0), Error);
    EXPECT_THROW(synth_clusters(3, 4, 10, 0.5, 0), Error);
    EXPECT_THROW(synth_clusters(3, 2, 0, 0.5, 0), Error);
}

TEST(NormalizePair, HandComputedZScores) {
    // Population stddev of {1,2,3} is sqrt(2/3) = 0.816496...; z = (x - 2) / 0.8165.
    Dataset ds;
    ds.columns = continuous2();
    ds.values = {1, 10, 2, 20, 3, 40, 9, 9};
    ds.labels = {0, 1, 0, 1};
    SplitSet split;
    split.annotation_train = {0, 1, 2};
    const auto np = normalize_pair(ds, split, {0, 1});
    EXPECT_DOUBLE_EQ(np.stats.mean[0], 2.0);
    EXPECT_NEAR(np.stats.stddev[0], 0.8164965809, 1e-9);
    ASSERT_EQ(np.points.size(), 3u);
    EXPECT_NEAR(np.points[0].u, -1.2247448714, 1e-9);
    EXPECT_NEAR(np.points[1].u, 0.0, 1e-12);
    EXPECT_NEAR(np.points[2].u, 1.2247448714, 1e-9);
    EXPECT_EQ(np.stats.u(2.0), 0.0);
}

TEST(NormalizePair, ConstantColumnIsError) {
    Dataset ds;
    ds.columns = continuous2();
    ds.values = {5, 1, 5, 2, 5, 3};
    ds.labels = {0, 1, 0};
    SplitSet split;
    split.annotation_train = {0, 1, 2};
    EXPECT_THROW(normalize_pair(ds, split, {0, 1}), Error);
}

TEST(NormalizePair, TrainingRowsHaveUnitMoments) {
    const auto ds = synth_clusters(5, 2, 300, 0.7, 21);
    const auto split = make_splits(ds, {100, 100, 200, 500}, 21);
    for (auto pair : {DimensionPair{0, 1}, DimensionPair{2, 4}}) {
        const auto np = normalize_pair(ds, split, pair);
        double su = 0, sv = 0, suu = 0, svv = 0;
        for (const auto& p : np.points) {
            su += p.u;
            sv += p.v;
        }
        const double n = static_cast<double>(np.points.size());
        for (const auto& p : np.points) {
            suu += (p.u - su / n) * (p.u - su / n);
            svv += (p.v - sv / n) * (p.v - sv / n);
        }
        EXPECT_LT(std::abs(su / n), 1e-9);
        EXPECT_LT(std::abs(sv / n), 1e-9);
        EXPECT_NEAR(std::sqrt(suu / n), 1.0, 1e-9);
        EXPECT_NEAR(std::sqrt(svv / n), 1.0, 1e-9);
    }
}

TEST(Csv, WriteThenParseRestoresValues) {
    const auto ds = synth_clusters(4, 2, 30, 0.5, 2);
    std::stringstream io;
    write_csv(ds, io);
    auto back = parse_csv(io, ds.columns, "label", ds.name);
    EXPECT_EQ(back.values, ds.values);
    EXPECT_EQ(back.labels, ds.labels);
}
