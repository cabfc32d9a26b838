#pragma once

// Raw-data versus model-feature comparison and its report table.

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hgml/cv.hpp"
#include "hgml/dataset.hpp"
#include "hgml/feature_transform.hpp"
#include "hgml/gbdt.hpp"
#include "hgml/metrics.hpp"
#include "hgml/random.hpp"

namespace hgml {

// One row of the results table.
struct ComparisonRow {
    std::string name;
    std::size_t m_prime = 0;     // learner training rows
    std::size_t test_count = 0;  // M - M'
    std::size_t d_prime = 0;     // dimensions used by any model
    double data_accuracy = 0.0;
    std::size_t n_models = 0;  // N, feature columns
    double feature_accuracy = 0.0;

    friend bool operator==(const ComparisonRow&, const ComparisonRow&) = default;
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;
};

struct ArmResult {
    CvReport cv;
    std::vector<double> loss_curve;  // final fit on all of learner_train
    double test_accuracy = 0.0;
};

struct ComparisonResult {
    ComparisonRow row;
    ArmResult raw;
    ArmResult features;
};

struct ComparisonOptions {
    std::size_t folds = 5;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

inline ArmResult run_arm(const Matrix& train_x, const Labels& train_y, const Matrix& test_x, const Labels& test_y,
                         std::span<const GbdtParams> grid, const ComparisonOptions& opt, std::string_view tag) {
    ArmResult arm;
    arm.cv = cv_grid_search(train_x, train_y, grid, opt.folds, derive_seed(opt.seed, tag), opt.threads);
    const auto model = train_gbdt(train_x, train_y, arm.cv.chosen, derive_seed(opt.seed, tag, 1));
    arm.loss_curve = model.loss_curve;
    arm.test_accuracy = evaluate_accuracy(model, test_x, test_y);
    return arm;
}

// Trains one classifier on learner_train restricted to the dimensions the
// models use, and one on the model-feature matrix of the same rows. Each arm
// picks its parameters by its own grid search and is scored on learner_test.
inline ComparisonResult run_comparison(const Dataset& ds, const SplitSet& split, std::span<const PolygonModel> models,
                                       FeatureMode mode, std::span<const GbdtParams> grid,
                                       const ComparisonOptions& opt = {}) {
    if (models.empty()) throw Error("comparison needs at least one accepted model");
    if (split.learner_train.empty() || split.learner_test.empty())
        throw Error("comparison needs non-empty learner_train and learner_test");

    const auto dims = used_dimensions(models);
    const auto train_y = gather_labels(ds, split.learner_train);
    const auto test_y = gather_labels(ds, split.learner_test);

    ComparisonResult result;
    result.raw = run_arm(gather(ds, split.learner_train, dims), train_y, gather(ds, split.learner_test, dims), test_y,
                         grid, opt, "arm-raw");

    const auto train_f = build_feature_matrix(ds, split.learner_train, models, mode);
    const auto test_f = build_feature_matrix(ds, split.learner_test, models, mode);
    result.features = run_arm(train_f.values, train_y, test_f.values, test_y, grid, opt, "arm-features");

    auto& row = result.row;
    row.name = ds.name;
    row.m_prime = split.learner_train.size();
    row.test_count = split.learner_test.size();
    row.d_prime = dims.size();
    row.data_accuracy = result.raw.test_accuracy;
    row.n_models = models.size();
    row.feature_accuracy = result.features.test_accuracy;
    return result;
}

inline nlohmann::json to_json(const ComparisonRow& r) {
    return {{"name", r.name},          {"m_prime", r.m_prime},
            {"test_count", r.test_count}, {"d_prime", r.d_prime},
            {"data_accuracy", r.data_accuracy}, {"n_models", r.n_models},
            {"feature_accuracy", r.feature_accuracy}};
}

inline ComparisonRow comparison_row_from_json(const nlohmann::json& j) {
    ComparisonRow r;
    r.name = j.at("name").get<std::string>();
    r.m_prime = j.at("m_prime").get<std::size_t>();
    r.test_count = j.at("test_count").get<std::size_t>();
    r.d_prime = j.at("d_prime").get<std::size_t>();
    r.data_accuracy = j.at("data_accuracy").get<double>();
    r.n_models = j.at("n_models").get<std::size_t>();
    r.feature_accuracy = j.at("feature_accuracy").get<double>();
    return r;
}

namespace detail {

inline std::string fixed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

}  // namespace detail

// Aligned plain-text table: Name | M' | M-M' | D' | Data | N | Features.
inline void write_report_text(const ComparisonReport& report, std::ostream& out) {
    const std::vector<std::string> header = {"Name", "M'", "M-M'", "D'", "Data", "N", "Features"};
    std::vector<std::vector<std::string>> cells{header};
    for (const auto& r : report.rows)
        cells.push_back({r.name, std::to_string(r.m_prime), std::to_string(r.test_count), std::to_string(r.d_prime),
                         detail::fixed(r.data_accuracy, 3), std::to_string(r.n_models),
                         detail::fixed(r.feature_accuracy, 3)});
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& row : cells)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());

    auto rule = [&] {
        for (std::size_t c = 0; c < width.size(); ++c) out << (c ? "-+-" : "") << std::string(width[c], '-');
        out << '\n';
    };
    for (std::size_t r = 0; r < cells.size(); ++r) {
        for (std::size_t c = 0; c < cells[r].size(); ++c) {
            if (c) out << " | ";
            const auto pad = std::string(width[c] - cells[r][c].size(), ' ');
            // Name column left-aligned, numbers right-aligned.
            out << (c == 0 ? cells[r][c] + pad : pad + cells[r][c]);
        }
        out << '\n';
        if (r == 0) rule();
    }
}

inline void write_report_csv(const ComparisonReport& report, std::ostream& out) {
    out << "name,m_prime,m_minus_m_prime,d_prime,data_accuracy,n,feature_accuracy\n";
    for (const auto& r : report.rows)
        out << r.name << ',' << r.m_prime << ',' << r.test_count << ',' << r.d_prime << ','
            << detail::fixed(r.data_accuracy, 6) << ',' << r.n_models << ',' << detail::fixed(r.feature_accuracy, 6)
            << '\n';
}

inline void write_loss_curve_csv(const ComparisonResult& result, std::ostream& out) {
    out << "round,raw_loss,feature_loss\n";
    const auto n = std::max(result.raw.loss_curve.size(), result.features.loss_curve.size());
    for (std::size_t i = 0; i < n; ++i) {
        out << i + 1 << ',';
        if (i < result.raw.loss_curve.size()) out << detail::format_double(result.raw.loss_curve[i]);
        out << ',';
        if (i < result.features.loss_curve.size()) out << detail::format_double(result.features.loss_curve[i]);
        out << '\n';
    }
}

}  // namespace hgml
