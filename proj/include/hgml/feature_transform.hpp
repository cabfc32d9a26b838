#pragma once

// Model features: one column per accepted model, one row per sample.

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "hgml/dataset.hpp"
#include "hgml/error.hpp"
#include "hgml/matrix.hpp"
#include "hgml/polygon_model.hpp"

namespace hgml {

enum class FeatureMode {
    literal,  // M_acc if any rectangle covers the sample, else 0
    signed_,  // +M_acc / -M_acc by the covering rectangle's label, else 0
};

inline std::string_view to_string(FeatureMode mode) { return mode == FeatureMode::literal ? "literal" : "signed"; }

inline FeatureMode parse_feature_mode(std::string_view text) {
    if (text == "literal") return FeatureMode::literal;
    if (text == "signed") return FeatureMode::signed_;
    throw Error("unknown feature mode '" + std::string(text) + "' (expected literal or signed)");
}

inline double feature_value(std::span<const double> sample, const PolygonModel& model, FeatureMode mode) {
    if (!model.accuracy) throw Error("model '" + model.id + "' has no M_acc; it was never accepted");
    const auto k = covering_rectangle(model, sample);
    if (!k) return 0.0;
    if (mode == FeatureMode::literal) return *model.accuracy;
    return model.rectangles[*k].predicted_label == 1 ? *model.accuracy : -*model.accuracy;
}

struct FeatureMatrix {
    Matrix values;
    std::vector<std::string> column_ids;
    IndexList sample_ids;
    Labels labels;
};

inline FeatureMatrix build_feature_matrix(const Dataset& ds, std::span<const std::size_t> indices,
                                          std::span<const PolygonModel> models, FeatureMode mode) {
    if (models.empty()) throw Error("feature matrix needs at least one model");
    for (const auto& m : models)
        if (!m.accuracy) throw Error("model '" + m.id + "' has no M_acc; it was never accepted");

    FeatureMatrix fm;
    fm.values = Matrix(indices.size(), models.size());
    fm.sample_ids.assign(indices.begin(), indices.end());
    fm.labels = gather_labels(ds, indices);
    for (const auto& m : models) fm.column_ids.push_back(m.id);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto sample = ds.row(indices[r]);
        for (std::size_t c = 0; c < models.size(); ++c) fm.values(r, c) = feature_value(sample, models[c], mode);
    }
    return fm;
}

inline IndexList used_dimensions(std::span<const PolygonModel> models) {
    std::set<std::size_t> dims;
    for (const auto& m : models) {
        dims.insert(m.pair().dim_a);
        dims.insert(m.pair().dim_b);
    }
    return {dims.begin(), dims.end()};
}

// CSV: `sample_id,<model ids...>,label`. Lines beginning with '#' are
// comments; writers use one to record provenance.
inline void write_feature_csv(const FeatureMatrix& fm, std::ostream& out, const std::string& comment = "") {
    if (!comment.empty()) out << "# " << comment << '\n';
    out << "sample_id";
    for (const auto& id : fm.column_ids) out << ',' << id;
    out << ",label\n";
    for (std::size_t r = 0; r < fm.values.rows; ++r) {
        out << fm.sample_ids[r];
        for (double x : fm.values.row(r)) out << ',' << detail::format_double(x);
        out << ',' << fm.labels[r] << '\n';
    }
}

// Returns the matrix and fills `comments` with the text of any '#' lines.
inline FeatureMatrix read_feature_csv(std::istream& in, std::vector<std::string>* comments = nullptr) {
    FeatureMatrix fm;
    std::string line;
    bool have_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto text = detail::trim(line);
        if (text.empty()) continue;
        if (text.front() == '#') {
            if (comments) comments->emplace_back(detail::trim(text.substr(1)));
            continue;
        }
        const auto fields = detail::split_commas(text);
        if (!have_header) {
            if (fields.size() < 3 || fields.front() != "sample_id" || fields.back() != "label")
                throw Error("feature CSV header must be sample_id,<model ids>,label");
            for (std::size_t k = 1; k + 1 < fields.size(); ++k) fm.column_ids.emplace_back(fields[k]);
            fm.values.cols = fm.column_ids.size();
            have_header = true;
            continue;
        }
        if (fields.size() != fm.column_ids.size() + 2)
            throw Error("feature CSV line " + std::to_string(lineno) + ": wrong field count");
        double id = 0.0, label = 0.0;
        if (!detail::parse_integer(fields.front(), id) || id < 0 || !detail::parse_integer(fields.back(), label) ||
            (label != 0.0 && label != 1.0))
            throw Error("feature CSV line " + std::to_string(lineno) + ": bad sample id or label");
        fm.sample_ids.push_back(static_cast<std::size_t>(id));
        fm.labels.push_back(static_cast<int>(label));
        for (std::size_t k = 1; k + 1 < fields.size(); ++k) {
            double x = 0.0;
            if (!detail::parse_real(fields[k], x))
                throw Error("feature CSV line " + std::to_string(lineno) + ": bad value");
            fm.values.data.push_back(x);
        }
        ++fm.values.rows;
    }
    if (!have_header) throw Error("feature CSV is empty");
    return fm;
}

}  // namespace hgml
