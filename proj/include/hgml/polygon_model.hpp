#pragma once

// Worker rectangle models on a dimension pair.
//
// A model is scored only on the samples it covers. When rectangles overlap,
// a sample belongs to the covering rectangle with the smallest draw_order, so
// each covered sample is counted once and accuracy stays in [0, 1].

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "hgml/dataset.hpp"
#include "hgml/error.hpp"

namespace hgml {

struct Rectangle {
    double u_min = 0.0;
    double u_max = 0.0;
    double v_min = 0.0;
    double v_max = 0.0;
    int predicted_label = 0;
    int draw_order = 0;

    friend bool operator==(const Rectangle&, const Rectangle&) = default;
};

// Closed on all four edges.
inline bool contains(const Rectangle& rect, double u, double v) {
    return rect.u_min <= u && u <= rect.u_max && rect.v_min <= v && v <= rect.v_max;
}

// Throws FieldError naming the offending member, prefixed by `where`.
inline void validate_rectangle(const Rectangle& r, const std::string& where = "rectangle") {
    auto finite = [&](double x, const char* name) {
        if (!std::isfinite(x)) throw FieldError(where + "." + name, "must be a finite number");
    };
    finite(r.u_min, "u_min");
    finite(r.u_max, "u_max");
    finite(r.v_min, "v_min");
    finite(r.v_max, "v_max");
    if (!(r.u_min < r.u_max)) throw FieldError(where + ".u_min", "u_min must be less than u_max");
    if (!(r.v_min < r.v_max)) throw FieldError(where + ".v_min", "v_min must be less than v_max");
    if (r.predicted_label != 0 && r.predicted_label != 1)
        throw FieldError(where + ".label", "label must be 0 or 1");
}

struct Provenance {
    enum class Kind { human, synthetic };
    Kind kind = Kind::synthetic;
    std::string worker_id;  // human only

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct PolygonModel {
    std::string id;
    Provenance provenance;
    NormStats stats;
    std::vector<Rectangle> rectangles;
    std::optional<double> validation_accuracy;
    std::optional<double> accuracy;  // M_acc, measured on annotation_test

    const DimensionPair& pair() const { return stats.pair; }

    void validate() const {
        if (rectangles.empty()) throw Error("model '" + id + "' has no rectangles");
        std::vector<int> orders;
        for (std::size_t k = 0; k < rectangles.size(); ++k) {
            validate_rectangle(rectangles[k], "rectangles[" + std::to_string(k) + "]");
            orders.push_back(rectangles[k].draw_order);
        }
        std::sort(orders.begin(), orders.end());
        if (std::adjacent_find(orders.begin(), orders.end()) != orders.end())
            throw Error("model '" + id + "' has duplicate draw_order values");
    }

    friend bool operator==(const PolygonModel&, const PolygonModel&) = default;
};

// Rectangles in list order get draw_order 0, 1, 2, ...
inline std::vector<Rectangle> with_list_draw_order(std::vector<Rectangle> rects) {
    for (std::size_t k = 0; k < rects.size(); ++k) rects[k].draw_order = static_cast<int>(k);
    return rects;
}

// Index into model.rectangles of the covering rectangle with the smallest
// draw_order, or nullopt.
inline std::optional<std::size_t> covering_rectangle(const PolygonModel& model, double u, double v) {
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < model.rectangles.size(); ++k) {
        const auto& r = model.rectangles[k];
        if (!contains(r, u, v)) continue;
        if (!best || r.draw_order < model.rectangles[*best].draw_order) best = k;
    }
    return best;
}

inline std::optional<std::size_t> covering_rectangle(const PolygonModel& model, std::span<const double> sample) {
    const auto uv = model.stats.apply(sample);
    return covering_rectangle(model, uv[0], uv[1]);
}

// Parallel to the index list passed to assign(): entry k is the covering
// rectangle of sample indices[k].
struct SampleAssignment {
    IndexList indices;
    std::vector<std::optional<std::size_t>> rectangle;

    std::size_t covered() const {
        return static_cast<std::size_t>(std::count_if(rectangle.begin(), rectangle.end(),
                                                      [](const auto& r) { return r.has_value(); }));
    }
};

inline SampleAssignment assign(const PolygonModel& model, const Dataset& ds, std::span<const std::size_t> indices) {
    SampleAssignment out;
    out.indices.assign(indices.begin(), indices.end());
    out.rectangle.reserve(indices.size());
    for (auto i : indices) out.rectangle.push_back(covering_rectangle(model, ds.row(i)));
    return out;
}

struct CoverageScore {
    std::size_t covered = 0;
    std::size_t correct = 0;
    std::size_t total = 0;

    bool has_coverage() const { return covered > 0; }
    double accuracy() const {
        if (covered == 0) throw NoCoverageError();
        return static_cast<double>(correct) / static_cast<double>(covered);
    }
    double covered_fraction() const {
        return total == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(total);
    }
};

inline CoverageScore score_coverage(const PolygonModel& model, const Dataset& ds, std::span<const std::size_t> indices) {
    CoverageScore s;
    s.total = indices.size();
    for (auto i : indices) {
        const auto k = covering_rectangle(model, ds.row(i));
        if (!k) continue;
        ++s.covered;
        if (model.rectangles[*k].predicted_label == ds.labels[i]) ++s.correct;
    }
    return s;
}

// Fraction of covered samples whose label matches their rectangle's label.
// Uncovered samples do not contribute. Throws NoCoverageError when nothing is
// covered.
inline double model_accuracy(const PolygonModel& model, const Dataset& ds, std::span<const std::size_t> indices) {
    return score_coverage(model, ds, indices).accuracy();
}

struct AcceptanceGate {
    double threshold = 0.5;     // validation accuracy must be strictly above
    double min_coverage = 0.0;  // fraction of annotation_valid covered
};

// Scores the model on annotation_valid. When it clears the gate, records the
// validation accuracy and M_acc (accuracy on annotation_test) on the model and
// returns true. A model covering no validation sample is rejected.
inline bool accept_model(PolygonModel& model, const Dataset& ds, const SplitSet& split,
                         const AcceptanceGate& gate = {}) {
    model.validate();
    const auto valid = score_coverage(model, ds, split.annotation_valid);
    if (!valid.has_coverage()) return false;
    const double acc = valid.accuracy();
    if (!(acc > gate.threshold) || valid.covered_fraction() < gate.min_coverage) return false;

    const auto test = score_coverage(model, ds, split.annotation_test);
    // A model can clear validation yet cover no annotation_test sample; it
    // then has no defined M_acc and cannot become a feature.
    if (!test.has_coverage()) return false;
    model.validation_accuracy = acc;
    model.accuracy = test.accuracy();
    return true;
}

}  // namespace hgml
