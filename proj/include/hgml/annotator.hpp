#pragma once

// Programmatic stand-in for a worker.
//
// Greedy set cover over lattice-aligned rectangles: every candidate is
// labeled with the majority label of the still-uncovered training points it
// covers, and the candidate with the largest (majority - minority) count is
// drawn next. A candidate qualifies only when that imbalance is at least
// min_evidence standard deviations of a fair coin over its points, so a pair
// with no label structure yields a single box around all samples, which
// scores at chance. Drawing stops once validation accuracy reaches the
// target or the rectangle budget is spent.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "hgml/dataset.hpp"
#include "hgml/error.hpp"
#include "hgml/polygon_model.hpp"
#include "hgml/random.hpp"

namespace hgml {

struct AnnotatorBudget {
    std::size_t max_rectangles = 8;
    std::size_t grid_resolution = 16;
    double target_accuracy = 0.7;
    double min_evidence = 3.5;  // required |n1 - n0| / sqrt(n1 + n0) of a drawn rectangle

    void validate() const {
        if (max_rectangles < 1) throw Error("max_rectangles must be >= 1");
        if (grid_resolution < 1) throw Error("grid_resolution must be >= 1");
        if (!(target_accuracy > 0.5 && target_accuracy <= 1.0)) throw Error("target_accuracy must be in (0.5, 1]");
        if (!(min_evidence >= 0.0)) throw Error("min_evidence must be >= 0");
    }
};

namespace detail {

// Inclusive 2-D prefix sums over a cells_u x cells_v grid.
class CellCounts {
public:
    CellCounts(std::size_t nu, std::size_t nv) : nv_(nv), sum_((nu + 1) * (nv + 1), 0) {}

    void add(std::size_t cu, std::size_t cv) { ++sum_[(cu + 1) * (nv_ + 1) + cv + 1]; }

    void finish(std::size_t nu) {
        for (std::size_t i = 1; i <= nu; ++i)
            for (std::size_t j = 1; j <= nv_; ++j)
                sum_[i * (nv_ + 1) + j] += sum_[(i - 1) * (nv_ + 1) + j] + sum_[i * (nv_ + 1) + j - 1] -
                                           sum_[(i - 1) * (nv_ + 1) + j - 1];
    }

    // Points in cells [u0, u1) x [v0, v1).
    long long count(std::size_t u0, std::size_t u1, std::size_t v0, std::size_t v1) const {
        auto at = [&](std::size_t i, std::size_t j) { return sum_[i * (nv_ + 1) + j]; };
        return at(u1, v1) - at(u0, v1) - at(u1, v0) + at(u0, v0);
    }

private:
    std::size_t nv_;
    std::vector<long long> sum_;
};

struct Lattice {
    std::vector<double> lines;  // ascending
    std::size_t cell_of(double x) const {
        const auto it = std::upper_bound(lines.begin(), lines.end(), x);
        const auto k = static_cast<std::size_t>(it - lines.begin());
        return std::min(k == 0 ? 0 : k - 1, lines.size() - 2);
    }
};

// `resolution` cells across [lo, hi], shifted left by a random fraction of a
// cell and extended by one cell, so the lines always bracket the data.
inline Lattice make_lattice(double lo, double hi, std::size_t resolution, Rng& rng) {
    const double cell = (hi - lo) / static_cast<double>(resolution);
    const double offset = uniform_unit(rng) * cell;
    Lattice lat;
    for (std::size_t k = 0; k <= resolution + 1; ++k) lat.lines.push_back(lo - offset + static_cast<double>(k) * cell);
    return lat;
}

}  // namespace detail

// Returns an unscored model (no id, no accuracies) with at most
// budget.max_rectangles rectangles.
inline PolygonModel propose_model(const Dataset& ds, const SplitSet& split, DimensionPair pair,
                                  const AnnotatorBudget& budget = {}, std::uint64_t seed = 0) {
    budget.validate();
    const auto normalized = normalize_pair(ds, split, pair);
    const auto& pts = normalized.points;

    double ulo = pts.front().u, uhi = ulo, vlo = pts.front().v, vhi = vlo;
    for (const auto& p : pts) {
        ulo = std::min(ulo, p.u);
        uhi = std::max(uhi, p.u);
        vlo = std::min(vlo, p.v);
        vhi = std::max(vhi, p.v);
    }
    if (!(ulo < uhi) || !(vlo < vhi)) throw Error("degenerate pair: training points collapse after normalization");

    Rng rng(derive_seed(seed, "annotator"));
    const auto lat_u = detail::make_lattice(ulo, uhi, budget.grid_resolution, rng);
    const auto lat_v = detail::make_lattice(vlo, vhi, budget.grid_resolution, rng);
    const std::size_t nu = lat_u.lines.size() - 1, nv = lat_v.lines.size() - 1;
    const std::size_t stride = std::max<std::size_t>(1, (budget.grid_resolution + 15) / 16);

    std::vector<std::size_t> cu(pts.size()), cv(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        cu[i] = lat_u.cell_of(pts[i].u);
        cv[i] = lat_v.cell_of(pts[i].v);
    }

    PolygonModel model;
    model.provenance.kind = Provenance::Kind::synthetic;
    model.stats = normalized.stats;
    std::vector<bool> covered(pts.size(), false);

    // Line indices at the coarsened stride; the last line is always included.
    auto stops = [&](std::size_t cells) {
        std::vector<std::size_t> s;
        for (std::size_t k = 0; k < cells; k += stride) s.push_back(k);
        s.push_back(cells);
        return s;
    };
    const auto su = stops(nu), sv = stops(nv);

    while (model.rectangles.size() < budget.max_rectangles) {
        std::array<detail::CellCounts, 2> counts{detail::CellCounts(nu, nv), detail::CellCounts(nu, nv)};
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (!covered[i]) counts[static_cast<std::size_t>(pts[i].label)].add(cu[i], cv[i]);
        counts[0].finish(nu);
        counts[1].finish(nu);

        long long best_gain = 0;
        std::size_t ties = 0;
        Rectangle best;
        for (std::size_t a = 0; a < su.size(); ++a)
            for (std::size_t b = a + 1; b < su.size(); ++b)
                for (std::size_t c = 0; c < sv.size(); ++c)
                    for (std::size_t d = c + 1; d < sv.size(); ++d) {
                        const auto n0 = counts[0].count(su[a], su[b], sv[c], sv[d]);
                        const auto n1 = counts[1].count(su[a], su[b], sv[c], sv[d]);
                        const auto gain = n1 > n0 ? n1 - n0 : n0 - n1;
                        if (gain <= 0 || gain < best_gain) continue;
                        if (static_cast<double>(gain) < budget.min_evidence * std::sqrt(static_cast<double>(n0 + n1)))
                            continue;
                        if (gain > best_gain) {
                            best_gain = gain;
                            ties = 0;
                        }
                        // Reservoir choice among equal-gain candidates.
                        if (uniform_below(rng, ++ties) != 0) continue;
                        best = {lat_u.lines[su[a]], lat_u.lines[su[b]], lat_v.lines[sv[c]], lat_v.lines[sv[d]],
                                n1 > n0 ? 1 : 0, static_cast<int>(model.rectangles.size())};
                    }
        if (best_gain <= 0) break;

        // Exact net gain under closed containment; points on a lattice line
        // can differ from the cell-count estimate.
        long long exact = 0;
        std::vector<std::size_t> newly;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (covered[i] || !contains(best, pts[i].u, pts[i].v)) continue;
            newly.push_back(i);
            exact += pts[i].label == best.predicted_label ? 1 : -1;
        }
        if (exact <= 0) break;
        for (auto i : newly) covered[i] = true;
        model.rectangles.push_back(best);

        const auto valid = score_coverage(model, ds, split.annotation_valid);
        if (valid.has_coverage() && valid.accuracy() >= budget.target_accuracy) break;
    }

    if (model.rectangles.empty()) {
        // No region shows enough evidence: one box around every sample,
        // labeled with the training majority.
        int ones = 0;
        for (const auto& p : pts) ones += p.label;
        const int label = 2 * ones >= static_cast<int>(pts.size()) ? 1 : 0;
        Rectangle all{ulo, uhi, vlo, vhi, label, 0};
        for (std::size_t i = 0; i < ds.rows(); ++i) {
            const auto uv = model.stats.apply(ds.row(i));
            all.u_min = std::min(all.u_min, uv[0]);
            all.u_max = std::max(all.u_max, uv[0]);
            all.v_min = std::min(all.v_min, uv[1]);
            all.v_max = std::max(all.v_max, uv[1]);
        }
        model.rectangles.push_back(all);
    }
    return model;
}

}  // namespace hgml
