#pragma once

// Pearson correlation over annotation_train and low-correlation pair
// selection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "hgml/dataset.hpp"
#include "hgml/error.hpp"
#include "hgml/random.hpp"

namespace hgml {

struct PairCorrelation {
    DimensionPair pair;
    double rho = 0.0;
};

// One entry per unordered pair of columns that vary on annotation_train,
// ordered by (dim_a, dim_b).
struct CorrelationTable {
    std::vector<PairCorrelation> entries;

    std::size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }
};

inline double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.empty()) throw Error("pearson: inputs must be equal-length and non-empty");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) throw Error("pearson: zero variance input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline CorrelationTable correlation_table(const Dataset& ds, const SplitSet& split) {
    const auto& rows = split.annotation_train;
    std::vector<std::size_t> usable;
    for (std::size_t j = 0; j < ds.dims(); ++j) {
        if (column_moments(ds, rows, j)[1] > 0.0) usable.push_back(j);
    }
    if (usable.size() < 2) throw Error("fewer than 2 columns vary on annotation_train");

    std::vector<std::vector<double>> cols(usable.size());
    for (std::size_t k = 0; k < usable.size(); ++k) {
        cols[k].reserve(rows.size());
        for (auto i : rows) cols[k].push_back(ds.at(i, usable[k]));
    }

    CorrelationTable table;
    for (std::size_t a = 0; a < usable.size(); ++a)
        for (std::size_t b = a + 1; b < usable.size(); ++b)
            table.entries.push_back({{usable[a], usable[b]}, pearson(cols[a], cols[b])});
    return table;
}

enum class PairSelectMode {
    rank,    // k smallest |rho|
    sample,  // k drawn uniformly from the lowest-|rho| quartile
};

inline std::vector<PairCorrelation> sorted_by_abs_rho(const CorrelationTable& table) {
    auto sorted = table.entries;
    std::stable_sort(sorted.begin(), sorted.end(), [](const PairCorrelation& l, const PairCorrelation& r) {
        const double al = std::abs(l.rho), ar = std::abs(r.rho);
        if (al != ar) return al < ar;
        return l.pair < r.pair;
    });
    return sorted;
}

// In sample mode the candidate pool is the lowest quarter of pairs by |rho|
// (rounded up), grown to k when k is larger. The result is ordered by |rho|
// in rank mode and by draw order in sample mode.
inline std::vector<DimensionPair> select_pairs(const CorrelationTable& table, std::size_t k,
                                               PairSelectMode mode = PairSelectMode::rank,
                                               std::uint64_t seed = 0) {
    if (table.empty()) throw Error("correlation table is empty");
    if (k == 0) throw Error("k must be at least 1");
    const auto sorted = sorted_by_abs_rho(table);
    const std::size_t take = std::min(k, sorted.size());

    std::vector<DimensionPair> out;
    out.reserve(take);
    if (mode == PairSelectMode::rank) {
        for (std::size_t i = 0; i < take; ++i) out.push_back(sorted[i].pair);
        return out;
    }

    const std::size_t quartile = (sorted.size() + 3) / 4;
    const std::size_t pool_size = std::max(quartile, take);
    std::vector<std::size_t> pool(pool_size);
    for (std::size_t i = 0; i < pool_size; ++i) pool[i] = i;
    Rng rng(derive_seed(seed, "pairs"));
    for (std::size_t i = 0; i < take; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_below(rng, pool_size - i));
        std::swap(pool[i], pool[j]);
        out.push_back(sorted[pool[i]].pair);
    }
    return out;
}

}  // namespace hgml
