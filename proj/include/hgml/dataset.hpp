#pragma once

// Labeled tabular datasets: CSV ingestion, synthetic clusters, class
// balancing, annotation/learner splits and per-pair z-scoring.

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hgml/error.hpp"
#include "hgml/matrix.hpp"
#include "hgml/random.hpp"

namespace hgml {

enum class ColumnKind { nominal, integer, continuous };

inline std::string_view to_string(ColumnKind kind) {
    switch (kind) {
        case ColumnKind::nominal: return "nominal";
        case ColumnKind::integer: return "integer";
        case ColumnKind::continuous: return "continuous";
    }
    return "?";
}

inline ColumnKind parse_column_kind(std::string_view text) {
    if (text == "nominal") return ColumnKind::nominal;
    if (text == "integer") return ColumnKind::integer;
    if (text == "continuous") return ColumnKind::continuous;
    throw Error("unknown column kind '" + std::string(text) + "'");
}

struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::continuous;

    friend bool operator==(const Column&, const Column&) = default;
};

using Schema = std::vector<Column>;

// M samples by D numeric columns plus a binary label per sample.
// Nominal values are stored as integer codes.
struct Dataset {
    std::string name;
    Schema columns;
    std::vector<double> values;  // row-major, rows() * dims()
    Labels labels;

    std::size_t rows() const { return labels.size(); }
    std::size_t dims() const { return columns.size(); }

    std::span<const double> row(std::size_t i) const { return {values.data() + i * dims(), dims()}; }
    double at(std::size_t i, std::size_t j) const { return values[i * dims() + j]; }

    std::array<std::size_t, 2> label_counts() const {
        std::array<std::size_t, 2> counts{0, 0};
        for (int y : labels) ++counts[static_cast<std::size_t>(y)];
        return counts;
    }

    void validate() const {
        if (dims() < 2) throw Error("dataset needs at least 2 columns");
        if (values.size() != rows() * dims()) throw Error("dataset value count does not match rows x columns");
        for (int y : labels) {
            if (y != 0 && y != 1) throw Error("dataset labels must be 0 or 1");
        }
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

using IndexList = std::vector<std::size_t>;

struct DimensionPair {
    std::size_t dim_a = 0;
    std::size_t dim_b = 1;

    friend auto operator<=>(const DimensionPair&, const DimensionPair&) = default;
};

inline DimensionPair make_pair_checked(std::size_t a, std::size_t b, std::size_t dims) {
    if (a >= b) throw Error("dimension pair must satisfy dim_a < dim_b");
    if (b >= dims) throw Error("dimension pair index out of range");
    return {a, b};
}

// Five index lists over one dataset. The three annotation splits feed the
// worker (plot, live score, final score); the learner splits feed the
// classifiers. All five are pairwise disjoint.
struct SplitSet {
    IndexList annotation_train;
    IndexList annotation_valid;
    IndexList annotation_test;
    IndexList learner_train;
    IndexList learner_test;

    friend bool operator==(const SplitSet&, const SplitSet&) = default;
};

struct SplitSizes {
    std::size_t annotation_train = 100;
    std::size_t annotation_valid = 100;
    std::size_t annotation_test = 200;
    std::size_t m_prime = 2000;  // train side; learner_test gets the other M - m_prime rows
};

// Affine map taking a dimension pair to z-scores of the annotation_train rows.
struct NormStats {
    DimensionPair pair;
    std::array<double, 2> mean{0.0, 0.0};
    std::array<double, 2> stddev{1.0, 1.0};

    double u(double raw) const { return (raw - mean[0]) / stddev[0]; }
    double v(double raw) const { return (raw - mean[1]) / stddev[1]; }
    std::array<double, 2> apply(std::span<const double> sample) const {
        return {u(sample[pair.dim_a]), v(sample[pair.dim_b])};
    }

    friend bool operator==(const NormStats&, const NormStats&) = default;
};

struct PlotPoint {
    double u = 0.0;
    double v = 0.0;
    int label = 0;
};

struct NormalizedPair {
    std::vector<PlotPoint> points;
    NormStats stats;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

inline bool parse_integer(std::string_view text, double& out) {
    long long v = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) return false;
    out = static_cast<double>(v);
    return true;
}

inline bool parse_real(std::string_view text, double& out) {
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void require_label(const Dataset& ds, int label) {
    const auto counts = ds.label_counts();
    if (counts[static_cast<std::size_t>(label)] == 0)
        throw Error("label " + std::to_string(label) + " has no rows");
}

inline IndexList indices_with_label(const Dataset& ds, int label) {
    IndexList out;
    for (std::size_t i = 0; i < ds.rows(); ++i)
        if (ds.labels[i] == label) out.push_back(i);
    return out;
}

}  // namespace detail

// Schema sidecar: one `column_name,kind` line per column. Blank lines and
// lines starting with '#' are ignored.
inline Schema parse_schema(std::istream& in) {
    Schema schema;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto text = detail::trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto fields = detail::split_commas(text);
        if (fields.size() != 2 || fields[0].empty())
            throw Error("schema line " + std::to_string(lineno) + ": expected 'column_name,kind'");
        schema.push_back({std::string(fields[0]), parse_column_kind(fields[1])});
    }
    return schema;
}

inline Schema load_schema(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open schema file " + path.string());
    return parse_schema(in);
}

inline void write_schema(const Schema& schema, std::ostream& out) {
    for (const auto& c : schema) out << c.name << ',' << to_string(c.kind) << '\n';
}

// Parses CSV text. The header must list the schema's columns in order, with
// the label column anywhere among them. A schema entry naming the label
// column is ignored.
inline Dataset parse_csv(std::istream& in, Schema schema, const std::string& label_column, std::string name = "") {
    std::erase_if(schema, [&](const Column& c) { return c.name == label_column; });

    std::string line;
    if (!std::getline(in, line) || detail::trim(line).empty()) throw Error("CSV input is empty");

    const auto header = detail::split_commas(detail::trim(line));
    std::size_t label_pos = header.size();
    std::vector<std::string_view> feature_names;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == label_column) {
            if (label_pos != header.size()) throw Error("label column '" + label_column + "' appears twice");
            label_pos = i;
        } else {
            feature_names.push_back(header[i]);
        }
    }
    if (label_pos == header.size()) throw Error("header has no label column '" + label_column + "'");
    if (feature_names.size() != schema.size())
        throw Error("header has " + std::to_string(feature_names.size()) + " feature columns, schema has " +
                    std::to_string(schema.size()));
    for (std::size_t j = 0; j < schema.size(); ++j) {
        if (feature_names[j] != schema[j].name)
            throw Error("header column '" + std::string(feature_names[j]) + "' does not match schema column '" +
                        schema[j].name + "'");
    }

    Dataset ds;
    ds.name = std::move(name);
    ds.columns = schema;
    std::vector<std::unordered_map<std::string, double>> nominal_codes(schema.size());
    std::vector<std::string> raw_labels;

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const auto text = detail::trim(line);
        if (text.empty()) continue;
        const auto fields = detail::split_commas(text);
        if (fields.size() != header.size())
            throw Error("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                        " fields, found " + std::to_string(fields.size()));
        std::size_t j = 0;
        for (std::size_t f = 0; f < fields.size(); ++f) {
            if (f == label_pos) {
                if (fields[f].empty()) throw Error("line " + std::to_string(lineno) + ": empty label");
                raw_labels.emplace_back(fields[f]);
                continue;
            }
            const auto& col = schema[j];
            double value = 0.0;
            bool ok = !fields[f].empty();
            if (ok) {
                switch (col.kind) {
                    case ColumnKind::integer: ok = detail::parse_integer(fields[f], value); break;
                    case ColumnKind::continuous: ok = detail::parse_real(fields[f], value); break;
                    case ColumnKind::nominal: {
                        auto& codes = nominal_codes[j];
                        auto [it, inserted] =
                            codes.try_emplace(std::string(fields[f]), static_cast<double>(codes.size()));
                        value = it->second;
                        break;
                    }
                }
            }
            if (!ok)
                throw Error("line " + std::to_string(lineno) + ", column '" + col.name + "': invalid " +
                            std::string(to_string(col.kind)) + " value '" + std::string(fields[f]) + "'");
            ds.values.push_back(value);
            ++j;
        }
    }
    if (raw_labels.empty()) throw Error("CSV input has no data rows");

    std::set<std::string> distinct(raw_labels.begin(), raw_labels.end());
    if (distinct.size() > 2) throw Error("label column has more than two distinct values");
    const std::string& zero = *distinct.begin();
    ds.labels.reserve(raw_labels.size());
    for (const auto& raw : raw_labels) ds.labels.push_back(raw == zero ? 0 : 1);
    ds.validate();
    return ds;
}

inline Dataset load_csv(const std::filesystem::path& path, const Schema& schema, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open CSV file " + path.string());
    return parse_csv(in, schema, label_column, path.stem().string());
}

// Writes the dataset as CSV with a trailing `label` column holding 0/1.
inline void write_csv(const Dataset& ds, std::ostream& out) {
    for (const auto& c : ds.columns) out << c.name << ',';
    out << "label\n";
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        for (double x : ds.row(i)) out << detail::format_double(x) << ',';
        out << ds.labels[i] << '\n';
    }
}

// Content hash over column names, kinds, value bits and labels.
inline std::string dataset_hash(const Dataset& ds) {
    std::uint64_t h = fnv1a64("hgml-dataset-v1");
    for (const auto& c : ds.columns) {
        h = fnv1a64(c.name, h);
        h = fnv1a64(to_string(c.kind), h);
        h = fnv1a64("\x1f", h);
    }
    for (double x : ds.values) {
        const auto bits = std::bit_cast<std::uint64_t>(x);
        h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&bits), sizeof bits), h);
    }
    for (int y : ds.labels) h = fnv1a64(y ? "1" : "0", h);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline Dataset subset_rows(const Dataset& ds, std::span<const std::size_t> indices) {
    Dataset out;
    out.name = ds.name;
    out.columns = ds.columns;
    out.values.reserve(indices.size() * ds.dims());
    out.labels.reserve(indices.size());
    for (auto i : indices) {
        const auto r = ds.row(i);
        out.values.insert(out.values.end(), r.begin(), r.end());
        out.labels.push_back(ds.labels[i]);
    }
    return out;
}

// Rows `indices`, columns `columns` of the dataset as a matrix.
inline Matrix gather(const Dataset& ds, std::span<const std::size_t> indices, std::span<const std::size_t> columns) {
    Matrix m(indices.size(), columns.size());
    for (std::size_t r = 0; r < indices.size(); ++r)
        for (std::size_t c = 0; c < columns.size(); ++c) m(r, c) = ds.at(indices[r], columns[c]);
    return m;
}

inline Labels gather_labels(const Dataset& ds, std::span<const std::size_t> indices) {
    Labels y;
    y.reserve(indices.size());
    for (auto i : indices) y.push_back(ds.labels[i]);
    return y;
}

// Down-samples the majority label to the minority count and shuffles the
// result. Both steps are driven by `seed`.
inline Dataset balance_classes(const Dataset& ds, std::uint64_t seed) {
    detail::require_label(ds, 0);
    detail::require_label(ds, 1);
    Rng rng(derive_seed(seed, "balance"));

    auto zeros = detail::indices_with_label(ds, 0);
    auto ones = detail::indices_with_label(ds, 1);
    auto& majority = zeros.size() >= ones.size() ? zeros : ones;
    auto& minority = zeros.size() >= ones.size() ? ones : zeros;
    shuffle(std::span(majority), rng);
    majority.resize(minority.size());

    IndexList keep = minority;
    keep.insert(keep.end(), majority.begin(), majority.end());
    std::sort(keep.begin(), keep.end());
    shuffle(std::span(keep), rng);
    return subset_rows(ds, keep);
}

// Stratified split. Each list takes half of its size from each label (the odd
// sample alternates between labels); learner_train receives every row not
// placed in another list.
inline SplitSet make_splits(const Dataset& ds, const SplitSizes& sizes, std::uint64_t seed) {
    const std::size_t m = ds.rows();
    const std::size_t annotation = sizes.annotation_train + sizes.annotation_valid + sizes.annotation_test;
    if (sizes.annotation_train == 0 || sizes.annotation_valid == 0 || sizes.annotation_test == 0 ||
        sizes.m_prime == 0)
        throw Error("split sizes must be at least 1");
    if (sizes.m_prime > m) throw Error("m_prime exceeds the number of samples");
    if (annotation > sizes.m_prime) throw Error("annotation splits do not fit inside m_prime");

    Rng rng(derive_seed(seed, "splits"));
    std::array<IndexList, 2> pool{detail::indices_with_label(ds, 0), detail::indices_with_label(ds, 1)};
    shuffle(std::span(pool[0]), rng);
    shuffle(std::span(pool[1]), rng);
    std::array<std::size_t, 2> cursor{0, 0};
    int odd_goes_to = static_cast<int>(uniform_below(rng, 2));

    auto take = [&](std::size_t n, const char* what) {
        std::array<std::size_t, 2> want{n / 2, n / 2};
        if (n % 2 == 1) {
            want[static_cast<std::size_t>(odd_goes_to)] += 1;
            odd_goes_to = 1 - odd_goes_to;
        }
        IndexList out;
        for (std::size_t y = 0; y < 2; ++y) {
            if (cursor[y] + want[y] > pool[y].size())
                throw Error(std::string("label ") + std::to_string(y) + " stratum too small for " + what);
            out.insert(out.end(), pool[y].begin() + static_cast<std::ptrdiff_t>(cursor[y]),
                       pool[y].begin() + static_cast<std::ptrdiff_t>(cursor[y] + want[y]));
            cursor[y] += want[y];
        }
        std::sort(out.begin(), out.end());
        return out;
    };

    SplitSet split;
    split.learner_test = take(m - sizes.m_prime, "learner_test");
    split.annotation_train = take(sizes.annotation_train, "annotation_train");
    split.annotation_valid = take(sizes.annotation_valid, "annotation_valid");
    split.annotation_test = take(sizes.annotation_test, "annotation_test");
    for (std::size_t y = 0; y < 2; ++y)
        split.learner_train.insert(split.learner_train.end(),
                                   pool[y].begin() + static_cast<std::ptrdiff_t>(cursor[y]), pool[y].end());
    std::sort(split.learner_train.begin(), split.learner_train.end());
    return split;
}

// Two Gaussian classes. Informative columns put class 1 at +1 and class 0 at
// -1 with standard deviation `cluster_spread`; the remaining columns are
// standard normal noise independent of the label.
inline Dataset synth_clusters(std::size_t d_total, std::size_t d_informative, std::size_t n_per_class,
                              double cluster_spread, std::uint64_t seed) {
    if (d_informative < 2 || d_informative > d_total) throw Error("need 2 <= d_informative <= d_total");
    if (n_per_class < 1) throw Error("n_per_class must be at least 1");
    if (!(cluster_spread >= 0.0) || !std::isfinite(cluster_spread)) throw Error("cluster_spread must be >= 0");

    Rng rng(derive_seed(seed, "synth"));
    Dataset ds;
    ds.name = "synth";
    for (std::size_t j = 0; j < d_total; ++j) ds.columns.push_back({"x" + std::to_string(j), ColumnKind::continuous});

    const std::size_t m = 2 * n_per_class;
    IndexList order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    shuffle(std::span(order), rng);

    ds.values.resize(m * d_total);
    ds.labels.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        const int label = k < n_per_class ? 1 : 0;
        const std::size_t i = order[k];
        ds.labels[i] = label;
        const double center = label == 1 ? 1.0 : -1.0;
        for (std::size_t j = 0; j < d_total; ++j) {
            const double z = standard_normal(rng);
            ds.values[i * d_total + j] = j < d_informative ? center + cluster_spread * z : z;
        }
    }
    return ds;
}

// Population mean and standard deviation of column `dim` over `indices`.
// Returns stddev 0 for a constant column.
inline std::array<double, 2> column_moments(const Dataset& ds, std::span<const std::size_t> indices, std::size_t dim) {
    if (indices.empty()) throw Error("no rows to compute moments over");
    double lo = ds.at(indices[0], dim), hi = lo, sum = 0.0;
    for (auto i : indices) {
        const double x = ds.at(i, dim);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        sum += x;
    }
    const double mean = sum / static_cast<double>(indices.size());
    if (lo == hi) return {lo, 0.0};
    double ss = 0.0;
    for (auto i : indices) {
        const double d = ds.at(i, dim) - mean;
        ss += d * d;
    }
    return {mean, std::sqrt(ss / static_cast<double>(indices.size()))};
}

inline NormStats fit_norm_stats(const Dataset& ds, std::span<const std::size_t> rows, DimensionPair pair) {
    make_pair_checked(pair.dim_a, pair.dim_b, ds.dims());
    NormStats stats;
    stats.pair = pair;
    const std::array<std::size_t, 2> dims{pair.dim_a, pair.dim_b};
    for (std::size_t k = 0; k < 2; ++k) {
        const auto [mean, sd] = column_moments(ds, rows, dims[k]);
        if (!(sd > 0.0)) throw Error("column '" + ds.columns[dims[k]].name + "' has zero variance on annotation_train");
        stats.mean[k] = mean;
        stats.stddev[k] = sd;
    }
    return stats;
}

inline std::vector<PlotPoint> project(const Dataset& ds, std::span<const std::size_t> rows, const NormStats& stats) {
    std::vector<PlotPoint> points;
    points.reserve(rows.size());
    for (auto i : rows) {
        const auto uv = stats.apply(ds.row(i));
        points.push_back({uv[0], uv[1], ds.labels[i]});
    }
    return points;
}

// Z-scores annotation_train on `pair`. The returned stats map any other row
// into the same plot coordinates.
inline NormalizedPair normalize_pair(const Dataset& ds, const SplitSet& split, DimensionPair pair) {
    NormalizedPair out;
    out.stats = fit_norm_stats(ds, split.annotation_train, pair);
    out.points = project(ds, split.annotation_train, out.stats);
    return out;
}

}  // namespace hgml
