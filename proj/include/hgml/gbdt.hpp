#pragma once

// ------------------------------------------------------------
// gradient boosted regression trees, binary logistic loss
// ------------------------------------------------------------
//
// Exact greedy splits on first/second order statistics. Each node keeps one
// row list per feature, sorted by that feature; a split stable-partitions
// every list, so a level costs O(rows * features) after the initial sort.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "hgml/error.hpp"
#include "hgml/matrix.hpp"

namespace hgml {

struct GbdtParams {
    double learning_rate = 0.3;
    std::size_t max_depth = 6;
    std::size_t rounds = 100;
    double l2_leaf_penalty = 1.0;
    double min_child_weight = 1.0;

    void validate() const {
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw Error("learning_rate must be > 0");
        if (max_depth < 1) throw Error("max_depth must be >= 1");
        if (rounds < 1) throw Error("rounds must be >= 1");
        if (!(l2_leaf_penalty >= 0.0)) throw Error("l2_leaf_penalty must be >= 0");
        if (!(min_child_weight >= 0.0)) throw Error("min_child_weight must be >= 0");
    }

    friend bool operator==(const GbdtParams&, const GbdtParams&) = default;
};

inline double sigmoid(double margin) { return 1.0 / (1.0 + std::exp(-margin)); }

// log(1 + exp(x)) without overflow.
inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double logistic_loss(double margin, int label) { return softplus(label == 1 ? -margin : margin); }

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // rows with x[feature] < threshold go left
    int left = -1;
    int right = -1;
    double weight = 0.0;  // leaf value before learning-rate scaling
    std::size_t depth = 0;

    bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> x) const {
        std::size_t k = 0;
        while (!nodes[k].is_leaf()) {
            const auto& n = nodes[k];
            k = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
        }
        return nodes[k].weight;
    }

    std::size_t depth() const {
        std::size_t d = 0;
        for (const auto& n : nodes) d = std::max(d, n.depth);
        return d;
    }
};

struct GbdtModel {
    std::size_t n_features = 0;
    double base_score = 0.0;  // log-odds of the training prevalence
    double learning_rate = 0.3;
    std::vector<RegressionTree> trees;
    std::vector<double> loss_curve;  // mean training loss after each round

    // Margin using only the first `n_trees` trees.
    double margin(std::span<const double> x, std::size_t n_trees) const {
        double sum = 0.0;
        for (std::size_t t = 0; t < n_trees; ++t) sum += trees[t].predict(x);
        return base_score + learning_rate * sum;
    }
    double margin(std::span<const double> x) const { return margin(x, trees.size()); }

    void check_features(std::size_t cols) const {
        if (cols != n_features)
            throw Error("feature count mismatch: model has " + std::to_string(n_features) + ", input has " +
                        std::to_string(cols));
    }
};

namespace detail {

class TreeBuilder {
public:
    TreeBuilder(const Matrix& x, std::span<const double> grad, std::span<const double> hess, const GbdtParams& p)
        : x_(x), grad_(grad), hess_(hess), p_(p) {}

    // `sorted[f]` lists the node's rows ordered by feature f. Writes each
    // row's leaf weight into `leaf_weight`.
    RegressionTree build(std::vector<std::vector<std::uint32_t>> sorted, std::span<double> leaf_weight) {
        leaf_weight_ = leaf_weight;
        tree_ = {};
        grow(std::move(sorted), 0);
        return std::move(tree_);
    }

private:
    struct Split {
        double gain = 0.0;
        int feature = -1;
        double threshold = 0.0;
        std::size_t left_count = 0;
    };

    double leaf_value(double g, double h) const { return -g / (h + p_.l2_leaf_penalty); }
    double score(double g, double h) const { return g * g / (h + p_.l2_leaf_penalty); }

    Split best_split(const std::vector<std::vector<std::uint32_t>>& sorted, double g, double h) const {
        constexpr double kMinGain = 1e-10;
        Split best;
        best.gain = kMinGain;
        const double parent = score(g, h);
        for (std::size_t f = 0; f < sorted.size(); ++f) {
            const auto& rows = sorted[f];
            double gl = 0.0, hl = 0.0;
            for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
                gl += grad_[rows[k]];
                hl += hess_[rows[k]];
                const double a = x_(rows[k], f), b = x_(rows[k + 1], f);
                if (!(a < b)) continue;
                const double hr = h - hl;
                if (hl < p_.min_child_weight || hr < p_.min_child_weight) continue;
                const double gain = 0.5 * (score(gl, hl) + score(g - gl, hr) - parent);
                if (gain > best.gain) {
                    const double mid = a + (b - a) / 2.0;
                    best = {gain, static_cast<int>(f), a < mid ? mid : b, k + 1};
                }
            }
        }
        return best;
    }

    int grow(std::vector<std::vector<std::uint32_t>> sorted, std::size_t depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.push_back({});
        tree_.nodes[static_cast<std::size_t>(id)].depth = depth;

        const auto& rows = sorted.front();
        double g = 0.0, h = 0.0;
        for (auto r : rows) {
            g += grad_[r];
            h += hess_[r];
        }

        Split split;
        if (depth < p_.max_depth && h >= p_.min_child_weight && rows.size() >= 2) split = best_split(sorted, g, h);

        if (split.feature < 0) {
            const double w = leaf_value(g, h);
            tree_.nodes[static_cast<std::size_t>(id)].weight = w;
            for (auto r : rows) leaf_weight_[r] = w;
            return id;
        }

        const auto f = static_cast<std::size_t>(split.feature);
        std::vector<std::vector<std::uint32_t>> left(sorted.size()), right(sorted.size());
        for (std::size_t k = 0; k < sorted.size(); ++k) {
            left[k].reserve(split.left_count);
            right[k].reserve(sorted[k].size() - split.left_count);
            for (auto r : sorted[k]) (x_(r, f) < split.threshold ? left[k] : right[k]).push_back(r);
        }
        sorted.clear();
        sorted.shrink_to_fit();

        const int l = grow(std::move(left), depth + 1);
        const int r = grow(std::move(right), depth + 1);
        auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = l;
        node.right = r;
        node.weight = leaf_value(g, h);
        return id;
    }

    const Matrix& x_;
    std::span<const double> grad_;
    std::span<const double> hess_;
    const GbdtParams& p_;
    std::span<double> leaf_weight_;
    RegressionTree tree_;
};

inline void check_training_input(const Matrix& x, const Labels& y) {
    if (x.rows == 0 || x.cols == 0) throw Error("training matrix is empty");
    if (x.rows != y.size())
        throw Error("dimension mismatch: " + std::to_string(x.rows) + " rows, " + std::to_string(y.size()) + " labels");
    std::size_t ones = 0;
    for (int v : y) {
        if (v != 0 && v != 1) throw Error("labels must be 0 or 1");
        ones += static_cast<std::size_t>(v);
    }
    if (ones == 0 || ones == y.size()) throw Error("training labels contain a single class");
}

}  // namespace detail

// Deterministic: exact greedy boosting draws no random numbers, so `seed`
// does not influence the result.
inline GbdtModel train_gbdt(const Matrix& x, const Labels& y, const GbdtParams& params,
                            [[maybe_unused]] std::uint64_t seed = 0) {
    params.validate();
    detail::check_training_input(x, y);
    const std::size_t n = x.rows;

    GbdtModel model;
    model.n_features = x.cols;
    model.learning_rate = params.learning_rate;
    const double prevalence =
        static_cast<double>(std::accumulate(y.begin(), y.end(), std::size_t{0})) / static_cast<double>(n);
    model.base_score = std::log(prevalence / (1.0 - prevalence));

    std::vector<std::vector<std::uint32_t>> sorted(x.cols);
    for (std::size_t f = 0; f < x.cols; ++f) {
        auto& order = sorted[f];
        order.resize(n);
        std::iota(order.begin(), order.end(), std::uint32_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
    }

    std::vector<double> margin(n, model.base_score), grad(n), hess(n), leaf(n);
    detail::TreeBuilder builder(x, grad, hess, params);
    model.trees.reserve(params.rounds);
    model.loss_curve.reserve(params.rounds);
    for (std::size_t round = 0; round < params.rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(margin[i]);
            grad[i] = p - static_cast<double>(y[i]);
            hess[i] = p * (1.0 - p);
        }
        model.trees.push_back(builder.build(sorted, leaf));
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            margin[i] += params.learning_rate * leaf[i];
            loss += logistic_loss(margin[i], y[i]);
        }
        model.loss_curve.push_back(loss / static_cast<double>(n));
    }
    return model;
}

inline double predict_proba(const GbdtModel& model, std::span<const double> x) {
    model.check_features(x.size());
    constexpr double lo = std::numeric_limits<double>::min();
    const double hi = std::nextafter(1.0, 0.0);
    return std::clamp(sigmoid(model.margin(x)), lo, hi);
}

inline std::vector<double> predict_proba(const GbdtModel& model, const Matrix& x) {
    model.check_features(x.cols);
    std::vector<double> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out[i] = predict_proba(model, x.row(i));
    return out;
}

// Label 1 when the probability is at least 0.5, decided on the margin.
inline Labels predict(const GbdtModel& model, const Matrix& x, std::size_t n_trees) {
    model.check_features(x.cols);
    n_trees = std::min(n_trees, model.trees.size());
    Labels out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out[i] = model.margin(x.row(i), n_trees) >= 0.0 ? 1 : 0;
    return out;
}

inline Labels predict(const GbdtModel& model, const Matrix& x) { return predict(model, x, model.trees.size()); }

inline double mean_logistic_loss(const GbdtModel& model, const Matrix& x, const Labels& y) {
    model.check_features(x.cols);
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) loss += logistic_loss(model.margin(x.row(i)), y[i]);
    return loss / static_cast<double>(x.rows);
}

}  // namespace hgml
