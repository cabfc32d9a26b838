#pragma once

// Stratified k-fold grid search over GbdtParams.
//
// Boosting here is deterministic, so a model trained for R rounds truncated
// to its first r trees is the model trained for r rounds. Grid points that
// differ only in `rounds` therefore share one training run per fold.

#include <algorithm>
#include <atomic>
#include <exception>
#include <cstdint>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>
#include <vector>

#include "hgml/error.hpp"
#include "hgml/gbdt.hpp"
#include "hgml/matrix.hpp"
#include "hgml/metrics.hpp"
#include "hgml/random.hpp"

namespace hgml {

inline std::vector<GbdtParams> make_grid(std::span<const double> learning_rates, std::span<const std::size_t> depths,
                                         std::span<const std::size_t> rounds) {
    std::vector<GbdtParams> grid;
    for (double lr : learning_rates)
        for (auto d : depths)
            for (auto r : rounds) {
                GbdtParams p;
                p.learning_rate = lr;
                p.max_depth = d;
                p.rounds = r;
                grid.push_back(p);
            }
    return grid;
}

// learning rate {0.01, 0.05, 0.1, 0.3} x depth {2, 5, 10, 15} x rounds {50, 100, 200, 400, 800}
inline std::vector<GbdtParams> default_grid() {
    const double lr[] = {0.01, 0.05, 0.1, 0.3};
    const std::size_t depth[] = {2, 5, 10, 15};
    const std::size_t rounds[] = {50, 100, 200, 400, 800};
    return make_grid(lr, depth, rounds);
}

struct CvPoint {
    GbdtParams params;
    std::vector<double> fold_accuracy;
    double mean_accuracy = 0.0;
};

struct CvReport {
    std::vector<CvPoint> points;  // same order as the input grid
    std::size_t chosen_index = 0;
    GbdtParams chosen;
    std::size_t folds = 0;
    std::uint64_t seed = 0;
};

// Held-out row lists, one per fold. Each label's rows are shuffled and dealt
// round-robin, so fold label counts differ by at most one.
inline std::vector<std::vector<std::size_t>> stratified_folds(const Labels& y, std::size_t folds, std::uint64_t seed) {
    if (folds < 2) throw Error("cross validation needs at least 2 folds");
    std::vector<std::vector<std::size_t>> out(folds);
    Rng rng(derive_seed(seed, "folds"));
    std::size_t next = 0;
    for (int label = 0; label <= 1; ++label) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < y.size(); ++i)
            if (y[i] == label) rows.push_back(i);
        if (rows.size() < folds)
            throw Error("label " + std::to_string(label) + " has " + std::to_string(rows.size()) +
                        " rows; every one of the " + std::to_string(folds) + " folds needs both labels");
        shuffle(std::span(rows), rng);
        for (auto r : rows) {
            out[next % folds].push_back(r);
            ++next;
        }
    }
    for (auto& f : out) std::sort(f.begin(), f.end());
    return out;
}

// True when `a` should win a tie in mean accuracy against `b`.
inline bool cheaper_params(const GbdtParams& a, const GbdtParams& b) {
    return std::tie(a.rounds, a.max_depth, a.learning_rate) < std::tie(b.rounds, b.max_depth, b.learning_rate);
}

// Runs fn(0..count-1) on `threads` workers. Each index runs exactly once.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < count;) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

inline CvReport cv_grid_search(const Matrix& x, const Labels& y, std::span<const GbdtParams> grid,
                               std::size_t folds = 5, std::uint64_t seed = 0, std::size_t threads = 1) {
    if (grid.empty()) throw Error("parameter grid is empty");
    detail::check_training_input(x, y);
    for (const auto& p : grid) p.validate();

    const auto held_out = stratified_folds(y, folds, seed);
    struct Fold {
        Matrix train_x, valid_x;
        Labels train_y, valid_y;
    };
    std::vector<Fold> data(folds);
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<bool> is_valid(x.rows, false);
        for (auto r : held_out[f]) is_valid[r] = true;
        auto& d = data[f];
        d.train_x.cols = d.valid_x.cols = x.cols;
        for (std::size_t i = 0; i < x.rows; ++i) {
            auto& m = is_valid[i] ? d.valid_x : d.train_x;
            m.data.insert(m.data.end(), x.row(i).begin(), x.row(i).end());
            ++m.rows;
            (is_valid[i] ? d.valid_y : d.train_y).push_back(y[i]);
        }
    }

    // Group grid points that share everything but `rounds`.
    std::vector<std::vector<std::size_t>> groups;
    std::map<std::tuple<double, std::size_t, double, double>, std::size_t> group_of;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto& p = grid[k];
        const auto key = std::make_tuple(p.learning_rate, p.max_depth, p.l2_leaf_penalty, p.min_child_weight);
        auto [it, inserted] = group_of.try_emplace(key, groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(k);
    }

    CvReport report;
    report.folds = folds;
    report.seed = seed;
    report.points.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        report.points[k].params = grid[k];
        report.points[k].fold_accuracy.assign(folds, 0.0);
    }

    parallel_for(groups.size() * folds, threads, [&](std::size_t task) {
        const auto& members = groups[task / folds];
        const std::size_t f = task % folds;
        GbdtParams p = grid[members.front()];
        for (auto k : members) p.rounds = std::max(p.rounds, grid[k].rounds);
        const auto model = train_gbdt(data[f].train_x, data[f].train_y, p, derive_seed(seed, "cv-fold", f));
        for (auto k : members)
            report.points[k].fold_accuracy[f] = accuracy(predict(model, data[f].valid_x, grid[k].rounds), data[f].valid_y);
    });

    for (auto& pt : report.points) {
        double sum = 0.0;
        for (double a : pt.fold_accuracy) sum += a;
        pt.mean_accuracy = sum / static_cast<double>(folds);
    }
    for (std::size_t k = 1; k < report.points.size(); ++k) {
        const auto& cand = report.points[k];
        const auto& best = report.points[report.chosen_index];
        if (cand.mean_accuracy > best.mean_accuracy ||
            (cand.mean_accuracy == best.mean_accuracy && cheaper_params(cand.params, best.params)))
            report.chosen_index = k;
    }
    report.chosen = report.points[report.chosen_index].params;
    return report;
}

}  // namespace hgml
