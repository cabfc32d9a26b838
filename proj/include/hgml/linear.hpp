#pragma once

// Linear baselines: perceptron and ridge regression.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "hgml/error.hpp"
#include "hgml/matrix.hpp"
#include "hgml/random.hpp"

namespace hgml {

// score(x) = w.x + bias; a sample is labeled 1 when score >= threshold.
struct LinearModel {
    std::vector<double> weights;
    double bias = 0.0;
    double threshold = 0.0;

    double score(std::span<const double> x) const {
        if (x.size() != weights.size())
            throw Error("feature count mismatch: model has " + std::to_string(weights.size()) + ", input has " +
                        std::to_string(x.size()));
        return std::inner_product(weights.begin(), weights.end(), x.begin(), bias);
    }
    int classify(std::span<const double> x) const { return score(x) >= threshold ? 1 : 0; }
};

inline Labels predict(const LinearModel& model, const Matrix& x) {
    Labels out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out[i] = model.classify(x.row(i));
    return out;
}

// Rosenblatt updates on +-1 coded labels, visiting samples in a seeded
// order each epoch. Stops early after an epoch without mistakes.
inline LinearModel train_perceptron(const Matrix& x, const Labels& y, std::size_t epochs, std::uint64_t seed) {
    if (x.empty()) throw Error("training matrix is empty");
    if (x.rows != y.size()) throw Error("dimension mismatch between rows and labels");
    LinearModel m;
    m.weights.assign(x.cols, 0.0);
    std::vector<std::size_t> order(x.rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, "perceptron"));
    for (std::size_t e = 0; e < epochs; ++e) {
        shuffle(std::span(order), rng);
        std::size_t mistakes = 0;
        for (auto i : order) {
            const double target = y[i] == 1 ? 1.0 : -1.0;
            const auto row = x.row(i);
            if (target * m.score(row) > 0.0) continue;
            ++mistakes;
            for (std::size_t j = 0; j < x.cols; ++j) m.weights[j] += target * row[j];
            m.bias += target;
        }
        if (mistakes == 0) break;
    }
    return m;
}

// Least squares with `penalty` * identity on the weights; the intercept is
// fitted by centering and is not penalized. Throws when the system is
// singular, which only happens with penalty == 0.
inline LinearModel fit_ridge(const Matrix& x, std::span<const double> targets, double penalty) {
    if (x.empty()) throw Error("training matrix is empty");
    if (x.rows != targets.size()) throw Error("dimension mismatch between rows and targets");
    if (!(penalty >= 0.0)) throw Error("ridge penalty must be >= 0");

    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const RowMajor> a(x.data.data(), static_cast<Eigen::Index>(x.rows),
                                       static_cast<Eigen::Index>(x.cols));
    const Eigen::Map<const Eigen::VectorXd> b(targets.data(), static_cast<Eigen::Index>(targets.size()));

    const Eigen::RowVectorXd x_mean = a.colwise().mean();
    const double y_mean = b.mean();
    const Eigen::MatrixXd centered = a.rowwise() - x_mean;
    Eigen::MatrixXd normal = centered.transpose() * centered;
    normal.diagonal().array() += penalty;
    const Eigen::VectorXd rhs = centered.transpose() * (b.array() - y_mean).matrix();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(normal);
    if (qr.rank() < normal.rows())
        throw Error("ridge normal equations are singular; use a nonzero penalty");
    const Eigen::VectorXd w = qr.solve(rhs);

    LinearModel m;
    m.weights.assign(w.data(), w.data() + w.size());
    m.bias = y_mean - x_mean.dot(w);
    return m;
}

// Regresses the 0/1 labels and labels a sample 1 when its fitted value is
// at least 0.5.
inline LinearModel train_ridge(const Matrix& x, const Labels& y, double penalty) {
    std::vector<double> targets(y.begin(), y.end());
    auto m = fit_ridge(x, targets, penalty);
    m.threshold = 0.5;
    return m;
}

}  // namespace hgml
