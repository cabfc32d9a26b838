#pragma once

#include <cstddef>

#include "hgml/error.hpp"
#include "hgml/matrix.hpp"

namespace hgml {

inline double accuracy(const Labels& predicted, const Labels& truth) {
    if (truth.empty()) throw Error("accuracy of an empty sample set is undefined");
    if (predicted.size() != truth.size()) throw Error("prediction count does not match label count");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

// Works with any model type that has a `predict(model, Matrix)` overload.
template <class Model>
double evaluate_accuracy(const Model& model, const Matrix& x, const Labels& y) {
    if (x.rows == 0) throw Error("cannot evaluate on an empty matrix");
    return accuracy(predict(model, x), y);
}

}  // namespace hgml
