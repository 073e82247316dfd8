#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sparsedist/complexity.hpp"
#include "sparsedist/error.hpp"

namespace sparsedist::eval {

/// Leave-one-out 1-NN: each item takes the label of its nearest other item (lowest index on ties).
template <typename Label>
std::vector<Label> knn_loo_predict(const DistanceMatrix& d, std::span<const Label> labels) {
  const std::size_t count = d.size();
  if (count < 2) throw DegenerateInputError("leave-one-out needs at least 2 items");
  if (labels.size() != count) throw DimensionError("label count differs from matrix size");
  std::vector<Label> predicted;
  predicted.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t nearest = i == 0 ? 1 : 0;
    for (std::size_t j = 0; j < count; ++j) {
      if (j != i && d(i, j) < d(i, nearest)) nearest = j;
    }
    predicted.push_back(labels[nearest]);
  }
  return predicted;
}

template <typename Label>
double knn_loo_classify(const DistanceMatrix& d, std::span<const Label> labels) {
  const auto predicted = knn_loo_predict(d, labels);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

template <typename Label>
double knn_loo_classify(const DistanceMatrix& d, const std::vector<Label>& labels) {
  return knn_loo_classify(d, std::span<const Label>(labels));
}

}  // namespace sparsedist::eval
