#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "sparsedist/error.hpp"

namespace sparsedist::eval {

/// Kuhn-Munkres on a square cost matrix (row-major, size n x n). Returns the column assigned
/// to each row for a minimum-cost perfect matching.
inline std::vector<std::size_t> min_cost_assignment(const std::vector<std::int64_t>& cost, std::size_t n) {
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  // potentials and matching use 1-based indices; column 0 is a sentinel
  std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t row = 1; row <= n; ++row) {
    match[0] = row;
    std::size_t col0 = 0;
    std::vector<std::int64_t> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[col0] = 1;
      const std::size_t row0 = match[col0];
      std::int64_t delta = kInf;
      std::size_t col1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const std::int64_t cur = cost[(row0 - 1) * n + (j - 1)] - u[row0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = col0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          col1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<std::size_t> assignment(n, 0);
  for (std::size_t j = 1; j <= n; ++j) {
    if (match[j] != 0) assignment[match[j] - 1] = j - 1;
  }
  return assignment;
}

/// Fraction of items whose cluster maps to their class under the best one-to-one
/// cluster-to-class matching. The confusion matrix is zero-padded to square.
template <typename P, typename T>
double hungarian_accuracy(std::span<const P> predicted, std::span<const T> truth) {
  if (predicted.empty()) throw DegenerateInputError("no items to score");
  if (predicted.size() != truth.size()) throw DimensionError("prediction and truth lengths differ");
  std::map<P, std::size_t> clusters;
  std::map<T, std::size_t> classes;
  for (const auto& p : predicted) clusters.emplace(p, clusters.size());
  for (const auto& t : truth) classes.emplace(t, classes.size());
  const std::size_t n = std::max(clusters.size(), classes.size());
  std::vector<std::int64_t> counts(n * n, 0);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    ++counts[clusters.at(predicted[i]) * n + classes.at(truth[i])];
  }
  const std::int64_t most = *std::max_element(counts.begin(), counts.end());
  std::vector<std::int64_t> cost(n * n);
  for (std::size_t i = 0; i < cost.size(); ++i) cost[i] = most - counts[i];
  const auto assignment = min_cost_assignment(cost, n);
  std::int64_t matched = 0;
  for (std::size_t r = 0; r < n; ++r) matched += counts[r * n + assignment[r]];
  return static_cast<double>(matched) / static_cast<double>(predicted.size());
}

template <typename P, typename T>
double hungarian_accuracy(const std::vector<P>& predicted, const std::vector<T>& truth) {
  return hungarian_accuracy(std::span<const P>(predicted), std::span<const T>(truth));
}

}  // namespace sparsedist::eval
