#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "sparsedist/complexity.hpp"
#include "sparsedist/error.hpp"

namespace sparsedist::eval {

/// One agglomeration step. Leaves are nodes 0..M-1; merge t creates node M+t.
struct Merge {
  std::size_t a = 0;
  std::size_t b = 0;
  double height = 0.0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::vector<std::string> leaves;
  std::vector<Merge> merges;
};

/// UPGMA (average linkage). Cluster distance is the mean of all cross pairs, kept as an exact
/// running sum of leaf distances. Ties go to the smallest (slot i, slot j) pair, where a merged
/// cluster takes the lower slot of its two parts.
inline Dendrogram average_linkage(const DistanceMatrix& d) {
  const std::size_t count = d.size();
  if (count < 2) throw DegenerateInputError("average linkage needs at least 2 items");
  std::vector<std::vector<double>> sums(count, std::vector<double>(count, 0.0));
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < count; ++j) sums[i][j] = d(i, j);
  }
  std::vector<std::size_t> sizes(count, 1), node(count);
  std::vector<char> active(count, 1);
  for (std::size_t i = 0; i < count; ++i) node[i] = i;

  Dendrogram out;
  out.leaves = d.ids;
  for (std::size_t step = 0; step + 1 < count; ++step) {
    std::size_t bi = 0, bj = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < count; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < count; ++j) {
        if (!active[j]) continue;
        const double avg = sums[i][j] / static_cast<double>(sizes[i] * sizes[j]);
        if (avg < best) {
          best = avg;
          bi = i;
          bj = j;
        }
      }
    }
    out.merges.push_back({node[bi], node[bj], best, sizes[bi] + sizes[bj]});
    for (std::size_t t = 0; t < count; ++t) {
      sums[bi][t] += sums[bj][t];
      sums[t][bi] = sums[bi][t];
    }
    sizes[bi] += sizes[bj];
    active[bj] = 0;
    node[bi] = count + step;
  }
  return out;
}

}  // namespace sparsedist::eval
