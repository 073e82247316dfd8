#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "sparsedist/complexity.hpp"
#include "sparsedist/error.hpp"

namespace sparsedist::eval {

inline std::size_t index_of(const DistanceMatrix& d, const std::string& id) {
  const auto it = std::find(d.ids.begin(), d.ids.end(), id);
  if (it == d.ids.end()) throw LookupError("unknown image id '" + id + "'");
  return static_cast<std::size_t>(it - d.ids.begin());
}

/// The K nearest ids to `query`, query excluded, ties by lowest index.
inline std::vector<std::string> retrieve(const DistanceMatrix& d, const std::string& query, std::size_t top_k) {
  const std::size_t q = index_of(d, query);
  if (top_k < 1 || top_k + 1 > d.size()) throw ParameterError("K must lie in [1, M-1]");
  std::vector<std::size_t> order;
  order.reserve(d.size() - 1);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i != q) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d(q, a) < d(q, b); });
  std::vector<std::string> out;
  out.reserve(top_k);
  for (std::size_t i = 0; i < top_k; ++i) out.push_back(d.ids[order[i]]);
  return out;
}

struct PrecisionRecall {
  double precision = 0.0;  // percent
  double recall = 0.0;     // percent
};

/// Precision = correct / retrieved; recall = correct / (query class size - 1). Both in percent.
inline PrecisionRecall precision_recall(const std::vector<std::string>& ranked,
                                        const std::map<std::string, std::string>& labels, const std::string& query) {
  if (ranked.empty()) throw ParameterError("ranked list is empty");
  const auto qit = labels.find(query);
  if (qit == labels.end()) throw LookupError("unknown query id '" + query + "'");
  const std::size_t class_size = static_cast<std::size_t>(std::count_if(
      labels.begin(), labels.end(), [&](const auto& kv) { return kv.second == qit->second; }));
  if (class_size < 2) throw DegenerateInputError("query class '" + qit->second + "' has no other members");
  std::size_t correct = 0;
  for (const auto& id : ranked) {
    const auto it = labels.find(id);
    if (it == labels.end()) throw LookupError("unknown image id '" + id + "'");
    correct += it->second == qit->second && id != query;
  }
  return {100.0 * static_cast<double>(correct) / static_cast<double>(ranked.size()),
          100.0 * static_cast<double>(correct) / static_cast<double>(class_size - 1)};
}

}  // namespace sparsedist::eval
