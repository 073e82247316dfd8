#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "sparsedist/complexity.hpp"
#include "sparsedist/error.hpp"
#include "sparsedist/random.hpp"

namespace sparsedist::eval {

/// Kernel width rule for turning distances into affinities.
struct SigmaRule {
  enum class Kind { Median, Fixed };
  Kind kind = Kind::Median;
  double value = 0.0;  // used by Fixed

  static SigmaRule median() { return {}; }
  static SigmaRule fixed(double sigma) { return {Kind::Fixed, sigma}; }
};

/// Gaussian kernel exp(-d^2 / (2 sigma^2)) off the diagonal, zero on it. The median rule takes
/// the median off-diagonal distance (falling back to the median positive distance when more
/// than half the pairs coincide).
inline Eigen::MatrixXd affinity_from_distance(const DistanceMatrix& d, SigmaRule rule = SigmaRule::median()) {
  const auto count = static_cast<Eigen::Index>(d.size());
  std::vector<double> off;
  std::vector<double> positive;
  for (Eigen::Index i = 0; i < count; ++i) {
    for (Eigen::Index j = i + 1; j < count; ++j) {
      off.push_back(d.values(i, j));
      if (d.values(i, j) > 0.0) positive.push_back(d.values(i, j));
    }
  }
  if (positive.empty()) throw DegenerateInputError("all pairwise distances are zero");
  auto median_of = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
  };
  double sigma = rule.value;
  if (rule.kind == SigmaRule::Kind::Median) {
    sigma = median_of(off);
    if (sigma <= 0.0) sigma = median_of(positive);
  }
  if (!(sigma > 0.0)) throw ParameterError("kernel width must be positive");
  Eigen::MatrixXd a(count, count);
  const double denom = 2.0 * sigma * sigma;
  for (Eigen::Index i = 0; i < count; ++i) {
    for (Eigen::Index j = 0; j < count; ++j) {
      a(i, j) = i == j ? 0.0 : std::exp(-d.values(i, j) * d.values(i, j) / denom);
    }
  }
  return a;
}

struct ClusteringResult {
  std::vector<std::size_t> assignments;
  std::size_t k = 0;
  double inertia = 0.0;
  std::optional<double> accuracy;
};

namespace detail {

inline double squared_distance(const Eigen::MatrixXd& pts, Eigen::Index row, const Eigen::MatrixXd& centers,
                               Eigen::Index c) {
  return (pts.row(row) - centers.row(c)).squaredNorm();
}

// k-means++ seeding followed by Lloyd iterations. Ties resolve to the lowest center index.
inline ClusteringResult kmeans_once(const Eigen::MatrixXd& pts, std::size_t k, Rng& rng) {
  const Eigen::Index count = pts.rows();
  const auto kk = static_cast<Eigen::Index>(k);
  Eigen::MatrixXd centers(kk, pts.cols());
  centers.row(0) = pts.row(static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(count))));
  std::vector<double> nearest(static_cast<std::size_t>(count), std::numeric_limits<double>::infinity());
  for (Eigen::Index c = 1; c < kk; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < count; ++i) {
      auto& n = nearest[static_cast<std::size_t>(i)];
      n = std::min(n, squared_distance(pts, i, centers, c - 1));
      total += n;
    }
    Eigen::Index pick = count - 1;
    if (total > 0.0) {
      double target = uniform_unit(rng) * total;
      for (Eigen::Index i = 0; i < count; ++i) {
        target -= nearest[static_cast<std::size_t>(i)];
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(count)));
    }
    centers.row(c) = pts.row(pick);
  }

  ClusteringResult result;
  result.k = k;
  result.assignments.assign(static_cast<std::size_t>(count), k);
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < count; ++i) {
      std::size_t best = 0;
      double best_d = squared_distance(pts, i, centers, 0);
      for (Eigen::Index c = 1; c < kk; ++c) {
        const double dd = squared_distance(pts, i, centers, c);
        if (dd < best_d) {
          best_d = dd;
          best = static_cast<std::size_t>(c);
        }
      }
      if (result.assignments[static_cast<std::size_t>(i)] != best) {
        result.assignments[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(kk, pts.cols());
    std::vector<std::size_t> sizes(k, 0);
    for (Eigen::Index i = 0; i < count; ++i) {
      const auto c = result.assignments[static_cast<std::size_t>(i)];
      sums.row(static_cast<Eigen::Index>(c)) += pts.row(i);
      ++sizes[c];
    }
    for (std::size_t c = 0; c < k; ++c) {
      const auto cc = static_cast<Eigen::Index>(c);
      if (sizes[c] > 0) {
        centers.row(cc) = sums.row(cc) / static_cast<double>(sizes[c]);
        continue;
      }
      // empty cluster: move its center to the point farthest from its own center
      Eigen::Index far = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < count; ++i) {
        const double dd = squared_distance(pts, i, centers,
                                           static_cast<Eigen::Index>(result.assignments[static_cast<std::size_t>(i)]));
        if (dd > far_d) {
          far_d = dd;
          far = i;
        }
      }
      centers.row(cc) = pts.row(far);
    }
  }
  result.inertia = 0.0;
  for (Eigen::Index i = 0; i < count; ++i) {
    result.inertia +=
        squared_distance(pts, i, centers, static_cast<Eigen::Index>(result.assignments[static_cast<std::size_t>(i)]));
  }
  return result;
}

}  // namespace detail

/// Seeded k-means with restarts; the lowest-inertia run is kept (earliest on ties).
inline ClusteringResult kmeans(const Eigen::MatrixXd& points, std::size_t k, std::uint64_t seed, std::size_t runs) {
  if (k < 1 || k > static_cast<std::size_t>(points.rows())) throw ParameterError("k out of range for k-means");
  if (runs < 1) throw ParameterError("runs must be >= 1");
  ClusteringResult best;
  for (std::size_t r = 0; r < runs; ++r) {
    Rng rng(mix_seed(seed, r));
    auto candidate = detail::kmeans_once(points, k, rng);
    if (r == 0 || candidate.inertia < best.inertia) best = std::move(candidate);
  }
  return best;
}

/// Normalized spectral clustering: top-k eigenvectors of D^-1/2 A D^-1/2, rows scaled to unit
/// length, then k-means. Zero-degree nodes embed at the origin.
inline ClusteringResult spectral_cluster(const Eigen::MatrixXd& affinity, std::size_t k, std::uint64_t seed,
                                         std::size_t runs = 10) {
  const Eigen::Index count = affinity.rows();
  if (affinity.cols() != count) throw DimensionError("affinity must be square");
  if (k < 2 || k > static_cast<std::size_t>(count)) throw ParameterError("need 2 <= k <= M");
  if ((affinity.array() < 0.0).any()) throw ParameterError("affinity must be non-negative");
  if (!affinity.isApprox(affinity.transpose(), 1e-12)) throw ParameterError("affinity must be symmetric");

  Eigen::VectorXd inv_sqrt_degree(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    const double deg = affinity.row(i).sum();
    inv_sqrt_degree[i] = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  const Eigen::MatrixXd normalized =
      inv_sqrt_degree.asDiagonal() * affinity * inv_sqrt_degree.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(normalized);
  if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  const auto kk = static_cast<Eigen::Index>(k);
  Eigen::MatrixXd embedding = solver.eigenvectors().rightCols(kk);
  for (Eigen::Index i = 0; i < count; ++i) {
    const double norm = embedding.row(i).norm();
    if (norm > 0.0) embedding.row(i) /= norm;
  }
  return kmeans(embedding, k, seed, runs);
}

}  // namespace sparsedist::eval
