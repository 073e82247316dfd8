#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sparsedist/dictionary.hpp"
#include "sparsedist/error.hpp"
#include "sparsedist/omp.hpp"
#include "sparsedist/patches.hpp"
#include "sparsedist/random.hpp"

namespace sparsedist {

// Learning stops once the mean squared residual improves by less than this between iterations.
inline constexpr double kKsvdEarlyStop = 1e-5;
inline constexpr double kPowerTolerance = 1e-10;
inline constexpr std::size_t kPowerMaxSteps = 1000;

/// Per-iteration record of a learning run.
struct KsvdTrace {
  // mean over patches of ||b_i - D a_i||^2 right after each accepted dictionary update
  std::vector<double> mean_squared_residual;
  std::size_t replaced_atoms = 0;
};

/// n distinct random patch columns, each scaled to unit norm.
inline Dictionary dictionary_init(const PatchMatrix& patches, std::size_t n, std::uint64_t seed) {
  const std::size_t k = patches.k();
  if (k < n) {
    throw ParameterError("need at least n=" + std::to_string(n) + " patches, have " + std::to_string(k));
  }
  std::vector<std::size_t> pool(k);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  Rng rng(seed);
  // partial Fisher-Yates
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_index(rng, k - i));
    std::swap(pool[i], pool[j]);
  }
  Eigen::MatrixXd atoms(patches.columns.rows(), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto col = patches.columns.col(static_cast<Eigen::Index>(pool[i]));
    const double norm = col.norm();
    if (!(norm > 0.0)) throw DegenerateInputError("zero-norm patch column");
    atoms.col(static_cast<Eigen::Index>(i)) = col / norm;
  }
  return Dictionary(std::move(atoms));
}

namespace detail {

// Dominant eigenvector of the PSD matrix `sym`, warm-started from `start`.
inline Eigen::VectorXd dominant_direction(const Eigen::MatrixXd& sym, Eigen::VectorXd start) {
  Eigen::VectorXd u = std::move(start);
  for (std::size_t step = 0; step < kPowerMaxSteps; ++step) {
    Eigen::VectorXd next = sym * u;
    const double norm = next.norm();
    if (!(norm > 0.0)) return u;
    next /= norm;
    const double change = (next - u).norm();
    u = std::move(next);
    if (change <= kPowerTolerance) break;
  }
  return u;
}

inline Eigen::MatrixXd residual_matrix(const Dictionary& dict, const Eigen::MatrixXd& signals,
                                       const SparseCode& code) {
  Eigen::MatrixXd resid = signals;
  for (std::size_t i = 0; i < code.columns.size(); ++i) {
    const auto& col = code.columns[i];
    for (std::size_t s = 0; s < col.support.size(); ++s) {
      resid.col(static_cast<Eigen::Index>(i)) -=
          dict.atoms().col(static_cast<Eigen::Index>(col.support[s])) * col.coefficients[s];
    }
  }
  return resid;
}

}  // namespace detail

/// K-SVD: alternate OMP coding with sequential rank-1 atom updates.
inline Dictionary ksvd_learn(const PatchMatrix& patches, const LearnParams& params, KsvdTrace* trace = nullptr,
                             unsigned jobs = 1) {
  const std::size_t m = patches.m();
  const std::size_t k = patches.k();
  if (params.iterations < 1) throw ParameterError("iterations must be >= 1");
  if (params.n <= m) throw ParameterError("atom count n must exceed m=" + std::to_string(m));
  params.coding.validate(m);
  if (!patches.columns.allFinite()) throw NumericError("patches have non-finite entries");

  Dictionary dict = dictionary_init(patches, params.n, params.seed);
  Eigen::MatrixXd atoms = dict.atoms();
  const Eigen::MatrixXd& signals = patches.columns;
  double previous_mse = 0.0;

  for (std::size_t iter = 0; iter < params.iterations; ++iter) {
    SparseCode code = batch_code(dict, signals, params.coding, jobs);
    Eigen::MatrixXd resid = detail::residual_matrix(dict, signals, code);

    // users[j] = (patch column, position within its support) for every patch using atom j
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> users(params.n);
    for (std::size_t i = 0; i < k; ++i) {
      const auto& support = code.columns[i].support;
      for (std::size_t s = 0; s < support.size(); ++s) users[support[s]].emplace_back(i, s);
    }
    Eigen::VectorXd errors = resid.colwise().squaredNorm().transpose();
    std::size_t replaced = 0;

    for (std::size_t j = 0; j < params.n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const auto& uses = users[j];
      if (uses.empty()) {
        Eigen::Index worst = 0;
        errors.maxCoeff(&worst);
        const double norm = signals.col(worst).norm();
        if (errors[worst] > 0.0 && norm > 0.0) {
          atoms.col(jj) = signals.col(worst) / norm;
          errors[worst] = 0.0;
          ++replaced;
        }
        continue;
      }
      const auto count = static_cast<Eigen::Index>(uses.size());
      Eigen::MatrixXd restricted(static_cast<Eigen::Index>(m), count);
      for (Eigen::Index u = 0; u < count; ++u) {
        const auto [col, pos] = uses[static_cast<std::size_t>(u)];
        restricted.col(u) = resid.col(static_cast<Eigen::Index>(col)) +
                            atoms.col(jj) * code.columns[col].coefficients[pos];
      }
      if (restricted.squaredNorm() == 0.0) continue;
      const Eigen::MatrixXd sym = restricted * restricted.transpose();
      Eigen::VectorXd start = atoms.col(jj);
      if ((sym * start).squaredNorm() == 0.0) {
        Eigen::Index strongest = 0;
        restricted.colwise().squaredNorm().maxCoeff(&strongest);
        start = restricted.col(strongest).normalized();
      }
      const Eigen::VectorXd direction = detail::dominant_direction(sym, std::move(start));
      const Eigen::VectorXd weights = restricted.transpose() * direction;
      atoms.col(jj) = direction;
      for (Eigen::Index u = 0; u < count; ++u) {
        const auto [col, pos] = uses[static_cast<std::size_t>(u)];
        code.columns[col].coefficients[pos] = weights[u];
        const auto c = static_cast<Eigen::Index>(col);
        resid.col(c) = restricted.col(u) - direction * weights[u];
        errors[c] = resid.col(c).squaredNorm();
      }
    }

    const double mse = resid.colwise().squaredNorm().mean();
    // an iteration that made the fit worse is discarded and learning stops
    if (iter > 0 && mse > previous_mse) break;
    dict = Dictionary(atoms);
    if (trace) {
      trace->mean_squared_residual.push_back(mse);
      trace->replaced_atoms += replaced;
    }
    if (iter > 0 && previous_mse - mse < kKsvdEarlyStop) break;
    previous_mse = mse;
  }
  return dict;
}

}  // namespace sparsedist
