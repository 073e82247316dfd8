#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sparsedist/dictionary.hpp"
#include "sparsedist/error.hpp"
#include "sparsedist/parallel.hpp"
#include "sparsedist/patches.hpp"

namespace sparsedist {

// Pivot below which a new atom is treated as linearly dependent on the current support.
inline constexpr double kOmpPivotTolerance = 1e-10;

namespace detail {

// Gram-matrix OMP with an incrementally grown Cholesky factor of the support Gram block.
// The residual is never formed; correlations follow from alpha = D^T b - G_I x_I and
// ||r||^2 = ||b||^2 - x_I^T (D_I^T b).
class OmpKernel {
 public:
  OmpKernel(const Eigen::MatrixXd& gram, const CodingParams& params)
      : gram_(gram),
        params_(params),
        chol_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(params.max_atoms),
                                    static_cast<Eigen::Index>(params.max_atoms))),
        selected_(static_cast<std::size_t>(gram.cols()), 0) {}

  // `proj` = D^T b, `signal_norm2` = ||b||^2.
  SparseColumn solve(const Eigen::Ref<const Eigen::VectorXd>& proj, double signal_norm2) {
    const Eigen::Index n = gram_.cols();
    std::vector<Eigen::Index> support;
    Eigen::VectorXd x;
    if (signal_norm2 == 0.0) return {};

    const double target = params_.epsilon * params_.epsilon * signal_norm2;
    double resid2 = signal_norm2;
    alpha_ = proj;
    std::fill(selected_.begin(), selected_.end(), 0);

    while (resid2 > target && support.size() < params_.max_atoms) {
      Eigen::Index best = -1;
      double best_abs = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (selected_[j]) continue;
        const double a = std::abs(alpha_[j]);
        if (a > best_abs) {
          best_abs = a;
          best = j;
        }
      }
      if (best < 0) break;

      const auto s = static_cast<Eigen::Index>(support.size());
      if (s > 0) {
        Eigen::VectorXd w(s);
        for (Eigen::Index i = 0; i < s; ++i) w[i] = gram_(support[i], best);
        chol_.topLeftCorner(s, s).triangularView<Eigen::Lower>().solveInPlace(w);
        const double pivot = 1.0 - w.squaredNorm();
        if (pivot <= kOmpPivotTolerance) break;
        chol_.row(s).head(s) = w.transpose();
        chol_(s, s) = std::sqrt(pivot);
      } else {
        chol_(0, 0) = 1.0;
      }
      support.push_back(best);
      selected_[best] = 1;

      const auto size = s + 1;
      Eigen::VectorXd rhs(size);
      for (Eigen::Index i = 0; i < size; ++i) rhs[i] = proj[support[i]];
      x = rhs;
      auto lower = chol_.topLeftCorner(size, size).triangularView<Eigen::Lower>();
      lower.solveInPlace(x);
      lower.transpose().solveInPlace(x);

      alpha_ = proj;
      for (Eigen::Index i = 0; i < size; ++i) alpha_ -= gram_.col(support[i]) * x[i];
      resid2 = std::max(0.0, signal_norm2 - x.dot(rhs));
    }

    std::vector<std::size_t> order(support.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return support[a] < support[b]; });
    SparseColumn col;
    col.support.reserve(order.size());
    col.coefficients.reserve(order.size());
    for (auto i : order) {
      col.support.push_back(static_cast<std::size_t>(support[i]));
      col.coefficients.push_back(x[static_cast<Eigen::Index>(i)]);
    }
    return col;
  }

 private:
  const Eigen::MatrixXd& gram_;
  CodingParams params_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
  std::vector<char> selected_;
};

inline void check_finite(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (!v.allFinite()) throw NumericError("signal has non-finite entries");
}

}  // namespace detail

/// Orthogonal matching pursuit for one signal. Stops once ||r|| <= epsilon * ||b|| or the
/// support reaches max_atoms; atom ties go to the lowest index.
inline SparseColumn omp(const Dictionary& dict, const Eigen::Ref<const Eigen::VectorXd>& signal,
                        const CodingParams& params) {
  params.validate(dict.m());
  if (static_cast<std::size_t>(signal.size()) != dict.m()) {
    throw DimensionError("signal length " + std::to_string(signal.size()) + " != dictionary m " +
                         std::to_string(dict.m()));
  }
  detail::check_finite(signal);
  const Eigen::MatrixXd gram = dict.atoms().transpose() * dict.atoms();
  detail::OmpKernel kernel(gram, params);
  const Eigen::VectorXd proj = dict.atoms().transpose() * signal;
  return kernel.solve(proj, signal.squaredNorm());
}

/// Codes every column of `signals` independently.
inline SparseCode batch_code(const Dictionary& dict, const Eigen::Ref<const Eigen::MatrixXd>& signals,
                             const CodingParams& params, unsigned jobs = 1) {
  params.validate(dict.m());
  if (static_cast<std::size_t>(signals.rows()) != dict.m()) {
    throw DimensionError("patch dimension " + std::to_string(signals.rows()) + " != dictionary m " +
                         std::to_string(dict.m()));
  }
  if (!signals.allFinite()) throw NumericError("signals have non-finite entries");
  const Eigen::MatrixXd gram = dict.atoms().transpose() * dict.atoms();
  const Eigen::MatrixXd proj = dict.atoms().transpose() * signals;
  const Eigen::VectorXd norms2 = signals.colwise().squaredNorm().transpose();

  SparseCode code;
  code.n = dict.n();
  code.columns.resize(static_cast<std::size_t>(signals.cols()));
  constexpr std::size_t kBlock = 256;
  const std::size_t k = code.columns.size();
  parallel_for((k + kBlock - 1) / kBlock, jobs, [&](std::size_t block) {
    detail::OmpKernel kernel(gram, params);
    const std::size_t end = std::min(k, (block + 1) * kBlock);
    for (std::size_t i = block * kBlock; i < end; ++i) {
      const auto c = static_cast<Eigen::Index>(i);
      code.columns[i] = kernel.solve(proj.col(c), norms2[c]);
    }
  });
  return code;
}

inline SparseCode batch_code(const Dictionary& dict, const PatchMatrix& patches, const CodingParams& params,
                             unsigned jobs = 1) {
  return batch_code(dict, patches.columns, params, jobs);
}

/// D * a for one sparse column.
inline Eigen::VectorXd reconstruct(const Dictionary& dict, const SparseColumn& col) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dict.m()));
  for (std::size_t i = 0; i < col.support.size(); ++i) {
    out += dict.atoms().col(static_cast<Eigen::Index>(col.support[i])) * col.coefficients[i];
  }
  return out;
}

}  // namespace sparsedist
