#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "sparsedist/omp.hpp"
#include "support/oracles.hpp"

using namespace sparsedist;
using sparsedist::fixtures::best_subset_residual;
using sparsedist::fixtures::random_unit_columns;

namespace {

CodingParams coding(double eps, std::size_t max_atoms) {
  CodingParams p;
  p.epsilon = eps;
  p.max_atoms = max_atoms;
  return p;
}

double relative_residual(const Dictionary& d, const Eigen::VectorXd& b, const SparseColumn& c) {
  return (b - reconstruct(d, c)).norm() / b.norm();
}

}  // namespace

TEST(Omp, ExactOneAtomMatch) {
  Eigen::MatrixXd D(2, 4);
  D << 1, 0, std::sqrt(0.5), 0.6,
       0, 1, std::sqrt(0.5), 0.8;
  const Dictionary dict(D);
  const auto col = omp(dict, Eigen::Vector2d(1, 0), coding(0.1, 2));
  ASSERT_EQ(col.support, std::vector<std::size_t>{0});
  EXPECT_DOUBLE_EQ(col.coefficients[0], 1.0);
  EXPECT_EQ(relative_residual(dict, Eigen::Vector2d(1, 0), col), 0.0);
}

TEST(Omp, ZeroSignalHasEmptySupport) {
  const Dictionary dict(random_unit_columns(4, 8, 1));
  const auto col = omp(dict, Eigen::VectorXd::Zero(4), coding(0.1, 4));
  EXPECT_TRUE(col.support.empty());
  EXPECT_TRUE(col.coefficients.empty());
}

TEST(Omp, TwoAtomSignalAgainstExhaustiveSearch) {
  const Eigen::MatrixXd D = random_unit_columns(4, 8, 3);
  const Dictionary dict(D);
  const Eigen::VectorXd b = 0.7 * D.col(3) + 0.2 * D.col(5);
  const auto col = omp(dict, b, coding(0.01, 2));
  const double best_single = best_subset_residual(D, b, 1);
  EXPECT_LE((b - reconstruct(dict, col)).norm(), best_single + 1e-12);
  ASSERT_EQ(col.support.size(), 2u);
  EXPECT_LE(relative_residual(dict, b, col), 0.01);
}

TEST(Omp, TiesGoToLowestIndex) {
  Eigen::MatrixXd D(2, 3);
  D << 1, 1, 0,
       0, 0, 1;
  const Dictionary dict(D);
  const auto col = omp(dict, Eigen::Vector2d(1, 0), coding(0.1, 2));
  EXPECT_EQ(col.support, std::vector<std::size_t>{0});
}

TEST(Omp, DuplicateAtomIsNeverAddedTwice) {
  // atom 2 is a copy of atom 0
  Eigen::MatrixXd D(3, 4);
  D << 1, 0, 1, 0,
       0, 1, 0, 0,
       0, 0, 0, 1;
  const Dictionary dict(D);
  const Eigen::Vector3d b(1.0, 0.5, 0.25);
  const auto col = omp(dict, b, coding(0.01, 3));
  for (std::size_t a : col.support) EXPECT_NE(a, 2u);
  EXPECT_TRUE(std::is_sorted(col.support.begin(), col.support.end()));
}

TEST(Omp, RejectsBadInputs) {
  const Dictionary dict(random_unit_columns(4, 8, 1));
  EXPECT_THROW(omp(dict, Eigen::VectorXd::Zero(5), coding(0.1, 2)), DimensionError);
  Eigen::VectorXd bad = Eigen::VectorXd::Ones(4);
  bad[2] = std::nan("");
  EXPECT_THROW(omp(dict, bad, coding(0.1, 2)), NumericError);
  EXPECT_THROW(omp(dict, Eigen::VectorXd::Ones(4), coding(0.0, 2)), ParameterError);
  EXPECT_THROW(omp(dict, Eigen::VectorXd::Ones(4), coding(0.1, 5)), ParameterError);
  CodingParams l1 = coding(0.1, 2);
  l1.p = Norm::L1;
  EXPECT_THROW(omp(dict, Eigen::VectorXd::Ones(4), l1), ParameterError);
}

TEST(Omp, MatchesTextbookGreedyOnSmallInstances) {
  // reference OMP: explicit residual, least squares by QR at every step
  auto reference = [](const Eigen::MatrixXd& D, const Eigen::VectorXd& b, double eps, std::size_t cap) {
    std::vector<std::size_t> support;
    Eigen::VectorXd r = b;
    while (r.norm() > eps * b.norm() && support.size() < cap) {
      Eigen::Index best = -1;
      double best_abs = 0.0;
      for (Eigen::Index j = 0; j < D.cols(); ++j) {
        if (std::find(support.begin(), support.end(), static_cast<std::size_t>(j)) != support.end()) continue;
        if (std::abs(D.col(j).dot(r)) > best_abs) {
          best_abs = std::abs(D.col(j).dot(r));
          best = j;
        }
      }
      support.push_back(static_cast<std::size_t>(best));
      Eigen::MatrixXd sub(D.rows(), static_cast<Eigen::Index>(support.size()));
      for (std::size_t i = 0; i < support.size(); ++i) sub.col(static_cast<Eigen::Index>(i)) = D.col(static_cast<Eigen::Index>(support[i]));
      r = b - sub * sub.colPivHouseholderQr().solve(b);
    }
    std::sort(support.begin(), support.end());
    return std::make_pair(support, r.norm());
  };
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = 4 + static_cast<int>(rng() % 3);
    const int n = m + 1 + static_cast<int>(rng() % (10 - m));
    const Eigen::MatrixXd D = random_unit_columns(m, n, rng());
    const Dictionary dict(D);
    const Eigen::VectorXd b = random_unit_columns(m, 1, rng()).col(0);
    const auto cap = static_cast<std::size_t>(1 + rng() % 3);
    const auto col = omp(dict, b, coding(0.1, cap));
    const auto [support, resid] = reference(D, b, 0.1, cap);
    EXPECT_EQ(col.support, support) << "trial " << trial;
    EXPECT_NEAR((b - reconstruct(dict, col)).norm(), resid, 1e-10);
  }
}

TEST(Omp, FirstAtomIsTheBestSingleAtom) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 4 + static_cast<int>(rng() % 3);
    const Eigen::MatrixXd D = random_unit_columns(m, 10, rng());
    const Dictionary dict(D);
    const Eigen::VectorXd b = random_unit_columns(m, 1, rng()).col(0);
    const auto col = omp(dict, b, coding(0.1, 1));
    EXPECT_NEAR((b - reconstruct(dict, col)).norm(), best_subset_residual(D, b, 1), 1e-12);
  }
}

TEST(Omp, OneAtomFeasibleSignalsUseOneAtom) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::MatrixXd D = random_unit_columns(6, 10, rng());
    const Dictionary dict(D);
    Eigen::VectorXd b = D.col(static_cast<Eigen::Index>(rng() % 10)) * (1.0 + std::abs(gauss(rng)));
    b += 0.05 * b.norm() * random_unit_columns(6, 1, rng()).col(0);
    if (best_subset_residual(D, b, 1) > 0.1 * b.norm()) continue;
    EXPECT_EQ(omp(dict, b, coding(0.1, 3)).support.size(), 1u);
  }
}

TEST(Omp, HomogeneousInSignalScale) {
  const Eigen::MatrixXd D = random_unit_columns(16, 40, 5);
  const Dictionary dict(D);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd b = random_unit_columns(16, 1, 100 + t).col(0);
    const auto a = omp(dict, b, coding(0.1, 8));
    const auto c = omp(dict, Eigen::VectorXd(2.0 * b), coding(0.1, 8));
    ASSERT_EQ(a.support, c.support);
    for (std::size_t i = 0; i < a.coefficients.size(); ++i) {
      EXPECT_NEAR(c.coefficients[i], 2.0 * a.coefficients[i], 1e-10);
    }
  }
}

TEST(Omp, ResidualOrthogonalToSupport) {
  const Eigen::MatrixXd D = random_unit_columns(16, 40, 6);
  const Dictionary dict(D);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd b = random_unit_columns(16, 1, 200 + t).col(0);
    const auto col = omp(dict, b, coding(0.05, 10));
    const Eigen::VectorXd r = b - reconstruct(dict, col);
    for (std::size_t a : col.support) EXPECT_LE(std::abs(D.col(static_cast<Eigen::Index>(a)).dot(r)), 1e-8);
    EXPECT_TRUE(r.norm() <= 0.05 * b.norm() + 1e-12 || col.support.size() == 10u);
  }
}

TEST(Omp, ResidualNonIncreasingInAtomBudget) {
  const Eigen::MatrixXd D = random_unit_columns(16, 40, 7);
  const Dictionary dict(D);
  for (int t = 0; t < 10; ++t) {
    const Eigen::VectorXd b = random_unit_columns(16, 1, 300 + t).col(0);
    double previous = b.norm();
    for (std::size_t budget = 1; budget <= 12; ++budget) {
      const auto col = omp(dict, b, coding(0.01, budget));
      const double r = (b - reconstruct(dict, col)).norm();
      EXPECT_LE(r, previous + 1e-12);
      previous = r;
    }
  }
}

TEST(BatchCode, SingleColumnMatchesOmp) {
  const Eigen::MatrixXd D = random_unit_columns(8, 20, 2);
  const Dictionary dict(D);
  const Eigen::MatrixXd signals = random_unit_columns(8, 1, 9);
  const auto code = batch_code(dict, signals, coding(0.1, 4));
  ASSERT_EQ(code.k(), 1u);
  EXPECT_EQ(code.n, 20u);
  const auto single = omp(dict, signals.col(0), coding(0.1, 4));
  EXPECT_EQ(code.columns[0].support, single.support);
  for (std::size_t i = 0; i < single.coefficients.size(); ++i) {
    EXPECT_NEAR(code.columns[0].coefficients[i], single.coefficients[i], 1e-12);
  }
}

TEST(BatchCode, CopiesOfOneAtomUseOneAtom) {
  const Eigen::MatrixXd D = random_unit_columns(8, 20, 4);
  const Dictionary dict(D);
  Eigen::MatrixXd signals(8, 30);
  for (int c = 0; c < 30; ++c) signals.col(c) = D.col(11) * (1.0 + c);
  const auto code = batch_code(dict, signals, coding(0.1, 8));
  for (const auto& col : code.columns) EXPECT_EQ(col.support, std::vector<std::size_t>{11});
}

TEST(BatchCode, PermutingColumnsPermutesCodes) {
  const Eigen::MatrixXd D = random_unit_columns(8, 20, 8);
  const Dictionary dict(D);
  const Eigen::MatrixXd signals = random_unit_columns(8, 600, 10);
  std::vector<int> perm(600);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
  Eigen::MatrixXd shuffled(8, 600);
  for (int c = 0; c < 600; ++c) shuffled.col(c) = signals.col(perm[static_cast<std::size_t>(c)]);
  const auto a = batch_code(dict, signals, coding(0.1, 6));
  const auto b = batch_code(dict, shuffled, coding(0.1, 6), 3);
  for (int c = 0; c < 600; ++c) EXPECT_EQ(b.columns[static_cast<std::size_t>(c)], a.columns[static_cast<std::size_t>(perm[c])]);
}

TEST(BatchCode, ThreadCountDoesNotChangeResult) {
  const Dictionary dict(random_unit_columns(8, 20, 12));
  const Eigen::MatrixXd signals = random_unit_columns(8, 1000, 13);
  EXPECT_EQ(batch_code(dict, signals, coding(0.1, 6), 1), batch_code(dict, signals, coding(0.1, 6), 4));
}

TEST(BatchCode, DimensionMismatchRejected) {
  const Dictionary dict(random_unit_columns(8, 20, 12));
  EXPECT_THROW(batch_code(dict, Eigen::MatrixXd::Ones(7, 3), coding(0.1, 4)), DimensionError);
}
