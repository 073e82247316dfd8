#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sparsedist/error.hpp"

namespace sparsedist {

inline constexpr double kUnitNormTolerance = 1e-9;

/// Overcomplete dictionary: m x n, n > m, unit-norm finite columns (atoms).
class Dictionary {
 public:
  Dictionary() = default;

  explicit Dictionary(Eigen::MatrixXd atoms) : atoms_(std::move(atoms)) { validate(); }

  std::size_t m() const { return static_cast<std::size_t>(atoms_.rows()); }
  std::size_t n() const { return static_cast<std::size_t>(atoms_.cols()); }
  const Eigen::MatrixXd& atoms() const { return atoms_; }

  friend bool operator==(const Dictionary& a, const Dictionary& b) {
    return a.atoms_.rows() == b.atoms_.rows() && a.atoms_.cols() == b.atoms_.cols() &&
           std::memcmp(a.atoms_.data(), b.atoms_.data(), sizeof(double) * a.atoms_.size()) == 0;
  }

 private:
  void validate() const {
    if (atoms_.cols() <= atoms_.rows()) {
      throw ParameterError("dictionary must be overcomplete (n > m), got m=" +
                           std::to_string(atoms_.rows()) + " n=" + std::to_string(atoms_.cols()));
    }
    if (!atoms_.allFinite()) throw NumericError("dictionary has non-finite entries");
    for (Eigen::Index j = 0; j < atoms_.cols(); ++j) {
      if (std::abs(atoms_.col(j).norm() - 1.0) > kUnitNormTolerance) {
        throw NumericError("atom " + std::to_string(j) + " is not unit norm");
      }
    }
  }

  Eigen::MatrixXd atoms_;
};

/// One coded signal: ascending atom indices and matching coefficients.
struct SparseColumn {
  std::vector<std::size_t> support;
  std::vector<double> coefficients;

  friend bool operator==(const SparseColumn&, const SparseColumn&) = default;
};

struct SparseCode {
  std::size_t n = 0;
  std::vector<SparseColumn> columns;

  std::size_t k() const { return columns.size(); }

  friend bool operator==(const SparseCode&, const SparseCode&) = default;
};

enum class Norm : int { L0 = 0, L1 = 1 };

struct CodingParams {
  // relative residual bound: ||b - D a|| <= epsilon * ||b||
  double epsilon = 0.1;
  std::size_t max_atoms = 32;
  Norm p = Norm::L0;

  void validate(std::size_t m) const {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParameterError("epsilon must lie in (0, 1)");
    if (max_atoms < 1 || max_atoms > m) {
      throw ParameterError("max_atoms must lie in [1, m=" + std::to_string(m) + "]");
    }
    if (p == Norm::L1) throw ParameterError("l1 sparse coding is not supported; use p = 0");
  }

  friend bool operator==(const CodingParams&, const CodingParams&) = default;
};

struct LearnParams {
  std::size_t n = 128;
  std::size_t iterations = 30;
  std::uint64_t seed = 0;
  CodingParams coding;

  friend bool operator==(const LearnParams&, const LearnParams&) = default;
};

// ---------------------------------------------------------------------------
// SPDICT file: "SPDICT 1 <m> <n>\n" then m*n little-endian float64, column-major.
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
  return v;
}

}  // namespace detail

inline void write_dictionary(std::ostream& os, const Dictionary& dict) {
  os << "SPDICT 1 " << dict.m() << ' ' << dict.n() << '\n';
  const auto& a = dict.atoms();
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const auto bits = detail::to_little(std::bit_cast<std::uint64_t>(a.data()[i]));
    os.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!os) throw IoError("failed writing dictionary");
}

inline Dictionary read_dictionary(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw IoError("missing SPDICT header");
  std::istringstream hs(header);
  std::string magic;
  int version = 0;
  long long m = 0, n = 0;
  if (!(hs >> magic >> version >> m >> n) || magic != "SPDICT" || version != 1 || m <= 0 || n <= 0) {
    throw IoError("malformed SPDICT header: '" + header + "'");
  }
  Eigen::MatrixXd atoms(m, n);
  for (Eigen::Index i = 0; i < atoms.size(); ++i) {
    std::uint64_t bits = 0;
    if (!is.read(reinterpret_cast<char*>(&bits), sizeof bits)) throw IoError("truncated SPDICT body");
    atoms.data()[i] = std::bit_cast<double>(detail::to_little(bits));
  }
  return Dictionary(std::move(atoms));
}

inline void save_dictionary(const std::filesystem::path& path, const Dictionary& dict) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_dictionary(os, dict);
}

inline Dictionary load_dictionary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_dictionary(is);
}

}  // namespace sparsedist
