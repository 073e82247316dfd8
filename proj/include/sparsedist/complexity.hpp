#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sparsedist/dictionary.hpp"
#include "sparsedist/error.hpp"
#include "sparsedist/image.hpp"
#include "sparsedist/ksvd.hpp"
#include "sparsedist/omp.hpp"
#include "sparsedist/parallel.hpp"
#include "sparsedist/patches.hpp"

namespace sparsedist {

/// Average code size per column: mean support size (p = 0) or mean l1 norm (p = 1).
inline double sparse_complexity(const SparseCode& code, Norm p) {
  if (code.columns.empty()) throw DegenerateInputError("sparse code has no columns");
  double total = 0.0;
  for (const auto& col : code.columns) {
    if (p == Norm::L0) {
      total += static_cast<double>(col.support.size());
    } else {
      for (double c : col.coefficients) total += std::abs(c);
    }
  }
  return total / static_cast<double>(code.columns.size());
}

/// An image's patches, its learned dictionary and its self-coding complexity S(X, D_x).
/// Immutable once built.
struct ImageModel {
  std::string image_id;
  PatchMatrix patches;
  Dictionary dictionary;
  double self_complexity = 0.0;
  std::size_t scale = 1;
  PatchConfig patch_config;
  LearnParams learn;
};

/// Builds a model around an already learned dictionary (used when loading cached models).
inline ImageModel build_model_with_dictionary(const GrayImage& img, std::string image_id, const PatchConfig& cfg,
                                              const LearnParams& learn, Dictionary dictionary,
                                              unsigned jobs = 1) {
  auto [prepared, scale] = prepare_image(img, cfg);
  ImageModel model;
  model.image_id = std::move(image_id);
  model.patches = extract_patches(prepared, cfg);
  if (dictionary.m() != model.patches.m()) {
    throw DimensionError("dictionary m=" + std::to_string(dictionary.m()) + " does not match patch dimension " +
                         std::to_string(model.patches.m()));
  }
  model.dictionary = std::move(dictionary);
  model.scale = scale;
  model.patch_config = cfg;
  model.learn = learn;
  const SparseCode self = batch_code(model.dictionary, model.patches, learn.coding, jobs);
  model.self_complexity = sparse_complexity(self, learn.coding.p);
  return model;
}

/// Scale selection, patch sampling, K-SVD and self-coding for one image.
inline ImageModel build_model(const GrayImage& img, std::string image_id, const PatchConfig& cfg,
                              const LearnParams& learn, unsigned jobs = 1) {
  auto [prepared, scale] = prepare_image(img, cfg);
  ImageModel model;
  model.image_id = std::move(image_id);
  model.patches = extract_patches(prepared, cfg);
  model.dictionary = ksvd_learn(model.patches, learn, nullptr, jobs);
  model.scale = scale;
  model.patch_config = cfg;
  model.learn = learn;
  const SparseCode self = batch_code(model.dictionary, model.patches, learn.coding, jobs);
  model.self_complexity = sparse_complexity(self, learn.coding.p);
  return model;
}

/// S(X, D_y): codes the subject's patches with the reference's dictionary.
inline double relative_complexity(const ImageModel& subject, const ImageModel& reference, unsigned jobs = 1) {
  if (subject.patches.m() != reference.dictionary.m()) {
    throw DimensionError("'" + subject.image_id + "' has patch dimension " + std::to_string(subject.patches.m()) +
                         " but '" + reference.image_id + "' has dictionary dimension " +
                         std::to_string(reference.dictionary.m()));
  }
  if (!(subject.learn.coding == reference.learn.coding)) {
    throw ParameterError("'" + subject.image_id + "' and '" + reference.image_id + "' use different coding parameters");
  }
  const SparseCode code = batch_code(reference.dictionary, subject.patches, subject.learn.coding, jobs);
  return sparse_complexity(code, subject.learn.coding.p);
}

/// d_S(X, Y) = (S(X,D_y) + S(Y,D_x)) / (S(X,D_x) + S(Y,D_y)) - 1, clamped at zero.
inline double distance(const ImageModel& x, const ImageModel& y, unsigned jobs = 1) {
  const double cross = relative_complexity(x, y, jobs) + relative_complexity(y, x, jobs);
  const double self = x.self_complexity + y.self_complexity;
  if (!(self > 0.0)) throw DegenerateInputError("self complexities sum to zero");
  return std::max(0.0, cross / self - 1.0);
}

enum class DistanceKind { SparseDistance, Ncd, Cdm };

inline std::string kind_name(DistanceKind kind) {
  switch (kind) {
    case DistanceKind::SparseDistance: return "d_S";
    case DistanceKind::Ncd: return "NCD";
    case DistanceKind::Cdm: return "CDM";
  }
  return "?";
}

inline DistanceKind parse_kind(const std::string& name) {
  if (name == "d_S" || name == "ds") return DistanceKind::SparseDistance;
  if (name == "NCD" || name == "ncd") return DistanceKind::Ncd;
  if (name == "CDM" || name == "cdm") return DistanceKind::Cdm;
  throw ParameterError("unknown distance kind '" + name + "'");
}

struct DistanceMatrix {
  std::vector<std::string> ids;
  Eigen::MatrixXd values;
  DistanceKind kind = DistanceKind::SparseDistance;

  std::size_t size() const { return ids.size(); }
  double operator()(std::size_t i, std::size_t j) const {
    return values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
};

/// Fills a symmetric matrix from `pair(i, j)` evaluated once for each i < j.
template <typename PairFn>
DistanceMatrix symmetric_matrix(std::vector<std::string> ids, DistanceKind kind, PairFn&& pair, unsigned jobs = 1) {
  const std::size_t count = ids.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(count * (count - 1) / 2);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = i + 1; j < count; ++j) pairs.emplace_back(i, j);
  }
  std::vector<double> results(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t p) { results[p] = pair(pairs[p].first, pairs[p].second); });
  DistanceMatrix out;
  out.ids = std::move(ids);
  out.kind = kind;
  out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(count));
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto i = static_cast<Eigen::Index>(pairs[p].first);
    const auto j = static_cast<Eigen::Index>(pairs[p].second);
    out.values(i, j) = results[p];
    out.values(j, i) = results[p];
  }
  return out;
}

/// Pairwise d_S over a set of models; each unordered pair is computed once and mirrored.
inline DistanceMatrix distance_matrix(const std::vector<ImageModel>& models, unsigned jobs = 1) {
  if (models.size() < 2) throw DegenerateInputError("distance matrix needs at least 2 models");
  std::vector<std::string> ids;
  ids.reserve(models.size());
  for (const auto& m : models) ids.push_back(m.image_id);
  for (std::size_t i = 0; i < models.size(); ++i) {
    for (std::size_t j = i + 1; j < models.size(); ++j) {
      const auto& a = models[i];
      const auto& b = models[j];
      if (a.patches.m() != b.dictionary.m() || b.patches.m() != a.dictionary.m()) {
        throw DimensionError("incompatible models '" + a.image_id + "' and '" + b.image_id + "'");
      }
    }
  }
  return symmetric_matrix(std::move(ids), DistanceKind::SparseDistance,
                          [&](std::size_t i, std::size_t j) { return distance(models[i], models[j]); }, jobs);
}

// ---------------------------------------------------------------------------
// CSV: "#kind=<kind>", a header row of ids, then M rows of M values (%.17g).
// ---------------------------------------------------------------------------

inline void write_matrix_csv(std::ostream& os, const DistanceMatrix& d) {
  os << "#kind=" << kind_name(d.kind) << '\n';
  for (std::size_t i = 0; i < d.ids.size(); ++i) os << (i ? "," : "") << d.ids[i];
  os << '\n';
  char buf[40];
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = 0; j < d.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", d(i, j));
      os << (j ? "," : "") << buf;
    }
    os << '\n';
  }
  if (!os) throw IoError("failed writing distance matrix");
}

inline DistanceMatrix read_matrix_csv(std::istream& is) {
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) out.push_back(cell);
    return out;
  };
  std::string line;
  DistanceMatrix d;
  if (!std::getline(is, line) || line.rfind("#kind=", 0) != 0) throw IoError("missing #kind= line");
  d.kind = parse_kind(line.substr(6));
  if (!std::getline(is, line)) throw IoError("missing id header row");
  d.ids = split(line);
  const auto count = static_cast<Eigen::Index>(d.ids.size());
  d.values.resize(count, count);
  for (Eigen::Index i = 0; i < count; ++i) {
    if (!std::getline(is, line)) throw IoError("matrix has fewer rows than ids");
    const auto cells = split(line);
    if (static_cast<Eigen::Index>(cells.size()) != count) throw IoError("row " + std::to_string(i) + " has wrong width");
    for (Eigen::Index j = 0; j < count; ++j) d.values(i, j) = std::stod(cells[static_cast<std::size_t>(j)]);
  }
  return d;
}

inline void save_matrix_csv(const std::filesystem::path& path, const DistanceMatrix& d) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_matrix_csv(os, d);
}

inline DistanceMatrix load_matrix_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  return read_matrix_csv(is);
}

}  // namespace sparsedist
