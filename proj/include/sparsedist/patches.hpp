#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sparsedist/error.hpp"
#include "sparsedist/image.hpp"
#include "sparsedist/random.hpp"
#include "sparsedist/scale_selection.hpp"

namespace sparsedist {

struct PatchConfig {
  std::size_t patch_side = 8;
  std::size_t patch_count = 3000;
  // admission threshold, as a fraction of the global image standard deviation
  double energy_fraction = 0.1;
  std::uint64_t seed = 0;
  bool auto_scale = true;
  std::vector<std::size_t> candidate_scales{1, 2, 4, 8};

  void validate() const {
    if (patch_side < 2) throw ParameterError("patch_side must be >= 2");
    if (patch_count < 1) throw ParameterError("patch_count must be >= 1");
    if (!(energy_fraction >= 0.0) || !std::isfinite(energy_fraction)) {
      throw ParameterError("energy_fraction must be >= 0");
    }
    if (candidate_scales.empty()) throw ParameterError("candidate_scales is empty");
    for (std::size_t i = 0; i < candidate_scales.size(); ++i) {
      if (candidate_scales[i] < 1) throw ParameterError("candidate scale < 1");
      if (i > 0 && candidate_scales[i] <= candidate_scales[i - 1]) {
        throw ParameterError("candidate_scales must be strictly increasing");
      }
    }
  }
};

/// Normalized patches, one per column (m = patch_side^2 rows).
struct PatchMatrix {
  Eigen::MatrixXd columns;
  std::vector<double> raw_means;
  std::vector<double> raw_stds;
  // top-left corner (x, y) of each sampled patch in the (downsampled) source image
  std::vector<std::pair<std::size_t, std::size_t>> origins;

  std::size_t m() const { return static_cast<std::size_t>(columns.rows()); }
  std::size_t k() const { return static_cast<std::size_t>(columns.cols()); }
};

// Candidate draws per threshold level before the threshold is halved.
inline constexpr std::size_t kDrawsPerThreshold = 50000;

/// LoG sigma used when probing a downsample factor.
inline double scale_sigma(std::size_t factor) { return 1.0 * static_cast<double>(factor); }

/// Picks the candidate factor with the most LoG keypoints; ties go to the smaller factor.
/// Factors that would leave the image smaller than one patch (or the LoG support) are skipped.
inline std::size_t select_scale(const GrayImage& img, const PatchConfig& cfg) {
  cfg.validate();
  if (!cfg.auto_scale) return 1;
  std::size_t best = 0;
  std::size_t best_count = 0;
  bool any = false;
  for (std::size_t factor : cfg.candidate_scales) {
    const double sigma = scale_sigma(factor);
    const std::size_t support = 2 * detail::log_radius(sigma) + 1;
    if (img.width() / factor < cfg.patch_side || img.height() / factor < cfg.patch_side) continue;
    if (img.width() < support || img.height() < support) continue;
    const std::size_t count = log_keypoint_count(img, sigma);
    if (!any || count > best_count) {
      best = factor;
      best_count = count;
      any = true;
    }
  }
  if (!any) throw DimensionError("image too small for every candidate scale");
  return best;
}

/// Samples `patch_count` energetic patches at random corners and normalizes each to zero mean,
/// unit (population) standard deviation. Vectorization is column-major within the patch.
inline PatchMatrix extract_patches(const GrayImage& img, const PatchConfig& cfg) {
  cfg.validate();
  const std::size_t side = cfg.patch_side;
  if (img.width() < side || img.height() < side) {
    throw DimensionError("image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                         " smaller than patch side " + std::to_string(side));
  }
  const auto& px = img.pixels();
  // exact test; summation round-off leaves a constant image with a std around 1e-17
  if (std::adjacent_find(px.begin(), px.end(), std::not_equal_to<>()) == px.end()) {
    throw DegenerateInputError("zero variance");
  }
  const double global_std = mean_std(px).second;

  const std::size_t m = side * side;
  const std::size_t k = cfg.patch_count;
  const std::uint64_t span_x = img.width() - side + 1;
  const std::uint64_t span_y = img.height() - side + 1;

  PatchMatrix out;
  out.columns.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
  out.raw_means.reserve(k);
  out.raw_stds.reserve(k);
  out.origins.reserve(k);

  Rng rng(cfg.seed);
  std::vector<double> buf(m);
  double threshold = cfg.energy_fraction * global_std;
  std::size_t draws = 0;
  std::size_t admitted_this_level = 0;
  while (out.raw_stds.size() < k) {
    if (draws == kDrawsPerThreshold) {
      if (threshold == 0.0 && admitted_this_level == 0) {
        throw DegenerateInputError("no patch with non-zero variance found");
      }
      threshold *= 0.5;
      if (threshold < 1e-12 * global_std) threshold = 0.0;
      draws = 0;
      admitted_this_level = 0;
    }
    ++draws;
    const auto x0 = static_cast<std::size_t>(uniform_index(rng, span_x));
    const auto y0 = static_cast<std::size_t>(uniform_index(rng, span_y));
    for (std::size_t c = 0; c < side; ++c) {
      for (std::size_t r = 0; r < side; ++r) buf[c * side + r] = img(x0 + c, y0 + r);
    }
    if (std::adjacent_find(buf.begin(), buf.end(), std::not_equal_to<>()) == buf.end()) continue;
    const auto [mean, sd] = mean_std(buf);
    if (sd < threshold) continue;
    const auto col = static_cast<Eigen::Index>(out.raw_stds.size());
    for (std::size_t i = 0; i < m; ++i) {
      out.columns(static_cast<Eigen::Index>(i), col) = (buf[i] - mean) / sd;
    }
    out.raw_means.push_back(mean);
    out.raw_stds.push_back(sd);
    out.origins.emplace_back(x0, y0);
    ++admitted_this_level;
  }
  return out;
}

/// Scale selection + downsampling; returns the image patches are drawn from and the factor used.
inline std::pair<GrayImage, std::size_t> prepare_image(const GrayImage& img, const PatchConfig& cfg) {
  const std::size_t factor = select_scale(img, cfg);
  return {downsample(img, factor), factor};
}

}  // namespace sparsedist
