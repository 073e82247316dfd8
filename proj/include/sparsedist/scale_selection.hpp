#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "sparsedist/error.hpp"
#include "sparsedist/image.hpp"

namespace sparsedist {

// Keypoints weaker than this fraction of the strongest |LoG| response are ignored. The
// off-center ring of an isolated blob peaks at 2/e^2 (about 13.5%) of its center value.
inline constexpr double kKeypointRelativeThreshold = 0.2;

namespace detail {

inline std::size_t log_radius(double sigma) { return static_cast<std::size_t>(std::ceil(3.0 * sigma)); }

// 1-D Gaussian (unit sum) and its second derivative (zero sum) sampled on [-r, r].
inline void log_kernels(double sigma, std::vector<double>& gauss, std::vector<double>& second) {
  const auto r = static_cast<long>(log_radius(sigma));
  gauss.assign(2 * r + 1, 0.0);
  second.assign(2 * r + 1, 0.0);
  const double s2 = sigma * sigma;
  double gsum = 0.0;
  for (long i = -r; i <= r; ++i) {
    const double g = std::exp(-0.5 * static_cast<double>(i * i) / s2);
    gauss[i + r] = g;
    gsum += g;
  }
  double dmean = 0.0;
  for (long i = -r; i <= r; ++i) {
    gauss[i + r] /= gsum;
    second[i + r] = gauss[i + r] * (static_cast<double>(i * i) - s2) / (s2 * s2);
    dmean += second[i + r];
  }
  dmean /= static_cast<double>(second.size());
  for (auto& v : second) v -= dmean;
}

// Separable correlation with clamped borders. `horizontal` selects the axis.
inline std::vector<double> convolve_axis(const std::vector<double>& src, std::size_t w, std::size_t h,
                                         const std::vector<double>& kernel, bool horizontal) {
  const auto r = static_cast<long>(kernel.size() / 2);
  std::vector<double> dst(src.size(), 0.0);
  const auto W = static_cast<long>(w), H = static_cast<long>(h);
  for (long y = 0; y < H; ++y) {
    for (long x = 0; x < W; ++x) {
      double acc = 0.0;
      for (long t = -r; t <= r; ++t) {
        const long sx = horizontal ? std::clamp(x + t, 0L, W - 1) : x;
        const long sy = horizontal ? y : std::clamp(y + t, 0L, H - 1);
        acc += kernel[t + r] * src[sy * W + sx];
      }
      dst[y * W + x] = acc;
    }
  }
  return dst;
}

}  // namespace detail

/// Scale-normalized Laplacian-of-Gaussian response (sigma^2 * LoG), row-major.
inline std::vector<double> log_response(const GrayImage& img, double sigma) {
  if (!(sigma > 0.0)) throw ParameterError("LoG sigma must be positive");
  const std::size_t support = 2 * detail::log_radius(sigma) + 1;
  if (img.width() < support || img.height() < support) {
    throw DimensionError("image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                         " smaller than LoG support " + std::to_string(support));
  }
  std::vector<double> gauss, second;
  detail::log_kernels(sigma, gauss, second);
  const std::vector<double> src(img.pixels().begin(), img.pixels().end());
  const auto w = img.width(), h = img.height();
  auto dxx = detail::convolve_axis(detail::convolve_axis(src, w, h, gauss, false), w, h, second, true);
  auto dyy = detail::convolve_axis(detail::convolve_axis(src, w, h, gauss, true), w, h, second, false);
  const double s2 = sigma * sigma;
  for (std::size_t i = 0; i < dxx.size(); ++i) dxx[i] = s2 * (dxx[i] + dyy[i]);
  return dxx;
}

/// Number of strict 3x3 local maxima of |LoG| above the relative threshold, borders excluded.
inline std::size_t log_keypoint_count(const GrayImage& img, double sigma) {
  if (img.width() < 3 || img.height() < 3) throw DimensionError("image smaller than 3x3");
  auto resp = log_response(img, sigma);
  for (auto& v : resp) v = std::abs(v);
  const double peak = *std::max_element(resp.begin(), resp.end());
  // flat images leave only rounding noise in the response
  if (peak <= 1e-9) return 0;
  const double floor_value = kKeypointRelativeThreshold * peak;
  const std::size_t w = img.width(), h = img.height();
  std::size_t count = 0;
  for (std::size_t y = 1; y + 1 < h; ++y) {
    for (std::size_t x = 1; x + 1 < w; ++x) {
      const double v = resp[y * w + x];
      if (v <= floor_value) continue;
      bool is_max = true;
      for (std::size_t ny = y - 1; ny <= y + 1 && is_max; ++ny) {
        for (std::size_t nx = x - 1; nx <= x + 1; ++nx) {
          if ((nx != x || ny != y) && resp[ny * w + nx] >= v) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) ++count;
    }
  }
  return count;
}

}  // namespace sparsedist
