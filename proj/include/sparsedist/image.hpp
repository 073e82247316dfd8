#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sparsedist/error.hpp"

namespace sparsedist {

/// Single-channel image with row-major intensities in [0, 1].
class GrayImage {
 public:
  GrayImage() = default;

  GrayImage(std::size_t width, std::size_t height, double fill = 0.0)
      : width_(width), height_(height), data_(width * height, fill) {
    check_range();
  }

  GrayImage(std::size_t width, std::size_t height, std::vector<double> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != width_ * height_) {
      throw DimensionError("image data length " + std::to_string(data_.size()) + " != " +
                           std::to_string(width_) + "x" + std::to_string(height_));
    }
    check_range();
  }

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double operator()(std::size_t x, std::size_t y) const { return data_[y * width_ + x]; }
  double& operator()(std::size_t x, std::size_t y) { return data_[y * width_ + x]; }

  std::span<const double> pixels() const { return data_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  void check_range() const {
    for (double v : data_) {
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw ParameterError("pixel intensity outside [0,1]");
      }
    }
  }

  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> data_;
};

// Rec. 601 luma weights.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

/// Collapses a planar image (1 or 3 channels) to gray. One channel passes through unchanged.
inline GrayImage to_grayscale(std::span<const GrayImage> channels) {
  if (channels.size() == 1) return channels[0];
  if (channels.size() != 3) {
    throw DimensionError("expected 1 or 3 channels, got " + std::to_string(channels.size()));
  }
  const auto& r = channels[0];
  const auto& g = channels[1];
  const auto& b = channels[2];
  if (r.width() != g.width() || r.width() != b.width() || r.height() != g.height() ||
      r.height() != b.height()) {
    throw DimensionError("channel sizes differ");
  }
  std::vector<double> out(r.size());
  auto rp = r.pixels(), gp = g.pixels(), bp = b.pixels();
  for (std::size_t i = 0; i < out.size(); ++i) {
    // clamp only guards the last ulp; the weights sum to one
    out[i] = std::min(1.0, kLumaR * rp[i] + kLumaG * gp[i] + kLumaB * bp[i]);
  }
  return GrayImage(r.width(), r.height(), std::move(out));
}

/// Block-mean downsampling; trailing partial blocks are dropped.
inline GrayImage downsample(const GrayImage& img, std::size_t factor) {
  if (factor < 1) throw ParameterError("downsample factor must be >= 1");
  if (factor == 1) return img;
  const std::size_t w = img.width() / factor;
  const std::size_t h = img.height() / factor;
  std::vector<double> out(w * h);
  const double norm = 1.0 / static_cast<double>(factor * factor);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double sum = 0.0;
      for (std::size_t dy = 0; dy < factor; ++dy) {
        for (std::size_t dx = 0; dx < factor; ++dx) sum += img(x * factor + dx, y * factor + dy);
      }
      out[y * w + x] = std::min(1.0, sum * norm);
    }
  }
  return GrayImage(w, h, std::move(out));
}

/// Population mean and standard deviation of all pixels.
inline std::pair<double, double> mean_std(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return {mean, std::sqrt(var)};
}

}  // namespace sparsedist
