#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <lzma.h>
#include <zlib.h>

#include "sparsedist/complexity.hpp"
#include "sparsedist/error.hpp"
#include "sparsedist/image.hpp"

namespace sparsedist {

struct ByteSignal {
  std::vector<std::uint8_t> bytes;
  std::string source_id;
};

/// A named byte-stream compressor reporting compressed length only.
struct Compressor {
  std::string name;
  std::function<std::size_t(std::span<const std::uint8_t>)> compress;
};

inline std::size_t deflate_length(std::span<const std::uint8_t> data, int level) {
  uLongf bound = compressBound(static_cast<uLong>(data.size()));
  std::vector<Bytef> out(bound);
  const int rc = compress2(out.data(), &bound, data.data(), static_cast<uLong>(data.size()), level);
  if (rc != Z_OK) throw BackendError("zlib compress2 failed with code " + std::to_string(rc));
  return bound;
}

inline std::size_t xz_length(std::span<const std::uint8_t> data) {
  std::vector<std::uint8_t> out(lzma_stream_buffer_bound(data.size()));
  std::size_t pos = 0;
  const lzma_ret rc = lzma_easy_buffer_encode(9 | LZMA_PRESET_EXTREME, LZMA_CHECK_NONE, nullptr, data.data(),
                                              data.size(), out.data(), &pos, out.size());
  if (rc != LZMA_OK) throw BackendError("lzma encode failed with code " + std::to_string(rc));
  return pos;
}

inline std::vector<std::string> compressor_names() { return {"deflate", "deflate-fast", "xz"}; }

/// "deflate" (zlib level 9, the default), "deflate-fast" (level 1) or "xz" (LZMA2 preset 9e).
inline Compressor make_compressor(const std::string& name = "deflate") {
  if (name == "deflate" || name == "zlib") {
    return {"deflate", [](std::span<const std::uint8_t> d) { return deflate_length(d, 9); }};
  }
  if (name == "deflate-fast") {
    return {"deflate-fast", [](std::span<const std::uint8_t> d) { return deflate_length(d, 1); }};
  }
  if (name == "xz" || name == "lzma") return {"xz", [](std::span<const std::uint8_t> d) { return xz_length(d); }};
  throw ParameterError("unknown compressor '" + name + "'");
}

namespace detail {

inline std::vector<std::uint8_t> concat(const ByteSignal& a, const ByteSignal& b) {
  std::vector<std::uint8_t> out;
  out.reserve(a.bytes.size() + b.bytes.size());
  out.insert(out.end(), a.bytes.begin(), a.bytes.end());
  out.insert(out.end(), b.bytes.begin(), b.bytes.end());
  return out;
}

inline void require_nonempty(const ByteSignal& x, const ByteSignal& y) {
  if (x.bytes.empty() || y.bytes.empty()) throw ParameterError("byte signals must be non-empty");
}

}  // namespace detail

/// C(x|y) ~ C(xy) - C(y). Not clamped: a negative value flags a non-normal compressor.
inline std::int64_t conditional_len(const ByteSignal& x, const ByteSignal& y, const Compressor& c) {
  detail::require_nonempty(x, y);
  const auto joint = static_cast<std::int64_t>(c.compress(detail::concat(x, y)));
  return joint - static_cast<std::int64_t>(c.compress(y.bytes));
}

inline double ncd(const ByteSignal& x, const ByteSignal& y, const Compressor& c) {
  detail::require_nonempty(x, y);
  const auto cx = static_cast<std::int64_t>(c.compress(x.bytes));
  const auto cy = static_cast<std::int64_t>(c.compress(y.bytes));
  const auto cxy = static_cast<std::int64_t>(c.compress(detail::concat(x, y)));
  const auto cyx = static_cast<std::int64_t>(c.compress(detail::concat(y, x)));
  const auto denom = std::max(cx, cy);
  if (denom == 0) throw DegenerateInputError("both compressed lengths are zero");
  return static_cast<double>(std::max(cxy - cy, cyx - cx)) / static_cast<double>(denom);
}

inline double cdm(const ByteSignal& x, const ByteSignal& y, const Compressor& c) {
  detail::require_nonempty(x, y);
  const auto cx = c.compress(x.bytes);
  const auto cy = c.compress(y.bytes);
  if (cx + cy == 0) throw DegenerateInputError("both compressed lengths are zero");
  return static_cast<double>(c.compress(detail::concat(x, y))) / static_cast<double>(cx + cy);
}

/// Row-major 8-bit raster, round(v * 255).
inline ByteSignal image_bytes(const GrayImage& img, std::string source_id = {}) {
  ByteSignal out;
  out.source_id = std::move(source_id);
  out.bytes.reserve(img.size());
  for (double v : img.pixels()) out.bytes.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
  return out;
}

/// Pairwise NCD or CDM matrix over byte signals.
inline DistanceMatrix compression_matrix(const std::vector<ByteSignal>& signals, DistanceKind kind,
                                         const Compressor& c, unsigned jobs = 1) {
  if (kind == DistanceKind::SparseDistance) throw ParameterError("compression_matrix needs kind NCD or CDM");
  if (signals.size() < 2) throw DegenerateInputError("distance matrix needs at least 2 signals");
  std::vector<std::string> ids;
  for (const auto& s : signals) ids.push_back(s.source_id);
  return symmetric_matrix(
      std::move(ids), kind,
      [&](std::size_t i, std::size_t j) {
        return kind == DistanceKind::Ncd ? ncd(signals[i], signals[j], c) : cdm(signals[i], signals[j], c);
      },
      jobs);
}

}  // namespace sparsedist
