#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "sparsedist/error.hpp"
#include "sparsedist/image.hpp"

namespace sparsedist {

namespace detail {

// Interleaved 8-bit samples -> gray image (1 channel) or luma of RGB (3 channels).
inline GrayImage from_interleaved(const std::vector<std::uint8_t>& raw, std::size_t w, std::size_t h,
                                  std::size_t channels) {
  if (channels == 1) {
    std::vector<double> px(w * h);
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = raw[i] / 255.0;
    return GrayImage(w, h, std::move(px));
  }
  std::array<std::vector<double>, 3> planes;
  for (auto& p : planes) p.resize(w * h);
  for (std::size_t i = 0; i < w * h; ++i) {
    for (std::size_t c = 0; c < 3; ++c) planes[c][i] = raw[i * channels + c] / 255.0;
  }
  const std::array<GrayImage, 3> rgb{GrayImage(w, h, std::move(planes[0])), GrayImage(w, h, std::move(planes[1])),
                                     GrayImage(w, h, std::move(planes[2]))};
  return to_grayscale(rgb);
}

inline std::string next_pnm_token(std::istream& is) {
  std::string tok;
  char ch = 0;
  while (is.get(ch)) {
    if (ch == '#') {
      std::string skip;
      std::getline(is, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(ch);
  }
  return tok;
}

inline GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  const auto magic = next_pnm_token(is);
  if (magic != "P5") throw IoError(path.string() + ": only binary PGM (P5) is supported");
  const auto w = std::stoul(next_pnm_token(is));
  const auto h = std::stoul(next_pnm_token(is));
  const auto maxval = std::stoul(next_pnm_token(is));
  if (w == 0 || h == 0 || maxval == 0 || maxval > 65535) throw IoError(path.string() + ": bad PGM header");
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  std::vector<std::uint8_t> body(w * h * bytes_per);
  if (!is.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(body.size()))) {
    throw IoError(path.string() + ": truncated PGM data");
  }
  std::vector<std::uint8_t> raw(w * h);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const unsigned v = bytes_per == 2 ? (body[2 * i] << 8u) | body[2 * i + 1] : body[i];
    raw[i] = static_cast<std::uint8_t>((v * 255u + maxval / 2) / maxval);
  }
  return from_interleaved(raw, w, h, 1);
}

inline GrayImage read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError(path.string() + ": " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> raw(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError(path.string() + ": " + msg);
  }
  return from_interleaved(raw, image.width, image.height, color ? 3 : 1);
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

inline GrayImage read_jpeg(const std::filesystem::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!file) throw IoError("cannot open " + path.string());
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = [](j_common_ptr info) {
    auto* mgr = reinterpret_cast<JpegErrorManager*>(info->err);
    (*info->err->format_message)(info, mgr->message);
    std::longjmp(mgr->jump, 1);
  };
  std::vector<std::uint8_t> raw;
  std::size_t w = 0, h = 0, channels = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw IoError(path.string() + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  w = cinfo.output_width;
  h = cinfo.output_height;
  channels = static_cast<std::size_t>(cinfo.output_components);
  raw.resize(w * h * channels);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = raw.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * channels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return from_interleaved(raw, w, h, channels);
}

}  // namespace detail

/// Loads PNG, JPEG or binary PGM by signature; color input is reduced to Rec. 601 luma.
inline GrayImage load_image(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open " + path.string());
  std::array<unsigned char, 8> sig{};
  probe.read(reinterpret_cast<char*>(sig.data()), sig.size());
  probe.close();
  if (sig[0] == 0x89 && sig[1] == 'P' && sig[2] == 'N' && sig[3] == 'G') return detail::read_png(path);
  if (sig[0] == 0xFF && sig[1] == 0xD8) return detail::read_jpeg(path);
  if (sig[0] == 'P' && sig[1] == '5') return detail::read_pgm(path);
  throw IoError(path.string() + ": unrecognized image format (expected PNG, JPEG or P5 PGM)");
}

/// Writes an 8-bit binary PGM (round(v * 255)).
inline void save_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  for (double v : img.pixels()) os.put(static_cast<char>(static_cast<std::uint8_t>(std::lround(v * 255.0))));
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace sparsedist
