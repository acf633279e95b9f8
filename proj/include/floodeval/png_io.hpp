#ifndef FLOODEVAL_PNG_IO_HPP
#define FLOODEVAL_PNG_IO_HPP

// Thin wrappers over libpng's simplified API. Only 8-bit gray, RGB and
// RGBA are needed.

#include <png.h>

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "floodeval/error.hpp"

namespace floodeval {

struct PngPixels {
  int width = 0;
  int height = 0;
  int channels = 1;  // 1, 3 or 4
  std::vector<std::uint8_t> data;  // row-major, interleaved
};

namespace detail {

inline png_uint_32 png_format_for(int channels) {
  switch (channels) {
    case 1: return PNG_FORMAT_GRAY;
    case 3: return PNG_FORMAT_RGB;
    case 4: return PNG_FORMAT_RGBA;
  }
  throw ContractViolation("unsupported PNG channel count " + std::to_string(channels));
}

inline png_image make_image(const PngPixels& px) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(px.width);
  image.height = static_cast<png_uint_32>(px.height);
  image.format = png_format_for(px.channels);
  return image;
}

inline void check_pixels(const PngPixels& px) {
  require(px.width > 0 && px.height > 0, "PNG dimensions must be positive");
  require(px.data.size() == static_cast<std::size_t>(px.width) * px.height * px.channels,
          "PNG buffer size does not match dimensions");
}

}  // namespace detail

inline void write_png(const std::string& path, const PngPixels& px) {
  detail::check_pixels(px);
  png_image image = detail::make_image(px);
  if (!png_image_write_to_file(&image, path.c_str(), 0, px.data.data(), 0, nullptr))
    throw IoError(path, std::string("PNG write failed: ") + image.message);
}

inline std::vector<std::uint8_t> encode_png(const PngPixels& px) {
  detail::check_pixels(px);
  png_image image = detail::make_image(px);
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, px.data.data(), 0, nullptr))
    throw IoError("<memory>", std::string("PNG encode failed: ") + image.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, px.data.data(), 0, nullptr))
    throw IoError("<memory>", std::string("PNG encode failed: ") + image.message);
  out.resize(size);
  return out;
}

/// Reads a PNG converting to the requested channel count (0 keeps gray as
/// 1 channel and everything else as 3).
inline PngPixels read_png(const std::string& path, int want_channels = 0) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw IoError(path, std::string("PNG read failed: ") + image.message);
  int channels = want_channels;
  if (channels == 0) channels = (image.format & PNG_FORMAT_FLAG_COLOR) ? 3 : 1;
  image.format = detail::png_format_for(channels);
  PngPixels px;
  px.width = static_cast<int>(image.width);
  px.height = static_cast<int>(image.height);
  px.channels = channels;
  px.data.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, px.data.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError(path, "PNG decode failed: " + msg);
  }
  return px;
}

}  // namespace floodeval

#endif  // FLOODEVAL_PNG_IO_HPP
