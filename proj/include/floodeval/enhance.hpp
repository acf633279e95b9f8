#ifndef FLOODEVAL_ENHANCE_HPP
#define FLOODEVAL_ENHANCE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "floodeval/error.hpp"
#include "floodeval/png_io.hpp"

namespace floodeval {

/// 8-bit image with 1 (gray) or 3 (RGB) interleaved channels.
struct RasterImage {
  int width_px = 0;
  int height_px = 0;
  int channels = 1;
  int levels = 256;
  std::vector<std::uint8_t> data;

  std::size_t pixel_count() const { return static_cast<std::size_t>(width_px) * height_px; }

  void validate() const {
    require(width_px > 0 && height_px > 0, "image dimensions must be positive");
    require(channels == 1 || channels == 3, "image must have 1 or 3 channels");
    require(levels >= 2 && levels <= 256, "image levels must lie in [2, 256]");
    require(data.size() == pixel_count() * channels, "image buffer size mismatch");
    for (auto v : data) require(v < levels, "pixel value exceeds level count");
  }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

struct HistogramTables {
  std::vector<std::uint64_t> histogram;   // H(j)
  std::vector<std::uint64_t> cumulative;  // C(i) = sum_{j<=i} H(j)
  std::vector<double> normalized;         // C'(i) = C(i) / N
  std::vector<int> mapping;               // h(v) = round((L-1) C'(v)), half up
  std::uint64_t pixel_count = 0;
};

/// Builds histogram, cumulative, normalized and mapping tables from a list
/// of level values. The mapping is evaluated in integers so that halves
/// round up exactly.
inline HistogramTables tables_from_levels(std::span<const std::uint8_t> values, int levels) {
  require(!values.empty(), "histogram of an empty image is undefined");
  HistogramTables t;
  const auto L = static_cast<std::size_t>(levels);
  t.histogram.assign(L, 0);
  for (auto v : values) {
    require(v < levels, "pixel value exceeds level count");
    ++t.histogram[v];
  }
  t.pixel_count = values.size();
  t.cumulative.resize(L);
  t.normalized.resize(L);
  t.mapping.resize(L);
  std::uint64_t acc = 0;
  const std::uint64_t n = t.pixel_count;
  for (std::size_t i = 0; i < L; ++i) {
    acc += t.histogram[i];
    t.cumulative[i] = acc;
    t.normalized[i] = static_cast<double>(acc) / static_cast<double>(n);
    t.mapping[i] = static_cast<int>((2 * (L - 1) * acc + n) / (2 * n));
  }
  return t;
}

namespace detail {

/// Integer BT.601 luma, weights summing to 256.
inline std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>((77u * r + 150u * g + 29u * b + 128u) >> 8);
}

inline std::vector<std::uint8_t> channel_values(const RasterImage& img, int channel) {
  std::vector<std::uint8_t> out(img.pixel_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = img.data[i * img.channels + channel];
  return out;
}

inline std::vector<std::uint8_t> luminance(const RasterImage& img) {
  if (img.channels == 1) return img.data;
  std::vector<std::uint8_t> y(img.pixel_count());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = luma(img.data[3 * i], img.data[3 * i + 1], img.data[3 * i + 2]);
  return y;
}

/// Writes the remapped luminance back. Gray images take it directly; RGB
/// channels are scaled by new/old luminance with clamping.
inline RasterImage apply_luminance(const RasterImage& img, std::span<const std::uint8_t> old_y,
                                   std::span<const std::uint8_t> new_y) {
  RasterImage out = img;
  if (img.channels == 1) {
    out.data.assign(new_y.begin(), new_y.end());
    return out;
  }
  const unsigned top = static_cast<unsigned>(img.levels - 1);
  for (std::size_t i = 0; i < old_y.size(); ++i) {
    const unsigned y0 = old_y[i], y1 = new_y[i];
    for (int c = 0; c < 3; ++c) {
      auto& px = out.data[3 * i + c];
      if (y0 == 0) {
        px = static_cast<std::uint8_t>(y1);
      } else {
        const unsigned scaled = (2u * px * y1 + y0) / (2u * y0);
        px = static_cast<std::uint8_t>(std::min(scaled, top));
      }
    }
  }
  return out;
}

}  // namespace detail

inline HistogramTables compute_tables(const RasterImage& image, int channel = 0) {
  require(image.pixel_count() > 0, "histogram of an empty image is undefined");
  image.validate();
  require(channel >= 0 && channel < image.channels, "channel index out of range");
  return tables_from_levels(detail::channel_values(image, channel), image.levels);
}

/// Global histogram equalization. RGB images are equalized on luminance.
inline RasterImage equalize(const RasterImage& image) {
  image.validate();
  const auto y = detail::luminance(image);
  const auto tables = tables_from_levels(y, image.levels);
  std::vector<std::uint8_t> mapped(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) mapped[i] = static_cast<std::uint8_t>(tables.mapping[y[i]]);
  return detail::apply_luminance(image, y, mapped);
}

struct ClaheParams {
  int grid_cols = 8;
  int grid_rows = 8;
  double clip_limit = 2.0;
};

/// Contrast-limited adaptive equalization (experimental): per-tile clipped
/// histograms with the excess spread evenly, then bilinear blending of the
/// four nearest tile mappings.
inline RasterImage equalize_clahe(const RasterImage& image, const ClaheParams& params = {}) {
  image.validate();
  require(params.grid_cols >= 1 && params.grid_rows >= 1, "CLAHE grid must be at least 1x1");
  require(params.clip_limit > 0.0, "CLAHE clip limit must be positive");
  const int W = image.width_px, H = image.height_px;
  const int gx = std::min(params.grid_cols, W), gy = std::min(params.grid_rows, H);
  const double tw = static_cast<double>(W) / gx, th = static_cast<double>(H) / gy;
  const auto L = static_cast<std::size_t>(image.levels);
  const auto y = detail::luminance(image);

  std::vector<std::vector<int>> luts(static_cast<std::size_t>(gx * gy));
  for (int ty = 0; ty < gy; ++ty) {
    for (int tx = 0; tx < gx; ++tx) {
      const int x0 = tx * W / gx, x1 = (tx + 1) * W / gx;
      const int y0 = ty * H / gy, y1 = (ty + 1) * H / gy;
      std::vector<std::uint64_t> hist(L, 0);
      std::uint64_t n = 0;
      for (int r = y0; r < y1; ++r)
        for (int c = x0; c < x1; ++c) {
          ++hist[y[static_cast<std::size_t>(r) * W + c]];
          ++n;
        }
      auto& lut = luts[static_cast<std::size_t>(ty * gx + tx)];
      lut.assign(L, 0);
      if (n == 0) continue;
      const auto limit = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(params.clip_limit * n / L));
      std::uint64_t excess = 0;
      for (auto& h : hist)
        if (h > limit) {
          excess += h - limit;
          h = limit;
        }
      const std::uint64_t each = excess / L;
      std::uint64_t rest = excess % L;
      for (auto& h : hist) h += each;
      for (std::size_t i = 0; rest > 0; i = (i + 1) % L, --rest) ++hist[i];
      std::uint64_t acc = 0;
      for (std::size_t i = 0; i < L; ++i) {
        acc += hist[i];
        lut[i] = static_cast<int>((2 * (L - 1) * acc + n) / (2 * n));
      }
    }
  }

  std::vector<std::uint8_t> mapped(y.size());
  for (int r = 0; r < H; ++r) {
    const double fy = (r + 0.5) / th - 0.5;
    const int ty0 = std::clamp(static_cast<int>(std::floor(fy)), 0, gy - 1);
    const int ty1 = std::min(ty0 + 1, gy - 1);
    const double wy = std::clamp(fy - ty0, 0.0, 1.0);
    for (int c = 0; c < W; ++c) {
      const double fx = (c + 0.5) / tw - 0.5;
      const int tx0 = std::clamp(static_cast<int>(std::floor(fx)), 0, gx - 1);
      const int tx1 = std::min(tx0 + 1, gx - 1);
      const double wx = std::clamp(fx - tx0, 0.0, 1.0);
      const auto v = y[static_cast<std::size_t>(r) * W + c];
      const double a = luts[ty0 * gx + tx0][v], b = luts[ty0 * gx + tx1][v];
      const double cc = luts[ty1 * gx + tx0][v], d = luts[ty1 * gx + tx1][v];
      const double val = (1 - wy) * ((1 - wx) * a + wx * b) + wy * ((1 - wx) * cc + wx * d);
      mapped[static_cast<std::size_t>(r) * W + c] =
          static_cast<std::uint8_t>(std::clamp(std::floor(val + 0.5), 0.0, static_cast<double>(L - 1)));
    }
  }
  return detail::apply_luminance(image, y, mapped);
}

enum class EqualizeMode { Global, Clahe };

inline EqualizeMode equalize_mode_from_string(const std::string& s) {
  if (s == "global") return EqualizeMode::Global;
  if (s == "clahe") return EqualizeMode::Clahe;
  throw ContractViolation("unknown equalization mode '" + s + "' (expected global or clahe)");
}

inline RasterImage read_image(const std::string& path) {
  PngPixels px = read_png(path);
  return {px.width, px.height, px.channels, 256, std::move(px.data)};
}

inline void write_image(const std::string& path, const RasterImage& img) {
  img.validate();
  write_png(path, PngPixels{img.width_px, img.height_px, img.channels, img.data});
}

}  // namespace floodeval

#endif  // FLOODEVAL_ENHANCE_HPP
