#ifndef FLOODEVAL_MASK_BUILDER_HPP
#define FLOODEVAL_MASK_BUILDER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "floodeval/error.hpp"
#include "floodeval/geo_core.hpp"
#include "floodeval/geometry.hpp"
#include "floodeval/png_io.hpp"

namespace floodeval {

enum class MaskProduct { BinaryRoad, BinaryBuilding, Flood, RoadSpeed };

inline const char* to_string(MaskProduct p) {
  switch (p) {
    case MaskProduct::BinaryRoad: return "binary_road";
    case MaskProduct::BinaryBuilding: return "binary_building";
    case MaskProduct::Flood: return "flood";
    case MaskProduct::RoadSpeed: return "road_speed";
  }
  return "?";
}

inline MaskProduct mask_product_from_string(const std::string& s) {
  for (auto p : {MaskProduct::BinaryRoad, MaskProduct::BinaryBuilding, MaskProduct::Flood, MaskProduct::RoadSpeed})
    if (s == to_string(p)) return p;
  throw ContractViolation("unknown mask product '" + s + "'");
}

/// Channel order of flood masks.
enum FloodChannel : int { kNonFloodedBuilding = 0, kFloodedBuilding = 1, kNonFloodedRoad = 2, kFloodedRoad = 3 };

inline const std::vector<std::string>& channel_names_for(MaskProduct p) {
  static const std::vector<std::string> road{"road"};
  static const std::vector<std::string> building{"building"};
  static const std::vector<std::string> flood{"non_flooded_building", "flooded_building", "non_flooded_road",
                                              "flooded_road"};
  static const std::vector<std::string> speed{"road_speed"};
  switch (p) {
    case MaskProduct::BinaryRoad: return road;
    case MaskProduct::BinaryBuilding: return building;
    case MaskProduct::Flood: return flood;
    case MaskProduct::RoadSpeed: return speed;
  }
  return road;
}

/// Multi-channel 8-bit raster, channel-major.
struct MaskRaster {
  std::string tile_id;
  std::string product;
  std::string crs_id;
  int channels = 1;
  int width_px = 0;
  int height_px = 0;
  std::vector<std::uint8_t> data;
  AffineGeotransform geotransform;
  std::vector<std::string> channel_names;

  static MaskRaster zeros(std::string tile_id, MaskProduct product, const Tile& tile) {
    MaskRaster m;
    m.tile_id = std::move(tile_id);
    m.product = to_string(product);
    m.crs_id = tile.crs_id;
    m.channel_names = channel_names_for(product);
    m.channels = static_cast<int>(m.channel_names.size());
    m.width_px = tile.width_px;
    m.height_px = tile.height_px;
    m.geotransform = tile.geotransform;
    m.data.assign(static_cast<std::size_t>(m.channels) * m.width_px * m.height_px, 0);
    return m;
  }

  std::size_t plane_size() const { return static_cast<std::size_t>(width_px) * height_px; }
  std::size_t index(int ch, int row, int col) const {
    return static_cast<std::size_t>(ch) * plane_size() + static_cast<std::size_t>(row) * width_px + col;
  }
  std::uint8_t at(int ch, int row, int col) const { return data[index(ch, row, col)]; }
  std::uint8_t& at(int ch, int row, int col) { return data[index(ch, row, col)]; }
  std::span<const std::uint8_t> channel(int ch) const {
    require(ch >= 0 && ch < channels, "channel index out of range");
    return {data.data() + static_cast<std::size_t>(ch) * plane_size(), plane_size()};
  }
  int channel_index(const std::string& name) const {
    for (std::size_t i = 0; i < channel_names.size(); ++i)
      if (channel_names[i] == name) return static_cast<int>(i);
    throw ContractViolation("mask " + tile_id + " has no channel '" + name + "'");
  }

  void validate() const {
    require(channels >= 1 && width_px > 0 && height_px > 0, "mask " + tile_id + ": bad dimensions");
    require(data.size() == static_cast<std::size_t>(channels) * plane_size(), "mask " + tile_id + ": data size mismatch");
    require(channel_names.size() == static_cast<std::size_t>(channels), "mask " + tile_id + ": channel name count mismatch");
  }

  friend bool operator==(const MaskRaster&, const MaskRaster&) = default;
};

// ---------------------------------------------------------------------------
// Buffering

namespace detail {

inline Point polar(const Point& c, double r, double angle) { return {c.x + r * std::cos(angle), c.y + r * std::sin(angle)}; }

/// Regular polygon circumscribing the disc of radius r.
inline Ring disc_ring(const Point& c, double r, int segments) {
  const double step = 2.0 * std::numbers::pi / segments;
  const double R = r / std::cos(step / 2.0);
  Ring ring;
  for (int i = 0; i < segments; ++i) ring.push_back(polar(c, R, (i + 0.5) * step));
  ring.push_back(ring.front());
  return ring;
}

/// Stadium around segment a-b whose every edge is tangent to, or outside
/// of, the exact buffer boundary.
inline Ring capsule_ring(const Point& a, const Point& b, double r, int segments) {
  if (a == b) return disc_ring(a, r, segments);
  const double theta = std::atan2(b.y - a.y, b.x - a.x);
  const double step = 2.0 * std::numbers::pi / segments;
  const double R = r / std::cos(step / 2.0);
  const int half = segments / 2;
  const double right = theta - std::numbers::pi / 2;
  const double left = theta + std::numbers::pi / 2;
  Ring ring;
  ring.push_back(polar(b, r, right));
  for (int j = 0; j < half; ++j) ring.push_back(polar(b, R, right + (j + 0.5) * step));
  ring.push_back(polar(b, r, left));
  ring.push_back(polar(a, r, left));
  for (int j = 0; j < half; ++j) ring.push_back(polar(a, R, left + (j + 0.5) * step));
  ring.push_back(polar(a, r, right + 2.0 * std::numbers::pi));
  ring.push_back(ring.front());
  return ring;
}

}  // namespace detail

/// Polygonal region covering every point within `half_width` of the input.
/// Lines become one stadium per segment and polygons gain stadiums around
/// each edge; the returned MultiPolygon is read as the union of its parts.
inline Geometry buffer_geometry(const Geometry& g, double half_width, int segments = 32) {
  require(half_width >= 0.0 && std::isfinite(half_width), "buffer width must be finite and non-negative");
  require(segments >= 8 && segments % 2 == 0, "buffer segment count must be even and >= 8");
  require(is_valid(g), "cannot buffer invalid geometry: " + validation_error(g));
  if (g.is_polygonal() && half_width == 0.0) return g;

  std::vector<std::vector<Ring>> parts;
  switch (g.kind) {
    case GeometryKind::Point: {
      const Point p = g.as_point();
      if (half_width == 0.0) return Geometry::polygon({{p, p, p, p}}, g.crs_id);
      return Geometry::polygon({detail::disc_ring(p, half_width, segments)}, g.crs_id);
    }
    case GeometryKind::LineString: {
      const Ring& line = g.as_line();
      for (std::size_t i = 0; i + 1 < line.size(); ++i)
        parts.push_back({detail::capsule_ring(line[i], line[i + 1], half_width, segments)});
      break;
    }
    case GeometryKind::Polygon:
    case GeometryKind::MultiPolygon:
      for (const auto& poly : g.parts) parts.push_back(poly);
      for (const auto& poly : g.parts)
        for (const auto& ring : poly)
          for (std::size_t i = 0; i + 1 < ring.size(); ++i)
            parts.push_back({detail::capsule_ring(ring[i], ring[i + 1], half_width, segments)});
      break;
  }
  if (parts.size() == 1) return Geometry::polygon(std::move(parts.front()), g.crs_id);
  return Geometry::multi_polygon(std::move(parts), g.crs_id);
}

// ---------------------------------------------------------------------------
// Rasterization

/// Calls fill(row, col_begin, col_end) for every run of pixels whose centre
/// lies inside the polygon (even-odd over all its rings).
template <typename Fill>
void scan_polygon(const std::vector<Ring>& rings, const AffineGeotransform& gt, int width, int height, Fill&& fill) {
  Rect box;
  for (const auto& r : rings)
    for (const auto& p : r) box.expand(p);
  if (box.empty()) return;
  const Point p0 = gt.to_pixel({box.min_x, box.min_y});
  const Point p1 = gt.to_pixel({box.max_x, box.max_y});
  const int row_lo = std::max(0, static_cast<int>(std::floor(std::min(p0.y, p1.y))) - 1);
  const int row_hi = std::min(height - 1, static_cast<int>(std::ceil(std::max(p0.y, p1.y))) + 1);
  auto center_x = [&](int c) { return gt.origin_x + (c + 0.5) * gt.pixel_width; };

  std::vector<double> xs;
  for (int row = row_lo; row <= row_hi; ++row) {
    const double yc = gt.origin_y + (row + 0.5) * gt.pixel_height;
    xs.clear();
    for (const auto& ring : rings) {
      for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const Point& a = ring[i];
        const Point& b = ring[i + 1];
        if ((a.y > yc) != (b.y > yc)) xs.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
      }
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const double xl = xs[k], xr = xs[k + 1];
      // Columns whose centre satisfies xl <= xc < xr; the estimate is
      // widened by one and then checked exactly.
      const double fl = (xl - gt.origin_x) / gt.pixel_width - 0.5;
      const double fr = (xr - gt.origin_x) / gt.pixel_width - 0.5;
      const int lo = std::max(0, static_cast<int>(std::floor(std::min(fl, fr))) - 1);
      const int hi = std::min(width - 1, static_cast<int>(std::ceil(std::max(fl, fr))) + 1);
      int c0 = -1, c1 = -1;
      for (int c = lo; c <= hi; ++c) {
        const double xc = center_x(c);
        if (xl <= xc && xc < xr) {
          if (c0 < 0) c0 = c;
          c1 = c + 1;
        }
      }
      if (c0 >= 0 && c0 < c1) fill(row, c0, c1);
    }
  }
}

struct RasterizeParams {
  double road_half_width_m = 2.0;
  double building_buffer_m = 0.0;
  int circle_segments = 32;
  double crs_units_per_m = 1.0;
};

namespace detail {

template <typename Fill>
void scan_geometry(const Geometry& g, const Tile& tile, Fill&& fill) {
  for (const auto& poly : g.parts) scan_polygon(poly, tile.geotransform, tile.width_px, tile.height_px, fill);
}

inline Geometry footprint(const VectorFeature& f, const RasterizeParams& params) {
  const double w = f.feature_class == FeatureClass::Road ? params.road_half_width_m : params.building_buffer_m;
  if (f.feature_class == FeatureClass::Building && f.geometry.is_polygonal() && w == 0.0) return f.geometry;
  return buffer_geometry(f.geometry, w * params.crs_units_per_m, params.circle_segments);
}

}  // namespace detail

/// Burns features into one of the four mask products. A pixel is set when
/// its centre lies inside the buffered feature. In flood masks a flooded
/// feature wins over a non-flooded one of the same class; road-speed pixels
/// hold round(mph) clamped to [1, 255], the fastest road winning.
inline MaskRaster rasterize(const std::vector<VectorFeature>& features, const Tile& tile, MaskProduct product,
                            const RasterizeParams& params = {}) {
  tile.validate();
  for (const auto& f : features)
    require(f.geometry.crs_id == tile.crs_id, "feature '" + f.id + "' is in CRS '" + f.geometry.crs_id +
                                                  "' but tile " + tile.tile_id + " is in '" + tile.crs_id + "'");
  MaskRaster mask = MaskRaster::zeros(tile.tile_id, product, tile);
  const Rect& tb = tile.bounds;

  for (const auto& f : features) {
    const bool is_road = f.feature_class == FeatureClass::Road;
    if (product == MaskProduct::BinaryRoad && !is_road) continue;
    if (product == MaskProduct::RoadSpeed && !is_road) continue;
    if (product == MaskProduct::BinaryBuilding && is_road) continue;
    const Geometry shape = detail::footprint(f, params);
    if (!bounding_box(shape).intersects(tb)) continue;

    int channel = 0;
    std::uint8_t value = 255;
    if (product == MaskProduct::Flood) {
      channel = is_road ? (f.flooded ? kFloodedRoad : kNonFloodedRoad)
                        : (f.flooded ? kFloodedBuilding : kNonFloodedBuilding);
    } else if (product == MaskProduct::RoadSpeed) {
      require(f.road_speed_mph.has_value(), "road '" + f.id + "' has no assigned speed");
      value = static_cast<std::uint8_t>(std::clamp(std::floor(*f.road_speed_mph + 0.5), 1.0, 255.0));
    }
    detail::scan_geometry(shape, tile, [&](int row, int c0, int c1) {
      for (int c = c0; c < c1; ++c) {
        auto& px = mask.at(channel, row, c);
        px = std::max(px, value);
      }
    });
  }

  if (product == MaskProduct::Flood) {
    const std::size_t n = mask.plane_size();
    auto* d = mask.data.data();
    for (std::size_t i = 0; i < n; ++i) {
      if (d[kFloodedBuilding * n + i]) d[kNonFloodedBuilding * n + i] = 0;
      if (d[kFloodedRoad * n + i]) d[kNonFloodedRoad * n + i] = 0;
    }
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Mask files: <tile_id>.<channel>.png per channel plus <tile_id>.mask.json

inline std::string mask_sidecar_path(const std::string& dir, const std::string& tile_id) {
  return (std::filesystem::path(dir) / (tile_id + ".mask.json")).string();
}

inline void write_mask(const MaskRaster& mask, const std::string& dir) {
  mask.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir, "cannot create directory: " + ec.message());
  json files = json::array();
  for (int ch = 0; ch < mask.channels; ++ch) {
    const std::string name = mask.tile_id + "." + mask.channel_names[ch] + ".png";
    PngPixels px{mask.width_px, mask.height_px, 1, {}};
    auto plane = mask.channel(ch);
    px.data.assign(plane.begin(), plane.end());
    write_png((std::filesystem::path(dir) / name).string(), px);
    files.push_back(name);
  }
  json sidecar = {{"schema_version", 1},
                  {"tile_id", mask.tile_id},
                  {"product", mask.product},
                  {"crs_id", mask.crs_id},
                  {"width_px", mask.width_px},
                  {"height_px", mask.height_px},
                  {"geotransform", mask.geotransform.to_array()},
                  {"channels", mask.channel_names},
                  {"files", files}};
  write_text_file(mask_sidecar_path(dir, mask.tile_id), sidecar.dump(2) + "\n");
}

/// Loads a mask from its sidecar; nothing is returned unless every channel
/// decodes with the declared dimensions.
inline MaskRaster read_mask(const std::string& sidecar_path) {
  const json side = read_json_file(sidecar_path);
  const auto dir = std::filesystem::path(sidecar_path).parent_path();
  MaskRaster m;
  try {
    m.tile_id = side.at("tile_id").get<std::string>();
    m.product = side.at("product").get<std::string>();
    m.crs_id = side.value("crs_id", "");
    m.width_px = side.at("width_px").get<int>();
    m.height_px = side.at("height_px").get<int>();
    m.geotransform = AffineGeotransform::from_array(side.at("geotransform").get<std::array<double, 6>>());
    m.channel_names = side.at("channels").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ParseError(sidecar_path + ": malformed mask sidecar: " + e.what(), 0);
  }
  m.channels = static_cast<int>(m.channel_names.size());
  require(m.channels >= 1 && m.width_px > 0 && m.height_px > 0, sidecar_path + ": invalid mask dimensions");
  m.data.reserve(static_cast<std::size_t>(m.channels) * m.plane_size());
  for (int ch = 0; ch < m.channels; ++ch) {
    const auto file = (dir / (m.tile_id + "." + m.channel_names[ch] + ".png")).string();
    PngPixels px = read_png(file, 1);
    if (px.width != m.width_px || px.height != m.height_px)
      throw IoError(file, "channel dimensions disagree with sidecar");
    m.data.insert(m.data.end(), px.data.begin(), px.data.end());
  }
  return m;
}

}  // namespace floodeval

#endif  // FLOODEVAL_MASK_BUILDER_HPP
