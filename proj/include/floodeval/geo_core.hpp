#ifndef FLOODEVAL_GEO_CORE_HPP
#define FLOODEVAL_GEO_CORE_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "floodeval/error.hpp"
#include "floodeval/geometry.hpp"

namespace floodeval {

using json = nlohmann::json;

enum class FeatureClass { Building, Road };

inline const char* to_string(FeatureClass c) { return c == FeatureClass::Building ? "Building" : "Road"; }

struct VectorFeature {
  std::string id;
  Geometry geometry;
  FeatureClass feature_class = FeatureClass::Building;
  bool flooded = false;
  std::optional<double> road_speed_mph;
  std::map<std::string, std::string> attributes;
  bool self_intersecting = false;  // kept as-is, never repaired
};

/// North-up affine transform without rotation terms.
struct AffineGeotransform {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double pixel_width = 1.0;
  double pixel_height = -1.0;

  AffineGeotransform() = default;
  AffineGeotransform(double ox, double oy, double pw, double ph)
      : origin_x(ox), origin_y(oy), pixel_width(pw), pixel_height(ph) {
    require(pw != 0.0 && std::isfinite(pw), "pixel_width must be finite and non-zero");
    require(ph != 0.0 && std::isfinite(ph), "pixel_height must be finite and non-zero");
  }

  /// World coordinate of fractional pixel position (col, row); (0,0) is the
  /// outer corner of the first pixel.
  Point to_world(double col, double row) const {
    return {origin_x + col * pixel_width, origin_y + row * pixel_height};
  }
  /// Fractional (col, row) of a world point.
  Point to_pixel(const Point& world) const {
    return {(world.x - origin_x) / pixel_width, (world.y - origin_y) / pixel_height};
  }
  Point pixel_center(int col, int row) const { return to_world(col + 0.5, row + 0.5); }
  double pixel_area() const { return std::abs(pixel_width * pixel_height); }

  /// GDAL ordering: origin_x, pixel_width, 0, origin_y, 0, pixel_height.
  std::array<double, 6> to_array() const { return {origin_x, pixel_width, 0.0, origin_y, 0.0, pixel_height}; }
  static AffineGeotransform from_array(const std::array<double, 6>& a) {
    require(a[2] == 0.0 && a[4] == 0.0, "rotated geotransforms are not supported");
    return {a[0], a[3], a[1], a[5]};
  }
  friend bool operator==(const AffineGeotransform&, const AffineGeotransform&) = default;
};

struct Tile {
  std::string tile_id;
  Rect bounds;
  int width_px = 0;
  int height_px = 0;
  AffineGeotransform geotransform;
  std::string crs_id;
  std::string pre_image_path;
  std::string post_image_path;

  /// Builds a tile whose bounds are derived from the transform.
  static Tile from_geotransform(std::string id, const AffineGeotransform& gt, int width, int height,
                                std::string crs = {}) {
    require(width > 0 && height > 0, "tile dimensions must be positive");
    Tile t;
    t.tile_id = std::move(id);
    t.geotransform = gt;
    t.width_px = width;
    t.height_px = height;
    t.crs_id = std::move(crs);
    t.bounds.expand(gt.to_world(0, 0));
    t.bounds.expand(gt.to_world(width, height));
    return t;
  }

  void validate() const {
    require(!tile_id.empty(), "tile_id must not be empty");
    require(width_px > 0 && height_px > 0, "tile " + tile_id + ": dimensions must be positive");
    require(bounds.max_x > bounds.min_x && bounds.max_y > bounds.min_y, "tile " + tile_id + ": empty bounds");
    Rect expected;
    expected.expand(geotransform.to_world(0, 0));
    expected.expand(geotransform.to_world(width_px, height_px));
    const double tol = 1e-6 * std::max({1.0, std::abs(expected.max_x), std::abs(expected.max_y)});
    require(std::abs(expected.min_x - bounds.min_x) <= tol && std::abs(expected.max_x - bounds.max_x) <= tol &&
                std::abs(expected.min_y - bounds.min_y) <= tol && std::abs(expected.max_y - bounds.max_y) <= tol,
            "tile " + tile_id + ": bounds disagree with geotransform and pixel size");
  }
};

struct AoiSummary {
  double area_km2 = 0.0;
  std::int64_t building_count = 0;
  double road_km = 0.0;
  std::int64_t buildings_inundated = 0;
  double building_inund_ratio_pct = 0.0;
  double road_inund_km = 0.0;
  double road_inund_ratio_pct = 0.0;
  std::string length_method = "planar";
};

// ---------------------------------------------------------------------------
// Configuration

/// How raw GeoJSON properties map onto feature class, flood flag and road type.
struct AnnotationSchema {
  /// Property holding an explicit class label. When a feature lacks it the
  /// class is inferred from `building_key` / `road_type_key` presence.
  std::string class_key = "feature_class";
  std::map<std::string, FeatureClass> class_values = {
      {"building", FeatureClass::Building}, {"Building", FeatureClass::Building},
      {"road", FeatureClass::Road},         {"Road", FeatureClass::Road}};
  std::string building_key = "building";
  std::string road_type_key = "highway";
  std::string flood_key = "flooded";
  std::set<std::string> flood_true_values = {"yes", "true", "True", "1"};
  std::string crs_id = "local";
};

/// road-type -> mph. The optional "default" entry covers missing and
/// unknown road types.
struct SpeedTable {
  std::map<std::string, double> mph;
  std::optional<double> default_mph;

  static SpeedTable from_json(const json& j) {
    SpeedTable t;
    for (const auto& [k, v] : j.items()) {
      require(v.is_number() && v.get<double>() >= 0.0, "speed for '" + k + "' must be a non-negative number");
      if (k == "default")
        t.default_mph = v.get<double>();
      else
        t.mph[k] = v.get<double>();
    }
    return t;
  }
};

struct IngestConfig {
  AnnotationSchema schema;
  std::optional<SpeedTable> speeds;
};

inline AnnotationSchema schema_from_json(const json& j) {
  AnnotationSchema s;
  if (j.contains("class_key")) s.class_key = j.at("class_key").get<std::string>();
  if (j.contains("class_values")) {
    s.class_values.clear();
    for (const auto& [k, v] : j.at("class_values").items()) {
      const auto name = v.get<std::string>();
      require(name == "Building" || name == "Road", "class_values may only map to Building or Road");
      s.class_values[k] = name == "Building" ? FeatureClass::Building : FeatureClass::Road;
    }
  }
  if (j.contains("building_key")) s.building_key = j.at("building_key").get<std::string>();
  if (j.contains("road_type_key")) s.road_type_key = j.at("road_type_key").get<std::string>();
  if (j.contains("flood_key")) s.flood_key = j.at("flood_key").get<std::string>();
  if (j.contains("flood_true_values")) s.flood_true_values = j.at("flood_true_values").get<std::set<std::string>>();
  if (j.contains("crs_id")) s.crs_id = j.at("crs_id").get<std::string>();
  return s;
}

// ---------------------------------------------------------------------------
// Speeds

/// Sets road_speed_mph from the table using the road-type attribute.
inline VectorFeature assign_road_speed(VectorFeature feature, const SpeedTable& table,
                                       const std::string& road_type_key = "highway") {
  require(feature.feature_class == FeatureClass::Road,
          "assign_road_speed called on non-road feature '" + feature.id + "'");
  const auto it = feature.attributes.find(road_type_key);
  if (it != feature.attributes.end()) {
    if (auto s = table.mph.find(it->second); s != table.mph.end()) {
      feature.road_speed_mph = s->second;
      return feature;
    }
    if (!table.default_mph) throw ContractViolation("speed table has no entry for road type '" + it->second + "' and no 'default'");
  } else if (!table.default_mph) {
    throw ContractViolation("speed table has no 'default' for feature '" + feature.id + "' without road type");
  }
  feature.road_speed_mph = *table.default_mph;
  return feature;
}

// ---------------------------------------------------------------------------
// GeoJSON

namespace detail {

inline Point parse_position(const json& c) {
  if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number())
    throw ContractViolation("bad position");
  return {c[0].get<double>(), c[1].get<double>()};
}

inline Ring parse_positions(const json& arr) {
  if (!arr.is_array()) throw ContractViolation("bad coordinate array");
  Ring r;
  r.reserve(arr.size());
  for (const auto& c : arr) r.push_back(parse_position(c));
  return r;
}

inline std::vector<Ring> parse_rings(const json& arr) {
  if (!arr.is_array()) throw ContractViolation("bad ring array");
  std::vector<Ring> rings;
  for (const auto& r : arr) rings.push_back(parse_positions(r));
  return rings;
}

inline json position_json(const Point& p) { return json::array({p.x, p.y}); }

inline json positions_json(const Ring& r) {
  json a = json::array();
  for (const auto& p : r) a.push_back(position_json(p));
  return a;
}

inline json rings_json(const std::vector<Ring>& rings) {
  json a = json::array();
  for (const auto& r : rings) a.push_back(positions_json(r));
  return a;
}

inline std::string property_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

}  // namespace detail

/// Parses an RFC 7946 geometry object. Throws ContractViolation for
/// unsupported types or malformed coordinates.
inline Geometry geometry_from_geojson(const json& g, const std::string& crs_id) {
  require(g.is_object() && g.contains("type") && g.contains("coordinates"), "geometry lacks type/coordinates");
  const auto type = g.at("type").get<std::string>();
  const auto& c = g.at("coordinates");
  if (type == "Point") return Geometry::point(detail::parse_position(c), crs_id);
  if (type == "LineString") return Geometry::line_string(detail::parse_positions(c), crs_id);
  if (type == "Polygon") return Geometry::polygon(detail::parse_rings(c), crs_id);
  if (type == "MultiPolygon") {
    require(c.is_array(), "bad multipolygon");
    std::vector<std::vector<Ring>> polys;
    for (const auto& p : c) polys.push_back(detail::parse_rings(p));
    return Geometry::multi_polygon(std::move(polys), crs_id);
  }
  throw ContractViolation("unsupported geometry type '" + type + "'");
}

inline json geometry_to_geojson(const Geometry& g) {
  json out;
  out["type"] = to_string(g.kind);
  switch (g.kind) {
    case GeometryKind::Point: out["coordinates"] = detail::position_json(g.as_point()); break;
    case GeometryKind::LineString: out["coordinates"] = detail::positions_json(g.as_line()); break;
    case GeometryKind::Polygon: out["coordinates"] = detail::rings_json(g.parts.at(0)); break;
    case GeometryKind::MultiPolygon: {
      json a = json::array();
      for (const auto& p : g.parts) a.push_back(detail::rings_json(p));
      out["coordinates"] = std::move(a);
      break;
    }
  }
  return out;
}

/// Closes open rings in place; returns the number of rings repaired.
inline int close_rings(Geometry& g) {
  if (!g.is_polygonal()) return 0;
  int repaired = 0;
  for (auto& poly : g.parts)
    for (auto& ring : poly)
      if (!ring.empty() && !ring_closed(ring)) {
        ring.push_back(ring.front());
        ++repaired;
      }
  return repaired;
}

struct IngestResult {
  std::vector<VectorFeature> features;
  int dropped_invalid = 0;
  int dropped_unknown_class = 0;
  int repaired_rings = 0;
  std::vector<std::string> self_intersecting_ids;
  std::vector<std::string> warnings;
};

/// Cleans a parsed FeatureCollection document.
inline IngestResult ingest_annotations(const json& doc, const IngestConfig& config) {
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc.at("features").is_array())
    throw ParseError("document is not a GeoJSON FeatureCollection", 0);

  const auto& schema = config.schema;
  IngestResult out;
  std::size_t index = 0;
  for (const auto& f : doc.at("features")) {
    const std::size_t this_index = index++;
    const json props = (f.contains("properties") && f.at("properties").is_object()) ? f.at("properties") : json::object();
    std::string id;
    if (f.contains("id") && !f.at("id").is_null())
      id = detail::property_string(f.at("id"));
    else
      id = "feature-" + std::to_string(this_index);

    if (!f.contains("geometry") || f.at("geometry").is_null()) {
      ++out.dropped_invalid;
      continue;
    }

    std::optional<FeatureClass> cls;
    if (auto it = props.find(schema.class_key); it != props.end() && !it->is_null()) {
      const auto label = detail::property_string(*it);
      if (auto m = schema.class_values.find(label); m != schema.class_values.end()) {
        cls = m->second;
      } else {
        out.warnings.push_back("feature " + id + ": unknown feature class '" + label + "', dropped");
        ++out.dropped_unknown_class;
        continue;
      }
    } else if (props.contains(schema.building_key) && !props.at(schema.building_key).is_null() &&
               detail::property_string(props.at(schema.building_key)) != "no") {
      cls = FeatureClass::Building;
    } else if (props.contains(schema.road_type_key) && !props.at(schema.road_type_key).is_null()) {
      cls = FeatureClass::Road;
    }
    if (!cls) {
      out.warnings.push_back("feature " + id + ": cannot determine feature class, dropped");
      ++out.dropped_unknown_class;
      continue;
    }

    Geometry geom;
    try {
      geom = geometry_from_geojson(f.at("geometry"), schema.crs_id);
    } catch (const ContractViolation&) {
      ++out.dropped_invalid;
      continue;
    } catch (const json::exception&) {
      ++out.dropped_invalid;
      continue;
    }
    const int repaired = close_rings(geom);
    if (!is_valid(geom)) {
      ++out.dropped_invalid;
      continue;
    }
    out.repaired_rings += repaired;

    VectorFeature vf;
    vf.id = id;
    vf.feature_class = *cls;
    vf.geometry = std::move(geom);
    for (const auto& [k, v] : props.items())
      if (!v.is_null()) vf.attributes[k] = detail::property_string(v);
    if (auto it = props.find(schema.flood_key); it != props.end() && !it->is_null())
      vf.flooded = schema.flood_true_values.count(detail::property_string(*it)) > 0;
    if (has_self_intersection(vf.geometry)) {
      vf.self_intersecting = true;
      out.self_intersecting_ids.push_back(vf.id);
    }
    if (vf.feature_class == FeatureClass::Road && config.speeds)
      vf = assign_road_speed(std::move(vf), *config.speeds, schema.road_type_key);
    out.features.push_back(std::move(vf));
  }
  return out;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError(path, "read failed");
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  out << content;
  out.flush();
  if (!out) throw IoError(path, "write failed");
}

/// Parses JSON text, mapping parser failures to ParseError with byte offset.
inline json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(origin + ": " + e.what(), e.byte);
  }
}

inline json read_json_file(const std::string& path) { return parse_json_text(read_text_file(path), path); }

inline IngestResult ingest_annotations(const std::string& path, const IngestConfig& config) {
  return ingest_annotations(read_json_file(path), config);
}

inline json features_to_geojson(const std::vector<VectorFeature>& features) {
  json fc;
  fc["type"] = "FeatureCollection";
  fc["features"] = json::array();
  for (const auto& f : features) {
    json props = json::object();
    for (const auto& [k, v] : f.attributes) props[k] = v;
    props["feature_class"] = to_string(f.feature_class);
    props["flooded"] = f.flooded;
    if (f.road_speed_mph) props["road_speed_mph"] = *f.road_speed_mph;
    if (f.self_intersecting) props["self_intersecting"] = true;
    fc["features"].push_back({{"type", "Feature"}, {"id", f.id}, {"properties", props},
                              {"geometry", geometry_to_geojson(f.geometry)}});
  }
  return fc;
}

/// Reads back a collection written by features_to_geojson.
inline std::vector<VectorFeature> features_from_geojson(const json& doc, const std::string& crs_id) {
  std::vector<VectorFeature> out;
  for (const auto& f : doc.at("features")) {
    VectorFeature vf;
    vf.id = f.at("id").get<std::string>();
    vf.geometry = geometry_from_geojson(f.at("geometry"), crs_id);
    const auto& props = f.at("properties");
    vf.feature_class = props.at("feature_class").get<std::string>() == "Road" ? FeatureClass::Road : FeatureClass::Building;
    vf.flooded = props.value("flooded", false);
    if (props.contains("road_speed_mph")) vf.road_speed_mph = props.at("road_speed_mph").get<double>();
    vf.self_intersecting = props.value("self_intersecting", false);
    for (const auto& [k, v] : props.items()) {
      if (k == "feature_class" || k == "flooded" || k == "road_speed_mph" || k == "self_intersecting") continue;
      vf.attributes[k] = detail::property_string(v);
    }
    out.push_back(std::move(vf));
  }
  return out;
}

// ---------------------------------------------------------------------------
// AOI statistics

/// Counts and inundation ratios for an AOI. Road lengths are planar in the
/// CRS, scaled to km by `crs_units_per_m`.
inline AoiSummary summarize_aoi(const std::vector<VectorFeature>& features, double area_km2,
                                double crs_units_per_m = 1.0) {
  require(area_km2 > 0.0, "area_km2 must be positive");
  AoiSummary s;
  s.area_km2 = area_km2;
  double road_m = 0.0;
  double flooded_road_m = 0.0;
  for (const auto& f : features) {
    if (f.feature_class == FeatureClass::Building) {
      ++s.building_count;
      if (f.flooded) ++s.buildings_inundated;
    } else {
      const double len = length(f.geometry) / crs_units_per_m;
      road_m += len;
      if (f.flooded) flooded_road_m += len;
    }
  }
  s.road_km = road_m / 1000.0;
  s.road_inund_km = flooded_road_m / 1000.0;
  s.building_inund_ratio_pct =
      s.building_count > 0 ? 100.0 * static_cast<double>(s.buildings_inundated) / static_cast<double>(s.building_count) : 0.0;
  s.road_inund_ratio_pct = road_m > 0.0 ? 100.0 * flooded_road_m / road_m : 0.0;
  return s;
}

inline json to_json(const AoiSummary& s) {
  return {{"area_km2", s.area_km2},
          {"building_count", s.building_count},
          {"road_km", s.road_km},
          {"buildings_inundated", s.buildings_inundated},
          {"building_inund_ratio_pct", s.building_inund_ratio_pct},
          {"road_inund_km", s.road_inund_km},
          {"road_inund_ratio_pct", s.road_inund_ratio_pct},
          {"metadata", {{"length_method", s.length_method}}}};
}

// ---------------------------------------------------------------------------
// Train/validation split

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> val;
};

namespace detail {

/// Uniform integer in [0, bound) by rejection; portable across standard
/// libraries, unlike std::uniform_int_distribution.
inline std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % bound;
}

inline void split_group(const std::vector<std::string>& ids, double ratio, std::mt19937_64& rng,
                        std::set<std::string>& train_set) {
  std::vector<std::string> shuffled = ids;
  for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[bounded_draw(rng, i)]);
  const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(ids.size()) + 0.5));
  for (std::size_t i = 0; i < n_train && i < shuffled.size(); ++i) train_set.insert(shuffled[i]);
}

}  // namespace detail

/// Seeded random partition with |train| = round_half_up(ratio * N). Output
/// lists keep input order. With `strata` (tile id -> group), each group is
/// split separately.
inline DatasetSplit split_dataset(const std::vector<std::string>& tile_ids, double ratio, std::uint64_t seed,
                                  const std::map<std::string, std::string>* strata = nullptr) {
  require(ratio > 0.0 && ratio < 1.0, "split ratio must lie in (0, 1)");
  require(!tile_ids.empty(), "split_dataset needs at least one tile");
  std::set<std::string> seen;
  for (const auto& id : tile_ids) require(seen.insert(id).second, "duplicate tile id '" + id + "'");

  std::mt19937_64 rng(seed);
  std::set<std::string> train_set;
  if (strata) {
    std::map<std::string, std::vector<std::string>> groups;
    for (const auto& id : tile_ids) {
      auto it = strata->find(id);
      groups[it == strata->end() ? std::string() : it->second].push_back(id);
    }
    for (const auto& [_, members] : groups) detail::split_group(members, ratio, rng, train_set);
  } else {
    detail::split_group(tile_ids, ratio, rng, train_set);
  }
  DatasetSplit out;
  for (const auto& id : tile_ids) (train_set.count(id) ? out.train : out.val).push_back(id);
  return out;
}

// ---------------------------------------------------------------------------
// Tile (de)serialization

inline json to_json(const Tile& t) {
  const auto gt = t.geotransform.to_array();
  return {{"tile_id", t.tile_id},
          {"bounds", {t.bounds.min_x, t.bounds.min_y, t.bounds.max_x, t.bounds.max_y}},
          {"width_px", t.width_px},
          {"height_px", t.height_px},
          {"geotransform", gt},
          {"crs_id", t.crs_id},
          {"pre_image_path", t.pre_image_path},
          {"post_image_path", t.post_image_path}};
}

inline Tile tile_from_json(const json& j) {
  Tile t;
  t.tile_id = j.at("tile_id").get<std::string>();
  t.width_px = j.at("width_px").get<int>();
  t.height_px = j.at("height_px").get<int>();
  t.geotransform = AffineGeotransform::from_array(j.at("geotransform").get<std::array<double, 6>>());
  t.crs_id = j.value("crs_id", "");
  t.pre_image_path = j.value("pre_image_path", "");
  t.post_image_path = j.value("post_image_path", "");
  if (j.contains("bounds")) {
    const auto b = j.at("bounds").get<std::array<double, 4>>();
    t.bounds = {b[0], b[1], b[2], b[3]};
  } else {
    t.bounds = Rect{};
    t.bounds.expand(t.geotransform.to_world(0, 0));
    t.bounds.expand(t.geotransform.to_world(t.width_px, t.height_px));
  }
  t.validate();
  return t;
}

inline std::vector<Tile> tiles_from_json(const json& j) {
  std::vector<Tile> out;
  const json& arr = j.is_object() ? j.at("tiles") : j;
  for (const auto& t : arr) out.push_back(tile_from_json(t));
  return out;
}

}  // namespace floodeval

#endif  // FLOODEVAL_GEO_CORE_HPP
