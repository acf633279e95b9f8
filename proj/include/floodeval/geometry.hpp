#ifndef FLOODEVAL_GEOMETRY_HPP
#define FLOODEVAL_GEOMETRY_HPP

// Planar geometry model and the exact predicates the rest of the library
// builds on: area, length, point-in-polygon, segment distance, intersects,
// contains. Everything works in the tile CRS; no geodesy.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "floodeval/error.hpp"

namespace floodeval {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

using Ring = std::vector<Point>;

struct Rect {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();

  bool empty() const { return min_x > max_x || min_y > max_y; }
  bool valid() const { return min_x <= max_x && min_y <= max_y; }

  void expand(const Point& p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  void expand(const Rect& r) {
    min_x = std::min(min_x, r.min_x);
    min_y = std::min(min_y, r.min_y);
    max_x = std::max(max_x, r.max_x);
    max_y = std::max(max_y, r.max_y);
  }
  bool intersects(const Rect& o) const {
    return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y && o.min_y <= max_y;
  }
  bool contains(const Rect& o) const {
    return min_x <= o.min_x && min_y <= o.min_y && o.max_x <= max_x && o.max_y <= max_y;
  }
  Rect inflated(double d) const { return {min_x - d, min_y - d, max_x + d, max_y + d}; }
  double area() const { return empty() ? 0.0 : (max_x - min_x) * (max_y - min_y); }
  Point center() const { return {(min_x + max_x) / 2, (min_y + max_y) / 2}; }

  /// Euclidean distance from a point to the rectangle (0 inside).
  double distance(const Point& p) const {
    const double dx = std::max({min_x - p.x, 0.0, p.x - max_x});
    const double dy = std::max({min_y - p.y, 0.0, p.y - max_y});
    return std::hypot(dx, dy);
  }
};

enum class GeometryKind { Point, LineString, Polygon, MultiPolygon };

inline const char* to_string(GeometryKind k) {
  switch (k) {
    case GeometryKind::Point: return "Point";
    case GeometryKind::LineString: return "LineString";
    case GeometryKind::Polygon: return "Polygon";
    case GeometryKind::MultiPolygon: return "MultiPolygon";
  }
  return "?";
}

/// A single geometry. Coordinates are stored as polygons of rings for every
/// kind so algorithms can walk them uniformly:
///   Point        -> {{{p}}}
///   LineString   -> {{line}}
///   Polygon      -> {{outer, hole...}}
///   MultiPolygon -> {{outer, hole...}, ...}
struct Geometry {
  GeometryKind kind = GeometryKind::Point;
  std::vector<std::vector<Ring>> parts;
  std::string crs_id;

  static Geometry point(Point p, std::string crs = {}) {
    return {GeometryKind::Point, {{{p}}}, std::move(crs)};
  }
  static Geometry line_string(Ring pts, std::string crs = {}) {
    return {GeometryKind::LineString, {{std::move(pts)}}, std::move(crs)};
  }
  static Geometry polygon(std::vector<Ring> rings, std::string crs = {}) {
    return {GeometryKind::Polygon, {std::move(rings)}, std::move(crs)};
  }
  static Geometry multi_polygon(std::vector<std::vector<Ring>> polys, std::string crs = {}) {
    return {GeometryKind::MultiPolygon, std::move(polys), std::move(crs)};
  }
  static Geometry rectangle(const Rect& r, std::string crs = {}) {
    return polygon({{{r.min_x, r.min_y},
                     {r.max_x, r.min_y},
                     {r.max_x, r.max_y},
                     {r.min_x, r.max_y},
                     {r.min_x, r.min_y}}},
                   std::move(crs));
  }

  bool is_polygonal() const {
    return kind == GeometryKind::Polygon || kind == GeometryKind::MultiPolygon;
  }
  const Point& as_point() const { return parts.at(0).at(0).at(0); }
  const Ring& as_line() const { return parts.at(0).at(0); }

  friend bool operator==(const Geometry&, const Geometry&) = default;
};

// ---------------------------------------------------------------------------
// Validation

inline bool finite(const Point& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

inline bool ring_closed(const Ring& r) { return !r.empty() && r.front() == r.back(); }

/// Describes the first invariant the geometry breaks, or empty when valid.
inline std::string validation_error(const Geometry& g) {
  if (g.parts.empty()) return "empty geometry";
  for (const auto& poly : g.parts)
    for (const auto& ring : poly)
      for (const auto& p : ring)
        if (!finite(p)) return "non-finite coordinate";
  switch (g.kind) {
    case GeometryKind::Point:
      if (g.parts.size() != 1 || g.parts[0].size() != 1 || g.parts[0][0].size() != 1)
        return "point must have exactly one coordinate";
      return {};
    case GeometryKind::LineString:
      if (g.parts.size() != 1 || g.parts[0].size() != 1) return "malformed line string";
      if (g.parts[0][0].size() < 2) return "line string needs at least 2 points";
      return {};
    case GeometryKind::Polygon:
    case GeometryKind::MultiPolygon:
      if (g.kind == GeometryKind::Polygon && g.parts.size() != 1) return "malformed polygon";
      for (const auto& poly : g.parts) {
        if (poly.empty()) return "polygon without rings";
        for (const auto& ring : poly) {
          if (ring.size() < 4) return "ring needs at least 4 vertices";
          if (!ring_closed(ring)) return "ring is not closed";
        }
      }
      return {};
  }
  return "unknown kind";
}

inline bool is_valid(const Geometry& g) { return validation_error(g).empty(); }

// ---------------------------------------------------------------------------
// Measures

inline Rect bounding_box(const Geometry& g) {
  Rect r;
  for (const auto& poly : g.parts)
    for (const auto& ring : poly)
      for (const auto& p : ring) r.expand(p);
  return r;
}

/// Signed shoelace area; positive for counter-clockwise rings.
inline double signed_ring_area(std::span<const Point> ring) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i)
    acc += ring[i].x * ring[i + 1].y - ring[i + 1].x * ring[i].y;
  return acc / 2.0;
}

/// Area of polygonal geometry: outer rings minus holes. Multipolygon parts
/// are summed, so overlapping parts are counted twice.
inline double area(const Geometry& g) {
  if (!g.is_polygonal()) return 0.0;
  double total = 0.0;
  for (const auto& poly : g.parts) {
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const double a = std::abs(signed_ring_area(poly[i]));
      total += (i == 0) ? a : -a;
    }
  }
  return total;
}

inline double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline double polyline_length(std::span<const Point> pts) {
  double len = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) len += distance(pts[i], pts[i + 1]);
  return len;
}

/// Length of a line string, or perimeter for polygonal geometry.
inline double length(const Geometry& g) {
  double len = 0.0;
  for (const auto& poly : g.parts)
    for (const auto& ring : poly) len += polyline_length(ring);
  return len;
}

// ---------------------------------------------------------------------------
// Segment primitives

struct Segment {
  Point a;
  Point b;
};

inline double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline int orientation(const Point& o, const Point& a, const Point& b) {
  const double c = cross(o, a, b);
  return (c > 0) - (c < 0);
}

inline bool on_segment_bbox(const Point& p, const Segment& s) {
  return std::min(s.a.x, s.b.x) <= p.x && p.x <= std::max(s.a.x, s.b.x) &&
         std::min(s.a.y, s.b.y) <= p.y && p.y <= std::max(s.a.y, s.b.y);
}

/// Closed-segment intersection test, collinear overlaps included.
inline bool segments_intersect(const Segment& s, const Segment& t) {
  const int o1 = orientation(s.a, s.b, t.a);
  const int o2 = orientation(s.a, s.b, t.b);
  const int o3 = orientation(t.a, t.b, s.a);
  const int o4 = orientation(t.a, t.b, s.b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment_bbox(t.a, s)) return true;
  if (o2 == 0 && on_segment_bbox(t.b, s)) return true;
  if (o3 == 0 && on_segment_bbox(s.a, t)) return true;
  if (o4 == 0 && on_segment_bbox(s.b, t)) return true;
  return false;
}

/// True when the segments cross at a single point interior to both.
inline bool segments_cross_properly(const Segment& s, const Segment& t) {
  const int o1 = orientation(s.a, s.b, t.a);
  const int o2 = orientation(s.a, s.b, t.b);
  const int o3 = orientation(t.a, t.b, s.a);
  const int o4 = orientation(t.a, t.b, s.b);
  return o1 * o2 < 0 && o3 * o4 < 0;
}

inline double point_segment_distance(const Point& p, const Segment& s) {
  const double dx = s.b.x - s.a.x;
  const double dy = s.b.y - s.a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return distance(p, s.a);
  const double t = std::clamp(((p.x - s.a.x) * dx + (p.y - s.a.y) * dy) / len2, 0.0, 1.0);
  return distance(p, {s.a.x + t * dx, s.a.y + t * dy});
}

inline double segment_distance(const Segment& s, const Segment& t) {
  if (segments_intersect(s, t)) return 0.0;
  return std::min({point_segment_distance(s.a, t), point_segment_distance(s.b, t),
                   point_segment_distance(t.a, s), point_segment_distance(t.b, s)});
}

/// All edges of a geometry. A point yields one degenerate segment so
/// distance code need not special-case it.
inline std::vector<Segment> segments_of(const Geometry& g) {
  std::vector<Segment> out;
  if (g.kind == GeometryKind::Point) {
    const Point p = g.as_point();
    out.push_back({p, p});
    return out;
  }
  for (const auto& poly : g.parts)
    for (const auto& ring : poly)
      for (std::size_t i = 0; i + 1 < ring.size(); ++i) out.push_back({ring[i], ring[i + 1]});
  return out;
}

// ---------------------------------------------------------------------------
// Point location

/// Even-odd crossing test; boundary points give an unspecified answer.
inline bool point_in_ring(const Point& p, std::span<const Point> ring) {
  bool inside = false;
  for (std::size_t i = 0, n = ring.size(); i + 1 < n; ++i) {
    const Point& a = ring[i];
    const Point& b = ring[i + 1];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

/// Interior test for one polygon (outer ring plus holes).
inline bool point_in_polygon(const Point& p, const std::vector<Ring>& rings) {
  if (rings.empty() || !point_in_ring(p, rings[0])) return false;
  for (std::size_t i = 1; i < rings.size(); ++i)
    if (point_in_ring(p, rings[i])) return false;
  return true;
}

inline bool point_on_boundary(const Point& p, const Geometry& g) {
  for (const auto& s : segments_of(g))
    if (point_segment_distance(p, s) == 0.0) return true;
  return false;
}

/// Point inside or on the boundary of a polygonal geometry.
inline bool covers_point(const Geometry& g, const Point& p) {
  if (!g.is_polygonal()) return point_on_boundary(p, g);
  for (const auto& poly : g.parts)
    if (point_in_polygon(p, poly)) return true;
  return point_on_boundary(p, g);
}

inline Point first_vertex(const Geometry& g) { return g.parts.at(0).at(0).at(0); }

// ---------------------------------------------------------------------------
// Predicates

inline bool intersects(const Geometry& a, const Geometry& b) {
  if (!bounding_box(a).intersects(bounding_box(b))) return false;
  const auto sa = segments_of(a);
  const auto sb = segments_of(b);
  for (const auto& s : sa)
    for (const auto& t : sb)
      if (segments_intersect(s, t)) return true;
  // No boundary contact: one may still lie entirely inside the other.
  if (a.is_polygonal()) {
    for (const auto& poly : b.parts)
      if (!poly.empty() && !poly[0].empty() && covers_point(a, poly[0][0])) return true;
  }
  if (b.is_polygonal()) {
    for (const auto& poly : a.parts)
      if (!poly.empty() && !poly[0].empty() && covers_point(b, poly[0][0])) return true;
  }
  return false;
}

inline bool intersects(const Geometry& g, const Rect& r) {
  if (!bounding_box(g).intersects(r)) return false;
  if (r.contains(bounding_box(g))) return true;
  return intersects(g, Geometry::rectangle(r));
}

/// Minimum Euclidean distance between two geometries; 0 when they intersect.
inline double distance(const Geometry& a, const Geometry& b) {
  if (intersects(a, b)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  const auto sb = segments_of(b);
  for (const auto& s : segments_of(a))
    for (const auto& t : sb) best = std::min(best, segment_distance(s, t));
  return best;
}

inline double distance(const Geometry& g, const Point& p) { return distance(g, Geometry::point(p)); }

/// `outer` covers every point of `inner` (boundary contact allowed).
/// Polygonal containers are checked by vertex coverage, segment midpoint
/// coverage, and absence of proper edge crossings.
inline bool contains(const Geometry& outer, const Geometry& inner) {
  if (!bounding_box(outer).contains(bounding_box(inner))) return false;
  const auto si = segments_of(inner);
  for (const auto& s : si) {
    if (!covers_point(outer, s.a) || !covers_point(outer, s.b)) return false;
    const Point mid{(s.a.x + s.b.x) / 2, (s.a.y + s.b.y) / 2};
    if (!covers_point(outer, mid)) return false;
  }
  if (!outer.is_polygonal()) return true;
  const auto so = segments_of(outer);
  for (const auto& s : si)
    for (const auto& t : so)
      if (segments_cross_properly(s, t)) return false;
  if (inner.is_polygonal()) {
    // A hole of the container lying inside the contained polygon.
    for (const auto& poly : outer.parts)
      for (std::size_t h = 1; h < poly.size(); ++h)
        if (!poly[h].empty()) {
          for (const auto& ip : inner.parts)
            if (point_in_polygon(poly[h][0], ip)) return false;
        }
  }
  return true;
}

/// True when any ring has two non-adjacent edges that touch, or any two
/// rings of the same polygon cross.
inline bool has_self_intersection(const Geometry& g) {
  if (!g.is_polygonal()) return false;
  for (const auto& poly : g.parts) {
    std::vector<std::pair<Segment, std::size_t>> edges;
    std::vector<std::size_t> ring_sizes;
    for (std::size_t r = 0; r < poly.size(); ++r) {
      for (std::size_t i = 0; i + 1 < poly[r].size(); ++i)
        edges.push_back({{poly[r][i], poly[r][i + 1]}, r});
      ring_sizes.push_back(poly[r].size() > 0 ? poly[r].size() - 1 : 0);
    }
    std::size_t base = 0;
    std::vector<std::size_t> ring_base;
    for (auto n : ring_sizes) {
      ring_base.push_back(base);
      base += n;
    }
    for (std::size_t i = 0; i < edges.size(); ++i) {
      for (std::size_t j = i + 1; j < edges.size(); ++j) {
        const auto ri = edges[i].second;
        const auto rj = edges[j].second;
        if (ri == rj) {
          const std::size_t n = ring_sizes[ri];
          const std::size_t li = i - ring_base[ri];
          const std::size_t lj = j - ring_base[rj];
          const bool adjacent = (lj == li + 1) || (li == 0 && lj == n - 1);
          if (adjacent) continue;
        }
        if (segments_intersect(edges[i].first, edges[j].first)) return true;
      }
    }
  }
  return false;
}

}  // namespace floodeval

#endif  // FLOODEVAL_GEOMETRY_HPP
