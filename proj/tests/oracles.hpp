#ifndef FLOODEVAL_TESTS_ORACLES_HPP
#define FLOODEVAL_TESTS_ORACLES_HPP

// Brute-force reference implementations used to check the library. They
// share only plain data types with the code under test; every computation
// is redone from scratch, usually in the most naive way available.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "floodeval/geometry.hpp"

namespace oracle {

using floodeval::Geometry;
using floodeval::GeometryKind;
using floodeval::Point;
using floodeval::Rect;

// ---------------------------------------------------------------------------
// Histogram equalization, straight from the cumulative-histogram definition
// in floating point.

inline std::vector<int> equalization_mapping(const std::vector<std::uint8_t>& pixels, int levels) {
  std::vector<long double> hist(levels, 0.0L);
  for (auto v : pixels) hist[v] += 1.0L;
  std::vector<int> map(levels);
  long double running = 0.0L;
  const long double n = static_cast<long double>(pixels.size());
  for (int i = 0; i < levels; ++i) {
    running += hist[i];
    const long double cdf = running / n;
    map[i] = static_cast<int>(std::floor(static_cast<long double>(levels - 1) * cdf + 0.5L));
  }
  return map;
}

// ---------------------------------------------------------------------------
// Pixel metrics by explicit counting.

struct Counts {
  long tp = 0, fp = 0, fn = 0, tn = 0;
};

inline Counts count_pixels(const std::vector<std::uint8_t>& ref, const std::vector<std::uint8_t>& pred) {
  Counts c;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    if (ref[i] > 0 && pred[i] > 0) c.tp++;
    if (ref[i] == 0 && pred[i] > 0) c.fp++;
    if (ref[i] > 0 && pred[i] == 0) c.fn++;
    if (ref[i] == 0 && pred[i] == 0) c.tn++;
  }
  return c;
}

struct Ratios {
  double precision, recall, f1, iou;
};

inline Ratios ratios(const Counts& c) {
  const long ref = c.tp + c.fn, pred = c.tp + c.fp;
  if (ref == 0 && pred == 0) return {1, 1, 1, 1};
  const double p = pred == 0 ? 0.0 : double(c.tp) / double(pred);
  const double r = ref == 0 ? 0.0 : double(c.tp) / double(ref);
  const double f = (p + r) == 0 ? 0.0 : 2 * p * r / (p + r);
  const double iou = double(c.tp) / double(c.tp + c.fp + c.fn);
  return {p, r, f, iou};
}

// ---------------------------------------------------------------------------
// APLS by Floyd-Warshall over an independently subdivided graph.

struct Graph {
  std::vector<Point> nodes;
  struct Edge {
    int u, v;
    double len_m, mph;
  };
  std::vector<Edge> edges;
};

inline int find_or_add(Graph& g, Point p) {
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    if (g.nodes[i].x == p.x && g.nodes[i].y == p.y) return int(i);
  g.nodes.push_back(p);
  return int(g.nodes.size()) - 1;
}

// Co-located nodes are the same place; they are merged.
inline Graph subdivide(const Graph& g, double spacing) {
  Graph out;
  std::vector<int> id;
  for (const auto& p : g.nodes) id.push_back(find_or_add(out, p));
  for (const auto& e : g.edges) {
    int pieces = 1;
    while (e.len_m / pieces > spacing) ++pieces;
    int prev = id[e.u];
    for (int i = 1; i < pieces; ++i) {
      const double t = double(i) / pieces;
      const int mid = find_or_add(out, {g.nodes[e.u].x + t * (g.nodes[e.v].x - g.nodes[e.u].x),
                                        g.nodes[e.u].y + t * (g.nodes[e.v].y - g.nodes[e.u].y)});
      out.edges.push_back({prev, mid, e.len_m / pieces, e.mph});
      prev = mid;
    }
    out.edges.push_back({prev, id[e.v], e.len_m / pieces, e.mph});
  }
  return out;
}

inline std::vector<std::vector<double>> all_pairs(const Graph& g, bool travel_time) {
  const std::size_t n = g.nodes.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
  for (const auto& e : g.edges) {
    const double w = travel_time ? e.len_m / (e.mph * 0.44704) : e.len_m;
    d[e.u][e.v] = std::min(d[e.u][e.v], w);
    d[e.v][e.u] = std::min(d[e.v][e.u], w);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  return d;
}

inline std::optional<int> nearest_within(const Graph& g, const Point& p, double tol) {
  std::optional<int> best;
  double bd = 0;
  for (int i = 0; i < int(g.nodes.size()); ++i) {
    const double d = std::sqrt((g.nodes[i].x - p.x) * (g.nodes[i].x - p.x) + (g.nodes[i].y - p.y) * (g.nodes[i].y - p.y));
    if (d > tol) continue;
    if (!best || d < bd) {
      best = i;
      bd = d;
    }
  }
  return best;
}

/// Returns (sum of contributions, pair count) for one direction.
inline std::pair<double, long> apls_direction(const Graph& src, const Graph& dst, bool travel_time, double tol) {
  const auto ds = all_pairs(src, travel_time);
  const auto dd = all_pairs(dst, travel_time);
  double sum = 0;
  long pairs = 0;
  for (std::size_t a = 0; a < src.nodes.size(); ++a)
    for (std::size_t b = a + 1; b < src.nodes.size(); ++b) {
      const double L = ds[a][b];
      if (!std::isfinite(L) || L == 0) continue;
      ++pairs;
      const auto sa = nearest_within(dst, src.nodes[a], tol);
      const auto sb = nearest_within(dst, src.nodes[b], tol);
      if (!sa || !sb || !std::isfinite(dd[*sa][*sb])) {
        sum += 1;
        continue;
      }
      sum += std::min(1.0, std::fabs(L - dd[*sa][*sb]) / L);
    }
  return {sum, pairs};
}

inline std::optional<double> apls(const Graph& ref, const Graph& prop, bool travel_time, double tol = 4.0,
                                  double spacing = 50.0) {
  if (ref.nodes.empty() && prop.nodes.empty()) return std::nullopt;
  const Graph r = subdivide(ref, spacing), p = subdivide(prop, spacing);
  const auto f = apls_direction(r, p, travel_time, tol);
  const auto b = apls_direction(p, r, travel_time, tol);
  auto score = [](std::pair<double, long> s, std::pair<double, long> other) {
    if (s.second == 0) return other.second == 0 ? 1.0 : 0.0;
    return 1.0 - s.first / double(s.second);
  };
  return 0.5 * (score(f, b) + score(b, f));
}

// ---------------------------------------------------------------------------
// k-means: exhaustive search over every labelling of points into k groups.

struct Partition {
  double inertia = std::numeric_limits<double>::infinity();
  std::vector<double> centroids;  // sorted
  std::vector<std::vector<double>> optimal;  // every sorted centroid set reaching the optimum
};

inline Partition best_partition_1d(const std::vector<double>& xs, int k) {
  const std::size_t n = xs.size();
  Partition best;
  std::vector<int> label(n, 0);
  while (true) {
    std::vector<double> sum(k, 0.0);
    std::vector<int> cnt(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[label[i]] += xs[i];
      cnt[label[i]]++;
    }
    bool all_used = true;
    for (int c = 0; c < k; ++c) all_used = all_used && cnt[c] > 0;
    if (all_used) {
      double in = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double m = sum[label[i]] / cnt[label[i]];
        in += (xs[i] - m) * (xs[i] - m);
      }
      std::vector<double> cents;
      for (int c = 0; c < k; ++c) cents.push_back(sum[c] / cnt[c]);
      std::sort(cents.begin(), cents.end());
      if (in < best.inertia - 1e-12) {
        best.inertia = in;
        best.centroids = cents;
        best.optimal = {cents};
      } else if (in <= best.inertia + 1e-12) {
        best.optimal.push_back(cents);
      }
    }
    std::size_t i = 0;
    while (i < n && ++label[i] == k) label[i++] = 0;
    if (i == n) break;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Percentiles by linear interpolation between order statistics.

inline double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * double(v.size() - 1);
  const std::size_t lo = std::size_t(pos);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (pos - double(lo)) * (v[lo + 1] - v[lo]);
}

// ---------------------------------------------------------------------------
// Geometry predicates, written independently of the library: Liang-Barsky
// clipping for rectangles and winding numbers for point-in-polygon.

inline bool segment_hits_rect(Point a, Point b, const Rect& r) {
  double t0 = 0, t1 = 1;
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.x - r.min_x, r.max_x - a.x, a.y - r.min_y, r.max_y - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0) {
      if (q[i] < 0) return false;
      continue;
    }
    const double t = q[i] / p[i];
    if (p[i] < 0)
      t0 = std::max(t0, t);
    else
      t1 = std::min(t1, t);
    if (t0 > t1) return false;
  }
  return true;
}

inline int winding(const Point& p, const std::vector<Point>& ring) {
  int w = 0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const Point a = ring[i], b = ring[i + 1];
    const double side = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
    if (a.y <= p.y) {
      if (b.y > p.y && side > 0) ++w;
    } else if (b.y <= p.y && side < 0) {
      --w;
    }
  }
  return w;
}

inline bool inside_polygonal(const Geometry& g, const Point& p) {
  if (!g.is_polygonal()) return false;
  for (const auto& poly : g.parts) {
    if (oracle::winding(p, poly[0]) == 0) continue;
    bool in_hole = false;
    for (std::size_t h = 1; h < poly.size(); ++h) in_hole = in_hole || oracle::winding(p, poly[h]) != 0;
    if (!in_hole) return true;
  }
  return false;
}

inline std::vector<std::pair<Point, Point>> edges(const Geometry& g) {
  std::vector<std::pair<Point, Point>> out;
  if (g.kind == GeometryKind::Point) {
    out.push_back({g.parts[0][0][0], g.parts[0][0][0]});
    return out;
  }
  for (const auto& poly : g.parts)
    for (const auto& ring : poly)
      for (std::size_t i = 0; i + 1 < ring.size(); ++i) out.push_back({ring[i], ring[i + 1]});
  return out;
}

inline std::vector<Point> vertices(const Geometry& g) {
  std::vector<Point> out;
  for (const auto& poly : g.parts)
    for (const auto& ring : poly)
      for (const auto& p : ring) out.push_back(p);
  return out;
}

inline bool intersects_rect(const Geometry& g, const Rect& r) {
  for (const auto& [a, b] : oracle::edges(g))
    if (segment_hits_rect(a, b, r)) return true;
  return oracle::inside_polygonal(g, {r.min_x, r.min_y});
}

inline double point_segment(const Point& p, const Point& a, const Point& b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 == 0 ? 0 : ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2;
  t = std::clamp(t, 0.0, 1.0);
  const double cx = a.x + t * vx - p.x, cy = a.y + t * vy - p.y;
  return std::sqrt(cx * cx + cy * cy);
}

inline bool segments_touch(Point a, Point b, Point c, Point d) {
  auto orient = [](Point o, Point p, Point q) {
    const double v = (p.x - o.x) * (q.y - o.y) - (p.y - o.y) * (q.x - o.x);
    return (v > 0) - (v < 0);
  };
  auto within = [](Point p, Point q, Point r) {
    return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) && std::min(p.y, q.y) <= r.y &&
           r.y <= std::max(p.y, q.y);
  };
  const int o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && within(a, b, c)) return true;
  if (o2 == 0 && within(a, b, d)) return true;
  if (o3 == 0 && within(c, d, a)) return true;
  if (o4 == 0 && within(c, d, b)) return true;
  return false;
}

inline bool intersects(const Geometry& g, const Geometry& h) {
  for (const auto& [a, b] : oracle::edges(g))
    for (const auto& [c, d] : oracle::edges(h))
      if (oracle::segments_touch(a, b, c, d)) return true;
  for (const auto& p : oracle::vertices(h))
    if (oracle::inside_polygonal(g, p)) return true;
  for (const auto& p : oracle::vertices(g))
    if (oracle::inside_polygonal(h, p)) return true;
  return false;
}

inline double distance(const Geometry& g, const Geometry& h) {
  if (oracle::intersects(g, h)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [a, b] : oracle::edges(g))
    for (const auto& [c, d] : oracle::edges(h))
      best = std::min({best, oracle::point_segment(a, c, d), oracle::point_segment(b, c, d), oracle::point_segment(c, a, b),
                       oracle::point_segment(d, a, b)});
  return best;
}

}  // namespace oracle

#endif  // FLOODEVAL_TESTS_ORACLES_HPP
