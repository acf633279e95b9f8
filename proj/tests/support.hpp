#ifndef FLOODEVAL_TESTS_SUPPORT_HPP
#define FLOODEVAL_TESTS_SUPPORT_HPP

// Fixture generators shared by the unit tests and the acceptance binary.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <random>
#include <string>
#include <vector>

#include "floodeval/enhance.hpp"
#include "floodeval/geo_core.hpp"
#include "floodeval/mask_builder.hpp"
#include "floodeval/road_graph.hpp"
#include "floodeval/scoring.hpp"
#include "floodeval/spatial_index.hpp"
#include "floodeval/triage.hpp"
#include "oracles.hpp"

namespace support {

namespace fe = floodeval;
namespace fs = std::filesystem;

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = fs::temp_directory_path() / ("floodeval-" + tag + "-" + std::to_string(rng()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  std::string str(const std::string& rel = "") const { return rel.empty() ? path_.string() : (path_ / rel).string(); }

 private:
  fs::path path_;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// ---------------------------------------------------------------------------
// Geometry

/// Star-shaped simple polygon around c (counter-clockwise, closed).
inline fe::Ring star_ring(std::mt19937_64& rng, fe::Point c, double r_max, int vertices) {
  fe::Ring ring;
  for (int i = 0; i < vertices; ++i) {
    const double a = 2 * M_PI * (i + uniform(rng, 0.1, 0.9)) / vertices;
    const double r = uniform(rng, 0.3, 1.0) * r_max;
    ring.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
  }
  ring.push_back(ring.front());
  return ring;
}

/// Random point, line string or polygon inside [0, extent]^2.
inline fe::Geometry random_geometry(std::mt19937_64& rng, double extent, double size) {
  const fe::Point c{uniform(rng, 0, extent), uniform(rng, 0, extent)};
  switch (uniform_int(rng, 0, 2)) {
    case 0: return fe::Geometry::point(c);
    case 1: {
      fe::Ring line{c};
      const int n = uniform_int(rng, 1, 3);
      for (int i = 0; i < n; ++i) line.push_back({line.back().x + uniform(rng, -size, size), line.back().y + uniform(rng, -size, size)});
      return fe::Geometry::line_string(line);
    }
    default: return fe::Geometry::polygon({star_ring(rng, c, size, uniform_int(rng, 3, 7))});
  }
}

inline std::vector<fe::IndexedGeometry> random_items(std::mt19937_64& rng, std::size_t n, double extent, double size,
                                                     const std::string& prefix = "g") {
  std::vector<fe::IndexedGeometry> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({prefix + std::to_string(i), random_geometry(rng, extent, size)});
  return out;
}

inline fe::Rect random_window(std::mt19937_64& rng, double extent, double max_side) {
  const double x = uniform(rng, -max_side, extent), y = uniform(rng, -max_side, extent);
  return {x, y, x + uniform(rng, 0, max_side), y + uniform(rng, 0, max_side)};
}

// ---------------------------------------------------------------------------
// Brute-force spatial query oracles

inline std::vector<std::string> brute_range(const std::vector<fe::IndexedGeometry>& items, const fe::Rect& w) {
  std::vector<std::string> out;
  for (const auto& it : items)
    if (oracle::intersects_rect(it.geometry, w)) out.push_back(it.id);
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<std::pair<double, std::string>> brute_knn(const std::vector<fe::IndexedGeometry>& items, fe::Point p,
                                                      std::size_t k) {
  std::vector<std::pair<double, std::string>> all;
  const auto probe = fe::Geometry::point(p);
  for (const auto& it : items) all.emplace_back(oracle::distance(it.geometry, probe), it.id);
  std::sort(all.begin(), all.end());
  if (all.size() > k) all.resize(k);
  return all;
}

inline std::vector<fe::JoinPair> brute_join(const std::vector<fe::IndexedGeometry>& left,
                                     const std::vector<fe::IndexedGeometry>& right, std::optional<double> within) {
  std::vector<fe::JoinPair> out;
  for (const auto& l : left)
    for (const auto& r : right) {
      const bool hit = within ? oracle::distance(l.geometry, r.geometry) <= *within : oracle::intersects(l.geometry, r.geometry);
      if (hit) out.emplace_back(l.id, r.id);
    }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Road graphs in both representations

struct GraphPair {
  fe::RoadGraph graph;
  oracle::Graph plain;
};

inline void add_edge(GraphPair& g, int u, int v, double mph) {
  const auto& a = g.plain.nodes[u];
  const auto& b = g.plain.nodes[v];
  const double len = std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y));
  if (u == v || len <= 0) return;
  g.graph.add_edge(static_cast<std::size_t>(u), static_cast<std::size_t>(v), len, mph);
  g.plain.edges.push_back({u, v, len, mph});
}

inline GraphPair graph_from_points(const std::vector<fe::Point>& pts) {
  GraphPair g;
  for (const auto& p : pts) {
    g.graph.add_node(p);
    g.plain.nodes.push_back(p);
  }
  return g;
}

/// Random graph with 2..max_nodes nodes and at least one edge.
inline GraphPair random_graph(std::mt19937_64& rng, int max_nodes, double extent) {
  const int n = uniform_int(rng, 2, max_nodes);
  std::vector<fe::Point> pts;
  for (int i = 0; i < n; ++i) pts.push_back({uniform(rng, 0, extent), uniform(rng, 0, extent)});
  GraphPair g = graph_from_points(pts);
  const int m = uniform_int(rng, 1, n + 3);
  const double speeds[] = {15, 25, 35, 45, 65};
  for (int e = 0; e < m; ++e) add_edge(g, uniform_int(rng, 0, n - 1), uniform_int(rng, 0, n - 1), speeds[uniform_int(rng, 0, 4)]);
  if (g.plain.edges.empty()) add_edge(g, 0, 1, 25);
  return g;
}

/// Proposal derived from a reference: nodes jittered (some beyond the snap
/// tolerance), some edges dropped, an occasional extra edge.
inline GraphPair perturb_graph(std::mt19937_64& rng, const GraphPair& ref, double jitter) {
  std::vector<fe::Point> pts;
  for (const auto& p : ref.plain.nodes) pts.push_back({p.x + uniform(rng, -jitter, jitter), p.y + uniform(rng, -jitter, jitter)});
  GraphPair g = graph_from_points(pts);
  for (const auto& e : ref.plain.edges)
    if (uniform(rng, 0, 1) < 0.8) add_edge(g, e.u, e.v, uniform(rng, 0, 1) < 0.8 ? e.mph : e.mph + 10);
  if (pts.size() >= 2 && uniform(rng, 0, 1) < 0.5)
    add_edge(g, uniform_int(rng, 0, int(pts.size()) - 1), uniform_int(rng, 0, int(pts.size()) - 1), 30);
  return g;
}

// ---------------------------------------------------------------------------
// Masks and images

inline fe::Tile square_tile(const std::string& id, int px, double extent) {
  return fe::Tile::from_geotransform(id, fe::AffineGeotransform(0.0, extent, extent / px, -extent / px), px, px, "local");
}

/// Flood mask with random rectangular blobs of each class. Building and
/// road channels stay exclusive within their class.
inline fe::MaskRaster random_flood_mask(std::mt19937_64& rng, const std::string& id, int w, int h, int blobs) {
  fe::Tile tile = fe::Tile::from_geotransform(id, fe::AffineGeotransform(0, h, 1, -1), w, h, "local");
  fe::MaskRaster m = fe::MaskRaster::zeros(id, fe::MaskProduct::Flood, tile);
  for (int b = 0; b < blobs; ++b) {
    const int ch = uniform_int(rng, 0, 3);
    const int r0 = uniform_int(rng, 0, h - 1), c0 = uniform_int(rng, 0, w - 1);
    const int r1 = std::min(h, r0 + uniform_int(rng, 1, h / 3 + 1)), c1 = std::min(w, c0 + uniform_int(rng, 1, w / 3 + 1));
    const int twin = ch ^ 1;  // flooded/non-flooded partner in the same class
    for (int r = r0; r < r1; ++r)
      for (int c = c0; c < c1; ++c) {
        m.data[m.index(ch, r, c)] = 255;
        m.data[m.index(twin, r, c)] = 0;
      }
  }
  return m;
}

inline std::vector<std::uint8_t> random_plane(std::mt19937_64& rng, std::size_t n, double density) {
  std::vector<std::uint8_t> out(n);
  for (auto& v : out) v = uniform(rng, 0, 1) < density ? static_cast<std::uint8_t>(uniform_int(rng, 1, 255)) : 0;
  return out;
}

inline fe::RasterImage random_gray_image(std::mt19937_64& rng, int w, int h) {
  fe::RasterImage img{w, h, 1, 256, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h)};
  // Mix of narrow and wide level ranges so both sparse and dense histograms occur.
  const int lo = uniform_int(rng, 0, 200);
  const int hi = uniform_int(rng, lo, 255);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(uniform_int(rng, lo, hi));
  return img;
}

// ---------------------------------------------------------------------------
// Score tables and triage datasets

inline fe::ScoreRecord random_score(std::mt19937_64& rng, const std::string& id) {
  fe::ScoreRecord r;
  r.tile_id = id;
  r.building_iou = uniform(rng, 0, 1);
  r.road_iou = uniform(rng, 0, 1);
  r.flood_iou = uniform(rng, 0, 1);
  r.precision = uniform(rng, 0, 1);
  r.recall = uniform(rng, 0, 1);
  r.f1 = uniform(rng, 0, 1);
  if (uniform(rng, 0, 1) < 0.7) r.apls_length = uniform(rng, 0, 1);
  if (uniform(rng, 0, 1) < 0.7) r.apls_time = uniform(rng, 0, 1);
  return r;
}

inline std::string tile_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "tile_%04d", i);
  return buf;
}

/// In-memory triage dataset of n tiles with random scores and a split.
inline fe::TriageDataset synthetic_triage_dataset(std::mt19937_64& rng, int n) {
  fe::TriageDataset d;
  d.dataset_id = "synthetic-" + std::to_string(n);
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back(tile_name(i));
  const auto split = fe::split_dataset(ids, 0.85, 11);
  std::set<std::string> train(split.train.begin(), split.train.end());
  for (const auto& id : ids) {
    d.tiles.push_back({id, train.count(id) ? "train" : "val", "", "", "", std::nullopt});
    d.scores[id] = random_score(rng, id);
  }
  return d;
}

/// Deterministic clock producing increasing ISO timestamps.
inline fe::TriageService::Clock fixed_clock(int start_seconds = 0) {
  auto counter = std::make_shared<int>(start_seconds);
  return [counter] {
    const int s = (*counter)++;
    char buf[40];
    std::snprintf(buf, sizeof buf, "2024-01-01T%02d:%02d:%02d.000Z", (s / 3600) % 24, (s / 60) % 60, s % 60);
    return std::string(buf);
  };
}

}  // namespace support

#endif  // FLOODEVAL_TESTS_SUPPORT_HPP
