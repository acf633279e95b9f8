#ifndef FLOODEVAL_ROAD_GRAPH_HPP
#define FLOODEVAL_ROAD_GRAPH_HPP

// Road graphs and Average Path Length Similarity.
//
// For a source graph S and target graph T, every unordered node pair (a, b)
// connected in S contributes min(1, |L_S(a,b) - L_T(a',b')| / L_S(a,b)),
// where a', b' are the nearest T nodes within the snap tolerance. A pair
// whose endpoint does not snap, or whose snapped nodes are disconnected,
// contributes 1. The directional score is 1 - mean contribution and the
// final score averages both directions. Before scoring, each edge longer
// than the control-point spacing is subdivided evenly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "floodeval/error.hpp"
#include "floodeval/geo_core.hpp"
#include "floodeval/geometry.hpp"

namespace floodeval {

inline constexpr double kMetersPerSecondPerMph = 0.44704;

struct RoadEdge {
  std::size_t u = 0;
  std::size_t v = 0;
  double length_m = 0.0;
  double speed_mph = 0.0;
  double travel_time_s = 0.0;
};

/// Undirected road graph; node ids are indices into `nodes`.
class RoadGraph {
 public:
  std::size_t add_node(Point p) {
    require(finite(p), "road graph node must have finite coordinates");
    nodes_.push_back(p);
    return nodes_.size() - 1;
  }

  void add_edge(std::size_t u, std::size_t v, double length_m, double speed_mph) {
    require(u < nodes_.size() && v < nodes_.size(), "road graph edge endpoint does not exist");
    require(length_m > 0.0 && std::isfinite(length_m), "road graph edge length must be positive");
    require(speed_mph > 0.0 && std::isfinite(speed_mph), "road graph edge speed must be positive");
    edges_.push_back({u, v, length_m, speed_mph, length_m / (speed_mph * kMetersPerSecondPerMph)});
  }

  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<RoadEdge>& edges() const { return edges_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  bool empty() const { return nodes_.empty(); }

 private:
  std::vector<Point> nodes_;
  std::vector<RoadEdge> edges_;
};

struct GraphBuildOptions {
  double merge_tolerance = 0.5;  // CRS units; vertices closer than this share a node
  double crs_units_per_m = 1.0;
};

struct GraphBuildResult {
  RoadGraph graph;
  std::vector<std::string> warnings;
};

/// Converts road line strings into a graph: vertices become nodes (merged
/// within tolerance, first-seen wins) and consecutive vertices become edges.
inline GraphBuildResult graph_from_roads(const std::vector<VectorFeature>& roads, bool flooded_only,
                                         const GraphBuildOptions& options = {}) {
  require(options.merge_tolerance >= 0.0, "merge tolerance must be non-negative");
  GraphBuildResult out;
  const double cell = options.merge_tolerance > 0.0 ? options.merge_tolerance : 1.0;
  std::map<std::pair<long long, long long>, std::vector<std::size_t>> grid;
  auto key = [&](const Point& p) {
    return std::make_pair(static_cast<long long>(std::floor(p.x / cell)), static_cast<long long>(std::floor(p.y / cell)));
  };
  auto node_for = [&](const Point& p) {
    const auto [kx, ky] = key(p);
    std::optional<std::size_t> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy) {
        auto it = grid.find({kx + dx, ky + dy});
        if (it == grid.end()) continue;
        for (auto id : it->second) {
          const double d = distance(out.graph.nodes()[id], p);
          if (d <= options.merge_tolerance && (d < best_d || (d == best_d && id < *best))) {
            best = id;
            best_d = d;
          }
        }
      }
    if (best) return *best;
    const auto id = out.graph.add_node(p);
    grid[{kx, ky}].push_back(id);
    return id;
  };

  for (const auto& f : roads) {
    require(f.feature_class == FeatureClass::Road, "graph_from_roads given non-road feature '" + f.id + "'");
    if (flooded_only && !f.flooded) continue;
    require(f.road_speed_mph.has_value() && *f.road_speed_mph > 0.0,
            "road '" + f.id + "' needs a positive assigned speed");
    if (f.geometry.kind != GeometryKind::LineString) {
      out.warnings.push_back("road " + f.id + ": not a line string, skipped");
      continue;
    }
    const Ring& line = f.geometry.as_line();
    std::size_t prev = node_for(line.front());
    for (std::size_t i = 1; i < line.size(); ++i) {
      const std::size_t cur = node_for(line[i]);
      const double len = distance(out.graph.nodes()[prev], out.graph.nodes()[cur]) / options.crs_units_per_m;
      if (cur == prev || len <= 0.0) {
        out.warnings.push_back("road " + f.id + ": zero-length edge at vertex " + std::to_string(i) + " dropped");
        continue;
      }
      out.graph.add_edge(prev, cur, len, *f.road_speed_mph);
      prev = cur;
    }
  }
  return out;
}

enum class AplsWeight { Length, TravelTime };

struct AplsParams {
  double snap_tolerance_m = 4.0;
  double control_point_spacing_m = 50.0;  // 0 disables subdivision
  double crs_units_per_m = 1.0;
  unsigned jobs = 1;
};

/// Subdivides every edge longer than `spacing` into ceil(len/spacing)
/// equal pieces, adding the interior points as new nodes.
inline RoadGraph inject_control_points(const RoadGraph& g, double spacing_m) {
  // Nodes at identical coordinates (shared endpoints, control points of
  // parallel edges) collapse into one so snapping never has to break a tie
  // between co-located nodes.
  RoadGraph out;
  std::map<std::pair<double, double>, std::size_t> at;
  auto node = [&](Point p) {
    const auto [it, fresh] = at.try_emplace({p.x, p.y}, out.node_count());
    if (fresh) out.add_node(p);
    return it->second;
  };
  std::vector<std::size_t> remap;
  for (const auto& p : g.nodes()) remap.push_back(node(p));
  for (const auto& e : g.edges()) {
    const auto pieces =
        spacing_m > 0.0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(e.length_m / spacing_m))) : 1;
    const Point a = g.nodes()[e.u], b = g.nodes()[e.v];
    std::size_t prev = remap[e.u];
    for (std::size_t i = 1; i < pieces; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(pieces);
      const std::size_t mid = node({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
      out.add_edge(prev, mid, e.length_m / static_cast<double>(pieces), e.speed_mph);
      prev = mid;
    }
    out.add_edge(prev, remap[e.v], e.length_m / static_cast<double>(pieces), e.speed_mph);
  }
  return out;
}

namespace detail {

using Adjacency = std::vector<std::vector<std::pair<std::size_t, double>>>;

inline Adjacency adjacency(const RoadGraph& g, AplsWeight w) {
  Adjacency adj(g.node_count());
  for (const auto& e : g.edges()) {
    const double cost = w == AplsWeight::Length ? e.length_m : e.travel_time_s;
    adj[e.u].emplace_back(e.v, cost);
    adj[e.v].emplace_back(e.u, cost);
  }
  return adj;
}

inline std::vector<double> dijkstra(const Adjacency& adj, std::size_t source) {
  std::vector<double> dist(adj.size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[source] = 0.0;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    for (auto [v, w] : adj[u])
      if (d + w < dist[v]) {
        dist[v] = d + w;
        heap.emplace(dist[v], v);
      }
  }
  return dist;
}

/// Nearest node of `g` within `tolerance` of p (ties by lower id).
inline std::optional<std::size_t> snap(const RoadGraph& g, const Point& p, double tolerance) {
  std::optional<std::size_t> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const double d = distance(g.nodes()[i], p);
    if (d <= tolerance && d < best_d) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

struct DirectionalScore {
  double contribution_sum = 0.0;
  std::size_t pairs = 0;
};

inline DirectionalScore directional(const RoadGraph& source, const RoadGraph& target, AplsWeight weight,
                                    const AplsParams& params) {
  const Adjacency src_adj = adjacency(source, weight);
  const Adjacency dst_adj = adjacency(target, weight);
  const double tol = params.snap_tolerance_m * params.crs_units_per_m;
  std::vector<std::optional<std::size_t>> snapped(source.node_count());
  for (std::size_t i = 0; i < source.node_count(); ++i) snapped[i] = snap(target, source.nodes()[i], tol);

  const std::size_t n = source.node_count();
  std::vector<double> sums(n, 0.0);
  std::vector<std::size_t> counts(n, 0);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t a = begin; a < end; ++a) {
      const auto ds = dijkstra(src_adj, a);
      std::vector<double> dt;
      if (snapped[a]) dt = dijkstra(dst_adj, *snapped[a]);
      for (std::size_t b = a + 1; b < n; ++b) {
        const double L = ds[b];
        if (!std::isfinite(L) || L <= 0.0) continue;
        ++counts[a];
        if (!snapped[a] || !snapped[b]) {
          sums[a] += 1.0;
          continue;
        }
        const double Lp = dt[*snapped[b]];
        sums[a] += std::isfinite(Lp) ? std::min(1.0, std::abs(L - Lp) / L) : 1.0;
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(params.jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(work, n * j / jobs, n * (j + 1) / jobs);
    for (auto& t : pool) t.join();
  }
  DirectionalScore out;
  for (std::size_t a = 0; a < n; ++a) {
    out.contribution_sum += sums[a];
    out.pairs += counts[a];
  }
  return out;
}

}  // namespace detail

/// Symmetric APLS in [0, 1]; nullopt when both graphs are empty. A
/// direction whose source has no connected pairs scores 1 if the other
/// graph has none either and 0 otherwise.
inline std::optional<double> apls(const RoadGraph& reference, const RoadGraph& proposal, AplsWeight weight,
                                  const AplsParams& params = {}) {
  if (reference.empty() && proposal.empty()) return std::nullopt;
  const RoadGraph ref = inject_control_points(reference, params.control_point_spacing_m);
  const RoadGraph prop = inject_control_points(proposal, params.control_point_spacing_m);
  const auto fwd = detail::directional(ref, prop, weight, params);
  const auto bwd = detail::directional(prop, ref, weight, params);
  auto score = [](const detail::DirectionalScore& s, const detail::DirectionalScore& other) {
    if (s.pairs == 0) return other.pairs == 0 ? 1.0 : 0.0;
    return 1.0 - s.contribution_sum / static_cast<double>(s.pairs);
  };
  return (score(fwd, bwd) + score(bwd, fwd)) / 2.0;
}

}  // namespace floodeval

#endif  // FLOODEVAL_ROAD_GRAPH_HPP
