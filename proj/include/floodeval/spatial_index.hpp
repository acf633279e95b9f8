#ifndef FLOODEVAL_SPATIAL_INDEX_HPP
#define FLOODEVAL_SPATIAL_INDEX_HPP

// Static R-tree packed with Sort-Tile-Recursive, exact-geometry refinement
// after bounding-box filtering, and a partitioned wrapper that splits the
// data set into independent indexes and merges their answers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "floodeval/error.hpp"
#include "floodeval/geometry.hpp"

namespace floodeval {

struct IndexedGeometry {
  std::string id;
  Geometry geometry;
};

struct QueryResult {
  std::vector<std::string> ids;
  std::vector<double> distances;  // filled by KNN only
};

struct Intersects {};
struct Contains {};
struct WithinDistance {
  double distance = 0.0;
};
using JoinPredicate = std::variant<Intersects, Contains, WithinDistance>;

using JoinPair = std::pair<std::string, std::string>;

/// Evaluates the join predicate exactly (left op right).
inline bool join_predicate_holds(const JoinPredicate& pred, const Geometry& left, const Geometry& right) {
  if (std::holds_alternative<Intersects>(pred)) return intersects(left, right);
  if (std::holds_alternative<Contains>(pred)) return contains(left, right);
  return distance(left, right) <= std::get<WithinDistance>(pred).distance;
}

class SpatialIndex {
 public:
  struct Node {
    Rect box;
    bool leaf = true;
    std::vector<std::size_t> children;  // node indices, or entry indices for leaves
  };

  SpatialIndex() = default;

  explicit SpatialIndex(std::vector<IndexedGeometry> items, std::size_t fanout = 16)
      : entries_(std::move(items)), fanout_(fanout) {
    require(fanout_ >= 2, "R-tree fanout must be at least 2");
    std::set<std::string> seen;
    for (const auto& e : entries_) {
      require(seen.insert(e.id).second, "duplicate id '" + e.id + "' in spatial index");
      require(!e.geometry.parts.empty(), "geometry for '" + e.id + "' is empty");
      boxes_.push_back(bounding_box(e.geometry));
    }
    build();
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t fanout() const { return fanout_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t root() const { return root_; }
  const std::vector<IndexedGeometry>& entries() const { return entries_; }
  const Rect& entry_box(std::size_t i) const { return boxes_[i]; }

  /// Ids (ascending) whose geometry intersects the window. Degenerate
  /// windows act as line or point probes.
  QueryResult range_query(const Rect& window) const {
    require(window.valid(), "range window must satisfy min <= max on both axes");
    QueryResult out;
    const Geometry window_geom = Geometry::rectangle(window);
    visit(window, [&](std::size_t e) {
      if (refine_window(e, window, window_geom)) out.ids.push_back(entries_[e].id);
    });
    std::sort(out.ids.begin(), out.ids.end());
    return out;
  }

  /// The k nearest entries by exact geometry distance, ties by id.
  QueryResult knn_query(const Point& probe, std::size_t k) const {
    require(k >= 1, "knn k must be at least 1");
    QueryResult out;
    if (entries_.empty()) return out;
    // (distance, kind, id, index): nodes (kind 0) pop before entries at equal
    // distance so every tied entry is refined before any is emitted.
    using Item = std::tuple<double, int, std::string, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    heap.emplace(nodes_[root_].box.distance(probe), 0, std::string(), root_);
    const Geometry probe_geom = Geometry::point(probe);
    while (!heap.empty() && out.ids.size() < k) {
      auto [d, kind, id, idx] = heap.top();
      heap.pop();
      if (kind == 1) {
        out.ids.push_back(std::move(id));
        out.distances.push_back(d);
        continue;
      }
      const Node& n = nodes_[idx];
      for (auto c : n.children) {
        if (n.leaf)
          heap.emplace(distance(entries_[c].geometry, probe_geom), 1, entries_[c].id, c);
        else
          heap.emplace(nodes_[c].box.distance(probe), 0, std::string(), c);
      }
    }
    return out;
  }

  /// Pairs (left id, right id) satisfying the predicate, sorted.
  std::vector<JoinPair> spatial_join(const std::vector<IndexedGeometry>& right, const JoinPredicate& pred) const {
    double pad = 0.0;
    if (auto* wd = std::get_if<WithinDistance>(&pred)) {
      require(wd->distance >= 0.0 && std::isfinite(wd->distance), "join distance must be finite and >= 0");
      pad = wd->distance;
    }
    std::vector<JoinPair> out;
    for (const auto& r : right) {
      const Rect probe = bounding_box(r.geometry).inflated(pad);
      visit(probe, [&](std::size_t e) {
        if (join_predicate_holds(pred, entries_[e].geometry, r.geometry)) out.emplace_back(entries_[e].id, r.id);
      });
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  template <typename Fn>
  void visit(const Rect& window, Fn&& on_entry) const {
    if (nodes_.empty()) return;
    std::vector<std::size_t> stack{root_};
    while (!stack.empty()) {
      const Node& n = nodes_[stack.back()];
      stack.pop_back();
      if (!n.box.intersects(window)) continue;
      for (auto c : n.children) {
        if (n.leaf) {
          if (boxes_[c].intersects(window)) on_entry(c);
        } else {
          stack.push_back(c);
        }
      }
    }
  }

  bool refine_window(std::size_t e, const Rect& window, const Geometry& window_geom) const {
    if (window.contains(boxes_[e])) return true;
    return intersects(entries_[e].geometry, window_geom);
  }

  // Sort-Tile-Recursive packing of one level into parents.
  std::vector<std::vector<std::size_t>> pack(std::vector<std::size_t> items,
                                             const std::vector<Rect>& boxes) const {
    const std::size_t n = items.size();
    const std::size_t leaves = (n + fanout_ - 1) / fanout_;
    const auto slices = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(leaves))));
    const std::size_t per_slice = slices * fanout_;
    auto by_x = [&](std::size_t a, std::size_t b) {
      const double ax = boxes[a].center().x, bx = boxes[b].center().x;
      return ax != bx ? ax < bx : a < b;
    };
    auto by_y = [&](std::size_t a, std::size_t b) {
      const double ay = boxes[a].center().y, by = boxes[b].center().y;
      return ay != by ? ay < by : a < b;
    };
    std::sort(items.begin(), items.end(), by_x);
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t s = 0; s < n; s += per_slice) {
      const auto end = std::min(n, s + per_slice);
      std::sort(items.begin() + static_cast<std::ptrdiff_t>(s), items.begin() + static_cast<std::ptrdiff_t>(end), by_y);
      for (std::size_t g = s; g < end; g += fanout_)
        groups.emplace_back(items.begin() + static_cast<std::ptrdiff_t>(g),
                            items.begin() + static_cast<std::ptrdiff_t>(std::min(end, g + fanout_)));
    }
    return groups;
  }

  void build() {
    nodes_.clear();
    if (entries_.empty()) return;
    std::vector<std::size_t> level(entries_.size());
    for (std::size_t i = 0; i < level.size(); ++i) level[i] = i;
    std::vector<Rect> level_boxes = boxes_;
    bool leaf = true;
    while (true) {
      std::vector<std::size_t> parents;
      std::vector<Rect> parent_boxes;
      for (auto& group : pack(level, level_boxes)) {
        Node node;
        node.leaf = leaf;
        for (auto c : group) node.box.expand(leaf ? boxes_[c] : nodes_[c].box);
        node.children = std::move(group);
        parents.push_back(nodes_.size());
        nodes_.push_back(std::move(node));
      }
      leaf = false;
      if (parents.size() == 1) {
        root_ = parents.front();
        return;
      }
      // Boxes of the new level indexed by node id for the next packing pass.
      level_boxes.assign(nodes_.size(), Rect{});
      for (auto p : parents) level_boxes[p] = nodes_[p].box;
      level = std::move(parents);
    }
  }

  std::vector<IndexedGeometry> entries_;
  std::vector<Rect> boxes_;
  std::vector<Node> nodes_;
  std::size_t root_ = 0;
  std::size_t fanout_ = 16;
};

/// Data set split into P spatial partitions (vertical strips by bbox centre),
/// each with its own index. Queries fan out and merge deterministically.
class PartitionedIndex {
 public:
  PartitionedIndex(std::vector<IndexedGeometry> items, std::size_t partitions, std::size_t fanout = 16) {
    require(partitions >= 1, "partition count must be at least 1");
    std::sort(items.begin(), items.end(), [](const IndexedGeometry& a, const IndexedGeometry& b) {
      const double ax = bounding_box(a.geometry).center().x, bx = bounding_box(b.geometry).center().x;
      return ax != bx ? ax < bx : a.id < b.id;
    });
    std::set<std::string> seen;
    for (const auto& e : items) require(seen.insert(e.id).second, "duplicate id '" + e.id + "' in spatial index");
    const std::size_t n = items.size();
    for (std::size_t p = 0; p < partitions; ++p) {
      const std::size_t lo = n * p / partitions, hi = n * (p + 1) / partitions;
      parts_.emplace_back(std::vector<IndexedGeometry>(std::make_move_iterator(items.begin() + static_cast<std::ptrdiff_t>(lo)),
                                                       std::make_move_iterator(items.begin() + static_cast<std::ptrdiff_t>(hi))),
                          fanout);
    }
  }

  std::size_t partitions() const { return parts_.size(); }
  const SpatialIndex& partition(std::size_t i) const { return parts_.at(i); }

  QueryResult range_query(const Rect& window) const {
    QueryResult out;
    for (const auto& p : parts_) {
      auto r = p.range_query(window);
      out.ids.insert(out.ids.end(), r.ids.begin(), r.ids.end());
    }
    std::sort(out.ids.begin(), out.ids.end());
    return out;
  }

  QueryResult knn_query(const Point& probe, std::size_t k) const {
    std::vector<std::pair<double, std::string>> merged;
    for (const auto& p : parts_) {
      auto r = p.knn_query(probe, k);
      for (std::size_t i = 0; i < r.ids.size(); ++i) merged.emplace_back(r.distances[i], r.ids[i]);
    }
    std::sort(merged.begin(), merged.end());
    QueryResult out;
    for (std::size_t i = 0; i < merged.size() && i < k; ++i) {
      out.distances.push_back(merged[i].first);
      out.ids.push_back(merged[i].second);
    }
    return out;
  }

  std::vector<JoinPair> spatial_join(const std::vector<IndexedGeometry>& right, const JoinPredicate& pred) const {
    std::vector<JoinPair> out;
    for (const auto& p : parts_) {
      auto r = p.spatial_join(right, pred);
      out.insert(out.end(), r.begin(), r.end());
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::vector<SpatialIndex> parts_;
};

}  // namespace floodeval

#endif  // FLOODEVAL_SPATIAL_INDEX_HPP
