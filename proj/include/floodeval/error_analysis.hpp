#ifndef FLOODEVAL_ERROR_ANALYSIS_HPP
#define FLOODEVAL_ERROR_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "floodeval/error.hpp"
#include "floodeval/geo_core.hpp"
#include "floodeval/mask_builder.hpp"
#include "floodeval/scoring.hpp"

namespace floodeval {

// ---------------------------------------------------------------------------
// Clustering

inline const std::vector<std::string>& default_cluster_dims() {
  static const std::vector<std::string> dims{"building_iou", "road_iou", "flood_iou"};
  return dims;
}

struct ClusterOptions {
  int max_iterations = 300;
  int restarts = 10;
};

struct ClusterModel {
  int k = 0;
  std::vector<std::string> dims;
  std::vector<std::vector<double>> centroids;
  std::vector<std::string> tile_ids;  // clustered tiles, input order
  std::map<std::string, int> assignments;
  double inertia = 0.0;
  std::vector<double> inertia_history;               // winning run, one entry per assignment step
  std::vector<std::vector<double>> run_histories;    // every restart
  std::vector<std::string> excluded;                 // tiles with a null metric in dims
  std::vector<std::string> warnings;
};

namespace detail {

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

/// Farthest-point seeding from a given first point; ties go to the lowest
/// index and duplicates are skipped when distinct points run out.
inline std::vector<std::vector<double>> farthest_point_seeds(const std::vector<std::vector<double>>& pts, int k,
                                                             std::size_t first) {
  std::vector<std::size_t> chosen{first};
  std::vector<double> nearest(pts.size(), std::numeric_limits<double>::infinity());
  while (static_cast<int>(chosen.size()) < k) {
    for (std::size_t i = 0; i < pts.size(); ++i) nearest[i] = std::min(nearest[i], squared_distance(pts[i], pts[chosen.back()]));
    std::size_t best = pts.size();
    double best_d = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
      if (nearest[i] > best_d) {
        best = i;
        best_d = nearest[i];
      }
    }
    chosen.push_back(best);
  }
  std::vector<std::vector<double>> seeds;
  for (auto i : chosen) seeds.push_back(pts[i]);
  return seeds;
}

/// D^2-weighted seeding: each further seed is drawn with probability
/// proportional to its squared distance to the nearest chosen seed.
inline std::vector<std::vector<double>> weighted_seeds(const std::vector<std::vector<double>>& pts, int k,
                                                       std::mt19937_64& rng) {
  std::vector<std::size_t> chosen{bounded_draw(rng, pts.size())};
  std::vector<double> nearest(pts.size(), std::numeric_limits<double>::infinity());
  while (static_cast<int>(chosen.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(pts[i], pts[chosen.back()]));
      if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) total += nearest[i];
    }
    // 53-bit uniform in [0, 1) from the raw engine output, identical on every platform.
    const double target = static_cast<double>(rng() >> 11) * 0x1.0p-53 * total;
    std::size_t pick = pts.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
      if (pick == pts.size()) pick = i;  // fallback when every remaining distance is 0
      acc += nearest[i];
      if (nearest[i] > 0.0 && acc > target) {
        pick = i;
        break;
      }
    }
    chosen.push_back(pick);
  }
  std::vector<std::vector<double>> seeds;
  for (auto i : chosen) seeds.push_back(pts[i]);
  return seeds;
}

struct LloydRun {
  std::vector<std::vector<double>> centroids;
  std::vector<int> labels;
  double inertia = 0.0;
  std::vector<double> history;
};

/// Lloyd iteration until the assignment stops changing or the cap is hit.
/// A point only moves to a strictly closer centroid.
inline LloydRun lloyd(const std::vector<std::vector<double>>& pts, std::vector<std::vector<double>> centroids,
                      int max_iterations) {
  LloydRun run;
  const std::size_t n = pts.size();
  const std::size_t k = centroids.size();
  const std::size_t d = pts.front().size();
  std::vector<int> labels(n, -1);
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = labels[i];
      double best_d = best >= 0 ? squared_distance(pts[i], centroids[best]) : std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double dc = squared_distance(pts[i], centroids[c]);
        if (dc < best_d || (best < 0 && dc == best_d)) {
          best = static_cast<int>(c);
          best_d = dc;
        }
      }
      if (best != labels[i]) changed = true;
      labels[i] = best;
      inertia += best_d;
    }
    run.history.push_back(inertia);
    run.inertia = inertia;
    if (!changed) break;
    std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[labels[i]];
      for (std::size_t j = 0; j < d; ++j) sums[labels[i]][j] += pts[i][j];
    }
    for (std::size_t c = 0; c < k; ++c)
      if (counts[c] > 0)
        for (std::size_t j = 0; j < d; ++j) centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
    if (it + 1 == max_iterations) {
      // Cap reached right after an update: re-assign so labels match centroids.
      double final_inertia = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        int best = labels[i];
        double best_d = squared_distance(pts[i], centroids[best]);
        for (std::size_t c = 0; c < k; ++c) {
          const double dc = squared_distance(pts[i], centroids[c]);
          if (dc < best_d) {
            best = static_cast<int>(c);
            best_d = dc;
          }
        }
        labels[i] = best;
        final_inertia += best_d;
      }
      run.history.push_back(final_inertia);
      run.inertia = final_inertia;
    }
  }
  run.centroids = std::move(centroids);
  run.labels = std::move(labels);
  return run;
}

}  // namespace detail

/// k-means over the selected score dimensions. Each restart seeds by
/// farthest-point from a start drawn from `seed`; the lowest-inertia run
/// wins (earliest on ties).
inline ClusterModel cluster_scores(const std::vector<ScoreRecord>& records, int k, std::uint64_t seed,
                                   const std::vector<std::string>& dims = default_cluster_dims(),
                                   const ClusterOptions& options = {}) {
  require(!dims.empty(), "cluster_scores needs at least one dimension");
  for (const auto& d : dims) require(is_metric_name(d), "unknown metric '" + d + "'");
  require(k >= 1, "k must be at least 1");
  require(options.restarts >= 1 && options.max_iterations >= 1, "cluster options must be positive");

  ClusterModel model;
  model.k = k;
  model.dims = dims;
  std::vector<std::vector<double>> pts;
  for (const auto& r : records) {
    std::vector<double> v;
    bool ok = true;
    for (const auto& d : dims) {
      auto val = metric_value(r, d);
      if (!val) {
        ok = false;
        model.warnings.push_back("tile " + r.tile_id + ": null " + d + ", excluded from clustering");
        break;
      }
      v.push_back(*val);
    }
    if (!ok) {
      model.excluded.push_back(r.tile_id);
      continue;
    }
    pts.push_back(std::move(v));
    model.tile_ids.push_back(r.tile_id);
  }
  require(static_cast<std::size_t>(k) <= pts.size(),
          "k = " + std::to_string(k) + " exceeds the " + std::to_string(pts.size()) + " clusterable records");

  std::mt19937_64 rng(seed);
  std::optional<detail::LloydRun> best;
  for (int r = 0; r < options.restarts; ++r) {
    // First run: farthest-point seeding from a seeded start; later runs: D^2-weighted draws.
    auto seeds = r == 0 ? detail::farthest_point_seeds(pts, k, detail::bounded_draw(rng, pts.size()))
                        : detail::weighted_seeds(pts, k, rng);
    auto run = detail::lloyd(pts, std::move(seeds), options.max_iterations);
    model.run_histories.push_back(run.history);
    if (!best || run.inertia < best->inertia) best = std::move(run);
  }
  model.centroids = best->centroids;
  model.inertia = best->inertia;
  model.inertia_history = best->history;
  for (std::size_t i = 0; i < pts.size(); ++i) model.assignments[model.tile_ids[i]] = best->labels[i];
  return model;
}

inline json to_json(const ClusterModel& m) {
  json assignments = json::object();
  for (const auto& id : m.tile_ids) assignments[id] = m.assignments.at(id);
  return {{"schema_version", 1},        {"k", m.k},
          {"dims", m.dims},             {"centroids", m.centroids},
          {"assignments", assignments}, {"inertia", m.inertia},
          {"excluded", m.excluded},     {"warnings", m.warnings}};
}

// ---------------------------------------------------------------------------
// Bad cases

/// Linear interpolation between order statistics, position p * (n - 1).
inline double percentile(std::vector<double> values, double p) {
  require(!values.empty(), "percentile of an empty set");
  require(p >= 0.0 && p <= 1.0, "percentile fraction must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct BadCaseReason {
  std::string metric;
  double value = 0.0;
  double threshold = 0.0;
  int criterion = 1;  // 1: below median, 2: below 25th percentile
};

struct BadCaseSet {
  std::map<std::string, double> medians;
  std::map<std::string, double> quartiles;  // 25th percentile
  std::set<std::string> criterion1;
  std::set<std::string> criterion2;
  std::set<std::string> combined;
  std::map<std::string, std::vector<BadCaseReason>> reasons;
};

inline BadCaseSet select_bad_cases(const std::vector<ScoreRecord>& records,
                                   const std::vector<std::string>& dims = default_cluster_dims()) {
  require(records.size() >= 4, "select_bad_cases needs at least 4 records for a 25th percentile; got " +
                                   std::to_string(records.size()) + " (skip the percentile criterion)");
  require(!dims.empty(), "select_bad_cases needs at least one metric");
  BadCaseSet out;
  for (const auto& d : dims) {
    require(is_metric_name(d), "unknown metric '" + d + "'");
    std::vector<double> vals;
    for (const auto& r : records)
      if (auto v = metric_value(r, d)) vals.push_back(*v);
    if (vals.empty()) continue;
    out.medians[d] = percentile(vals, 0.5);
    out.quartiles[d] = percentile(vals, 0.25);
  }
  for (const auto& r : records) {
    for (const auto& d : dims) {
      auto v = metric_value(r, d);
      if (!v || !out.medians.count(d)) continue;
      if (*v < out.medians[d]) {
        out.criterion1.insert(r.tile_id);
        out.reasons[r.tile_id].push_back({d, *v, out.medians[d], 1});
      }
      if (*v < out.quartiles[d]) {
        out.criterion2.insert(r.tile_id);
        out.reasons[r.tile_id].push_back({d, *v, out.quartiles[d], 2});
      }
    }
  }
  out.combined = out.criterion1;
  out.combined.insert(out.criterion2.begin(), out.criterion2.end());
  return out;
}

inline json to_json(const BadCaseSet& s) {
  json reasons = json::object();
  for (const auto& [tile, rs] : s.reasons) {
    json arr = json::array();
    for (const auto& r : rs)
      arr.push_back({{"metric", r.metric}, {"value", r.value}, {"threshold", r.threshold}, {"criterion", r.criterion}});
    reasons[tile] = arr;
  }
  return {{"schema_version", 1},
          {"medians", s.medians},
          {"quartiles", s.quartiles},
          {"criterion1", s.criterion1},
          {"criterion2", s.criterion2},
          {"combined", s.combined},
          {"reasons", reasons}};
}

inline BadCaseSet bad_cases_from_json(const json& j) {
  BadCaseSet s;
  s.medians = j.value("medians", std::map<std::string, double>{});
  s.quartiles = j.value("quartiles", std::map<std::string, double>{});
  s.criterion1 = j.value("criterion1", std::set<std::string>{});
  s.criterion2 = j.value("criterion2", std::set<std::string>{});
  s.combined = j.value("combined", std::set<std::string>{});
  return s;
}

// ---------------------------------------------------------------------------
// Improvement report

/// One row of a metric comparison table. Missing metrics are nullopt.
struct MetricRow {
  std::string model;
  std::string improvement = "---";
  std::map<std::string, std::optional<double>> metrics;
};

/// Column order and headers of the comparison table.
inline const std::vector<std::pair<std::string, std::string>>& report_columns() {
  static const std::vector<std::pair<std::string, std::string>> cols{
      {"precision", "Prec."}, {"recall", "Recall"}, {"f1", "F1-Score"}, {"iou", "IoU"}, {"accuracy", "Acc."}};
  return cols;
}

inline MetricRow metric_row_from_json(const json& j) {
  MetricRow row;
  row.model = j.value("model", "");
  row.improvement = j.value("improvement", "---");
  const json& m = j.contains("metrics") ? j.at("metrics") : j;
  for (const auto& [key, label] : report_columns()) {
    (void)label;
    if (m.contains(key) && m.at(key).is_number()) row.metrics[key] = m.at(key).get<double>();
    else row.metrics[key] = std::nullopt;
  }
  return row;
}

struct MetricDelta {
  std::string metric;
  std::optional<double> before;
  std::optional<double> after;
  std::optional<double> absolute;
  std::optional<double> relative_pct;  // undefined when before is 0 or missing
  std::optional<double> claimed_pct;
  bool claim_mismatch = false;
};

struct ImprovementReport {
  MetricRow before;
  MetricRow after;
  std::vector<MetricDelta> deltas;
};

/// Percentage rounded to one decimal as rendered in reports.
inline std::string format_pct(double pct) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.1f", pct);
  return buf;
}

inline double rendered_pct(double pct) { return std::stod(format_pct(pct)); }

/// Absolute and relative deltas per metric. `claims` maps metric -> a
/// separately published relative improvement (percent); a claim is flagged
/// when it differs from the one-decimal rendering of the computed delta.
inline ImprovementReport improvement_report(const MetricRow& before, const MetricRow& after,
                                            const std::map<std::string, double>& claims = {}) {
  std::set<std::string> keys;
  for (const auto& [k, _] : before.metrics) keys.insert(k);
  std::set<std::string> after_keys;
  for (const auto& [k, _] : after.metrics) after_keys.insert(k);
  require(keys == after_keys, "improvement_report: metric keys of the two tables differ");
  ImprovementReport rep{before, after, {}};
  std::vector<std::string> order;
  for (const auto& [k, _] : report_columns())
    if (keys.count(k)) order.push_back(k);
  for (const auto& k : keys)
    if (std::find(order.begin(), order.end(), k) == order.end()) order.push_back(k);
  for (const auto& k : order) {
    MetricDelta d;
    d.metric = k;
    d.before = before.metrics.at(k);
    d.after = after.metrics.at(k);
    if (d.before && d.after) {
      d.absolute = *d.after - *d.before;
      if (*d.before != 0.0) d.relative_pct = 100.0 * (*d.after - *d.before) / *d.before;
    }
    if (auto c = claims.find(k); c != claims.end()) {
      d.claimed_pct = c->second;
      d.claim_mismatch = !d.relative_pct || std::abs(rendered_pct(*d.relative_pct) - c->second) > 0.05;
    }
    rep.deltas.push_back(d);
  }
  return rep;
}

inline std::string render_markdown(const ImprovementReport& rep) {
  auto cell = [](const std::optional<double>& v) {
    if (!v) return std::string("---");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *v);
    return std::string(buf);
  };
  std::ostringstream out;
  out << "| Model | Improv. |";
  for (const auto& d : rep.deltas) {
    std::string label = d.metric;
    for (const auto& [k, l] : report_columns())
      if (k == d.metric) label = l;
    out << ' ' << label << " |";
  }
  out << "\n|---|---|";
  for (std::size_t i = 0; i < rep.deltas.size(); ++i) out << "---|";
  out << '\n';
  for (const auto* row : {&rep.before, &rep.after}) {
    out << "| " << row->model << " | " << row->improvement << " |";
    for (const auto& d : rep.deltas) out << ' ' << cell(row == &rep.before ? d.before : d.after) << " |";
    out << '\n';
  }
  out << "| Delta (abs) | |";
  for (const auto& d : rep.deltas) {
    if (!d.absolute) {
      out << " --- |";
      continue;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%+.3f", *d.absolute);
    out << ' ' << buf << " |";
  }
  out << "\n| Delta (rel %) | |";
  for (const auto& d : rep.deltas) out << ' ' << (d.relative_pct ? format_pct(*d.relative_pct) : "undefined") << " |";
  out << '\n';
  bool header = false;
  for (const auto& d : rep.deltas) {
    if (!d.claim_mismatch) continue;
    if (!header) {
      out << "\nClaim discrepancies:\n";
      header = true;
    }
    out << "- " << d.metric << ": computed " << (d.relative_pct ? format_pct(*d.relative_pct) + "%" : "undefined")
        << " vs claimed " << format_pct(*d.claimed_pct) << "%\n";
  }
  return out.str();
}

inline std::string render_csv(const ImprovementReport& rep) {
  std::ostringstream out;
  out << "metric,before,after,abs_delta,rel_delta_pct,claimed_pct,claim_mismatch\n";
  out.precision(10);
  auto opt = [&](const std::optional<double>& v) {
    if (v) out << *v;
  };
  for (const auto& d : rep.deltas) {
    out << d.metric << ',';
    opt(d.before);
    out << ',';
    opt(d.after);
    out << ',';
    opt(d.absolute);
    out << ',';
    if (d.relative_pct) out << format_pct(*d.relative_pct);
    out << ',';
    opt(d.claimed_pct);
    out << ',' << (d.claim_mismatch ? "true" : "false") << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Heuristic error tags

enum class ErrorType { TargetOmission, SpatialConfusion, MissingInformation, InherentInaccuracy };
enum class TagSource { Heuristic, Human };

inline const char* to_string(ErrorType t) {
  switch (t) {
    case ErrorType::TargetOmission: return "TargetOmission";
    case ErrorType::SpatialConfusion: return "SpatialConfusion";
    case ErrorType::MissingInformation: return "MissingInformation";
    case ErrorType::InherentInaccuracy: return "InherentInaccuracy";
  }
  return "?";
}

inline std::optional<ErrorType> error_type_from_string(const std::string& s) {
  for (auto t : {ErrorType::TargetOmission, ErrorType::SpatialConfusion, ErrorType::MissingInformation,
                 ErrorType::InherentInaccuracy})
    if (s == to_string(t)) return t;
  return std::nullopt;
}

inline const char* to_string(TagSource s) { return s == TagSource::Heuristic ? "Heuristic" : "Human"; }

struct ErrorTag {
  std::string tile_id;
  ErrorType type = ErrorType::TargetOmission;
  TagSource source = TagSource::Heuristic;
  friend bool operator==(const ErrorTag&, const ErrorTag&) = default;
};

struct TagParams {
  std::size_t small_object_px = 100;
};

/// 4-connected components of non-zero pixels, as lists of pixel indices.
inline std::vector<std::vector<std::size_t>> connected_components(std::span<const std::uint8_t> plane, int width,
                                                                  int height) {
  std::vector<std::vector<std::size_t>> comps;
  std::vector<char> seen(plane.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < plane.size(); ++start) {
    if (!plane[start] || seen[start]) continue;
    comps.emplace_back();
    stack.push_back(start);
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      comps.back().push_back(i);
      const int r = static_cast<int>(i / width), c = static_cast<int>(i % width);
      const int nr[4] = {r - 1, r + 1, r, r};
      const int nc[4] = {c, c, c - 1, c + 1};
      for (int k = 0; k < 4; ++k) {
        if (nr[k] < 0 || nr[k] >= height || nc[k] < 0 || nc[k] >= width) continue;
        const std::size_t j = static_cast<std::size_t>(nr[k]) * width + nc[k];
        if (plane[j] && !seen[j]) {
          seen[j] = 1;
          stack.push_back(j);
        }
      }
    }
  }
  return comps;
}

/// Heuristic suggestions from aligned flood masks:
///  - TargetOmission: a reference building or road component smaller than
///    the threshold with no predicted pixel of the same class on it;
///  - SpatialConfusion: a predicted component of one class overlapping
///    reference pixels that belong only to the other class.
inline std::vector<ErrorTag> suggest_error_tags(const ScoreRecord& record, const MaskRaster& reference,
                                                const MaskRaster& prediction, const TagParams& params = {}) {
  require_flood_mask(reference, "reference");
  require_flood_mask(prediction, "prediction");
  require(reference.width_px == prediction.width_px && reference.height_px == prediction.height_px,
          "suggest_error_tags: masks are not aligned");
  const int W = reference.width_px, H = reference.height_px;
  const auto ref_b = union_plane(reference, kNonFloodedBuilding, kFloodedBuilding);
  const auto ref_r = union_plane(reference, kNonFloodedRoad, kFloodedRoad);
  const auto pred_b = union_plane(prediction, kNonFloodedBuilding, kFloodedBuilding);
  const auto pred_r = union_plane(prediction, kNonFloodedRoad, kFloodedRoad);

  bool omission = false;
  for (const auto* pair : {&ref_b, &ref_r}) {
    const auto& pred = pair == &ref_b ? pred_b : pred_r;
    for (const auto& comp : connected_components(*pair, W, H)) {
      if (comp.size() >= params.small_object_px) continue;
      if (std::none_of(comp.begin(), comp.end(), [&](std::size_t i) { return pred[i] != 0; })) omission = true;
    }
  }
  bool confusion = false;
  for (const auto& comp : connected_components(pred_r, W, H))
    if (std::any_of(comp.begin(), comp.end(), [&](std::size_t i) { return ref_b[i] && !ref_r[i]; })) confusion = true;
  for (const auto& comp : connected_components(pred_b, W, H))
    if (std::any_of(comp.begin(), comp.end(), [&](std::size_t i) { return ref_r[i] && !ref_b[i]; })) confusion = true;

  std::vector<ErrorTag> tags;
  if (omission) tags.push_back({record.tile_id, ErrorType::TargetOmission, TagSource::Heuristic});
  if (confusion) tags.push_back({record.tile_id, ErrorType::SpatialConfusion, TagSource::Heuristic});
  return tags;
}

/// Human tags take precedence: heuristic suggestions are dropped for any
/// tile that already carries a human tag.
inline std::vector<ErrorTag> merge_tags(const std::vector<ErrorTag>& existing, const std::vector<ErrorTag>& suggestions) {
  std::set<std::string> human;
  for (const auto& t : existing)
    if (t.source == TagSource::Human) human.insert(t.tile_id);
  std::vector<ErrorTag> out = existing;
  for (const auto& s : suggestions)
    if (!human.count(s.tile_id) && std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  return out;
}

}  // namespace floodeval

#endif  // FLOODEVAL_ERROR_ANALYSIS_HPP
