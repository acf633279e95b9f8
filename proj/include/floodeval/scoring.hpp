#ifndef FLOODEVAL_SCORING_HPP
#define FLOODEVAL_SCORING_HPP

#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "floodeval/error.hpp"
#include "floodeval/geo_core.hpp"
#include "floodeval/mask_builder.hpp"
#include "floodeval/metrics.hpp"
#include "floodeval/road_graph.hpp"

namespace floodeval {

inline constexpr int kScoreSchemaVersion = 1;

/// Per-tile metric vector. The headline precision/recall/f1 are computed
/// over the union of all four flood-mask channels (any mapped object).
struct ScoreRecord {
  std::string tile_id;
  double building_iou = 0.0;
  double road_iou = 0.0;
  double flood_iou = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> apls_length;
  std::optional<double> apls_time;

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"building_iou", "road_iou", "flood_iou", "precision",
                                              "recall",       "f1",       "apls_length", "apls_time"};
  return names;
}

inline bool is_metric_name(const std::string& name) {
  for (const auto& n : metric_names())
    if (n == name) return true;
  return false;
}

inline std::optional<double> metric_value(const ScoreRecord& r, const std::string& name) {
  if (name == "building_iou") return r.building_iou;
  if (name == "road_iou") return r.road_iou;
  if (name == "flood_iou") return r.flood_iou;
  if (name == "precision") return r.precision;
  if (name == "recall") return r.recall;
  if (name == "f1") return r.f1;
  if (name == "apls_length") return r.apls_length;
  if (name == "apls_time") return r.apls_time;
  throw ContractViolation("unknown metric '" + name + "'");
}

/// Scores one tile from reference and predicted flood masks, plus optional
/// road graphs for APLS.
inline ScoreRecord score_tile(const MaskRaster& reference, const MaskRaster& prediction,
                              const RoadGraph* reference_roads = nullptr, const RoadGraph* proposal_roads = nullptr,
                              const AplsParams& apls_params = {}) {
  require_flood_mask(reference, "reference");
  require_flood_mask(prediction, "prediction");
  require(reference.width_px == prediction.width_px && reference.height_px == prediction.height_px,
          "score_tile: mask dimensions differ for tile " + reference.tile_id);
  ScoreRecord r;
  r.tile_id = reference.tile_id;
  r.building_iou = pixel_metrics(union_plane(reference, kNonFloodedBuilding, kFloodedBuilding),
                                 union_plane(prediction, kNonFloodedBuilding, kFloodedBuilding))
                       .iou;
  r.road_iou = pixel_metrics(union_plane(reference, kNonFloodedRoad, kFloodedRoad),
                             union_plane(prediction, kNonFloodedRoad, kFloodedRoad))
                   .iou;
  r.flood_iou = pixel_metrics(union_plane(reference, kFloodedBuilding, kFloodedRoad),
                              union_plane(prediction, kFloodedBuilding, kFloodedRoad))
                    .iou;
  auto any_plane = [](const MaskRaster& m) {
    std::vector<std::uint8_t> out(m.plane_size(), 0);
    for (int ch = 0; ch < 4; ++ch) {
      auto c = m.channel(ch);
      for (std::size_t i = 0; i < out.size(); ++i)
        if (c[i]) out[i] = 255;
    }
    return out;
  };
  const auto overall = pixel_metrics(any_plane(reference), any_plane(prediction));
  r.precision = overall.precision;
  r.recall = overall.recall;
  r.f1 = overall.f1;
  if (reference_roads && proposal_roads) {
    r.apls_length = apls(*reference_roads, *proposal_roads, AplsWeight::Length, apls_params);
    r.apls_time = apls(*reference_roads, *proposal_roads, AplsWeight::TravelTime, apls_params);
  }
  return r;
}

inline json to_json(const ScoreRecord& r) {
  json j = {{"schema_version", kScoreSchemaVersion},
            {"tile_id", r.tile_id},
            {"building_iou", r.building_iou},
            {"road_iou", r.road_iou},
            {"flood_iou", r.flood_iou},
            {"precision", r.precision},
            {"recall", r.recall},
            {"f1", r.f1}};
  j["apls_length"] = r.apls_length ? json(*r.apls_length) : json(nullptr);
  j["apls_time"] = r.apls_time ? json(*r.apls_time) : json(nullptr);
  return j;
}

inline ScoreRecord score_record_from_json(const json& j) {
  ScoreRecord r;
  r.tile_id = j.at("tile_id").get<std::string>();
  r.building_iou = j.at("building_iou").get<double>();
  r.road_iou = j.at("road_iou").get<double>();
  r.flood_iou = j.at("flood_iou").get<double>();
  r.precision = j.at("precision").get<double>();
  r.recall = j.at("recall").get<double>();
  r.f1 = j.at("f1").get<double>();
  if (j.contains("apls_length") && !j.at("apls_length").is_null()) r.apls_length = j.at("apls_length").get<double>();
  if (j.contains("apls_time") && !j.at("apls_time").is_null()) r.apls_time = j.at("apls_time").get<double>();
  return r;
}

/// One JSON object per line.
inline std::string scores_to_jsonl(const std::vector<ScoreRecord>& records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  return out;
}

inline std::vector<ScoreRecord> scores_from_jsonl(const std::string& text, const std::string& origin = "<scores>") {
  std::vector<ScoreRecord> out;
  std::istringstream in(text);
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(score_record_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw ParseError(origin + ": " + e.what(), line_start + e.byte - 1);
    } catch (const json::exception& e) {
      throw ParseError(origin + ": bad score record: " + e.what(), line_start);
    }
  }
  return out;
}

inline std::string scores_to_csv(const std::vector<ScoreRecord>& records) {
  std::ostringstream out;
  out << "tile_id";
  for (const auto& n : metric_names()) out << ',' << n;
  out << '\n';
  out.precision(17);
  for (const auto& r : records) {
    out << r.tile_id;
    for (const auto& n : metric_names()) {
      out << ',';
      if (auto v = metric_value(r, n)) out << *v;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace floodeval

#endif  // FLOODEVAL_SCORING_HPP
