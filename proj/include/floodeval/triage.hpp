#ifndef FLOODEVAL_TRIAGE_HPP
#define FLOODEVAL_TRIAGE_HPP

// Label triage: tiles sorted by score, human verdicts kept in an append-only
// journal, and the manifest of tiles kept for retraining.
//
// Data directory layout:
//   dataset.json     {"dataset_id", "tiles": [{tile_id, split, pre_image,
//                     post_image, reference_mask, prediction_mask}]}
//                    paths relative to the data directory; masks point at
//                    flood-mask sidecars and prediction_mask may be null
//   scores.jsonl     one ScoreRecord per line (optional)
//   badcases.json    BadCaseSet (optional)
//   verdicts.ndjson  verdict journal, created on the first verdict

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "floodeval/error.hpp"
#include "floodeval/error_analysis.hpp"
#include "floodeval/geo_core.hpp"
#include "floodeval/journal.hpp"
#include "floodeval/mask_builder.hpp"
#include "floodeval/metrics.hpp"
#include "floodeval/png_io.hpp"
#include "floodeval/scoring.hpp"

namespace floodeval {

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr int kVerdictSchemaVersion = 1;

enum class VerdictStatus { Ok, Mislabeled, Ambiguous };

inline const char* to_string(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::Ok: return "Ok";
    case VerdictStatus::Mislabeled: return "Mislabeled";
    case VerdictStatus::Ambiguous: return "Ambiguous";
  }
  return "?";
}

inline std::optional<VerdictStatus> verdict_status_from_string(const std::string& s) {
  for (auto v : {VerdictStatus::Ok, VerdictStatus::Mislabeled, VerdictStatus::Ambiguous})
    if (s == to_string(v)) return v;
  return std::nullopt;
}

struct Verdict {
  std::string tile_id;
  VerdictStatus status = VerdictStatus::Ok;
  std::optional<ErrorType> error_type;
  std::string note;
  std::string annotator;
  std::string timestamp;  // ISO 8601 UTC
  std::uint64_t sequence = 0;
};

inline json to_json(const Verdict& v) {
  return {{"schema_version", kVerdictSchemaVersion},
          {"sequence", v.sequence},
          {"tile_id", v.tile_id},
          {"status", to_string(v.status)},
          {"error_type", v.error_type ? json(to_string(*v.error_type)) : json(nullptr)},
          {"note", v.note},
          {"annotator", v.annotator},
          {"timestamp", v.timestamp}};
}

/// Rejected request with the HTTP status it maps to.
class TriageError : public std::runtime_error {
 public:
  TriageError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

/// Validates a verdict body ({status, error_type?, note?, annotator}).
inline Verdict verdict_from_request(const std::string& tile_id, const json& body) {
  if (!body.is_object()) throw TriageError(422, "verdict body must be a JSON object");
  Verdict v;
  v.tile_id = tile_id;
  const auto status = body.contains("status") && body["status"].is_string()
                          ? verdict_status_from_string(body["status"].get<std::string>())
                          : std::nullopt;
  if (!status) throw TriageError(422, "status must be one of Ok, Mislabeled, Ambiguous");
  v.status = *status;
  if (body.contains("error_type") && !body["error_type"].is_null()) {
    const auto t = body["error_type"].is_string() ? error_type_from_string(body["error_type"].get<std::string>())
                                                  : std::nullopt;
    if (!t)
      throw TriageError(422,
                        "error_type must be one of TargetOmission, SpatialConfusion, MissingInformation, "
                        "InherentInaccuracy");
    v.error_type = t;
  }
  if (v.status == VerdictStatus::Mislabeled && !v.error_type)
    throw TriageError(422, "error_type is required when status is Mislabeled");
  if (body.contains("note") && !body["note"].is_null()) {
    if (!body["note"].is_string()) throw TriageError(422, "note must be a string");
    v.note = body["note"].get<std::string>();
  }
  if (!body.contains("annotator") || !body["annotator"].is_string() || body["annotator"].get<std::string>().empty())
    throw TriageError(422, "annotator is required");
  v.annotator = body["annotator"].get<std::string>();
  return v;
}

inline Verdict verdict_from_journal(const json& j) {
  Verdict v = verdict_from_request(j.at("tile_id").get<std::string>(), j);
  v.timestamp = j.value("timestamp", "");
  v.sequence = j.value("sequence", std::uint64_t{0});
  return v;
}

struct TriageTile {
  std::string tile_id;
  std::string split;
  std::string pre_image;
  std::string post_image;
  std::string reference_mask;
  std::optional<std::string> prediction_mask;
};

struct TriageDataset {
  std::string dataset_id;
  std::vector<TriageTile> tiles;
  std::map<std::string, ScoreRecord> scores;
  std::set<std::string> flagged;
};

inline TriageDataset triage_dataset_from_json(const json& j) {
  TriageDataset d;
  d.dataset_id = j.at("dataset_id").get<std::string>();
  std::set<std::string> seen;
  for (const auto& t : j.at("tiles")) {
    TriageTile tile;
    tile.tile_id = t.at("tile_id").get<std::string>();
    require(seen.insert(tile.tile_id).second, "duplicate tile_id '" + tile.tile_id + "' in dataset");
    tile.split = t.value("split", "");
    tile.pre_image = t.value("pre_image", "");
    tile.post_image = t.value("post_image", "");
    tile.reference_mask = t.value("reference_mask", "");
    if (t.contains("prediction_mask") && t["prediction_mask"].is_string())
      tile.prediction_mask = t["prediction_mask"].get<std::string>();
    d.tiles.push_back(std::move(tile));
  }
  return d;
}

inline json to_json(const TriageTile& t) {
  return {{"tile_id", t.tile_id},
          {"split", t.split},
          {"pre_image", t.pre_image},
          {"post_image", t.post_image},
          {"reference_mask", t.reference_mask},
          {"prediction_mask", t.prediction_mask ? json(*t.prediction_mask) : json(nullptr)}};
}

/// Loads dataset.json plus optional scores.jsonl and badcases.json.
inline TriageDataset load_triage_dataset(const std::string& data_dir) {
  namespace fs = std::filesystem;
  const auto dataset_path = (fs::path(data_dir) / "dataset.json").string();
  if (!fs::exists(dataset_path)) throw MissingStageOutput(dataset_path, "floodeval score");
  TriageDataset d;
  try {
    d = triage_dataset_from_json(read_json_file(dataset_path));
  } catch (const json::exception& e) {
    throw ParseError(dataset_path + ": " + e.what(), 0);
  }
  const auto scores_path = fs::path(data_dir) / "scores.jsonl";
  if (fs::exists(scores_path))
    for (auto& r : scores_from_jsonl(read_text_file(scores_path.string()), scores_path.string()))
      d.scores[r.tile_id] = r;
  const auto bad_path = fs::path(data_dir) / "badcases.json";
  if (fs::exists(bad_path)) d.flagged = bad_cases_from_json(read_json_file(bad_path.string())).combined;
  return d;
}

/// Verdict history and current verdict per tile.
struct TriageState {
  std::map<std::string, std::vector<Verdict>> history;
  std::uint64_t next_sequence = 1;

  const Verdict* current(const std::string& tile_id) const {
    auto it = history.find(tile_id);
    return it == history.end() || it->second.empty() ? nullptr : &it->second.back();
  }
};

/// Included/excluded partition. Excluded tiles are those whose current
/// verdict is Mislabeled; they are dropped from both splits.
inline json build_manifest(const TriageDataset& dataset, const TriageState& state) {
  std::vector<std::string> ids;
  for (const auto& t : dataset.tiles) ids.push_back(t.tile_id);
  std::sort(ids.begin(), ids.end());
  std::map<std::string, const TriageTile*> by_id;
  for (const auto& t : dataset.tiles) by_id[t.tile_id] = &t;

  json included = json::array();
  json excluded = json::array();
  std::map<std::string, std::map<std::string, int>> per_split;
  for (const auto& id : ids) {
    const Verdict* v = state.current(id);
    const std::string& split = by_id[id]->split;
    if (v && v->status == VerdictStatus::Mislabeled) {
      excluded.push_back({{"tile_id", id},
                          {"split", split},
                          {"reason", "Mislabeled"},
                          {"error_type", to_string(*v->error_type)},
                          {"note", v->note},
                          {"annotator", v->annotator}});
      ++per_split[split]["excluded"];
    } else {
      included.push_back(id);
      ++per_split[split]["included"];
    }
  }
  json splits = json::object();
  for (const auto& [split, counts] : per_split)
    splits[split.empty() ? "unassigned" : split] = {{"included", counts.count("included") ? counts.at("included") : 0},
                                                    {"excluded", counts.count("excluded") ? counts.at("excluded") : 0}};
  return {{"schema_version", kManifestSchemaVersion},
          {"dataset_id", dataset.dataset_id},
          {"exclusion_scope", "train_and_val"},
          {"included", included},
          {"excluded", excluded},
          {"counts",
           {{"total", ids.size()}, {"included", included.size()}, {"excluded", excluded.size()}, {"by_split", splits}}}};
}

inline std::string manifest_text(const json& manifest) { return manifest.dump(2) + "\n"; }

/// Current UTC time as ISO 8601 with millisecond precision.
inline std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

/// Overlay colours per flood-mask channel (RGB); later channels paint over
/// earlier ones where they overlap.
inline constexpr std::array<std::array<std::uint8_t, 3>, 4> kOverlayPalette{{
    {0, 0, 255},    // non-flooded building: blue
    {255, 0, 0},    // flooded building: red
    {0, 200, 0},    // non-flooded road: green
    {255, 165, 0},  // flooded road: orange
}};

/// RGBA overlay of a flood mask: palette colour where a channel is set,
/// transparent elsewhere.
inline PngPixels render_overlay(const MaskRaster& flood) {
  require_flood_mask(flood, "overlay");
  PngPixels px{flood.width_px, flood.height_px, 4, std::vector<std::uint8_t>(flood.plane_size() * 4, 0)};
  for (int ch = 0; ch < 4; ++ch) {
    auto plane = flood.channel(ch);
    for (std::size_t i = 0; i < plane.size(); ++i) {
      if (!plane[i]) continue;
      px.data[4 * i] = kOverlayPalette[ch][0];
      px.data[4 * i + 1] = kOverlayPalette[ch][1];
      px.data[4 * i + 2] = kOverlayPalette[ch][2];
      px.data[4 * i + 3] = 255;
    }
  }
  return px;
}

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

inline ApiResponse json_response(int status, const json& body) { return {status, "application/json", body.dump()}; }

inline ApiResponse error_response(int status, const std::string& message, const json& extra = json::object()) {
  json body = {{"error", message}};
  for (auto it = extra.begin(); it != extra.end(); ++it) body[it.key()] = it.value();
  return json_response(status, body);
}

/// Transport-independent triage API. Reads take a snapshot of the verdict
/// state; verdict writes are serialized and journaled before they become
/// visible.
class TriageService {
 public:
  using Clock = std::function<std::string()>;

  TriageService(TriageDataset dataset, std::string data_dir, std::string journal_path, Clock clock = utc_now_iso8601)
      : dataset_(std::move(dataset)),
        data_dir_(std::move(data_dir)),
        journal_path_(std::move(journal_path)),
        clock_(std::move(clock)) {
    for (std::size_t i = 0; i < dataset_.tiles.size(); ++i) index_[dataset_.tiles[i].tile_id] = i;
    auto state = std::make_shared<TriageState>();
    if (!journal_path_.empty() && std::filesystem::exists(journal_path_)) {
      for (const auto& j : read_ndjson(read_text_file(journal_path_), journal_path_)) {
        Verdict v;
        try {
          v = verdict_from_journal(j);
        } catch (const TriageError& e) {
          throw ParseError(journal_path_ + ": invalid verdict: " + e.what(), 0);
        } catch (const json::exception& e) {
          throw ParseError(journal_path_ + ": invalid verdict: " + e.what(), 0);
        }
        if (!index_.count(v.tile_id))
          throw ParseError(journal_path_ + ": verdict for unknown tile '" + v.tile_id + "'", 0);
        state->next_sequence = std::max(state->next_sequence, v.sequence + 1);
        state->history[v.tile_id].push_back(std::move(v));
      }
    }
    state_ = std::move(state);
  }

  /// Opens a data directory laid out as described at the top of this file.
  static TriageService open(const std::string& data_dir, Clock clock = utc_now_iso8601) {
    return TriageService(load_triage_dataset(data_dir), data_dir,
                         (std::filesystem::path(data_dir) / "verdicts.ndjson").string(), std::move(clock));
  }

  TriageService(TriageService&& other) noexcept
      : dataset_(std::move(other.dataset_)),
        data_dir_(std::move(other.data_dir_)),
        journal_path_(std::move(other.journal_path_)),
        clock_(std::move(other.clock_)),
        index_(std::move(other.index_)),
        state_(std::move(other.state_)) {}

  const TriageDataset& dataset() const { return dataset_; }

  std::shared_ptr<const TriageState> snapshot() const {
    std::lock_guard lock(state_mutex_);
    return state_;
  }

  bool has_tile(const std::string& id) const { return index_.count(id) > 0; }

  /// Validates, journals, then publishes a verdict.
  Verdict submit_verdict(const std::string& tile_id, const json& body) {
    if (!has_tile(tile_id)) throw TriageError(404, "unknown tile '" + tile_id + "'");
    Verdict v = verdict_from_request(tile_id, body);
    std::lock_guard writer(write_mutex_);
    auto current = snapshot();
    v.sequence = current->next_sequence;
    v.timestamp = clock_();
    if (!journal_path_.empty()) append_line_durably(journal_path_, to_json(v).dump());
    auto next = std::make_shared<TriageState>(*current);
    next->history[tile_id].push_back(v);
    next->next_sequence = v.sequence + 1;
    std::lock_guard lock(state_mutex_);
    state_ = std::move(next);
    return v;
  }

  json manifest() const { return build_manifest(dataset_, *snapshot()); }

  // ---- HTTP-shaped handlers ------------------------------------------------

  ApiResponse handle(const std::string& method, const std::string& path,
                     const std::map<std::string, std::string>& query = {}, const std::string& body = "") {
    try {
      if (method == "POST") return post(path, body);
      return route(method, path, query);
    } catch (const TriageError& e) {
      return error_response(e.status(), e.what());
    } catch (const IoError& e) {
      return error_response(500, e.what());
    } catch (const ParseError& e) {
      return error_response(500, e.what());
    }
  }

  ApiResponse list_tiles(const std::map<std::string, std::string>& query) const {
    const std::string sort = query.count("sort") ? query.at("sort") : "";
    if (!sort.empty() && !is_metric_name(sort))
      return error_response(400, "unknown metric '" + sort + "'", {{"valid_metrics", metric_names()}});
    const std::string order = query.count("order") ? query.at("order") : "asc";
    if (order != "asc" && order != "desc") return error_response(400, "order must be asc or desc");
    std::optional<bool> flagged;
    if (query.count("flagged")) {
      const auto& f = query.at("flagged");
      if (f == "true" || f == "1") flagged = true;
      else if (f == "false" || f == "0") flagged = false;
      else return error_response(400, "flagged must be true or false");
    }
    auto parse_positive = [&](const char* key, long fallback) -> std::optional<long> {
      if (!query.count(key)) return fallback;
      try {
        std::size_t used = 0;
        const long v = std::stol(query.at(key), &used);
        if (used != query.at(key).size() || v < 1) return std::nullopt;
        return v;
      } catch (const std::exception&) {
        return std::nullopt;
      }
    };
    const auto page = parse_positive("page", 1);
    const auto page_size = parse_positive("page_size", 50);
    if (!page || !page_size || *page_size > 1000)
      return error_response(400, "page and page_size must be positive integers (page_size at most 1000)");

    const auto state = snapshot();
    std::vector<const TriageTile*> rows;
    for (const auto& t : dataset_.tiles) {
      if (flagged && (dataset_.flagged.count(t.tile_id) > 0) != *flagged) continue;
      rows.push_back(&t);
    }
    auto value_of = [&](const TriageTile* t) -> std::optional<double> {
      if (sort.empty()) return std::nullopt;
      auto it = dataset_.scores.find(t->tile_id);
      if (it == dataset_.scores.end()) return std::nullopt;
      return metric_value(it->second, sort);
    };
    std::stable_sort(rows.begin(), rows.end(), [&](const TriageTile* a, const TriageTile* b) {
      const auto va = value_of(a), vb = value_of(b);
      if (va.has_value() != vb.has_value()) return va.has_value();  // nulls last
      if (va && *va != *vb) return order == "asc" ? *va < *vb : *va > *vb;
      return a->tile_id < b->tile_id;
    });
    const std::size_t begin = std::min(rows.size(), static_cast<std::size_t>((*page - 1) * *page_size));
    const std::size_t end = std::min(rows.size(), begin + static_cast<std::size_t>(*page_size));
    json items = json::array();
    for (std::size_t i = begin; i < end; ++i) items.push_back(summary(*rows[i], *state));
    return json_response(200, {{"total", rows.size()},
                               {"page", *page},
                               {"page_size", *page_size},
                               {"sort", sort.empty() ? json(nullptr) : json(sort)},
                               {"order", order},
                               {"items", items}});
  }

  ApiResponse tile_detail(const std::string& id) const {
    const TriageTile& t = tile(id);
    const auto state = snapshot();
    json j = summary(t, *state);
    j["pre_image_url"] = asset_url(t, "pre");
    j["post_image_url"] = asset_url(t, "post");
    j["reference_overlay_url"] = "/api/tiles/" + id + "/overlay/reference.png";
    j["prediction_overlay_url"] =
        t.prediction_mask ? json("/api/tiles/" + id + "/overlay/prediction.png") : json(nullptr);
    j["overlay_palette"] = palette_json();

    std::vector<ErrorTag> human;
    json history = json::array();
    if (auto it = state->history.find(id); it != state->history.end()) {
      auto verdicts = it->second;
      std::stable_sort(verdicts.begin(), verdicts.end(), [](const Verdict& a, const Verdict& b) {
        return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.sequence < b.sequence;
      });
      for (const auto& v : verdicts) history.push_back(to_json(v));
    }
    if (const Verdict* v = state->current(id); v && v->error_type)
      human.push_back({id, *v->error_type, TagSource::Human});
    std::vector<ErrorTag> heuristic;
    auto sit = dataset_.scores.find(id);
    if (sit != dataset_.scores.end() && t.prediction_mask && !data_dir_.empty()) {
      try {
        heuristic = suggest_error_tags(sit->second, read_mask(resolve(t.reference_mask)),
                                       read_mask(resolve(*t.prediction_mask)));
      } catch (const std::exception&) {
        // Unreadable masks only lose the suggestions; the overlay route reports the failure.
      }
    }
    json tags = json::array();
    for (const auto& tag : merge_tags(human, heuristic))
      tags.push_back({{"type", to_string(tag.type)}, {"source", to_string(tag.source)}});
    j["tags"] = tags;
    j["verdict_history"] = history;
    return json_response(200, j);
  }

  ApiResponse overlay(const std::string& id, const std::string& which) const {
    const TriageTile& t = tile(id);
    std::string rel;
    if (which == "reference") {
      rel = t.reference_mask;
    } else if (which == "prediction") {
      if (!t.prediction_mask) throw TriageError(404, "tile '" + id + "' has no prediction");
      rel = *t.prediction_mask;
    } else {
      throw TriageError(404, "overlay must be reference or prediction");
    }
    const auto bytes = encode_png(render_overlay(read_mask(resolve(rel))));
    return {200, "image/png", std::string(bytes.begin(), bytes.end())};
  }

  /// Serves a tile's pre or post image as listed in the dataset; the files
  /// may live outside the data directory.
  ApiResponse asset(const std::string& id, const std::string& kind) const {
    const TriageTile& t = tile(id);
    const std::string& rel = kind == "pre" ? t.pre_image : kind == "post" ? t.post_image : std::string();
    if (data_dir_.empty() || rel.empty()) throw TriageError(404, "tile '" + id + "' has no " + kind + " image");
    const auto full = resolve(rel);
    if (!std::filesystem::is_regular_file(full)) throw TriageError(404, "image '" + rel + "' is missing on disk");
    return {200, "image/png", read_text_file(full)};
  }

 private:
  ApiResponse route(const std::string& method, const std::string& path,
                    const std::map<std::string, std::string>& query) const {
    if (method != "GET") throw TriageError(405, "method not allowed");
    if (path == "/api/tiles") return list_tiles(query);
    if (path == "/api/export/manifest") return json_response(200, manifest());
    if (path.rfind("/assets/", 0) == 0) {
      const std::string rest = path.substr(8);
      const auto slash = rest.find('/');
      if (slash != std::string::npos) {
        const std::string file = rest.substr(slash + 1);
        if (file == "pre.png" || file == "post.png") return asset(rest.substr(0, slash), file.substr(0, file.size() - 4));
      }
    }
    const std::string prefix = "/api/tiles/";
    if (path.rfind(prefix, 0) == 0) {
      const std::string rest = path.substr(prefix.size());
      const auto slash = rest.find('/');
      if (slash == std::string::npos) return tile_detail(rest);
      const std::string id = rest.substr(0, slash);
      const std::string tail = rest.substr(slash);
      if (tail == "/overlay/reference.png") return overlay(id, "reference");
      if (tail == "/overlay/prediction.png") return overlay(id, "prediction");
    }
    throw TriageError(404, "no route for " + path);
  }

  ApiResponse post(const std::string& path, const std::string& body) {
    const std::string prefix = "/api/tiles/", suffix = "/verdict";
    if (path.rfind(prefix, 0) != 0 || path.size() <= prefix.size() + suffix.size() ||
        path.compare(path.size() - suffix.size(), suffix.size(), suffix) != 0)
      throw TriageError(404, "no route for POST " + path);
    const std::string id = path.substr(prefix.size(), path.size() - prefix.size() - suffix.size());
    if (!has_tile(id)) throw TriageError(404, "unknown tile '" + id + "'");
    json parsed;
    try {
      parsed = json::parse(body);
    } catch (const json::parse_error& e) {
      throw TriageError(422, std::string("verdict body is not valid JSON: ") + e.what());
    }
    return json_response(200, to_json(submit_verdict(id, parsed)));
  }

  const TriageTile& tile(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw TriageError(404, "unknown tile '" + id + "'");
    return dataset_.tiles[it->second];
  }

  json summary(const TriageTile& t, const TriageState& state) const {
    auto sit = dataset_.scores.find(t.tile_id);
    const Verdict* v = state.current(t.tile_id);
    return {{"tile_id", t.tile_id},
            {"split", t.split},
            {"scores", sit == dataset_.scores.end() ? json(nullptr) : to_json(sit->second)},
            {"flagged", dataset_.flagged.count(t.tile_id) > 0},
            {"thumbnail_url", asset_url(t, "post")},
            {"current_verdict", v ? json(to_string(v->status)) : json(nullptr)}};
  }

  static json asset_url(const TriageTile& t, const std::string& kind) {
    const std::string& rel = kind == "pre" ? t.pre_image : t.post_image;
    return rel.empty() ? json(nullptr) : json("/assets/" + t.tile_id + "/" + kind + ".png");
  }

  static json palette_json() {
    json p = json::object();
    const auto& names = channel_names_for(MaskProduct::Flood);
    for (std::size_t i = 0; i < names.size(); ++i)
      p[names[i]] = {kOverlayPalette[i][0], kOverlayPalette[i][1], kOverlayPalette[i][2]};
    return p;
  }

  std::string resolve(const std::string& rel) const { return (std::filesystem::path(data_dir_) / rel).string(); }

  TriageDataset dataset_;
  std::string data_dir_;
  std::string journal_path_;
  Clock clock_;
  std::map<std::string, std::size_t> index_;
  mutable std::mutex state_mutex_;  // guards the pointer swap only
  std::mutex write_mutex_;
  std::shared_ptr<const TriageState> state_;
};

}  // namespace floodeval

#endif  // FLOODEVAL_TRIAGE_HPP
