#ifndef FLOODEVAL_PIPELINE_HPP
#define FLOODEVAL_PIPELINE_HPP

// Stage drivers behind the command-line tool. Each stage reads its inputs
// from the dataset root or from earlier stage outputs and writes plain files
// under the output directory:
//
//   ingest/features.geojson   cleaned features            (ingest)
//   ingest/report.json        drop counts and warnings    (ingest)
//   ingest/summary.json       AOI summary                 (ingest)
//   ingest/split.json         train/val tile ids          (ingest)
//   masks/<product>/...       mask sidecars and PNGs      (rasterize)
//   enhanced/<tile>.<pre|post>.png                        (equalize)
//   scores.jsonl, scores.csv, dataset.json                (score)
//   clusters.json                                         (cluster)
//   badcases.json                                         (badcases)
//   runs/<command>.json       run metadata                (every stage)
//
// The dataset root holds tiles.json, annotations.geojson, the images named
// in tiles.json and predictions/<tile>.mask.json (+ optional
// predictions/<tile>.roads.geojson for APLS).

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "floodeval/error.hpp"
#include "floodeval/enhance.hpp"
#include "floodeval/error_analysis.hpp"
#include "floodeval/geo_core.hpp"
#include "floodeval/mask_builder.hpp"
#include "floodeval/road_graph.hpp"
#include "floodeval/scoring.hpp"
#include "floodeval/spatial_index.hpp"
#include "floodeval/triage.hpp"

namespace floodeval {

inline constexpr const char* kVersion = "0.1.0";

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Hashing and parallel helpers

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string file_hash(const std::string& path) { return hex64(fnv1a64(read_text_file(path))); }

inline unsigned default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Work items must write
/// only to their own slot; the first exception is rethrown after joining.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned j = 0; j < jobs; ++j)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Configuration

struct PipelineConfig {
  std::string config_path;  // empty when built in code
  std::string config_text;  // canonical JSON used for hashing
  fs::path dataset_root;
  std::string crs_id = "local";
  fs::path tiles_file;
  fs::path annotations_file;
  fs::path predictions_dir;
  RasterizeParams raster;
  std::optional<fs::path> speed_table_path;
  AnnotationSchema schema;
  double split_ratio = 0.85;
  std::uint64_t split_seed = 42;
  bool split_stratify = false;
  int cluster_k = 3;
  std::uint64_t cluster_seed = 7;
  std::vector<std::string> cluster_dims = default_cluster_dims();
  EqualizeMode equalize_mode = EqualizeMode::Global;
  std::string equalize_images = "both";  // pre, post or both
  fs::path output_dir;
};

/// Parses and validates a pipeline config. Relative paths resolve against
/// `base_dir` (normally the config file's directory).
inline PipelineConfig pipeline_config_from_json(const json& j, const fs::path& base_dir) {
  PipelineConfig c;
  auto path_of = [&](const std::string& v) { return fs::path(v).is_absolute() ? fs::path(v) : base_dir / v; };
  try {
    c.dataset_root = path_of(j.at("dataset_root").get<std::string>());
    c.output_dir = path_of(j.at("output_dir").get<std::string>());
    c.crs_id = j.value("crs_id", "local");
    c.tiles_file = c.dataset_root / j.value("tiles", "tiles.json");
    c.annotations_file = c.dataset_root / j.value("annotations", "annotations.geojson");
    c.predictions_dir = c.dataset_root / j.value("predictions", "predictions");
    if (j.contains("buffers")) {
      const auto& b = j.at("buffers");
      c.raster.road_half_width_m = b.value("road_half_width_m", c.raster.road_half_width_m);
      c.raster.building_buffer_m = b.value("building_buffer_m", c.raster.building_buffer_m);
      c.raster.circle_segments = b.value("circle_segments", c.raster.circle_segments);
    }
    c.raster.crs_units_per_m = j.value("crs_units_per_m", 1.0);
    if (j.contains("speed_table") && !j.at("speed_table").is_null())
      c.speed_table_path = path_of(j.at("speed_table").get<std::string>());
    if (j.contains("annotation_schema")) c.schema = schema_from_json(j.at("annotation_schema"));
    c.schema.crs_id = c.crs_id;
    if (j.contains("split")) {
      const auto& s = j.at("split");
      c.split_ratio = s.value("ratio", c.split_ratio);
      c.split_seed = s.value("seed", c.split_seed);
      c.split_stratify = s.value("stratify", false);
    }
    if (j.contains("cluster")) {
      const auto& k = j.at("cluster");
      c.cluster_k = k.value("k", c.cluster_k);
      c.cluster_seed = k.value("seed", c.cluster_seed);
      c.cluster_dims = k.value("dims", c.cluster_dims);
    }
    if (j.contains("equalize")) {
      const auto& e = j.at("equalize");
      c.equalize_mode = equalize_mode_from_string(e.value("mode", "global"));
      c.equalize_images = e.value("images", "both");
    }
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("invalid pipeline config: ") + e.what());
  }
  require(fs::is_directory(c.dataset_root), "dataset_root '" + c.dataset_root.string() + "' is not a directory");
  require(!c.speed_table_path || fs::is_regular_file(*c.speed_table_path),
          "speed_table '" + (c.speed_table_path ? c.speed_table_path->string() : "") + "' does not exist");
  require(c.raster.road_half_width_m >= 0.0 && c.raster.building_buffer_m >= 0.0, "buffer widths must be non-negative");
  require(c.raster.circle_segments >= 8, "circle_segments must be at least 8");
  require(c.raster.crs_units_per_m > 0.0, "crs_units_per_m must be positive");
  require(c.split_ratio > 0.0 && c.split_ratio < 1.0, "split ratio must lie in (0, 1)");
  require(c.cluster_k >= 1, "cluster k must be at least 1");
  require(!c.cluster_dims.empty(), "cluster dims must not be empty");
  for (const auto& d : c.cluster_dims) require(is_metric_name(d), "unknown cluster dim '" + d + "'");
  require(c.equalize_images == "pre" || c.equalize_images == "post" || c.equalize_images == "both",
          "equalize.images must be pre, post or both");
  c.config_text = j.dump();
  return c;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  PipelineConfig c = pipeline_config_from_json(read_json_file(path), fs::path(path).parent_path());
  c.config_path = path;
  return c;
}

// ---------------------------------------------------------------------------
// Run metadata

struct RunMetadata {
  std::string command;
  std::string config_hash;
  std::map<std::string, std::string> input_hashes;
  std::map<std::string, std::string> parameters;

  void add_input(const fs::path& p, const fs::path& relative_to) {
    input_hashes[fs::relative(p, relative_to).generic_string()] = file_hash(p.string());
  }
};

/// Written without timestamps so that reruns on identical inputs produce
/// identical files.
inline void write_run_metadata(const fs::path& dir, const RunMetadata& m) {
  fs::create_directories(dir / "runs");
  json j = {{"schema_version", 1},
            {"command", m.command},
            {"tool_version", kVersion},
            {"config_hash", m.config_hash},
            {"input_hashes", m.input_hashes},
            {"parameters", m.parameters}};
  write_text_file((dir / "runs" / (m.command + ".json")).string(), j.dump(2) + "\n");
}

inline RunMetadata start_run(const PipelineConfig& c, const std::string& command) {
  RunMetadata m;
  m.command = command;
  m.config_hash = hex64(fnv1a64(c.config_text));
  return m;
}

inline void require_stage_output(const fs::path& p, const std::string& command) {
  if (!fs::exists(p)) throw MissingStageOutput(p.string(), "floodeval " + command);
}

inline std::vector<Tile> load_tiles(const PipelineConfig& c) {
  if (!fs::exists(c.tiles_file)) throw IoError(c.tiles_file.string(), "tile list not found");
  auto tiles = tiles_from_json(read_json_file(c.tiles_file.string()));
  std::set<std::string> seen;
  for (auto& t : tiles) {
    require(seen.insert(t.tile_id).second, "duplicate tile_id '" + t.tile_id + "' in tile list");
    if (t.crs_id.empty()) t.crs_id = c.crs_id;
    require(t.crs_id == c.crs_id, "tile '" + t.tile_id + "' CRS '" + t.crs_id + "' differs from config CRS");
  }
  return tiles;
}

// ---------------------------------------------------------------------------
// Stages

struct IngestStageResult {
  IngestResult ingest;
  AoiSummary summary;
  DatasetSplit split;
};

inline IngestStageResult run_ingest(const PipelineConfig& c) {
  RunMetadata meta = start_run(c, "ingest");
  IngestConfig ic;
  ic.schema = c.schema;
  if (c.speed_table_path) {
    ic.speeds = SpeedTable::from_json(read_json_file(c.speed_table_path->string()));
    meta.add_input(*c.speed_table_path, c.dataset_root);
  }
  if (!fs::exists(c.annotations_file)) throw IoError(c.annotations_file.string(), "annotation file not found");
  IngestStageResult out;
  out.ingest = ingest_annotations(c.annotations_file.string(), ic);
  meta.add_input(c.annotations_file, c.dataset_root);
  const auto tiles = load_tiles(c);
  meta.add_input(c.tiles_file, c.dataset_root);

  double area_units = 0.0;
  for (const auto& t : tiles) area_units += t.bounds.area();
  const double area_km2 = area_units / (c.raster.crs_units_per_m * c.raster.crs_units_per_m) / 1e6;
  out.summary = summarize_aoi(out.ingest.features, area_km2 > 0 ? area_km2 : 1.0, c.raster.crs_units_per_m);

  std::vector<std::string> ids;
  std::map<std::string, std::string> strata;
  for (const auto& t : tiles) {
    ids.push_back(t.tile_id);
    // Tiles are stratified by the leading component of their id (AOI prefix).
    strata[t.tile_id] = t.tile_id.substr(0, t.tile_id.find('_'));
  }
  if (!ids.empty()) out.split = split_dataset(ids, c.split_ratio, c.split_seed, c.split_stratify ? &strata : nullptr);

  const fs::path dir = c.output_dir / "ingest";
  fs::create_directories(dir);
  write_text_file((dir / "features.geojson").string(), features_to_geojson(out.ingest.features).dump(1) + "\n");
  json report = {{"features", out.ingest.features.size()},
                 {"dropped_invalid", out.ingest.dropped_invalid},
                 {"dropped_unknown_class", out.ingest.dropped_unknown_class},
                 {"repaired_rings", out.ingest.repaired_rings},
                 {"self_intersecting_ids", out.ingest.self_intersecting_ids},
                 {"warnings", out.ingest.warnings}};
  write_text_file((dir / "report.json").string(), report.dump(2) + "\n");
  write_text_file((dir / "summary.json").string(), to_json(out.summary).dump(2) + "\n");
  write_text_file((dir / "split.json").string(),
                  json{{"ratio", c.split_ratio}, {"seed", c.split_seed}, {"stratify", c.split_stratify},
                       {"train", out.split.train}, {"val", out.split.val}}
                          .dump(2) +
                      "\n");
  meta.parameters = {{"split_ratio", std::to_string(c.split_ratio)}, {"split_seed", std::to_string(c.split_seed)}};
  write_run_metadata(c.output_dir, meta);
  return out;
}

inline std::vector<VectorFeature> load_ingested_features(const PipelineConfig& c) {
  const fs::path p = c.output_dir / "ingest" / "features.geojson";
  require_stage_output(p, "ingest");
  return features_from_geojson(read_json_file(p.string()), c.crs_id);
}

/// Features whose bounding box touches the tile, in input order.
inline std::vector<std::vector<VectorFeature>> features_per_tile(const std::vector<VectorFeature>& features,
                                                                 const std::vector<Tile>& tiles, double pad) {
  std::vector<IndexedGeometry> items;
  for (std::size_t i = 0; i < features.size(); ++i) items.push_back({std::to_string(i), features[i].geometry});
  std::vector<std::vector<VectorFeature>> out(tiles.size());
  if (items.empty()) return out;
  const SpatialIndex index(std::move(items));
  for (std::size_t t = 0; t < tiles.size(); ++t) {
    std::vector<std::size_t> hits;
    for (const auto& id : index.range_query(tiles[t].bounds.inflated(pad)).ids) hits.push_back(std::stoul(id));
    std::sort(hits.begin(), hits.end());
    for (auto h : hits) out[t].push_back(features[h]);
  }
  return out;
}

inline std::size_t run_rasterize(const PipelineConfig& c, const std::vector<MaskProduct>& products, unsigned jobs) {
  RunMetadata meta = start_run(c, "rasterize");
  const auto features = load_ingested_features(c);
  meta.add_input(c.output_dir / "ingest" / "features.geojson", c.output_dir);
  const auto tiles = load_tiles(c);
  const double pad = (std::max(c.raster.road_half_width_m, c.raster.building_buffer_m) + 1.0) * c.raster.crs_units_per_m;
  const auto per_tile = features_per_tile(features, tiles, pad);
  parallel_for(tiles.size(), jobs, [&](std::size_t t) {
    for (auto p : products) write_mask(rasterize(per_tile[t], tiles[t], p, c.raster), (c.output_dir / "masks" / to_string(p)).string());
  });
  std::string names;
  for (auto p : products) names += std::string(names.empty() ? "" : ",") + to_string(p);
  meta.parameters = {{"products", names}};
  write_run_metadata(c.output_dir, meta);
  return tiles.size();
}

inline std::size_t run_equalize(const PipelineConfig& c, EqualizeMode mode, const std::string& which, unsigned jobs) {
  require(which == "pre" || which == "post" || which == "both", "images must be pre, post or both");
  RunMetadata meta = start_run(c, "equalize");
  const auto tiles = load_tiles(c);
  struct Job {
    fs::path in, out;
  };
  std::vector<Job> work;
  const fs::path dir = c.output_dir / "enhanced";
  fs::create_directories(dir);
  for (const auto& t : tiles) {
    if (which != "post" && !t.pre_image_path.empty())
      work.push_back({c.dataset_root / t.pre_image_path, dir / (t.tile_id + ".pre.png")});
    if (which != "pre" && !t.post_image_path.empty())
      work.push_back({c.dataset_root / t.post_image_path, dir / (t.tile_id + ".post.png")});
  }
  for (const auto& w : work) meta.add_input(w.in, c.dataset_root);
  parallel_for(work.size(), jobs, [&](std::size_t i) {
    const RasterImage img = read_image(work[i].in.string());
    write_image(work[i].out.string(), mode == EqualizeMode::Global ? equalize(img) : equalize_clahe(img));
  });
  meta.parameters = {{"mode", mode == EqualizeMode::Global ? "global" : "clahe"}, {"images", which}};
  write_run_metadata(c.output_dir, meta);
  return work.size();
}

/// Scores every tile that has a prediction, writes scores.jsonl/csv and the
/// triage dataset.json that lets `serve` run on the output directory.
inline std::vector<ScoreRecord> run_score(const PipelineConfig& c, const fs::path& predictions_dir, unsigned jobs,
                                          const std::string& dataset_id = "floodeval") {
  RunMetadata meta = start_run(c, "score");
  const fs::path ref_dir = c.output_dir / "masks" / to_string(MaskProduct::Flood);
  require_stage_output(ref_dir, "rasterize");
  const auto tiles = load_tiles(c);
  const auto features = load_ingested_features(c);
  const auto per_tile = features_per_tile(features, tiles, 0.0);

  std::map<std::string, std::string> split_of;
  const fs::path split_path = c.output_dir / "ingest" / "split.json";
  if (fs::exists(split_path)) {
    const json s = read_json_file(split_path.string());
    for (const auto& id : s.at("train")) split_of[id.get<std::string>()] = "train";
    for (const auto& id : s.at("val")) split_of[id.get<std::string>()] = "val";
  }

  std::vector<std::optional<ScoreRecord>> slots(tiles.size());
  parallel_for(tiles.size(), jobs, [&](std::size_t i) {
    const Tile& t = tiles[i];
    const fs::path ref = mask_sidecar_path(ref_dir.string(), t.tile_id);
    require_stage_output(ref, "rasterize");
    const fs::path pred = mask_sidecar_path(predictions_dir.string(), t.tile_id);
    if (!fs::exists(pred)) return;
    const MaskRaster ref_mask = read_mask(ref.string());
    const MaskRaster pred_mask = read_mask(pred.string());
    const fs::path roads = predictions_dir / (t.tile_id + ".roads.geojson");
    if (fs::exists(roads)) {
      std::vector<VectorFeature> ref_roads;
      for (const auto& f : per_tile[i])
        if (f.feature_class == FeatureClass::Road && f.road_speed_mph) ref_roads.push_back(f);
      IngestConfig ic;
      ic.schema = c.schema;
      if (c.speed_table_path) ic.speeds = SpeedTable::from_json(read_json_file(c.speed_table_path->string()));
      std::vector<VectorFeature> prop_roads;
      for (const auto& f : ingest_annotations(roads.string(), ic).features)
        if (f.feature_class == FeatureClass::Road && f.road_speed_mph) prop_roads.push_back(f);
      GraphBuildOptions go;
      go.crs_units_per_m = c.raster.crs_units_per_m;
      const auto rg = graph_from_roads(ref_roads, false, go).graph;
      const auto pg = graph_from_roads(prop_roads, false, go).graph;
      AplsParams ap;
      ap.crs_units_per_m = c.raster.crs_units_per_m;
      slots[i] = score_tile(ref_mask, pred_mask, &rg, &pg, ap);
    } else {
      slots[i] = score_tile(ref_mask, pred_mask);
    }
  });

  std::vector<ScoreRecord> records;
  json dataset_tiles = json::array();
  const fs::path enhanced = c.output_dir / "enhanced";
  auto image_rel = [&](const Tile& t, const std::string& kind, const std::string& raw) -> std::string {
    const fs::path eq = enhanced / (t.tile_id + "." + kind + ".png");
    if (fs::exists(eq)) return fs::relative(eq, c.output_dir).generic_string();
    if (raw.empty()) return "";
    return fs::relative(c.dataset_root / raw, c.output_dir).generic_string();
  };
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const Tile& t = tiles[i];
    if (slots[i]) records.push_back(*slots[i]);
    const fs::path pred = mask_sidecar_path(predictions_dir.string(), t.tile_id);
    dataset_tiles.push_back(
        {{"tile_id", t.tile_id},
         {"split", split_of.count(t.tile_id) ? split_of[t.tile_id] : ""},
         {"pre_image", image_rel(t, "pre", t.pre_image_path)},
         {"post_image", image_rel(t, "post", t.post_image_path)},
         {"reference_mask", fs::relative(mask_sidecar_path(ref_dir.string(), t.tile_id), c.output_dir).generic_string()},
         {"prediction_mask",
          fs::exists(pred) ? json(fs::relative(pred, c.output_dir).generic_string()) : json(nullptr)}});
    meta.add_input(mask_sidecar_path(ref_dir.string(), t.tile_id), c.output_dir);
    if (fs::exists(pred)) meta.input_hashes["predictions/" + pred.filename().string()] = file_hash(pred.string());
  }
  write_text_file((c.output_dir / "scores.jsonl").string(), scores_to_jsonl(records));
  write_text_file((c.output_dir / "scores.csv").string(), scores_to_csv(records));
  write_text_file((c.output_dir / "dataset.json").string(),
                  json{{"dataset_id", dataset_id}, {"tiles", dataset_tiles}}.dump(2) + "\n");
  write_run_metadata(c.output_dir, meta);
  return records;
}

inline std::vector<ScoreRecord> load_scores(const fs::path& output_dir) {
  const fs::path p = output_dir / "scores.jsonl";
  require_stage_output(p, "score");
  return scores_from_jsonl(read_text_file(p.string()), p.string());
}

inline ClusterModel run_cluster(const PipelineConfig& c, int k, std::uint64_t seed,
                                const std::vector<std::string>& dims) {
  RunMetadata meta = start_run(c, "cluster");
  const auto records = load_scores(c.output_dir);
  meta.add_input(c.output_dir / "scores.jsonl", c.output_dir);
  ClusterModel model = cluster_scores(records, k, seed, dims);
  write_text_file((c.output_dir / "clusters.json").string(), to_json(model).dump(2) + "\n");
  std::string d;
  for (const auto& x : dims) d += (d.empty() ? "" : ",") + x;
  meta.parameters = {{"k", std::to_string(k)}, {"seed", std::to_string(seed)}, {"dims", d}};
  write_run_metadata(c.output_dir, meta);
  return model;
}

inline BadCaseSet run_badcases(const PipelineConfig& c, const std::vector<std::string>& dims) {
  RunMetadata meta = start_run(c, "badcases");
  const auto records = load_scores(c.output_dir);
  meta.add_input(c.output_dir / "scores.jsonl", c.output_dir);
  BadCaseSet set = select_bad_cases(records, dims);
  write_text_file((c.output_dir / "badcases.json").string(), to_json(set).dump(2) + "\n");
  std::string d;
  for (const auto& x : dims) d += (d.empty() ? "" : ",") + x;
  meta.parameters = {{"dims", d}};
  write_run_metadata(c.output_dir, meta);
  return set;
}

}  // namespace floodeval

#endif  // FLOODEVAL_PIPELINE_HPP
