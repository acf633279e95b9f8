// floodeval: command-line driver for the flood-mapping evaluation pipeline.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "floodeval/case_base.hpp"
#include "floodeval/error_analysis.hpp"
#include "floodeval/pipeline.hpp"
#include "floodeval/triage.hpp"
#include "floodeval/triage_http.hpp"

namespace fe = floodeval;
using json = fe::json;

namespace {

std::vector<fe::MaskProduct> parse_products(const std::string& s) {
  if (s == "all")
    return {fe::MaskProduct::BinaryRoad, fe::MaskProduct::BinaryBuilding, fe::MaskProduct::Flood,
            fe::MaskProduct::RoadSpeed};
  std::vector<fe::MaskProduct> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = s.find(',', pos);
    out.push_back(fe::mask_product_from_string(s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

fe::MetricRow load_row(const std::string& path) {
  if (!std::filesystem::exists(path)) throw fe::IoError(path, "metric table not found");
  return fe::metric_row_from_json(fe::read_json_file(path));
}

void write_or_print(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-")
    std::cout << text;
  else {
    const auto parent = std::filesystem::path(out).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    fe::write_text_file(out, text);
  }
}

/// Run metadata for commands that are not tied to a pipeline config.
void write_standalone_metadata(const std::string& dir, const std::string& command,
                               const std::vector<std::string>& inputs, std::map<std::string, std::string> params) {
  fe::RunMetadata m;
  m.command = command;
  m.config_hash = "";
  for (const auto& in : inputs)
    if (std::filesystem::exists(in)) m.input_hashes[std::filesystem::path(in).filename().string()] = fe::file_hash(in);
  m.parameters = std::move(params);
  fe::write_run_metadata(dir.empty() ? "." : dir, m);
}

std::string parent_or_dot(const std::string& path) {
  const auto p = std::filesystem::path(path).parent_path();
  return p.empty() ? "." : p.string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flood-mapping evaluation pipeline"};
  app.set_version_flag("--version", fe::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  unsigned jobs = fe::default_jobs();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Clean annotations, assign road speeds, summarize the AOI, split tiles");
  ingest->add_option("--config", config_path, "Pipeline config JSON")->required()->check(CLI::ExistingFile);

  // rasterize
  std::string products = "all";
  auto* rasterize = app.add_subcommand("rasterize", "Burn cleaned features into per-tile masks");
  rasterize->add_option("--config", config_path, "Pipeline config JSON")->required()->check(CLI::ExistingFile);
  rasterize->add_option("--products", products, "all or comma list of binary_road,binary_building,flood,road_speed");
  rasterize->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  // equalize
  std::string eq_mode, eq_images;
  auto* equalize_cmd = app.add_subcommand("equalize", "Histogram-equalize tile imagery");
  equalize_cmd->add_option("--config", config_path, "Pipeline config JSON")->required()->check(CLI::ExistingFile);
  equalize_cmd->add_option("--equalize,--mode", eq_mode, "global or clahe (default from config)")
      ->check(CLI::IsMember({"global", "clahe"}));
  equalize_cmd->add_option("--images", eq_images, "pre, post or both (default from config)")
      ->check(CLI::IsMember({"pre", "post", "both"}));
  equalize_cmd->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  // score
  std::string predictions, dataset_id = "floodeval";
  auto* score = app.add_subcommand("score", "Score predictions against reference flood masks");
  score->add_option("--config", config_path, "Pipeline config JSON")->required()->check(CLI::ExistingFile);
  score->add_option("--predictions", predictions, "Prediction mask directory (default from config)");
  score->add_option("--dataset-id", dataset_id, "Dataset id recorded for triage");
  score->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  // cluster
  int k = -1;
  std::int64_t seed = -1;
  std::vector<std::string> dims;
  auto* cluster = app.add_subcommand("cluster", "k-means over per-tile scores");
  cluster->add_option("--config", config_path, "Pipeline config JSON")->required()->check(CLI::ExistingFile);
  cluster->add_option("--k", k, "Number of clusters (default from config)")->check(CLI::PositiveNumber);
  cluster->add_option("--seed", seed, "Seed (default from config)")->check(CLI::NonNegativeNumber);
  cluster->add_option("--dims", dims, "Metric names to cluster on")->delimiter(',');

  // badcases
  auto* badcases = app.add_subcommand("badcases", "Select tiles below per-metric median / 25th percentile");
  badcases->add_option("--config", config_path, "Pipeline config JSON")->required()->check(CLI::ExistingFile);
  badcases->add_option("--dims", dims, "Metric names (default from config cluster dims)")->delimiter(',');

  // report
  std::string before_path, after_path, claims_path, report_format = "markdown", out_path;
  auto* report = app.add_subcommand("report", "Compare two metric tables");
  report->add_option("--before", before_path, "Metric table JSON")->required();
  report->add_option("--after", after_path, "Metric table JSON")->required();
  report->add_option("--claims", claims_path, "JSON map metric -> claimed relative improvement (%)");
  report->add_option("--format", report_format, "markdown or csv")->check(CLI::IsMember({"markdown", "csv"}));
  report->add_option("--out", out_path, "Output file (default stdout)");

  // case retain / retrieve
  std::string journal, record_path, probe_path;
  std::size_t top_k = 5;
  auto* case_cmd = app.add_subcommand("case", "Case base operations");
  case_cmd->require_subcommand(1);
  auto* retain = case_cmd->add_subcommand("retain", "Append a solved case");
  retain->add_option("--journal", journal, "Case journal (NDJSON)")->required();
  retain->add_option("--record", record_path, "Case record JSON")->required()->check(CLI::ExistingFile);
  auto* retrieve = case_cmd->add_subcommand("retrieve", "Find the most similar cases");
  retrieve->add_option("--journal", journal, "Case journal (NDJSON)")->required();
  retrieve->add_option("--probe", probe_path, "Descriptor JSON")->required()->check(CLI::ExistingFile);
  retrieve->add_option("--k", top_k, "Number of cases")->check(CLI::PositiveNumber);

  // serve
  std::string data_dir, host = "127.0.0.1", ui_dir;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the triage HTTP service");
  serve->add_option("--data-dir", data_dir, "Triage data directory")->required()->check(CLI::ExistingDirectory);
  serve->add_option("--port", port, "TCP port")->check(CLI::Range(1, 65535));
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--ui-dir", ui_dir, "Static UI directory to mount at /")->check(CLI::ExistingDirectory);

  // export-manifest
  auto* export_manifest = app.add_subcommand("export-manifest", "Write the triage manifest");
  export_manifest->add_option("--data-dir", data_dir, "Triage data directory")->required()->check(CLI::ExistingDirectory);
  export_manifest->add_option("--out", out_path, "Output file (default stdout)");

  // split
  std::string ids_path;
  double ratio = 0.85;
  auto* split = app.add_subcommand("split", "Seeded train/val split of a tile id list");
  split->add_option("--ids", ids_path, "JSON array of tile ids")->required()->check(CLI::ExistingFile);
  split->add_option("--ratio", ratio, "Training fraction");
  split->add_option("--seed", seed, "Seed")->check(CLI::NonNegativeNumber);
  split->add_option("--out", out_path, "Output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const auto cfg = fe::load_pipeline_config(config_path);
      const auto r = fe::run_ingest(cfg);
      std::cerr << "ingest: " << r.ingest.features.size() << " features, " << r.ingest.dropped_invalid
                << " invalid dropped, " << r.ingest.dropped_unknown_class << " unknown class dropped; split "
                << r.split.train.size() << "/" << r.split.val.size() << "\n";
      for (const auto& w : r.ingest.warnings) std::cerr << "warning: " << w << "\n";
    } else if (*rasterize) {
      const auto cfg = fe::load_pipeline_config(config_path);
      const auto n = fe::run_rasterize(cfg, parse_products(products), jobs);
      std::cerr << "rasterize: " << n << " tiles\n";
    } else if (*equalize_cmd) {
      const auto cfg = fe::load_pipeline_config(config_path);
      const auto mode = eq_mode.empty() ? cfg.equalize_mode : fe::equalize_mode_from_string(eq_mode);
      const auto n = fe::run_equalize(cfg, mode, eq_images.empty() ? cfg.equalize_images : eq_images, jobs);
      std::cerr << "equalize: " << n << " images\n";
    } else if (*score) {
      const auto cfg = fe::load_pipeline_config(config_path);
      const auto recs = fe::run_score(cfg, predictions.empty() ? cfg.predictions_dir : std::filesystem::path(predictions),
                                      jobs, dataset_id);
      std::cerr << "score: " << recs.size() << " tiles scored\n";
    } else if (*cluster) {
      const auto cfg = fe::load_pipeline_config(config_path);
      const auto model = fe::run_cluster(cfg, k > 0 ? k : cfg.cluster_k,
                                         seed >= 0 ? static_cast<std::uint64_t>(seed) : cfg.cluster_seed,
                                         dims.empty() ? cfg.cluster_dims : dims);
      std::cerr << "cluster: k=" << model.k << " inertia=" << model.inertia << "\n";
      for (const auto& w : model.warnings) std::cerr << "warning: " << w << "\n";
    } else if (*badcases) {
      const auto cfg = fe::load_pipeline_config(config_path);
      const auto set = fe::run_badcases(cfg, dims.empty() ? cfg.cluster_dims : dims);
      std::cerr << "badcases: criterion1 " << set.criterion1.size() << ", criterion2 " << set.criterion2.size() << "\n";
    } else if (*report) {
      const auto before = load_row(before_path);
      const auto after = load_row(after_path);
      std::map<std::string, double> claims;
      if (!claims_path.empty()) claims = fe::read_json_file(claims_path).get<std::map<std::string, double>>();
      const auto rep = fe::improvement_report(before, after, claims);
      write_or_print(out_path, report_format == "csv" ? fe::render_csv(rep) : fe::render_markdown(rep));
      std::vector<std::string> inputs{before_path, after_path};
      if (!claims_path.empty()) inputs.push_back(claims_path);
      write_standalone_metadata(out_path.empty() || out_path == "-" ? "." : parent_or_dot(out_path), "report", inputs,
                                {{"format", report_format}});
    } else if (*retain) {
      fe::CaseBase base(journal);
      base.retain(fe::case_record_from_json(fe::read_json_file(record_path)));
      std::cerr << "case retain: " << base.size() << " cases\n";
      write_standalone_metadata(parent_or_dot(journal), "case-retain", {record_path, journal}, {});
    } else if (*retrieve) {
      if (!std::filesystem::exists(journal)) throw fe::MissingStageOutput(journal, "floodeval case retain");
      const fe::CaseBase base(journal);
      const auto probe = fe::case_descriptor_from_json(fe::read_json_file(probe_path));
      json out = json::array();
      for (const auto& r : base.retrieve_similar(probe, top_k))
        out.push_back({{"case_id", r.record.case_id}, {"distance", r.distance}, {"record", fe::to_json(r.record)}});
      std::cout << out.dump(2) << "\n";
      write_standalone_metadata(parent_or_dot(journal), "case-retrieve", {probe_path, journal},
                                {{"k", std::to_string(top_k)}});
    } else if (*serve) {
      auto service = fe::TriageService::open(data_dir);
      write_standalone_metadata(data_dir, "serve", {(std::filesystem::path(data_dir) / "dataset.json").string()},
                                {{"port", std::to_string(port)}});
      std::cerr << "serving " << service.dataset().tiles.size() << " tiles on http://" << host << ":" << port << "\n";
      if (!fe::serve_triage(service, host, port, ui_dir)) {
        std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
        return 1;
      }
    } else if (*export_manifest) {
      const auto service = fe::TriageService::open(data_dir);
      write_or_print(out_path, fe::manifest_text(service.manifest()));
      write_standalone_metadata(data_dir, "export-manifest",
                                {(std::filesystem::path(data_dir) / "dataset.json").string(),
                                 (std::filesystem::path(data_dir) / "verdicts.ndjson").string()},
                                {});
    } else if (*split) {
      const auto ids = fe::read_json_file(ids_path).get<std::vector<std::string>>();
      const auto s = fe::split_dataset(ids, ratio, seed >= 0 ? static_cast<std::uint64_t>(seed) : 42);
      write_or_print(out_path, json{{"train", s.train}, {"val", s.val}}.dump(2) + "\n");
      write_standalone_metadata(out_path.empty() || out_path == "-" ? "." : parent_or_dot(out_path), "split", {ids_path},
                                {{"ratio", std::to_string(ratio)}, {"seed", std::to_string(seed >= 0 ? seed : 42)}});
    }
  } catch (const fe::MissingStageOutput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const fe::ContractViolation& e) {
    std::cerr << "error: invalid input: " << e.what() << "\n";
    return 2;
  } catch (const fe::ParseError& e) {
    std::cerr << "error: parse error at byte " << e.byte_offset() << ": " << e.what() << "\n";
    return 4;
  } catch (const fe::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
