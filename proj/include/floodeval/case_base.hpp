#ifndef FLOODEVAL_CASE_BASE_HPP
#define FLOODEVAL_CASE_BASE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "floodeval/error.hpp"
#include "floodeval/geo_core.hpp"
#include "floodeval/journal.hpp"

namespace floodeval {

inline constexpr int kCaseSchemaVersion = 1;
inline constexpr std::size_t kCaseDescriptorDims = 4;

/// Problem description of a case. The numeric part is what retrieval
/// compares; the terrain tag is carried along for the analyst.
struct CaseDescriptor {
  double building_density_per_km2 = 0.0;
  double road_density_km_per_km2 = 0.0;
  double building_inundation_ratio = 0.0;
  double road_inundation_ratio = 0.0;
  std::string terrain_tag;

  std::array<double, kCaseDescriptorDims> values() const {
    return {building_density_per_km2, road_density_km_per_km2, building_inundation_ratio, road_inundation_ratio};
  }
  friend bool operator==(const CaseDescriptor&, const CaseDescriptor&) = default;
};

struct CaseRecord {
  std::string case_id;
  CaseDescriptor descriptor;
  json solution = json::object();
  json result = json::object();
  std::string created_at;

  friend bool operator==(const CaseRecord& a, const CaseRecord& b) {
    return a.case_id == b.case_id && a.descriptor == b.descriptor && a.solution == b.solution &&
           a.result == b.result && a.created_at == b.created_at;
  }
};

inline json to_json(const CaseDescriptor& d) {
  return {{"building_density_per_km2", d.building_density_per_km2},
          {"road_density_km_per_km2", d.road_density_km_per_km2},
          {"building_inundation_ratio", d.building_inundation_ratio},
          {"road_inundation_ratio", d.road_inundation_ratio},
          {"terrain_tag", d.terrain_tag}};
}

inline CaseDescriptor case_descriptor_from_json(const json& j) {
  CaseDescriptor d;
  d.building_density_per_km2 = j.at("building_density_per_km2").get<double>();
  d.road_density_km_per_km2 = j.at("road_density_km_per_km2").get<double>();
  d.building_inundation_ratio = j.at("building_inundation_ratio").get<double>();
  d.road_inundation_ratio = j.at("road_inundation_ratio").get<double>();
  d.terrain_tag = j.value("terrain_tag", "");
  for (double v : d.values()) require(std::isfinite(v), "case descriptor values must be finite");
  return d;
}

inline json to_json(const CaseRecord& r) {
  return {{"schema_version", kCaseSchemaVersion}, {"case_id", r.case_id},   {"descriptor", to_json(r.descriptor)},
          {"solution", r.solution},               {"result", r.result},     {"created_at", r.created_at}};
}

inline CaseRecord case_record_from_json(const json& j) {
  const int version = j.value("schema_version", 0);
  if (version != kCaseSchemaVersion)
    throw ParseError("case record has schema_version " + std::to_string(version) + ", expected " +
                         std::to_string(kCaseSchemaVersion),
                     0);
  CaseRecord r;
  r.case_id = j.at("case_id").get<std::string>();
  r.descriptor = case_descriptor_from_json(j.at("descriptor"));
  r.solution = j.value("solution", json::object());
  r.result = j.value("result", json::object());
  r.created_at = j.value("created_at", "");
  return r;
}

struct RetrievedCase {
  CaseRecord record;
  double distance = 0.0;
};

/// Per-dimension mean and population standard deviation; a zero deviation
/// is replaced by 1 so that constant dimensions contribute nothing.
struct ZScore {
  std::array<double, kCaseDescriptorDims> mean{};
  std::array<double, kCaseDescriptorDims> scale{};

  static ZScore fit(const std::vector<CaseRecord>& records) {
    ZScore z;
    z.scale.fill(1.0);
    if (records.empty()) return z;
    const auto n = static_cast<double>(records.size());
    for (const auto& r : records) {
      const auto v = r.descriptor.values();
      for (std::size_t d = 0; d < kCaseDescriptorDims; ++d) z.mean[d] += v[d] / n;
    }
    for (std::size_t d = 0; d < kCaseDescriptorDims; ++d) {
      double ss = 0.0;
      for (const auto& r : records) {
        const double dv = r.descriptor.values()[d] - z.mean[d];
        ss += dv * dv;
      }
      const double sd = std::sqrt(ss / n);
      z.scale[d] = sd > 0.0 ? sd : 1.0;
    }
    return z;
  }

  double distance(const CaseDescriptor& a, const CaseDescriptor& b) const {
    const auto va = a.values(), vb = b.values();
    double s = 0.0;
    for (std::size_t d = 0; d < kCaseDescriptorDims; ++d) {
      const double diff = (va[d] - vb[d]) / scale[d];
      s += diff * diff;
    }
    return std::sqrt(s);
  }
};

/// Append-only store of solved cases backed by an NDJSON journal. An empty
/// journal path keeps the base in memory only. One writer at a time; readers
/// share the lock and see the records present when they acquired it.
class CaseBase {
 public:
  CaseBase() = default;

  /// Opens (or creates on first retain) the journal at `path` and replays it.
  explicit CaseBase(std::string path) : path_(std::move(path)) {
    if (path_.empty() || !std::filesystem::exists(path_)) return;
    const std::string text = read_text_file(path_);
    for (const auto& j : read_ndjson(text, path_)) {
      CaseRecord r;
      try {
        r = case_record_from_json(j);
      } catch (const json::exception& e) {
        throw ParseError(path_ + ": bad case record: " + e.what(), 0);
      }
      if (!ids_.insert(r.case_id).second) throw ParseError(path_ + ": duplicate case_id '" + r.case_id + "'", 0);
      records_.push_back(std::move(r));
    }
  }

  const std::string& path() const { return path_; }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return records_.size();
  }

  std::vector<CaseRecord> records() const {
    std::shared_lock lock(mutex_);
    return records_;
  }

  std::optional<CaseRecord> find(const std::string& case_id) const {
    std::shared_lock lock(mutex_);
    for (const auto& r : records_)
      if (r.case_id == case_id) return r;
    return std::nullopt;
  }

  /// Persists the record before it becomes visible. On any failure the base
  /// is left unchanged.
  void retain(const CaseRecord& record) {
    require(!record.case_id.empty(), "case_id must not be empty");
    for (double v : record.descriptor.values()) require(std::isfinite(v), "case descriptor values must be finite");
    std::unique_lock lock(mutex_);
    require(!ids_.count(record.case_id), "case_id '" + record.case_id + "' already exists in the case base");
    if (!path_.empty()) append_line_durably(path_, to_json(record).dump());
    ids_.insert(record.case_id);
    records_.push_back(record);
  }

  /// The k nearest cases by Euclidean distance on z-scored descriptors,
  /// with ties broken by case_id.
  std::vector<RetrievedCase> retrieve_similar(const CaseDescriptor& probe, std::size_t k) const {
    require(k > 0, "k must be positive");
    for (double v : probe.values()) require(std::isfinite(v), "probe descriptor values must be finite");
    std::shared_lock lock(mutex_);
    const ZScore z = ZScore::fit(records_);
    std::vector<RetrievedCase> all;
    all.reserve(records_.size());
    for (const auto& r : records_) all.push_back({r, z.distance(probe, r.descriptor)});
    std::sort(all.begin(), all.end(), [](const RetrievedCase& a, const RetrievedCase& b) {
      if (a.distance != b.distance) return a.distance < b.distance;
      return a.record.case_id < b.record.case_id;
    });
    if (all.size() > k) all.resize(k);
    return all;
  }

 private:
  std::string path_;
  mutable std::shared_mutex mutex_;
  std::vector<CaseRecord> records_;
  std::set<std::string> ids_;
};

}  // namespace floodeval

#endif  // FLOODEVAL_CASE_BASE_HPP
