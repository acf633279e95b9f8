#ifndef FLOODEVAL_METRICS_HPP
#define FLOODEVAL_METRICS_HPP

// Pixel-level scoring of prediction masks against reference masks.
//
// Zero-denominator convention: when both masks are empty every ratio is 1
// (nothing to find, nothing found); when exactly one is empty the ratios
// are 0. F1 is 0 whenever precision + recall is 0.

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "floodeval/error.hpp"
#include "floodeval/mask_builder.hpp"

namespace floodeval {

struct PixelConfusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;
  std::uint64_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const PixelConfusion&, const PixelConfusion&) = default;
};

struct PixelMetrics {
  PixelConfusion confusion;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double iou = 0.0;
};

/// Ratios from raw counts under the zero-denominator convention above.
inline PixelMetrics metrics_from_confusion(const PixelConfusion& c) {
  PixelMetrics m;
  m.confusion = c;
  const bool ref_empty = c.tp + c.fn == 0;
  const bool pred_empty = c.tp + c.fp == 0;
  if (ref_empty && pred_empty) {
    m.precision = m.recall = m.f1 = m.iou = 1.0;
    return m;
  }
  const auto tp = static_cast<double>(c.tp);
  m.precision = pred_empty ? 0.0 : tp / static_cast<double>(c.tp + c.fp);
  m.recall = ref_empty ? 0.0 : tp / static_cast<double>(c.tp + c.fn);
  m.iou = tp / static_cast<double>(c.tp + c.fp + c.fn);
  m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

/// Compares two single-channel masks; any non-zero value is foreground.
inline PixelMetrics pixel_metrics(std::span<const std::uint8_t> reference, std::span<const std::uint8_t> prediction) {
  require(reference.size() == prediction.size(), "pixel_metrics: mask shapes differ (" +
                                                     std::to_string(reference.size()) + " vs " +
                                                     std::to_string(prediction.size()) + " pixels)");
  PixelConfusion c;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const bool r = reference[i] != 0, p = prediction[i] != 0;
    if (r && p)
      ++c.tp;
    else if (p)
      ++c.fp;
    else if (r)
      ++c.fn;
    else
      ++c.tn;
  }
  return metrics_from_confusion(c);
}

inline PixelMetrics pixel_metrics(const MaskRaster& reference, int ref_channel, const MaskRaster& prediction,
                                  int pred_channel) {
  require(reference.width_px == prediction.width_px && reference.height_px == prediction.height_px,
          "pixel_metrics: mask dimensions differ");
  return pixel_metrics(reference.channel(ref_channel), prediction.channel(pred_channel));
}

// ---------------------------------------------------------------------------
// Building status

enum class BuildingStatus : int { NoBuilding = 0, FloodedBuilding = 1, NonFloodedBuilding = 2 };

inline const char* to_string(BuildingStatus s) {
  switch (s) {
    case BuildingStatus::NoBuilding: return "NoBuilding";
    case BuildingStatus::FloodedBuilding: return "FloodedBuilding";
    case BuildingStatus::NonFloodedBuilding: return "NonFloodedBuilding";
  }
  return "?";
}

/// Rows are reference status, columns predicted status. Diagonal cells hold
/// the per-class IoU; off-diagonal cells hold the fraction of the reference
/// row's pixels predicted as the column's class (0 for an empty row).
struct BuildingStatusMatrix {
  std::array<std::array<double, 3>, 3> cells{};
  std::array<std::array<std::uint64_t, 3>, 3> counts{};
  double overall_score = 0.0;  // mean of the diagonal
};

inline BuildingStatus building_status_at(const MaskRaster& flood, std::size_t i) {
  const std::size_t n = flood.plane_size();
  if (flood.data[kFloodedBuilding * n + i]) return BuildingStatus::FloodedBuilding;
  if (flood.data[kNonFloodedBuilding * n + i]) return BuildingStatus::NonFloodedBuilding;
  return BuildingStatus::NoBuilding;
}

inline void require_flood_mask(const MaskRaster& m, const char* role) {
  require(m.product == to_string(MaskProduct::Flood) && m.channels == 4,
          std::string(role) + " mask '" + m.tile_id + "' is not a 4-channel flood mask");
}

inline BuildingStatusMatrix building_status_matrix(const MaskRaster& reference, const MaskRaster& prediction) {
  require_flood_mask(reference, "reference");
  require_flood_mask(prediction, "prediction");
  require(reference.tile_id == prediction.tile_id, "building_status_matrix: masks belong to different tiles");
  require(reference.width_px == prediction.width_px && reference.height_px == prediction.height_px,
          "building_status_matrix: mask dimensions differ");
  BuildingStatusMatrix m;
  const std::size_t n = reference.plane_size();
  for (std::size_t i = 0; i < n; ++i)
    ++m.counts[static_cast<int>(building_status_at(reference, i))][static_cast<int>(building_status_at(prediction, i))];

  std::array<std::uint64_t, 3> row_sum{}, col_sum{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      row_sum[r] += m.counts[r][c];
      col_sum[c] += m.counts[r][c];
    }
  double diag = 0.0;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      if (r == c) {
        const std::uint64_t uni = row_sum[r] + col_sum[r] - m.counts[r][r];
        m.cells[r][c] = uni == 0 ? 1.0 : static_cast<double>(m.counts[r][r]) / static_cast<double>(uni);
      } else {
        m.cells[r][c] = row_sum[r] == 0 ? 0.0 : static_cast<double>(m.counts[r][c]) / static_cast<double>(row_sum[r]);
      }
    }
    diag += m.cells[r][r];
  }
  m.overall_score = diag / 3.0;
  return m;
}

/// Per-pixel indicator plane for one building status.
inline std::vector<std::uint8_t> status_plane(const MaskRaster& flood, BuildingStatus s) {
  require_flood_mask(flood, "input");
  std::vector<std::uint8_t> out(flood.plane_size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = building_status_at(flood, i) == s ? 255 : 0;
  return out;
}

/// Union of two channels of a flood mask as a binary plane.
inline std::vector<std::uint8_t> union_plane(const MaskRaster& flood, int a, int b) {
  std::vector<std::uint8_t> out(flood.plane_size());
  auto ca = flood.channel(a);
  auto cb = flood.channel(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (ca[i] || cb[i]) ? 255 : 0;
  return out;
}

}  // namespace floodeval

#endif  // FLOODEVAL_METRICS_HPP
