#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lane/tensor.hpp"

namespace lane {

inline constexpr std::size_t kMapHeight = 88;
inline constexpr std::size_t kMapWidth = 160;

/// Integer lane map: 0 is background, k >= 1 is lane k.
struct LaneMask {
  std::size_t height = kMapHeight;
  std::size_t width = kMapWidth;
  std::vector<std::int32_t> grid;

  LaneMask() : grid(kMapHeight * kMapWidth, 0) {}
  LaneMask(std::size_t h, std::size_t w) : height(h), width(w), grid(h * w, 0) {}

  std::int32_t& at(std::size_t y, std::size_t x) { return grid[y * width + x]; }
  std::int32_t at(std::size_t y, std::size_t x) const {
    return grid[y * width + x];
  }
  int lane_count() const;
  std::size_t foreground_pixels() const;

  /// Lane ids 1..L all present and every lane's pixels in a row form a single
  /// run. Throws Error(Integrity) otherwise.
  void validate() const;

  TensorF32 to_tensor() const;  // (1, H, W), ids as floats
  static LaneMask from_tensor(const TensorF32& t);

  friend bool operator==(const LaneMask&, const LaneMask&) = default;
};

/// HAF is the x-component of the horizontal field (its y-component is
/// identically zero); VAF holds (x, y) in channels 0 and 1.
struct AffinityPair {
  TensorF32 haf;  // (1, H, W)
  TensorF32 vaf;  // (2, H, W)

  std::size_t height() const { return haf.dim(1); }
  std::size_t width() const { return haf.dim(2); }
  float haf_at(std::size_t y, std::size_t x) const {
    return haf[y * width() + x];
  }
  float vaf_x(std::size_t y, std::size_t x) const {
    return vaf[y * width() + x];
  }
  float vaf_y(std::size_t y, std::size_t x) const {
    return vaf[(height() + y) * width() + x];
  }

  static AffinityPair zeros(std::size_t h, std::size_t w);
  /// Accepts (1|2, H, W) or (1, 1|2, H, W) tensors.
  static AffinityPair from_tensors(const TensorF32& haf, const TensorF32& vaf);
};

/// Mean of the lane's x-coordinates in a row, rounded to the nearest half
/// pixel.
double lane_center(std::span<const int> xs);

/// Ground-truth fields for a mask, computed row by row from the bottom up.
/// HAF points each lane pixel toward its row center (0 on the center); VAF is
/// the unit vector from the pixel toward the lane center one row up, or
/// (0, -1) on a lane's top row.
AffinityPair encode_affinities(const LaneMask& mask);

struct DecodeConfig {
  double fg_threshold = 0.5;
  double assoc_threshold = 12.0;  // tau, pixels at map scale
  int min_cluster_size = 2;
  int min_lane_rows = 5;
  int max_row_gap = 2;  // empty rows a lane may skip before it ends

  void validate() const;
};

using Cluster = std::vector<int>;  // x-indices, ascending

/// Splits a row's foreground pixels (scanned left to right) into clusters: a
/// new cluster opens whenever the previous foreground pixel has haf <= 0 and
/// the current one haf > 0. Clusters smaller than `min_cluster_size` are
/// dropped.
std::vector<Cluster> cluster_row_haf(std::span<const float> haf_row,
                                     std::span<const std::uint8_t> fg_row,
                                     int min_cluster_size = 2);

double centroid(const Cluster& c);

/// A lane that can still take clusters: its pixels in the last row it
/// received.
struct ActiveLane {
  int id = 0;
  int row = 0;
  std::vector<int> xs;
};

/// Mean residual between the cluster centroid at (cx, cy) and each lane pixel
/// pushed along its predicted VAF by the pixel-to-centroid distance.
double association_error(const ActiveLane& lane, double cx, int cy,
                         const AffinityPair& af);

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (lane, cluster)
  std::vector<std::size_t> new_lanes;        // cluster indices
  std::vector<std::size_t> unmatched_lanes;  // lane indices
  std::vector<std::vector<double>> errors;   // [lane][cluster]
};

/// Greedy one-to-one matching of lanes to the clusters of row `y_above` in
/// ascending error order. Pairs above `tau` never match.
Assignment associate_clusters_vaf(std::span<const ActiveLane> lanes,
                                  std::span<const Cluster> clusters,
                                  const AffinityPair& af, int y_above,
                                  double tau);

struct Point2 {
  double x = 0;
  double y = 0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct DecodedLane {
  int id = 0;
  std::vector<Point2> points;  // one centroid per row, y strictly decreasing
};

struct DecodedLanes {
  std::size_t height = kMapHeight;
  std::size_t width = kMapWidth;
  std::vector<DecodedLane> lanes;
  std::vector<std::int32_t> cluster_map;
};

/// `seg_prob` may be (H, W), (1, H, W) or (1, 1, H, W).
DecodedLanes decode(const TensorF32& seg_prob, const AffinityPair& af,
                    const DecodeConfig& cfg = {});

}  // namespace lane
