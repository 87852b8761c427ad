#pragma once

#include <cstdint>
#include <span>

#include "lane/dataset.hpp"

namespace lane {

struct EvalConfig {
  double px_threshold = 20.0;          // pixels at 1280x720
  double lane_match_threshold = 0.85;  // per-lane vertex accuracy

  void validate() const;
};

struct EvalCounts {
  std::int64_t correct = 0;      // correctly placed vertices
  std::int64_t gt_vertices = 0;  // present GT vertices
  std::int64_t false_lanes = 0;
  std::int64_t pred_lanes = 0;
  std::int64_t missed_lanes = 0;
  std::int64_t gt_lanes = 0;

  friend bool operator==(const EvalCounts&, const EvalCounts&) = default;
};

struct EvalResult {
  double accuracy = 1.0;  // correct / gt_vertices
  double fp_rate = 0.0;   // false_lanes / pred_lanes
  double fn_rate = 0.0;   // missed_lanes / gt_lanes
  double f1 = 0.0;
  bool f1_defined = false;
  EvalCounts counts;
};

/// Recomputes the ratios from pooled counts. Empty denominators give
/// accuracy 1 and rates 0.
EvalResult finalize(const EvalCounts& counts);

/// Vertices of `pred_lane` within px_threshold of `gt_lane` at the same
/// sample.
int correct_vertices(std::span<const double> pred_lane,
                     std::span<const double> gt_lane, double px_threshold);

/// Scores one frame. Predicted lanes are matched one-to-one to GT lanes,
/// greedily by descending per-lane accuracy; a match below
/// lane_match_threshold counts as a false prediction and a missed GT lane.
EvalResult evaluate_frame(const LaneAnnotation& pred, const LaneAnnotation& gt,
                          const EvalConfig& cfg = {});

/// Dataset-level result from summed counts. Throws on an empty list.
EvalResult aggregate(std::span<const EvalResult> results);

/// F1 with precision = acc / (acc + fp) and recall = acc / (acc + fn), i.e.
/// the accuracy ratio stands in for true positives. Throws when either
/// denominator is zero.
double f1_paper(double accuracy, double fp_rate, double fn_rate);

}  // namespace lane
