#include "lane/tusimple_eval.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <vector>

#include "lane/error.hpp"

namespace lane {

void EvalConfig::validate() const {
  if (!(px_threshold > 0) || !(lane_match_threshold > 0))
    throw Error(ErrorKind::InvalidArgument,
                "px_threshold and lane_match_threshold must be positive");
}

EvalResult finalize(const EvalCounts& c) {
  EvalResult r;
  r.counts = c;
  r.accuracy = c.gt_vertices ? double(c.correct) / double(c.gt_vertices) : 1.0;
  r.fp_rate = c.pred_lanes ? double(c.false_lanes) / double(c.pred_lanes) : 0.0;
  r.fn_rate = c.gt_lanes ? double(c.missed_lanes) / double(c.gt_lanes) : 0.0;
  if (r.accuracy + r.fp_rate > 0 && r.accuracy + r.fn_rate > 0) {
    r.f1 = f1_paper(r.accuracy, r.fp_rate, r.fn_rate);
    r.f1_defined = true;
  }
  return r;
}

int correct_vertices(std::span<const double> pred_lane,
                     std::span<const double> gt_lane, double px_threshold) {
  int n = 0;
  for (std::size_t i = 0; i < gt_lane.size() && i < pred_lane.size(); ++i)
    if (gt_lane[i] != kAbsent && pred_lane[i] != kAbsent &&
        std::abs(pred_lane[i] - gt_lane[i]) <= px_threshold)
      ++n;
  return n;
}

EvalResult evaluate_frame(const LaneAnnotation& pred, const LaneAnnotation& gt,
                          const EvalConfig& cfg) {
  cfg.validate();
  if (pred.h_samples != gt.h_samples)
    throw Error(ErrorKind::InvalidArgument,
                "evaluate_frame: h_samples differ for " + gt.raw_file);
  pred.validate();
  gt.validate();

  std::vector<std::size_t> P, G;
  std::vector<int> gt_present;
  for (std::size_t i = 0; i < pred.lanes.size(); ++i)
    if (pred.present_vertices(i) > 0) P.push_back(i);
  for (std::size_t j = 0; j < gt.lanes.size(); ++j)
    if (int n = gt.present_vertices(j); n > 0) {
      G.push_back(j);
      gt_present.push_back(n);
    }

  EvalCounts c;
  c.pred_lanes = static_cast<std::int64_t>(P.size());
  c.gt_lanes = static_cast<std::int64_t>(G.size());
  for (int n : gt_present) c.gt_vertices += n;

  // (accuracy, correct, pred index, gt index); sorted best first, ties by
  // lane order so results do not depend on container order beyond that.
  std::vector<std::tuple<double, int, std::size_t, std::size_t>> pairs;
  for (std::size_t p = 0; p < P.size(); ++p)
    for (std::size_t g = 0; g < G.size(); ++g) {
      const int k = correct_vertices(pred.lanes[P[p]], gt.lanes[G[g]],
                                     cfg.px_threshold);
      if (k > 0) pairs.emplace_back(double(k) / gt_present[g], k, p, g);
    }
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) > std::get<1>(b);
    return std::tie(std::get<2>(a), std::get<3>(a)) <
           std::tie(std::get<2>(b), std::get<3>(b));
  });

  std::vector<bool> p_used(P.size(), false), g_used(G.size(), false);
  std::int64_t good = 0;
  for (const auto& [acc, k, p, g] : pairs) {
    if (p_used[p] || g_used[g]) continue;
    p_used[p] = g_used[g] = true;
    c.correct += k;
    if (acc >= cfg.lane_match_threshold) ++good;
  }
  c.false_lanes = c.pred_lanes - good;
  c.missed_lanes = c.gt_lanes - good;
  return finalize(c);
}

EvalResult aggregate(std::span<const EvalResult> results) {
  if (results.empty())
    throw Error(ErrorKind::InvalidArgument, "aggregate: no results");
  EvalCounts sum;
  for (const auto& r : results) {
    sum.correct += r.counts.correct;
    sum.gt_vertices += r.counts.gt_vertices;
    sum.false_lanes += r.counts.false_lanes;
    sum.pred_lanes += r.counts.pred_lanes;
    sum.missed_lanes += r.counts.missed_lanes;
    sum.gt_lanes += r.counts.gt_lanes;
  }
  return finalize(sum);
}

double f1_paper(double accuracy, double fp_rate, double fn_rate) {
  for (double v : {accuracy, fp_rate, fn_rate})
    if (!(v >= 0.0 && v <= 1.0))
      throw Error(ErrorKind::InvalidArgument,
                  "f1_paper: inputs must lie in [0, 1]");
  if (accuracy + fp_rate == 0.0 || accuracy + fn_rate == 0.0)
    throw Error(ErrorKind::InvalidArgument,
                "f1_paper: precision or recall undefined");
  const double precision = accuracy / (accuracy + fp_rate);
  const double recall = accuracy / (accuracy + fn_rate);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace lane
