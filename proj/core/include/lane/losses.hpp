#pragma once

#include <optional>
#include <vector>

#include "lane/affinity.hpp"
#include "lane/tensor.hpp"

namespace lane {

struct LossBreakdown {
  double wbce = 0;
  double iou = 0;
  double af = 0;
  double total = 0;  // wbce + iou + af
};

/// N_background / N_foreground of a binary target; 1 when either class is
/// absent.
double default_foreground_weight(const TensorF32& target);

/// Weighted binary cross-entropy on raw logits:
///   -(1/N) sum [w t log(o) + (1 - t) log(1 - o)],  o = sigmoid(logit)
/// evaluated through softplus so saturated logits stay finite. `w` defaults
/// to default_foreground_weight(target).
double wbce_loss(const TensorF32& logits, const TensorF32& target,
                 std::optional<double> w = std::nullopt);

/// Soft IoU: 1 - sum(p t) / sum(p + t - p t). An empty union scores 0.
double iou_loss(const TensorF32& probs, const TensorF32& target);

/// Mean L1 field error over foreground pixels:
///   (1/N_fg) sum_fg |t_haf - o_haf| + |t_vx - o_vx| + |t_vy - o_vy|
/// Zero when there is no foreground.
double af_loss(const TensorF32& pred_haf, const TensorF32& pred_vaf,
               const AffinityPair& gt, const TensorF32& fg);

/// Segmentation losses run on `seg_logits`; the IoU term sees its sigmoid.
/// `target` doubles as the foreground mask of the field loss.
LossBreakdown total_loss(const TensorF32& seg_logits, const TensorF32& target,
                         const TensorF32& pred_haf, const TensorF32& pred_vaf,
                         const AffinityPair& gt,
                         std::optional<double> w = std::nullopt);

// Analytic per-element gradients, same layout as the differentiated input.
std::vector<double> wbce_grad(const TensorF32& logits, const TensorF32& target,
                              double w);
std::vector<double> iou_grad(const TensorF32& probs, const TensorF32& target);
/// Gradient w.r.t. pred_haf followed by pred_vaf (sub-gradient 0 at ties).
std::vector<double> af_grad(const TensorF32& pred_haf,
                            const TensorF32& pred_vaf, const AffinityPair& gt,
                            const TensorF32& fg);

}  // namespace lane
