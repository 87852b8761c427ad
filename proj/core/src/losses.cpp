#include "lane/losses.hpp"

#include <cmath>

#include "lane/error.hpp"
#include "lane/kernels.hpp"

namespace lane {

namespace {

double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void require_binary(const TensorF32& t, const char* what) {
  for (float v : t.data())
    if (v != 0.0f && v != 1.0f)
      throw Error(ErrorKind::InvalidArgument,
                  std::string(what) + ": target must be binary");
}

void require_same_count(const TensorF32& a, const TensorF32& b,
                        const char* what) {
  if (a.size() != b.size())
    throw Error(ErrorKind::ShapeMismatch, std::string(what) + ": " +
                                              to_string(a.dims()) + " vs " +
                                              to_string(b.dims()));
}

void check_af_args(const TensorF32& pred_haf, const TensorF32& pred_vaf,
                   const AffinityPair& gt, const TensorF32& fg) {
  require_same_count(pred_haf, gt.haf, "af_loss haf");
  require_same_count(pred_vaf, gt.vaf, "af_loss vaf");
  require_same_count(fg, gt.haf, "af_loss foreground");
}

}  // namespace

double default_foreground_weight(const TensorF32& target) {
  double fg = 0;
  for (float v : target.data()) fg += v > 0.5f;
  const double bg = static_cast<double>(target.size()) - fg;
  if (fg == 0 || bg == 0) return 1.0;
  return bg / fg;
}

double wbce_loss(const TensorF32& logits, const TensorF32& target,
                 std::optional<double> w) {
  require_same_count(logits, target, "wbce_loss");
  require_binary(target, "wbce_loss");
  const double weight = w ? *w : default_foreground_weight(target);
  if (!(weight > 0))
    throw Error(ErrorKind::InvalidArgument, "wbce_loss: weight must be > 0");
  double sum = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i];
    // log(o) = -softplus(-z), log(1 - o) = -softplus(z)
    sum += target[i] > 0.5f ? weight * softplus(-z) : softplus(z);
  }
  return sum / static_cast<double>(logits.size());
}

double iou_loss(const TensorF32& probs, const TensorF32& target) {
  require_same_count(probs, target, "iou_loss");
  double inter = 0, uni = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i], t = target[i];
    if (!(p >= 0.0 && p <= 1.0))
      throw Error(ErrorKind::InvalidArgument,
                  "iou_loss: probabilities must lie in [0, 1]");
    inter += p * t;
    uni += p + t - p * t;
  }
  if (uni == 0) return 0.0;
  return 1.0 - inter / uni;
}

double af_loss(const TensorF32& pred_haf, const TensorF32& pred_vaf,
               const AffinityPair& gt, const TensorF32& fg) {
  check_af_args(pred_haf, pred_vaf, gt, fg);
  const std::size_t hw = gt.haf.size();
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < hw; ++i) {
    if (!(fg[i] > 0.5f)) continue;
    ++n;
    sum += std::abs(static_cast<double>(gt.haf[i]) - pred_haf[i]);
    sum += std::abs(static_cast<double>(gt.vaf[i]) - pred_vaf[i]);
    sum += std::abs(static_cast<double>(gt.vaf[hw + i]) - pred_vaf[hw + i]);
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

LossBreakdown total_loss(const TensorF32& seg_logits, const TensorF32& target,
                         const TensorF32& pred_haf, const TensorF32& pred_vaf,
                         const AffinityPair& gt, std::optional<double> w) {
  LossBreakdown b;
  b.wbce = wbce_loss(seg_logits, target, w);
  b.iou = iou_loss(sigmoid(seg_logits), target);
  b.af = af_loss(pred_haf, pred_vaf, gt, target);
  b.total = b.wbce + b.iou + b.af;
  return b;
}

std::vector<double> wbce_grad(const TensorF32& logits, const TensorF32& target,
                              double w) {
  require_same_count(logits, target, "wbce_grad");
  const double n = static_cast<double>(logits.size());
  std::vector<double> g(logits.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double o = logistic(logits[i]);
    g[i] = (target[i] > 0.5f ? -w * (1.0 - o) : o) / n;
  }
  return g;
}

std::vector<double> iou_grad(const TensorF32& probs, const TensorF32& target) {
  require_same_count(probs, target, "iou_grad");
  double inter = 0, uni = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    inter += double(probs[i]) * target[i];
    uni += double(probs[i]) + target[i] - double(probs[i]) * target[i];
  }
  std::vector<double> g(probs.size(), 0.0);
  if (uni == 0) return g;
  // d/dp [1 - I/U] = -(t U - I (1 - t)) / U^2
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double t = target[i];
    g[i] = -(t * uni - inter * (1.0 - t)) / (uni * uni);
  }
  return g;
}

std::vector<double> af_grad(const TensorF32& pred_haf,
                            const TensorF32& pred_vaf, const AffinityPair& gt,
                            const TensorF32& fg) {
  check_af_args(pred_haf, pred_vaf, gt, fg);
  const std::size_t hw = gt.haf.size();
  double n = 0;
  for (std::size_t i = 0; i < hw; ++i) n += fg[i] > 0.5f;
  std::vector<double> g(3 * hw, 0.0);
  if (n == 0) return g;
  auto sgn = [](double d) { return d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0); };
  for (std::size_t i = 0; i < hw; ++i) {
    if (!(fg[i] > 0.5f)) continue;
    g[i] = sgn(double(pred_haf[i]) - gt.haf[i]) / n;
    g[hw + i] = sgn(double(pred_vaf[i]) - gt.vaf[i]) / n;
    g[2 * hw + i] = sgn(double(pred_vaf[hw + i]) - gt.vaf[hw + i]) / n;
  }
  return g;
}

}  // namespace lane
