#pragma once

// Reference evaluators written straight from the definitions: nested loops,
// long double accumulation, exhaustive search. Slow on purpose.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "lane/affinity.hpp"
#include "lane/dataset.hpp"
#include "lane/tensor.hpp"
#include "lane/tusimple_eval.hpp"

namespace oracle {

using lane::Dims;
using lane::TensorF32;

inline TensorF32 random_tensor(const Dims& d, std::mt19937_64& rng,
                               float lo = -1.f, float hi = 1.f) {
  std::uniform_real_distribution<float> u(lo, hi);
  TensorF32 t(d);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

inline double max_abs_diff(const TensorF32& a, const TensorF32& b) {
  if (a.dims() != b.dims()) return std::numeric_limits<double>::infinity();
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(double(a[i]) - double(b[i])));
  return m;
}

/// Direct cross-correlation: out[n,o,y,x] = sum_{c,i,j} in[n,c,y*s-p+i*d,
/// x*s-p+j*d] * k[o,c,i,j], out-of-range taps read zero.
inline TensorF32 conv2d(const TensorF32& in, const TensorF32& k, int sh, int sw,
                        int dh, int dw, int ph, int pw) {
  const long N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
  const long O = k.dim(0), KH = k.dim(2), KW = k.dim(3);
  const long OH = (H + 2 * ph - dh * (KH - 1) - 1) / sh + 1;
  const long OW = (W + 2 * pw - dw * (KW - 1) - 1) / sw + 1;
  TensorF32 out({std::size_t(N), std::size_t(O), std::size_t(OH), std::size_t(OW)});
  for (long n = 0; n < N; ++n)
    for (long o = 0; o < O; ++o)
      for (long y = 0; y < OH; ++y)
        for (long x = 0; x < OW; ++x) {
          long double s = 0;
          for (long c = 0; c < C; ++c)
            for (long i = 0; i < KH; ++i)
              for (long j = 0; j < KW; ++j) {
                const long iy = y * sh - ph + i * dh;
                const long ix = x * sw - pw + j * dw;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                s += (long double)in.at(n, c, iy, ix) * k.at(o, c, i, j);
              }
          out.at(n, o, y, x) = float(s);
        }
  return out;
}

/// Scatter-add: every input element spreads in * k[o,c,i,j] to output cell
/// (y*s - p + i*d, x*s - p + j*d); cells outside the output are dropped.
inline TensorF32 transposed_conv2d(const TensorF32& in, const TensorF32& k,
                                   int sh, int sw, int dh, int dw, int ph,
                                   int pw, int oph, int opw) {
  const long N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
  const long O = k.dim(0), KH = k.dim(2), KW = k.dim(3);
  const long OH = (H - 1) * sh - 2 * ph + dh * (KH - 1) + 1 + oph;
  const long OW = (W - 1) * sw - 2 * pw + dw * (KW - 1) + 1 + opw;
  std::vector<long double> acc(std::size_t(N * O * OH * OW), 0.0L);
  for (long n = 0; n < N; ++n)
    for (long c = 0; c < C; ++c)
      for (long y = 0; y < H; ++y)
        for (long x = 0; x < W; ++x)
          for (long o = 0; o < O; ++o)
            for (long i = 0; i < KH; ++i)
              for (long j = 0; j < KW; ++j) {
                const long oy = y * sh - ph + i * dh;
                const long ox = x * sw - pw + j * dw;
                if (oy < 0 || oy >= OH || ox < 0 || ox >= OW) continue;
                acc[std::size_t(((n * O + o) * OH + oy) * OW + ox)] +=
                    (long double)in.at(n, c, y, x) * k.at(o, c, i, j);
              }
  TensorF32 out({std::size_t(N), std::size_t(O), std::size_t(OH), std::size_t(OW)});
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = float(acc[i]);
  return out;
}

struct Pooled {
  TensorF32 out;
  std::vector<std::int64_t> argmax;
};

/// 2x2 window scan; cells past the edge do not exist; strict > keeps the
/// first maximum in row-major order.
inline Pooled maxpool2x2(const TensorF32& in) {
  const std::size_t N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
  const std::size_t OH = (H + 1) / 2, OW = (W + 1) / 2;
  Pooled p{TensorF32({N, C, OH, OW}), {}};
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < OH; ++y)
        for (std::size_t x = 0; x < OW; ++x) {
          float best = -std::numeric_limits<float>::infinity();
          std::int64_t arg = -1;
          for (std::size_t dy = 0; dy < 2; ++dy)
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const std::size_t iy = 2 * y + dy, ix = 2 * x + dx;
              if (iy >= H || ix >= W) continue;
              if (arg < 0 || in.at(n, c, iy, ix) > best) {
                best = in.at(n, c, iy, ix);
                arg = std::int64_t(in.offset(n, c, iy, ix));
              }
            }
          p.out.at(n, c, y, x) = best;
          p.argmax.push_back(arg);
        }
  return p;
}

/// Association error term by term: mean over the lane's pixels (x_i, y) of
/// || (cx, cy) - (x_i, y) - V(x_i, y) * ||(cx, cy) - (x_i, y)|| ||.
inline double association_error(const std::vector<int>& lane_xs, int y,
                                double cx, double cy,
                                const lane::AffinityPair& af) {
  long double sum = 0;
  for (int x : lane_xs) {
    const long double dx = cx - x, dy = cy - y;
    const long double dist = std::sqrt(dx * dx + dy * dy);
    const long double vx = af.vaf_x(std::size_t(y), std::size_t(x));
    const long double vy = af.vaf_y(std::size_t(y), std::size_t(x));
    const long double rx = dx - vx * dist, ry = dy - vy * dist;
    sum += std::sqrt(rx * rx + ry * ry);
  }
  return double(sum / lane_xs.size());
}

/// HAF/VAF straight from the mask: per-row centers are the mean x rounded to
/// a half pixel; haf = sign(center - x); vaf = normalize(center_above - x, -1)
/// or (0, -1) where the lane has no pixels in the row above.
inline lane::AffinityPair encode(const lane::LaneMask& m) {
  const std::size_t H = m.height, W = m.width;
  auto af = lane::AffinityPair::zeros(H, W);
  auto center = [&](std::size_t y, int id, bool& found) {
    long double s = 0;
    long n = 0;
    for (std::size_t x = 0; x < W; ++x)
      if (m.at(y, x) == id) {
        s += x;
        ++n;
      }
    found = n > 0;
    return found ? std::round(2 * double(s / n)) / 2 : 0.0;
  };
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) {
      const int id = m.at(y, x);
      if (id == 0) continue;
      bool here = false, above = false;
      const double c = center(y, id, here);
      const double d = c - double(x);
      af.haf[y * W + x] = float(d > 0 ? 1 : (d < 0 ? -1 : 0));
      const double ca = y > 0 ? center(y - 1, id, above) : 0.0;
      double vx = 0, vy = -1;
      if (above) {
        const double ex = ca - double(x), n = std::hypot(ex, 1.0);
        vx = ex / n;
        vy = -1.0 / n;
      }
      af.vaf[y * W + x] = float(vx);
      af.vaf[(H + y) * W + x] = float(vy);
    }
  return af;
}

// --- losses ---------------------------------------------------------------

inline long double wbce(const TensorF32& logits, const TensorF32& t, double w) {
  long double s = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const long double z = logits[i];
    const long double o = 1.0L / (1.0L + std::exp(-z));
    s += w * t[i] * std::log(o) + (1.0L - t[i]) * std::log(1.0L - o);
  }
  return -s / logits.size();
}

inline long double soft_iou(const TensorF32& p, const TensorF32& t) {
  long double inter = 0, uni = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    inter += (long double)p[i] * t[i];
    uni += (long double)p[i] + t[i] - (long double)p[i] * t[i];
  }
  return uni == 0 ? 0.0L : 1.0L - inter / uni;
}

inline long double af_l1(const TensorF32& ph, const TensorF32& pv,
                         const lane::AffinityPair& gt, const TensorF32& fg) {
  const std::size_t hw = gt.height() * gt.width();
  long double s = 0;
  long n = 0;
  for (std::size_t i = 0; i < hw; ++i) {
    if (fg[i] < 0.5f) continue;
    ++n;
    s += std::abs((long double)gt.haf[i] - ph[i]);
    s += std::abs((long double)gt.vaf[i] - pv[i]);
    s += std::abs((long double)gt.vaf[hw + i] - pv[hw + i]);
  }
  return n ? s / n : 0.0L;
}

/// Central difference of f with respect to element i of x.
inline double central_difference(const std::function<double(const TensorF32&)>& f,
                                 TensorF32 x, std::size_t i, double h) {
  const float x0 = x[i];
  x[i] = float(x0 + h);
  const double up = f(x);
  x[i] = float(x0 - h);
  const double down = f(x);
  const double step = double(float(x0 + h)) - double(float(x0 - h));
  return (up - down) / step;
}

// --- metric ---------------------------------------------------------------

/// Best one-to-one matching by exhaustive search: maximize good matches
/// (per-lane accuracy >= threshold), then matched correct vertices.
inline lane::EvalCounts exhaustive_eval(const lane::LaneAnnotation& pred,
                                        const lane::LaneAnnotation& gt,
                                        const lane::EvalConfig& cfg = {}) {
  std::vector<std::size_t> P, G;
  std::vector<int> present;
  for (std::size_t i = 0; i < pred.lanes.size(); ++i)
    if (pred.present_vertices(i) > 0) P.push_back(i);
  for (std::size_t j = 0; j < gt.lanes.size(); ++j)
    if (gt.present_vertices(j) > 0) {
      G.push_back(j);
      present.push_back(gt.present_vertices(j));
    }
  auto correct = [&](std::size_t p, std::size_t g) {
    int k = 0;
    for (std::size_t s = 0; s < gt.h_samples.size(); ++s) {
      const double a = pred.lanes[P[p]][s], b = gt.lanes[G[g]][s];
      if (a != lane::kAbsent && b != lane::kAbsent &&
          std::abs(a - b) <= cfg.px_threshold)
        ++k;
    }
    return k;
  };
  int best_good = -1;
  long best_correct = -1;
  std::vector<int> assign(P.size(), -1);  // gt index or -1
  std::vector<bool> used(G.size(), false);
  std::function<void(std::size_t, int, long)> rec = [&](std::size_t p,
                                                        int good, long corr) {
    if (p == P.size()) {
      if (good > best_good || (good == best_good && corr > best_correct)) {
        best_good = good;
        best_correct = corr;
      }
      return;
    }
    rec(p + 1, good, corr);
    for (std::size_t g = 0; g < G.size(); ++g) {
      if (used[g]) continue;
      const int k = correct(p, g);
      used[g] = true;
      rec(p + 1, good + (double(k) / present[g] >= cfg.lane_match_threshold),
          corr + k);
      used[g] = false;
    }
  };
  rec(0, 0, 0);
  lane::EvalCounts c;
  c.correct = best_correct;
  for (int n : present) c.gt_vertices += n;
  c.pred_lanes = std::int64_t(P.size());
  c.gt_lanes = std::int64_t(G.size());
  c.false_lanes = c.pred_lanes - best_good;
  c.missed_lanes = c.gt_lanes - best_good;
  return c;
}

/// Puts several frames side by side in one annotation whose h_samples are
/// disjoint per frame, so no lane can score against another frame's lanes.
inline std::pair<lane::LaneAnnotation, lane::LaneAnnotation> concatenate(
    const std::vector<std::pair<lane::LaneAnnotation, lane::LaneAnnotation>>&
        frames) {
  lane::LaneAnnotation P, G;
  std::size_t total = 0;
  for (const auto& f : frames) total += f.second.h_samples.size();
  std::size_t offset = 0;
  int shift = 0;
  for (const auto& [p, g] : frames) {
    for (int h : g.h_samples) {
      P.h_samples.push_back(h + shift);
      G.h_samples.push_back(h + shift);
    }
    auto place = [&](const std::vector<std::vector<double>>& lanes,
                     lane::LaneAnnotation& dst) {
      for (const auto& l : lanes) {
        std::vector<double> row(total, lane::kAbsent);
        std::copy(l.begin(), l.end(), row.begin() + long(offset));
        dst.lanes.push_back(std::move(row));
      }
    };
    place(p.lanes, P);
    place(g.lanes, G);
    offset += g.h_samples.size();
    shift += 100000;
  }
  return {P, G};
}

// --- F1 ---------------------------------------------------------------------

/// Precision = acc/(acc+fp), recall = acc/(acc+fn), harmonic mean; long double.
inline long double f1(long double acc, long double fp, long double fn) {
  const long double p = acc / (acc + fp), r = acc / (acc + fn);
  return 2 * p * r / (p + r);
}

}  // namespace oracle
