#include "lane/synthlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "lane/error.hpp"

namespace lane {

namespace {

constexpr double kMargin = 2.0;      // map px kept clear at the image sides
constexpr double kMaxSpan = 150.0;   // bottom-row extent of all lanes
constexpr double kBottomRow = 86.0;  // lowest map row reached by h_samples

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// x(y) = a y^2 + b y + c in map pixels; present for y >= y_top.
struct Quadratic {
  double a = 0, b = 0, c = 0;
  double y_top = 0;

  double x(double y) const { return (a * y + b) * y + c; }
  double slope(double y) const { return 2 * a * y + b; }
};

// Quadratic through (y_bot, x_bot) and (y_top, x_top) whose deviation from
// the straight line peaks at `bend` on the top row.
Quadratic make_lane(double y_top, double x_top, double x_bot, double bend) {
  const double L = kBottomRow - y_top;
  // t = (kBottomRow - y) / L; x = x_bot + (x_top - x_bot) t + bend t^2
  const double k1 = (x_top - x_bot) / L;
  const double k2 = bend / (L * L);
  Quadratic q;
  q.a = k2;
  q.b = -k1 - 2 * k2 * kBottomRow;
  q.c = x_bot + k1 * kBottomRow + k2 * kBottomRow * kBottomRow;
  q.y_top = y_top;
  return q;
}

[[noreturn]] void reject(const std::string& why) {
  throw Error(ErrorKind::InvalidArgument, "scene rejected: " + why);
}

// Per-row order and separation of the rasterized lanes.
void check_mask(const LaneMask& m, int lanes) {
  if (m.lane_count() != lanes) reject("lanes merged during rasterization");
  for (std::size_t y = 0; y < m.height; ++y) {
    std::int32_t last = 0;
    std::size_t last_x = 0;
    for (std::size_t x = 0; x < m.width; ++x) {
      const std::int32_t id = m.at(y, x);
      if (id == 0 || id == last) {
        if (id == last && id != 0) last_x = x;
        continue;
      }
      if (id < last || (last != 0 && x - last_x < 2))
        reject("lanes touch on row " + std::to_string(y));
      last = id;
      last_x = x;
    }
  }
}

}  // namespace

void SceneSpec::validate() const {
  if (lane_count < 1 || lane_count > 6)
    throw Error(ErrorKind::InvalidArgument, "lane_count must be in 1..6");
  if (width < 1)
    throw Error(ErrorKind::InvalidArgument, "width must be >= 1");
  if (!(curvature_lo <= curvature_hi) || !std::isfinite(curvature_lo) ||
      !std::isfinite(curvature_hi))
    throw Error(ErrorKind::InvalidArgument,
                "curvature range must be finite with lo <= hi");
  if (!(spacing >= 3.0 * width) || !std::isfinite(spacing))
    throw Error(ErrorKind::InvalidArgument, "spacing must be >= 3 * width");
  if (merge_split && lane_count < 2)
    throw Error(ErrorKind::InvalidArgument, "merge_split needs >= 2 lanes");
}

Scene generate(const SceneSpec& spec) {
  spec.validate();
  const int L = spec.lane_count;
  const double span = (L - 1) * spec.spacing;
  if (span > kMaxSpan) reject("lanes do not fit the bottom row");

  std::mt19937_64 rng(spec.seed);
  const double sy = static_cast<double>(kMapHeight) / kOrigHeight;
  const double sx = static_cast<double>(kMapWidth) / kOrigWidth;

  // Horizon on an h_sample, shared by all lanes.
  const int top_sample = 200 + 10 * static_cast<int>(uniform(rng, 0, 10));
  const double y_top = top_sample * sy;
  const double centre_lo = kMargin + span / 2;
  const double centre_hi = kMapWidth - 1 - kMargin - span / 2;
  const double x_centre =
      uniform(rng, centre_lo, std::max(centre_lo, centre_hi) + 1e-9);
  const double vanish = x_centre + uniform(rng, -20, 20);
  const double shrink_lo =
      std::clamp((spec.width + 4) / spec.spacing, 0.3, 0.65);
  const double shrink = uniform(rng, shrink_lo, 0.65 + 1e-9);
  const double bend = uniform(rng, spec.curvature_lo, spec.curvature_hi + 1e-12);

  std::vector<Quadratic> lanes;
  for (int l = 0; l < L; ++l) {
    const double off = (l - (L - 1) / 2.0) * spec.spacing;
    const double jitter = 1.0 + uniform(rng, -0.05, 0.05);
    lanes.push_back(make_lane(y_top, vanish + off * shrink, x_centre + off,
                              bend * jitter));
  }
  int terminated = -1;
  if (spec.merge_split) {
    terminated = static_cast<int>(uniform(rng, 0, L));
    terminated = std::min(terminated, L - 1);
    lanes[static_cast<std::size_t>(terminated)].y_top =
        (360 + 10 * static_cast<int>(uniform(rng, 0, 13))) * sy;
  }

  // Analytic check on a fine row grid: centrelines must stay inside the
  // image, ordered, and far enough apart that rasterized strokes (widened by
  // their slope) keep a background pixel between them.
  for (double y = y_top; y <= kBottomRow; y += 0.25) {
    double prev_x = -std::numeric_limits<double>::infinity();
    double prev_s = 0;
    for (const auto& q : lanes) {
      if (y < q.y_top) continue;
      const double x = q.x(y), s = std::abs(q.slope(y));
      if (x < kMargin || x > kMapWidth - 1 - kMargin)
        reject("lane leaves the image");
      if (std::isfinite(prev_x) && x - prev_x < (prev_s + s) / 2 + spec.width + 1)
        reject("lanes too close near row " + std::to_string(y));
      prev_x = x;
      prev_s = s;
    }
  }

  Scene scene;
  scene.terminated_lane = terminated;
  scene.annotation.raw_file = "synth/" + std::to_string(spec.seed) + ".jpg";
  scene.annotation.h_samples = tusimple_h_samples();
  for (const auto& q : lanes) {
    std::vector<double> xs;
    for (int h : scene.annotation.h_samples) {
      const double y = h * sy;
      xs.push_back(y + 1e-9 < q.y_top ? kAbsent : std::round(q.x(y) / sx));
    }
    scene.annotation.lanes.push_back(std::move(xs));
  }
  scene.mask = rasterize(scene.annotation, kMapHeight, kMapWidth, spec.width);
  check_mask(scene.mask, L);
  return scene;
}

SceneSpec random_scene_spec(std::uint64_t seed, double merge_split_prob) {
  std::mt19937_64 rng(seed);
  SceneSpec s;
  s.lane_count = std::uniform_int_distribution<int>(1, 6)(rng);
  s.width = uniform(rng, 0, 1) < 0.7 ? 2 : 3;
  const double hi =
      s.lane_count > 1 ? std::min(40.0, kMaxSpan / (s.lane_count - 1)) : 40.0;
  const double lo = std::min(hi, std::max(3.0 * s.width, (s.width + 4) / 0.65));
  s.spacing = uniform(rng, lo, hi + 1e-9);
  s.curvature_lo = uniform(rng, -30, 30);
  s.curvature_hi = s.curvature_lo + uniform(rng, 0, 10);
  s.merge_split = s.lane_count > 1 && uniform(rng, 0, 1) < merge_split_prob;
  s.seed = rng();
  return s;
}

Scene sample_scene(std::uint64_t seed, double merge_split_prob,
                   SceneSpec* used) {
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const SceneSpec s = random_scene_spec(rng(), merge_split_prob);
    try {
      Scene scene = generate(s);
      if (used) *used = s;
      return scene;
    } catch (const Error&) {
    }
  }
  throw Error(ErrorKind::Integrity, "sample_scene: no valid scene found");
}

AffinityPair perturb_fields(const AffinityPair& af, double sigma,
                            std::uint64_t seed) {
  if (!(sigma >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "perturb_fields: sigma must be >= 0");
  if (sigma == 0.0) return af;
  AffinityPair out = af;
  const std::size_t H = af.height(), W = af.width();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  auto haf = out.haf.data();
  auto vaf = out.vaf.data();
  for (std::size_t i = 0; i < H * W; ++i) {
    const double vx = vaf[i], vy = vaf[H * W + i];
    if (vx == 0.0 && vy == 0.0) continue;
    haf[i] = static_cast<float>(std::clamp(haf[i] + n(rng), -1.0, 1.0));
    const double th = n(rng);
    const double rx = vx * std::cos(th) - vy * std::sin(th);
    const double ry = vx * std::sin(th) + vy * std::cos(th);
    const double norm = std::hypot(rx, ry);
    vaf[i] = static_cast<float>(rx / norm);
    vaf[H * W + i] = static_cast<float>(ry / norm);
  }
  return out;
}

double lane_identity_agreement(const LaneMask& truth,
                               std::span<const std::int32_t> cluster_map) {
  if (cluster_map.size() != truth.grid.size())
    throw Error(ErrorKind::ShapeMismatch,
                "lane_identity_agreement: cluster map size differs from mask");
  const int T = truth.lane_count();
  if (T > 16)
    throw Error(ErrorKind::InvalidArgument,
                "lane_identity_agreement: more than 16 lanes");
  std::int32_t D = 0;
  for (auto v : cluster_map) D = std::max(D, v);

  // overlap[d][t]: pixels of truth lane t+1 labelled d+1.
  std::vector<std::vector<std::int64_t>> overlap(
      static_cast<std::size_t>(D), std::vector<std::int64_t>(T, 0));
  std::int64_t total = 0;
  for (std::size_t i = 0; i < truth.grid.size(); ++i) {
    const auto t = truth.grid[i];
    if (t <= 0) continue;
    ++total;
    if (cluster_map[i] > 0)
      ++overlap[static_cast<std::size_t>(cluster_map[i] - 1)]
               [static_cast<std::size_t>(t - 1)];
  }
  if (total == 0) return 1.0;

  // Best one-to-one assignment: each decoded label takes at most one truth
  // lane; dp over the set of truth lanes already taken.
  const std::size_t S = std::size_t{1} << T;
  std::vector<std::int64_t> dp(S, -1), next;
  dp[0] = 0;
  for (std::int32_t d = 0; d < D; ++d) {
    const auto& row = overlap[static_cast<std::size_t>(d)];
    next = dp;
    for (std::size_t m = 0; m < S; ++m) {
      if (dp[m] < 0) continue;
      for (int t = 0; t < T; ++t) {
        if (m >> t & 1) continue;
        const std::size_t m2 = m | std::size_t{1} << t;
        next[m2] = std::max(next[m2], dp[m] + row[static_cast<std::size_t>(t)]);
      }
    }
    dp.swap(next);
  }
  return static_cast<double>(*std::max_element(dp.begin(), dp.end())) /
         static_cast<double>(total);
}

RoundTrip round_trip(const LaneMask& mask, double sigma,
                     std::uint64_t noise_seed, const DecodeConfig& cfg) {
  const AffinityPair gt = encode_affinities(mask);
  const AffinityPair af = perturb_fields(gt, sigma, noise_seed);
  TensorF32 seg({mask.height, mask.width});
  for (std::size_t i = 0; i < mask.grid.size(); ++i)
    seg[i] = mask.grid[i] > 0 ? 1.0f : 0.0f;
  RoundTrip r;
  r.expected_lanes = mask.lane_count();
  r.decoded = decode(seg, af, cfg);
  r.decoded_lanes = static_cast<int>(r.decoded.lanes.size());
  r.agreement = lane_identity_agreement(mask, r.decoded.cluster_map);
  return r;
}

}  // namespace lane
