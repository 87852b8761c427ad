#pragma once

#include <cstdint>
#include <span>

#include "lane/affinity.hpp"
#include "lane/dataset.hpp"

namespace lane {

/// Parametric road scene at map resolution (160x88). Lanes are quadratics
/// converging toward a horizon; `curvature_lo..hi` bounds the lateral bend
/// (map pixels at the horizon) drawn per scene, with a small per-lane
/// jitter.
struct SceneSpec {
  int lane_count = 4;         // 1..6
  double curvature_lo = 0.0;
  double curvature_hi = 0.0;
  double spacing = 24.0;      // map px between neighbours on the bottom row
  int width = kDefaultThickness;  // stroke thickness, map px
  bool merge_split = false;   // one lane ends part-way up the image
  std::uint64_t seed = 0;

  /// Throws Error(InvalidArgument) on out-of-range fields, including
  /// spacing < 3 * width.
  void validate() const;
};

struct Scene {
  LaneMask mask;
  LaneAnnotation annotation;  // 1280x720 space, TuSimple h_samples
  int terminated_lane = -1;   // annotation index of the merge/split lane
};

/// Deterministic per SceneSpec. Throws Error(InvalidArgument) if the drawn lanes
/// would cross or touch anywhere in the image.
Scene generate(const SceneSpec& spec);

/// A random spec that passes validate(): 1..6 lanes, mixed curvature,
/// merge/split with probability `merge_split_prob`. generate() may still
/// reject it.
SceneSpec random_scene_spec(std::uint64_t seed, double merge_split_prob = 0.2);

/// Draws random specs from `seed` until one generates.
Scene sample_scene(std::uint64_t seed, double merge_split_prob = 0.2,
                   SceneSpec* used = nullptr);

/// Adds N(0, sigma) to HAF and rotates VAF by an N(0, sigma) angle (radians)
/// on foreground pixels; VAF stays unit length, background stays zero.
AffinityPair perturb_fields(const AffinityPair& af, double sigma,
                            std::uint64_t seed);

/// Fraction of ground-truth foreground pixels whose decoded label maps to
/// their lane id under the best one-to-one relabelling.
double lane_identity_agreement(const LaneMask& truth,
                               std::span<const std::int32_t> cluster_map);

struct RoundTrip {
  int expected_lanes = 0;
  int decoded_lanes = 0;
  double agreement = 0.0;
  DecodedLanes decoded;
};

/// encode -> (optional perturbation) -> decode with the mask as seg_prob.
RoundTrip round_trip(const LaneMask& mask, double sigma = 0.0,
                     std::uint64_t noise_seed = 0,
                     const DecodeConfig& cfg = {});

}  // namespace lane
