#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lane/affinity.hpp"
#include "lane/tensor.hpp"

namespace lane {

inline constexpr double kAbsent = -2.0;
inline constexpr int kOrigWidth = 1280;
inline constexpr int kOrigHeight = 720;
inline constexpr std::size_t kInputHeight = 352;
inline constexpr std::size_t kInputWidth = 640;
inline constexpr int kDefaultThickness = 2;

/// One TuSimple frame: lane x-positions at fixed y-samples in the original
/// 1280x720 frame, -2 where a lane is absent.
struct LaneAnnotation {
  std::string raw_file;
  std::vector<int> h_samples;
  std::vector<std::vector<double>> lanes;
  std::optional<std::int64_t> run_time;  // ms, prediction files only

  /// Ragged lanes or x outside {-2} U [0, 1279] -> Error(InvalidArgument).
  void validate() const;
  int present_vertices(std::size_t lane) const;

  friend bool operator==(const LaneAnnotation&, const LaneAnnotation&) = default;
};

struct ParseIssue {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct ParseResult {
  std::vector<LaneAnnotation> annotations;
  std::vector<ParseIssue> errors;
};

/// Parses one JSON object; throws Error(InvalidArgument) on missing keys,
/// wrong types or ragged lanes.
LaneAnnotation parse_tusimple_line(std::string_view line);

/// Newline-delimited TuSimple labels. Bad lines are reported and skipped;
/// blank lines are ignored.
ParseResult parse_tusimple(std::istream& in);
ParseResult parse_tusimple(const std::string& path);

std::string to_json_line(const LaneAnnotation& ann);
void write_tusimple(std::ostream& out, std::span<const LaneAnnotation> anns);

/// Draws each lane with >= 2 present vertices as a polyline of the given
/// stroke width at (height, width) resolution. Lane ids follow annotation
/// order; later lanes win on overlap and every lane row is trimmed to one
/// run. Skipped lanes are reported through `warnings` when given.
LaneMask rasterize(const LaneAnnotation& ann, std::size_t height = kMapHeight,
                   std::size_t width = kMapWidth,
                   int thickness = kDefaultThickness,
                   std::vector<std::string>* warnings = nullptr);

/// Upscales decoded map-resolution points to 1280x720 and samples x at each
/// h_sample inside (or within one map row of) the lane's y-extent.
LaneAnnotation lanes_to_annotation(const DecodedLanes& decoded,
                                   std::span<const int> h_samples,
                                   std::string raw_file = {});

/// The 56 y-positions of TuSimple's 720p labels: 160, 170, ..., 710.
std::vector<int> tusimple_h_samples();

enum class NoiseKind { Gaussian, Speckle };

/// gaussian: x + e; speckle: x (1 + e); e ~ N(0, sigma^2). Clamped to [0, 1].
TensorF32 add_noise(const TensorF32& image, NoiseKind kind, double sigma,
                    std::uint64_t seed);

/// Interleaved 8-bit RGB (H x W x 3) to a (1, 3, H, W) tensor in [0, 1].
TensorF32 image_from_rgb8(std::span<const std::uint8_t> rgb, std::size_t height,
                          std::size_t width);

/// Bilinear resize of an (N, C, H, W) tensor with half-pixel centers.
TensorF32 resize_bilinear(const TensorF32& image, std::size_t height,
                          std::size_t width);

/// Binary P6 PPM with maxval 255, returned as (1, 3, H, W) in [0, 1].
TensorF32 read_ppm(const std::string& path);

struct FrameRecord {
  TensorF32 image;  // (1, 3, 352, 640)
  LaneMask mask;    // 88 x 160
  LaneAnnotation annotation;
};

FrameRecord make_frame_record(std::span<const std::uint8_t> rgb,
                              std::size_t height, std::size_t width,
                              const LaneAnnotation& ann,
                              int thickness = kDefaultThickness);

}  // namespace lane
