#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lane/kernels.hpp"
#include "lane/tensor.hpp"

namespace lane {

enum class LayerKind { Initial, Bottleneck, Conv1x1 };
enum class Variant { Plain, Downsampling, Upsampling, Dilated };

struct LayerSpec {
  int id = 0;          // row in the architecture table (1..21)
  std::string name;    // "initial", "bottleneck2.3", "conv"
  LayerKind kind = LayerKind::Bottleneck;
  Variant variant = Variant::Plain;
  int out_channels = 0;
  int dilation = 1;
};

struct HeadSpec {
  std::string name;  // "seg", "haf", "vaf"
  int out_channels = 1;
  std::vector<LayerSpec> layers;  // rows 19..21
};

/// Rows 1-18 form the shared trunk; each head repeats rows 19-21. With
/// `shared_heads` rows 19-20 run once and only the final 1x1 conv is
/// per-head.
struct ArchSpec {
  int input_channels = 3;
  std::vector<LayerSpec> layers;
  std::array<HeadSpec, 3> heads;
  int projection_ratio = 4;
  bool shared_heads = false;
  double dropout = 0.2;
};

inline constexpr int kSegChannels = 1;
inline constexpr int kHafChannels = 1;
inline constexpr int kVafChannels = 2;

ArchSpec build_enet21(bool shared_heads = false, int projection_ratio = 4);

/// Throws Error(InvalidArgument) if the architecture breaks a structural invariant
/// (one initial layer first, allowed dilations, no stage-3 downsampler, ...).
void validate(const ArchSpec& spec);

int internal_channels(const ArchSpec& spec, const LayerSpec& layer);

struct ParamSlot {
  std::string name;
  Dims dims;
  bool trainable = true;  // batchnorm running statistics are not
};

/// Every weight the network reads, in execution order. Names never contain
/// "bias": no layer has one.
std::vector<ParamSlot> parameter_slots(const ArchSpec& spec);

struct LayerReport {
  int id = 0;
  std::string name;    // qualified, e.g. "haf.bottleneck5.1"
  std::string branch;  // "trunk", "shared", "seg", "haf", "vaf"
  Dims output_dims;    // (C, H, W); empty when only params were counted
  std::int64_t params = 0;
  std::int64_t flops = 0;
};

struct ArchReport {
  std::vector<LayerReport> per_layer;
  std::int64_t total_params = 0;
  std::int64_t total_flops = 0;
};

struct LayerShape {
  int id = 0;
  std::string name;
  std::string branch;
  Dims output_dims;  // (C, H, W)
};

/// Per-row output dims for an input of (C, H, W). H and W must be divisible
/// by 8.
std::vector<LayerShape> shape_trace(const ArchSpec& spec, const Dims& input);

ArchReport count_params(const ArchSpec& spec);

/// FLOPs = 2 x MACs for every convolution, plus 2 per element for batchnorm,
/// 1 per element for PReLU and residual adds, 3 comparisons per pooled
/// element. Dropout, padding and unpooling are free.
ArchReport count_flops(const ArchSpec& spec, const Dims& input);

/// Params, FLOPs and shapes in one report.
ArchReport analyze(const ArchSpec& spec, const Dims& input);

// ---------------------------------------------------------------------------
// Weights

using WeightStore = std::map<std::string, TensorF32>;

/// Uniform noise in [-0.5, 0.5) scaled by 1/sqrt(fan_in) for kernels;
/// batchnorm gamma near 1, running variance in [0.5, 1.5), PReLU slope 0.25.
WeightStore random_weights(const ArchSpec& spec, std::uint64_t seed);

/// Every kernel, gamma, beta and running mean is zero; running variance is 1.
WeightStore zero_weights(const ArchSpec& spec);

/// Missing slot -> MissingSlot, wrong dims -> ShapeMismatch, extra entry ->
/// UnknownName. The message names the offending slot.
void validate_weights(const ArchSpec& spec, const WeightStore& w);

// AFW1: "AFW1", u32 entry count, then per entry u16 name length, UTF-8 name,
// AFT1 blob.
void write_weights(std::ostream& out, const WeightStore& w);
WeightStore read_weights(std::istream& in);
void save_weights(const WeightStore& w, const std::string& path);
WeightStore load_weights(const std::string& path);
/// Also rejects names the architecture does not define.
WeightStore load_weights(const std::string& path, const ArchSpec& spec);

// ---------------------------------------------------------------------------
// Forward pass

struct ForwardResult {
  TensorF32 seg_logits;  // (N, 1, H/4, W/4)
  TensorF32 haf;         // (N, 1, H/4, W/4)
  TensorF32 vaf;         // (N, 2, H/4, W/4)
  std::vector<LayerShape> trace;  // dims of every executed row
};

ForwardResult forward(const ArchSpec& spec, const WeightStore& w,
                      const TensorF32& image, Mode mode = Mode::Infer,
                      std::uint64_t seed = 0);

}  // namespace lane
