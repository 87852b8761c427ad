#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lane/tensor.hpp"

namespace lane {

/// Convolution parameters. The kernel is (out_ch, in_ch, kH, kW) for both
/// regular and transposed convolution. Every ENet-21 convolution is
/// bias-free; `bias` exists only so the kernels are general.
struct ConvParams {
  TensorF32 kernel;
  std::optional<std::vector<float>> bias;
  std::array<int, 2> stride{1, 1};
  std::array<int, 2> dilation{1, 1};
  std::array<int, 2> padding{0, 0};
  /// Extra rows/cols appended to a transposed convolution's output. Ignored
  /// by conv2d.
  std::array<int, 2> output_padding{0, 0};
};

/// Argmax record of a 2x2 max pool. `argmax[i]` is a flat index into the
/// pre-pool tensor (dims `input_dims`) for pooled element i.
struct PoolIndices {
  Dims dims;
  Dims input_dims;
  std::vector<std::int64_t> argmax;

  /// Throws Error(Integrity) unless every index lies in its own window.
  void validate() const;
};

std::size_t conv_output_size(std::size_t in, int kernel, int stride,
                             int dilation, int padding);
std::size_t transposed_output_size(std::size_t in, int kernel, int stride,
                                   int dilation, int padding,
                                   int output_padding);

TensorF32 conv2d(const TensorF32& input, const ConvParams& p);
TensorF32 transposed_conv2d(const TensorF32& input, const ConvParams& p);

struct PoolResult {
  TensorF32 output;
  PoolIndices indices;
};

/// 2x2/stride-2 max pool. Odd H or W are padded with -inf on the bottom or
/// right. Ties go to the first cell in row-major window order.
PoolResult maxpool2x2_with_indices(const TensorF32& input);

/// Scatter `input` into a zero tensor of `out_dims` at the recorded argmax
/// positions.
TensorF32 max_unpool2x2(const TensorF32& input, const PoolIndices& idx,
                        const Dims& out_dims);

inline constexpr float kBatchNormEps = 1e-5f;
inline constexpr float kPreluInitSlope = 0.25f;

TensorF32 batchnorm_infer(const TensorF32& input, std::span<const float> gamma,
                          std::span<const float> beta,
                          std::span<const float> mean,
                          std::span<const float> var,
                          float eps = kBatchNormEps);

TensorF32 prelu(const TensorF32& input, std::span<const float> slope);
TensorF32 sigmoid(const TensorF32& input);

enum class Mode { Train, Infer };

/// Zeroes whole (n, c) planes with probability p and rescales survivors by
/// 1/(1-p). Identity in Infer mode.
TensorF32 spatial_dropout(const TensorF32& input, double p, Mode mode,
                          std::uint64_t seed);

TensorF32 channel_zero_pad(const TensorF32& input, std::size_t target_channels);

// Plumbing used by the network.
TensorF32 add(const TensorF32& a, const TensorF32& b);
TensorF32 concat_channels(const TensorF32& a, const TensorF32& b);

}  // namespace lane
