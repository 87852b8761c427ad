#include "lane/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "lane/error.hpp"
#include "lane/parallel.hpp"

namespace lane {

namespace {

void check_conv_args(const TensorF32& input, const ConvParams& p,
                     std::size_t in_axis_of_kernel, const char* op) {
  require_rank(input, 4, op);
  require_rank(p.kernel, 4, op);
  if (p.kernel.dim(in_axis_of_kernel) != input.c())
    throw Error(ErrorKind::ShapeMismatch,
                std::string(op) + ": input " + to_string(input.dims()) +
                    " does not match kernel " + to_string(p.kernel.dims()));
  for (int i = 0; i < 2; ++i) {
    if (p.stride[i] < 1 || p.dilation[i] < 1 || p.padding[i] < 0 ||
        p.output_padding[i] < 0)
      throw Error(ErrorKind::InvalidArgument,
                  std::string(op) + ": stride/dilation must be >= 1 and "
                                    "padding >= 0");
  }
  if (p.bias && p.bias->size() != p.kernel.dim(0))
    throw Error(ErrorKind::ShapeMismatch,
                std::string(op) + ": bias length does not match out channels");
}

// First/last output coordinate o with 0 <= o*stride + shift < in.
std::pair<long, long> valid_range(long out, long in, long stride, long shift) {
  long lo = shift >= 0 ? 0 : (-shift + stride - 1) / stride;
  long hi = (in - 1 - shift) >= 0 ? (in - 1 - shift) / stride : -1;
  return {lo, std::min(hi, out - 1)};
}

}  // namespace

std::size_t conv_output_size(std::size_t in, int kernel, int stride,
                             int dilation, int padding) {
  const long span = static_cast<long>(dilation) * (kernel - 1) + 1;
  const long padded = static_cast<long>(in) + 2L * padding;
  if (padded < span)
    throw Error(ErrorKind::ShapeMismatch,
                "convolution window larger than padded input");
  return static_cast<std::size_t>((padded - span) / stride + 1);
}

std::size_t transposed_output_size(std::size_t in, int kernel, int stride,
                                   int dilation, int padding,
                                   int output_padding) {
  const long out = (static_cast<long>(in) - 1) * stride - 2L * padding +
                   static_cast<long>(dilation) * (kernel - 1) + 1 +
                   output_padding;
  if (out < 1)
    throw Error(ErrorKind::ShapeMismatch,
                "transposed convolution output would be empty");
  return static_cast<std::size_t>(out);
}

TensorF32 conv2d(const TensorF32& input, const ConvParams& p) {
  check_conv_args(input, p, 1, "conv2d");
  const std::size_t N = input.n(), C = input.c(), H = input.h(),
                    W = input.w();
  const std::size_t OC = p.kernel.dim(0);
  const int KH = static_cast<int>(p.kernel.dim(2)),
            KW = static_cast<int>(p.kernel.dim(3));
  const auto [sh, sw] = p.stride;
  const auto [dh, dw] = p.dilation;
  const auto [ph, pw] = p.padding;
  const std::size_t OH = conv_output_size(H, KH, sh, dh, ph);
  const std::size_t OW = conv_output_size(W, KW, sw, dw, pw);

  TensorF32 out({N, OC, OH, OW});
  const float* in = input.data().data();
  const float* k = p.kernel.data().data();
  float* o = out.data().data();

  parallel_for(N * OC, default_jobs(), [&](std::size_t job) {
    const std::size_t n = job / OC, oc = job % OC;
    float* plane = o + (n * OC + oc) * OH * OW;
    if (p.bias) std::fill(plane, plane + OH * OW, (*p.bias)[oc]);
    for (std::size_t c = 0; c < C; ++c) {
      const float* src = in + (n * C + c) * H * W;
      for (int kh = 0; kh < KH; ++kh) {
        const long shift_h = static_cast<long>(kh) * dh - ph;
        const auto [oh0, oh1] = valid_range(static_cast<long>(OH),
                                            static_cast<long>(H), sh, shift_h);
        for (int kw = 0; kw < KW; ++kw) {
          const float wv = k[((oc * C + c) * KH + kh) * KW + kw];
          const long shift_w = static_cast<long>(kw) * dw - pw;
          const auto [ow0, ow1] = valid_range(
              static_cast<long>(OW), static_cast<long>(W), sw, shift_w);
          if (ow0 > ow1) continue;
          for (long oh = oh0; oh <= oh1; ++oh) {
            const float* row = src + (oh * sh + shift_h) * W;
            float* dst = plane + oh * OW;
            if (sw == 1) {
              const float* r = row + shift_w;
              for (long ow = ow0; ow <= ow1; ++ow) dst[ow] += wv * r[ow];
            } else {
              for (long ow = ow0; ow <= ow1; ++ow)
                dst[ow] += wv * row[ow * sw + shift_w];
            }
          }
        }
      }
    }
  });
  return out;
}

TensorF32 transposed_conv2d(const TensorF32& input, const ConvParams& p) {
  check_conv_args(input, p, 1, "transposed_conv2d");
  const std::size_t N = input.n(), C = input.c(), H = input.h(),
                    W = input.w();
  const std::size_t OC = p.kernel.dim(0);
  const int KH = static_cast<int>(p.kernel.dim(2)),
            KW = static_cast<int>(p.kernel.dim(3));
  const auto [sh, sw] = p.stride;
  const auto [dh, dw] = p.dilation;
  const auto [ph, pw] = p.padding;
  const std::size_t OH =
      transposed_output_size(H, KH, sh, dh, ph, p.output_padding[0]);
  const std::size_t OW =
      transposed_output_size(W, KW, sw, dw, pw, p.output_padding[1]);

  TensorF32 out({N, OC, OH, OW});
  const float* in = input.data().data();
  const float* k = p.kernel.data().data();
  float* o = out.data().data();

  // out[oh = ih*s - pad + kh*d] += in[ih] * k, i.e. ih ranges over the
  // inputs whose scatter target lands inside the output.
  parallel_for(N * OC, default_jobs(), [&](std::size_t job) {
    const std::size_t n = job / OC, oc = job % OC;
    float* plane = o + (n * OC + oc) * OH * OW;
    if (p.bias) std::fill(plane, plane + OH * OW, (*p.bias)[oc]);
    for (std::size_t c = 0; c < C; ++c) {
      const float* src = in + (n * C + c) * H * W;
      for (int kh = 0; kh < KH; ++kh) {
        const long shift_h = static_cast<long>(kh) * dh - ph;
        const auto [ih0, ih1] = valid_range(static_cast<long>(H),
                                            static_cast<long>(OH), sh, shift_h);
        for (int kw = 0; kw < KW; ++kw) {
          const float wv = k[((oc * C + c) * KH + kh) * KW + kw];
          const long shift_w = static_cast<long>(kw) * dw - pw;
          const auto [iw0, iw1] = valid_range(
              static_cast<long>(W), static_cast<long>(OW), sw, shift_w);
          if (iw0 > iw1) continue;
          for (long ih = ih0; ih <= ih1; ++ih) {
            const float* row = src + ih * W;
            float* dst = plane + (ih * sh + shift_h) * OW;
            for (long iw = iw0; iw <= iw1; ++iw)
              dst[iw * sw + shift_w] += wv * row[iw];
          }
        }
      }
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Pooling

void PoolIndices::validate() const {
  if (dims.size() != 4 || input_dims.size() != 4 ||
      argmax.size() != product(dims))
    throw Error(ErrorKind::Integrity, "pool indices: malformed record");
  const std::size_t H = input_dims[2], W = input_dims[3];
  const std::size_t OH = dims[2], OW = dims[3];
  const auto total = static_cast<std::int64_t>(product(input_dims));
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    const std::int64_t a = argmax[i];
    if (a < 0 || a >= total)
      throw Error(ErrorKind::Integrity,
                  "pool indices: index " + std::to_string(a) +
                      " out of range");
    const std::size_t plane_out = i / (OH * OW), plane_in = a / (H * W);
    const std::size_t oy = (i / OW) % OH, ox = i % OW;
    const std::size_t iy = (a / W) % H, ix = a % W;
    if (plane_out != plane_in || iy / 2 != oy || ix / 2 != ox)
      throw Error(ErrorKind::Integrity,
                  "pool indices: index " + std::to_string(a) +
                      " outside its pooling window");
  }
}

PoolResult maxpool2x2_with_indices(const TensorF32& input) {
  require_rank(input, 4, "maxpool2x2");
  const std::size_t N = input.n(), C = input.c(), H = input.h(),
                    W = input.w();
  const std::size_t OH = (H + 1) / 2, OW = (W + 1) / 2;
  PoolResult r{TensorF32({N, C, OH, OW}),
               PoolIndices{{N, C, OH, OW}, input.dims(), {}}};
  r.indices.argmax.resize(N * C * OH * OW);
  const float* in = input.data().data();
  std::size_t i = 0;
  for (std::size_t plane = 0; plane < N * C; ++plane) {
    const std::size_t base = plane * H * W;
    for (std::size_t oy = 0; oy < OH; ++oy) {
      for (std::size_t ox = 0; ox < OW; ++ox, ++i) {
        float best = -std::numeric_limits<float>::infinity();
        std::size_t best_idx = base + (2 * oy) * W + 2 * ox;
        bool found = false;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          const std::size_t y = 2 * oy + dy;
          if (y >= H) break;
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t x = 2 * ox + dx;
            if (x >= W) break;
            const std::size_t idx = base + y * W + x;
            if (!found || in[idx] > best) {
              best = in[idx];
              best_idx = idx;
              found = true;
            }
          }
        }
        r.output[i] = best;
        r.indices.argmax[i] = static_cast<std::int64_t>(best_idx);
      }
    }
  }
  return r;
}

TensorF32 max_unpool2x2(const TensorF32& input, const PoolIndices& idx,
                        const Dims& out_dims) {
  require_rank(input, 4, "max_unpool2x2");
  if (idx.dims != input.dims())
    throw Error(ErrorKind::ShapeMismatch,
                "max_unpool2x2: indices " + to_string(idx.dims) +
                    " vs input " + to_string(input.dims()));
  if (idx.input_dims != out_dims)
    throw Error(ErrorKind::ShapeMismatch,
                "max_unpool2x2: indices were recorded for " +
                    to_string(idx.input_dims) + ", requested " +
                    to_string(out_dims));
  idx.validate();
  TensorF32 out(out_dims);
  for (std::size_t i = 0; i < input.size(); ++i)
    out[static_cast<std::size_t>(idx.argmax[i])] = input[i];
  return out;
}

// ---------------------------------------------------------------------------
// Elementwise

TensorF32 batchnorm_infer(const TensorF32& input, std::span<const float> gamma,
                          std::span<const float> beta,
                          std::span<const float> mean,
                          std::span<const float> var, float eps) {
  require_rank(input, 4, "batchnorm_infer");
  const std::size_t C = input.c();
  if (gamma.size() != C || beta.size() != C || mean.size() != C ||
      var.size() != C)
    throw Error(ErrorKind::ShapeMismatch,
                "batchnorm_infer: parameter length does not match " +
                    std::to_string(C) + " channels");
  for (float v : var)
    if (!(v >= 0.0f))
      throw Error(ErrorKind::InvalidArgument,
                  "batchnorm_infer: negative variance");
  TensorF32 out = input;
  const std::size_t HW = input.h() * input.w();
  for (std::size_t n = 0; n < input.n(); ++n) {
    for (std::size_t c = 0; c < C; ++c) {
      const float inv = 1.0f / std::sqrt(var[c] + eps);
      float* p = out.data().data() + (n * C + c) * HW;
      for (std::size_t i = 0; i < HW; ++i)
        p[i] = gamma[c] * (p[i] - mean[c]) * inv + beta[c];
    }
  }
  return out;
}

TensorF32 prelu(const TensorF32& input, std::span<const float> slope) {
  require_rank(input, 4, "prelu");
  const std::size_t C = input.c();
  if (slope.size() != C)
    throw Error(ErrorKind::ShapeMismatch,
                "prelu: slope length does not match channels");
  TensorF32 out = input;
  const std::size_t HW = input.h() * input.w();
  for (std::size_t n = 0; n < input.n(); ++n)
    for (std::size_t c = 0; c < C; ++c) {
      float* p = out.data().data() + (n * C + c) * HW;
      for (std::size_t i = 0; i < HW; ++i)
        if (!(p[i] > 0.0f)) p[i] *= slope[c];
    }
  return out;
}

TensorF32 sigmoid(const TensorF32& input) {
  TensorF32 out = input;
  for (auto& v : out.data()) {
    // Branch on sign so exp never overflows.
    if (v >= 0.0f) {
      v = 1.0f / (1.0f + std::exp(-v));
    } else {
      const float e = std::exp(v);
      v = e / (1.0f + e);
    }
  }
  return out;
}

TensorF32 spatial_dropout(const TensorF32& input, double p, Mode mode,
                          std::uint64_t seed) {
  if (!(p >= 0.0 && p < 1.0))
    throw Error(ErrorKind::InvalidArgument,
                "spatial_dropout: p must be in [0, 1)");
  if (mode == Mode::Infer || p == 0.0) return input;
  require_rank(input, 4, "spatial_dropout");
  TensorF32 out = input;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution drop(p);
  const float scale = static_cast<float>(1.0 / (1.0 - p));
  const std::size_t HW = input.h() * input.w();
  for (std::size_t plane = 0; plane < input.n() * input.c(); ++plane) {
    float* ptr = out.data().data() + plane * HW;
    const bool zero = drop(rng);
    for (std::size_t i = 0; i < HW; ++i) ptr[i] = zero ? 0.0f : ptr[i] * scale;
  }
  return out;
}

TensorF32 channel_zero_pad(const TensorF32& input,
                           std::size_t target_channels) {
  require_rank(input, 4, "channel_zero_pad");
  if (target_channels < input.c())
    throw Error(ErrorKind::InvalidArgument,
                "channel_zero_pad: target " + std::to_string(target_channels) +
                    " < input channels " + std::to_string(input.c()));
  TensorF32 out({input.n(), target_channels, input.h(), input.w()});
  const std::size_t plane = input.c() * input.h() * input.w();
  for (std::size_t n = 0; n < input.n(); ++n)
    std::copy_n(input.data().data() + n * plane, plane,
                out.data().data() + n * target_channels * input.h() * input.w());
  return out;
}

TensorF32 add(const TensorF32& a, const TensorF32& b) {
  require_same_dims(a, b, "add");
  TensorF32 out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

TensorF32 concat_channels(const TensorF32& a, const TensorF32& b) {
  require_rank(a, 4, "concat_channels");
  require_rank(b, 4, "concat_channels");
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w())
    throw Error(ErrorKind::ShapeMismatch, "concat_channels: " +
                                              to_string(a.dims()) + " vs " +
                                              to_string(b.dims()));
  const std::size_t HW = a.h() * a.w();
  TensorF32 out({a.n(), a.c() + b.c(), a.h(), a.w()});
  float* o = out.data().data();
  for (std::size_t n = 0; n < a.n(); ++n) {
    o = std::copy_n(a.data().data() + n * a.c() * HW, a.c() * HW, o);
    o = std::copy_n(b.data().data() + n * b.c() * HW, b.c() * HW, o);
  }
  return out;
}

}  // namespace lane
