#include "lane/enet.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "lane/error.hpp"

namespace lane {

namespace {

LayerSpec bottleneck(int id, std::string name, Variant v, int out,
                     int dilation = 1) {
  return LayerSpec{id, std::move(name), LayerKind::Bottleneck, v, out,
                   dilation};
}

LayerSpec dilated(int id, std::string name, int out, int d) {
  return bottleneck(id, std::move(name), Variant::Dilated, out, d);
}

}  // namespace

ArchSpec build_enet21(bool shared_heads, int projection_ratio) {
  if (projection_ratio < 1)
    throw Error(ErrorKind::InvalidArgument, "projection_ratio must be >= 1");
  ArchSpec s;
  s.projection_ratio = projection_ratio;
  s.shared_heads = shared_heads;
  auto& L = s.layers;
  L.push_back({1, "initial", LayerKind::Initial, Variant::Plain, 16, 1});
  // Stage 1
  L.push_back(bottleneck(2, "bottleneck1.0", Variant::Downsampling, 64));
  L.push_back(dilated(3, "bottleneck1.1", 64, 2));
  L.push_back(dilated(4, "bottleneck1.2", 64, 4));
  // Stage 2
  L.push_back(bottleneck(5, "bottleneck2.0", Variant::Downsampling, 128));
  L.push_back(bottleneck(6, "bottleneck2.1", Variant::Plain, 128));
  L.push_back(dilated(7, "bottleneck2.2", 128, 2));
  L.push_back(dilated(8, "bottleneck2.3", 128, 4));
  L.push_back(dilated(9, "bottleneck2.4", 128, 8));
  L.push_back(dilated(10, "bottleneck2.5", 128, 16));
  // Stage 3: same as stage 2 without the downsampler.
  L.push_back(bottleneck(11, "bottleneck3.1", Variant::Plain, 128));
  L.push_back(dilated(12, "bottleneck3.2", 128, 2));
  L.push_back(dilated(13, "bottleneck3.3", 128, 4));
  L.push_back(dilated(14, "bottleneck3.4", 128, 8));
  L.push_back(dilated(15, "bottleneck3.5", 128, 16));
  // Stage 4
  L.push_back(bottleneck(16, "bottleneck4.0", Variant::Upsampling, 64));
  L.push_back(bottleneck(17, "bottleneck4.1", Variant::Plain, 64));
  L.push_back(bottleneck(18, "bottleneck4.2", Variant::Plain, 64));

  const std::array<std::pair<const char*, int>, 3> heads{
      {{"seg", kSegChannels}, {"haf", kHafChannels}, {"vaf", kVafChannels}}};
  for (std::size_t h = 0; h < 3; ++h) {
    auto& head = s.heads[h];
    head.name = heads[h].first;
    head.out_channels = heads[h].second;
    head.layers = {
        bottleneck(19, "bottleneck5.0", Variant::Plain, 64),
        bottleneck(20, "bottleneck5.1", Variant::Plain, 64),
        LayerSpec{21, "conv", LayerKind::Conv1x1, Variant::Plain,
                  head.out_channels, 1},
    };
  }
  return s;
}

void validate(const ArchSpec& spec) {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorKind::InvalidArgument, "ArchSpec: " + msg);
  };
  if (spec.layers.empty() || spec.layers.front().kind != LayerKind::Initial)
    fail("first layer must be the initial block");
  if (spec.projection_ratio < 1) fail("projection_ratio must be >= 1");
  int initial = 0;
  static const std::set<int> allowed{1, 2, 4, 8, 16};
  auto check_layer = [&](const LayerSpec& l) {
    if (l.kind == LayerKind::Initial) ++initial;
    if (!allowed.count(l.dilation))
      fail(l.name + ": dilation " + std::to_string(l.dilation));
    if ((l.variant == Variant::Dilated) != (l.dilation > 1))
      fail(l.name + ": dilation does not match variant");
    if (l.out_channels < 1) fail(l.name + ": out_channels must be >= 1");
    if (l.name.starts_with("bottleneck3.") &&
        l.variant == Variant::Downsampling)
      fail("stage 3 must not downsample");
  };
  for (const auto& l : spec.layers) check_layer(l);
  for (const auto& h : spec.heads) {
    if (h.layers.empty() || h.layers.back().kind != LayerKind::Conv1x1)
      fail("head " + h.name + " must end in a 1x1 conv");
    for (const auto& l : h.layers) check_layer(l);
  }
  if (initial != 1) fail("exactly one initial block required");
  int downs = 0, ups = 0;
  for (const auto& l : spec.layers) {
    downs += l.variant == Variant::Downsampling;
    ups += l.variant == Variant::Upsampling;
    if (ups > downs) fail("upsampling without a matching downsampler");
  }
}

int internal_channels(const ArchSpec& spec, const LayerSpec& layer) {
  return std::max(1, layer.out_channels / spec.projection_ratio);
}

// ---------------------------------------------------------------------------
// Layer walk shared by slot listing, accounting and the forward pass.

namespace {

struct LayerInstance {
  const LayerSpec* layer;
  std::string branch;
  std::string prefix;  // qualified name, e.g. "seg.bottleneck5.0"
  int in_channels;
};

std::vector<LayerInstance> walk(const ArchSpec& spec) {
  std::vector<LayerInstance> out;
  int ch = spec.input_channels;
  for (const auto& l : spec.layers) {
    out.push_back({&l, "trunk", l.name, ch});
    ch = l.out_channels;
  }
  const int trunk_ch = ch;
  if (spec.shared_heads) {
    const auto& first = spec.heads[0].layers;
    for (std::size_t i = 0; i + 1 < first.size(); ++i) {
      out.push_back({&first[i], "shared", "shared." + first[i].name, ch});
      ch = first[i].out_channels;
    }
    for (const auto& h : spec.heads) {
      const auto& last = h.layers.back();
      out.push_back({&last, h.name, h.name + "." + last.name, ch});
    }
  } else {
    for (const auto& h : spec.heads) {
      ch = trunk_ch;
      for (const auto& l : h.layers) {
        out.push_back({&l, h.name, h.name + "." + l.name, ch});
        ch = l.out_channels;
      }
    }
  }
  return out;
}

void push_bn(std::vector<ParamSlot>& s, const std::string& p, std::size_t c) {
  s.push_back({p + ".gamma", {c}, true});
  s.push_back({p + ".beta", {c}, true});
  s.push_back({p + ".running_mean", {c}, false});
  s.push_back({p + ".running_var", {c}, false});
}

std::vector<ParamSlot> slots_for(const ArchSpec& spec,
                                 const LayerInstance& li) {
  std::vector<ParamSlot> s;
  const auto& l = *li.layer;
  const std::string& p = li.prefix;
  const auto in = static_cast<std::size_t>(li.in_channels);
  const auto out = static_cast<std::size_t>(l.out_channels);
  switch (l.kind) {
    case LayerKind::Initial: {
      if (l.out_channels <= li.in_channels)
        throw Error(ErrorKind::InvalidArgument,
                    "initial block needs more outputs than input channels");
      s.push_back({p + ".conv.weight", {out - in, in, 3, 3}, true});
      push_bn(s, p + ".bn", out);
      s.push_back({p + ".prelu", {out}, true});
      break;
    }
    case LayerKind::Conv1x1:
      s.push_back({p + ".weight", {out, in, 1, 1}, true});
      break;
    case LayerKind::Bottleneck: {
      const auto mid = static_cast<std::size_t>(internal_channels(spec, l));
      const std::size_t pk = l.variant == Variant::Downsampling ? 2 : 1;
      s.push_back({p + ".proj.weight", {mid, in, pk, pk}, true});
      push_bn(s, p + ".proj.bn", mid);
      s.push_back({p + ".proj.prelu", {mid}, true});
      s.push_back({p + ".main.weight", {mid, mid, 3, 3}, true});
      push_bn(s, p + ".main.bn", mid);
      s.push_back({p + ".main.prelu", {mid}, true});
      s.push_back({p + ".expand.weight", {out, mid, 1, 1}, true});
      push_bn(s, p + ".expand.bn", out);
      s.push_back({p + ".expand.prelu", {out}, true});
      if (l.variant == Variant::Upsampling) {
        s.push_back({p + ".skip.weight", {out, in, 1, 1}, true});
        push_bn(s, p + ".skip.bn", out);
      }
      s.push_back({p + ".out.prelu", {out}, true});
      break;
    }
  }
  return s;
}

void check_input(const ArchSpec& spec, const Dims& input) {
  if (input.size() != 3)
    throw Error(ErrorKind::InvalidArgument,
                "input dims must be (C, H, W), got " + to_string(input));
  if (input[0] != static_cast<std::size_t>(spec.input_channels))
    throw Error(ErrorKind::ShapeMismatch,
                "input has " + std::to_string(input[0]) + " channels, spec " +
                    "expects " + std::to_string(spec.input_channels));
  if (input[1] == 0 || input[2] == 0 || input[1] % 8 || input[2] % 8)
    throw Error(ErrorKind::InvalidArgument,
                "input height and width must be divisible by 8, got " +
                    to_string(input));
}

Dims output_dims(const LayerInstance& li, const Dims& in) {
  const auto& l = *li.layer;
  const auto out = static_cast<std::size_t>(l.out_channels);
  switch (l.kind) {
    case LayerKind::Initial:
      return {out, conv_output_size(in[1], 3, 2, 1, 1),
              conv_output_size(in[2], 3, 2, 1, 1)};
    case LayerKind::Conv1x1:
      return {out, in[1], in[2]};
    case LayerKind::Bottleneck:
      if (l.variant == Variant::Downsampling)
        return {out, conv_output_size(in[1], 2, 2, 1, 0),
                conv_output_size(in[2], 2, 2, 1, 0)};
      if (l.variant == Variant::Upsampling)
        return {out, transposed_output_size(in[1], 3, 2, 1, 1, 1),
                transposed_output_size(in[2], 3, 2, 1, 1, 1)};
      return {out, in[1], in[2]};
  }
  return in;
}

std::int64_t layer_flops(const ArchSpec& spec, const LayerInstance& li,
                         const Dims& in, const Dims& out) {
  using I = std::int64_t;
  const auto& l = *li.layer;
  const I cin = static_cast<I>(in[0]);
  const I hw_in = static_cast<I>(in[1] * in[2]);
  const I cout = static_cast<I>(out[0]);
  const I hw_out = static_cast<I>(out[1] * out[2]);
  constexpr I kBn = 2, kPrelu = 1, kAdd = 1, kPool = 3;
  switch (l.kind) {
    case LayerKind::Initial: {
      const I conv_out = cout - cin;
      return 2 * hw_out * conv_out * cin * 9 + kPool * hw_out * cin +
             (kBn + kPrelu) * hw_out * cout;
    }
    case LayerKind::Conv1x1:
      return 2 * hw_out * cout * cin;
    case LayerKind::Bottleneck: {
      const I mid = internal_channels(spec, l);
      I f = 0;
      if (l.variant == Variant::Downsampling) {
        f += 2 * hw_out * mid * cin * 4;                    // 2x2/s2 proj
        f += 2 * hw_out * mid * mid * 9;                    // main 3x3
        f += 2 * (kBn + kPrelu) * hw_out * mid;
        f += kPool * hw_out * cin;                          // main branch
      } else if (l.variant == Variant::Upsampling) {
        f += 2 * hw_in * mid * cin;                         // 1x1 proj
        f += 2 * hw_in * mid * mid * 9;                     // transposed 3x3
        f += (kBn + kPrelu) * (hw_in + hw_out) * mid;
        f += 2 * hw_in * cout * cin + kBn * hw_in * cout;   // skip conv + bn
      } else {
        f += 2 * hw_out * mid * cin;
        f += 2 * hw_out * mid * mid * 9;
        f += 2 * (kBn + kPrelu) * hw_out * mid;
      }
      f += 2 * hw_out * cout * mid;                         // expansion
      f += (kBn + kPrelu) * hw_out * cout;
      f += (kAdd + kPrelu) * hw_out * cout;                 // residual
      return f;
    }
  }
  return 0;
}

std::int64_t trainable_count(const std::vector<ParamSlot>& slots) {
  std::int64_t n = 0;
  for (const auto& s : slots)
    if (s.trainable) n += static_cast<std::int64_t>(product(s.dims));
  return n;
}

// Input dims seen by each instance of the walk; mirrors forward().
std::vector<Dims> instance_inputs(const ArchSpec& spec,
                                  const std::vector<LayerInstance>& inst,
                                  const Dims& input) {
  std::vector<Dims> ins;
  Dims cur = input, trunk_out, head_in;
  std::string current = "trunk";
  for (const auto& li : inst) {
    if (li.branch == "trunk") {
      ins.push_back(cur);
      trunk_out = cur = output_dims(li, cur);
      head_in = trunk_out;
      continue;
    }
    if (li.branch == "shared") {
      ins.push_back(cur);
      head_in = cur = output_dims(li, cur);
      current = "shared";
      continue;
    }
    if (li.branch != current) {
      current = li.branch;
      cur = spec.shared_heads ? head_in : trunk_out;
    }
    ins.push_back(cur);
    cur = output_dims(li, cur);
  }
  return ins;
}

}  // namespace

std::vector<ParamSlot> parameter_slots(const ArchSpec& spec) {
  std::vector<ParamSlot> all;
  for (const auto& li : walk(spec)) {
    auto s = slots_for(spec, li);
    all.insert(all.end(), s.begin(), s.end());
  }
  return all;
}

std::vector<LayerShape> shape_trace(const ArchSpec& spec, const Dims& input) {
  validate(spec);
  check_input(spec, input);
  const auto inst = walk(spec);
  const auto ins = instance_inputs(spec, inst, input);
  std::vector<LayerShape> trace;
  for (std::size_t i = 0; i < inst.size(); ++i)
    trace.push_back({inst[i].layer->id, inst[i].prefix, inst[i].branch,
                     output_dims(inst[i], ins[i])});
  return trace;
}

ArchReport count_params(const ArchSpec& spec) {
  validate(spec);
  ArchReport r;
  for (const auto& li : walk(spec)) {
    LayerReport lr{li.layer->id, li.prefix, li.branch, {},
                   trainable_count(slots_for(spec, li)), 0};
    r.total_params += lr.params;
    r.per_layer.push_back(std::move(lr));
  }
  return r;
}

ArchReport count_flops(const ArchSpec& spec, const Dims& input) {
  validate(spec);
  check_input(spec, input);
  const auto inst = walk(spec);
  const auto ins = instance_inputs(spec, inst, input);
  ArchReport r;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const Dims out = output_dims(inst[i], ins[i]);
    LayerReport lr{inst[i].layer->id, inst[i].prefix, inst[i].branch, out, 0,
                   layer_flops(spec, inst[i], ins[i], out)};
    r.total_flops += lr.flops;
    r.per_layer.push_back(std::move(lr));
  }
  return r;
}

ArchReport analyze(const ArchSpec& spec, const Dims& input) {
  ArchReport r = count_flops(spec, input);
  const ArchReport p = count_params(spec);
  for (std::size_t i = 0; i < r.per_layer.size(); ++i)
    r.per_layer[i].params = p.per_layer[i].params;
  r.total_params = p.total_params;
  return r;
}

// ---------------------------------------------------------------------------
// Weights

WeightStore random_weights(const ArchSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  WeightStore w;
  for (const auto& s : parameter_slots(spec)) {
    TensorF32 t(s.dims);
    const auto& n = s.name;
    if (n.ends_with(".weight")) {
      const double fan_in = static_cast<double>(product(s.dims) / s.dims[0]);
      const double scale = std::sqrt(12.0 / fan_in);
      for (auto& v : t.data()) v = static_cast<float>(u(rng) * scale);
    } else if (n.ends_with(".gamma")) {
      for (auto& v : t.data()) v = static_cast<float>(1.0 + 0.2 * u(rng));
    } else if (n.ends_with(".beta") || n.ends_with(".running_mean")) {
      for (auto& v : t.data()) v = static_cast<float>(0.2 * u(rng));
    } else if (n.ends_with(".running_var")) {
      for (auto& v : t.data()) v = static_cast<float>(1.0 + u(rng));
    } else if (n.ends_with(".prelu")) {
      for (auto& v : t.data()) v = kPreluInitSlope;
    }
    w.emplace(n, std::move(t));
  }
  return w;
}

WeightStore zero_weights(const ArchSpec& spec) {
  WeightStore w;
  for (const auto& s : parameter_slots(spec)) {
    const float fill = s.name.ends_with(".running_var") ? 1.0f
                       : s.name.ends_with(".prelu")     ? kPreluInitSlope
                                                        : 0.0f;
    w.emplace(s.name, TensorF32(s.dims, fill));
  }
  return w;
}

void validate_weights(const ArchSpec& spec, const WeightStore& w) {
  const auto slots = parameter_slots(spec);
  std::set<std::string> known;
  for (const auto& s : slots) {
    known.insert(s.name);
    auto it = w.find(s.name);
    if (it == w.end())
      throw Error(ErrorKind::MissingSlot, "missing weight: " + s.name);
    if (it->second.dims() != s.dims)
      throw Error(ErrorKind::ShapeMismatch,
                  "weight " + s.name + " has dims " +
                      to_string(it->second.dims()) + ", expected " +
                      to_string(s.dims));
  }
  for (const auto& [name, t] : w)
    if (!known.count(name))
      throw Error(ErrorKind::UnknownName, "unknown weight: " + name);
}

// ---------------------------------------------------------------------------
// Forward

namespace {

class Runner {
 public:
  Runner(const ArchSpec& spec, const WeightStore& w, Mode mode,
         std::uint64_t seed)
      : spec_(spec), w_(w), mode_(mode), seed_(seed) {}

  TensorF32 run(const LayerInstance& li, const TensorF32& x) {
    ++ordinal_;
    const auto& l = *li.layer;
    switch (l.kind) {
      case LayerKind::Initial: return initial(li.prefix, x);
      case LayerKind::Conv1x1:
        return conv2d(x, conv(li.prefix + ".weight"));
      case LayerKind::Bottleneck: return bottleneck(li.prefix, l, x);
    }
    return x;
  }

 private:
  const TensorF32& get(const std::string& name) const { return w_.at(name); }

  ConvParams conv(const std::string& name, int stride = 1, int dilation = 1,
                  int padding = 0) const {
    ConvParams p;
    p.kernel = get(name);
    p.stride = {stride, stride};
    p.dilation = {dilation, dilation};
    p.padding = {padding, padding};
    return p;
  }

  TensorF32 bn(const std::string& p, const TensorF32& x) const {
    return batchnorm_infer(x, get(p + ".gamma").data(),
                           get(p + ".beta").data(),
                           get(p + ".running_mean").data(),
                           get(p + ".running_var").data());
  }

  TensorF32 bn_prelu(const std::string& p, const TensorF32& x) const {
    return prelu(bn(p + ".bn", x), get(p + ".prelu").data());
  }

  TensorF32 initial(const std::string& p, const TensorF32& x) {
    auto c = conv2d(x, conv(p + ".conv.weight", 2, 1, 1));
    auto pooled = maxpool2x2_with_indices(x).output;
    return bn_prelu(p, concat_channels(c, pooled));
  }

  TensorF32 bottleneck(const std::string& p, const LayerSpec& l,
                       const TensorF32& x) {
    TensorF32 ext, main;
    switch (l.variant) {
      case Variant::Downsampling: {
        ext = bn_prelu(p + ".proj", conv2d(x, conv(p + ".proj.weight", 2)));
        ext = bn_prelu(p + ".main", conv2d(ext, conv(p + ".main.weight", 1,
                                                     1, 1)));
        auto pooled = maxpool2x2_with_indices(x);
        main = channel_zero_pad(pooled.output,
                                static_cast<std::size_t>(l.out_channels));
        indices_.push_back(std::move(pooled.indices));
        break;
      }
      case Variant::Upsampling: {
        if (indices_.empty())
          throw Error(ErrorKind::Integrity,
                      p + ": no pooling indices to unpool with");
        PoolIndices idx = std::move(indices_.back());
        indices_.pop_back();
        ext = bn_prelu(p + ".proj", conv2d(x, conv(p + ".proj.weight")));
        ConvParams up = conv(p + ".main.weight", 2, 1, 1);
        up.output_padding = {1, 1};
        ext = bn_prelu(p + ".main", transposed_conv2d(ext, up));
        auto skip = bn(p + ".skip.bn", conv2d(x, conv(p + ".skip.weight")));
        const Dims target = idx.input_dims;
        main = max_unpool2x2(skip, idx, target);
        break;
      }
      case Variant::Plain:
      case Variant::Dilated: {
        const int d = l.dilation;
        ext = bn_prelu(p + ".proj", conv2d(x, conv(p + ".proj.weight")));
        ext = bn_prelu(p + ".main",
                       conv2d(ext, conv(p + ".main.weight", 1, d, d)));
        main = x;
        break;
      }
    }
    ext = bn_prelu(p + ".expand", conv2d(ext, conv(p + ".expand.weight")));
    ext = spatial_dropout(ext, spec_.dropout, mode_, layer_seed());
    return prelu(add(main, ext), get(p + ".out.prelu").data());
  }

  std::uint64_t layer_seed() const {
    std::uint64_t z = seed_ + 0x9E3779B97F4A7C15ull * (ordinal_ + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  const ArchSpec& spec_;
  const WeightStore& w_;
  Mode mode_;
  std::uint64_t seed_;
  std::uint64_t ordinal_ = 0;
  std::vector<PoolIndices> indices_;
};

}  // namespace

ForwardResult forward(const ArchSpec& spec, const WeightStore& w,
                      const TensorF32& image, Mode mode, std::uint64_t seed) {
  validate(spec);
  require_rank(image, 4, "forward");
  check_input(spec, {image.c(), image.h(), image.w()});
  validate_weights(spec, w);

  Runner runner(spec, w, mode, seed);
  ForwardResult r;
  auto record = [&](const LayerInstance& li, const TensorF32& t) {
    r.trace.push_back({li.layer->id, li.prefix, li.branch,
                       {t.c(), t.h(), t.w()}});
  };

  const auto inst = walk(spec);
  TensorF32 x = image;
  std::size_t i = 0;
  for (; i < inst.size() && inst[i].branch == "trunk"; ++i) {
    x = runner.run(inst[i], x);
    record(inst[i], x);
  }
  const TensorF32 trunk = x;
  for (; i < inst.size() && inst[i].branch == "shared"; ++i) {
    x = runner.run(inst[i], x);
    record(inst[i], x);
  }
  const TensorF32 head_input = x;

  std::map<std::string, TensorF32> outputs;
  std::string current;
  for (; i < inst.size(); ++i) {
    if (inst[i].branch != current) {
      current = inst[i].branch;
      x = spec.shared_heads ? head_input : trunk;
    }
    x = runner.run(inst[i], x);
    record(inst[i], x);
    outputs[current] = x;
  }
  r.seg_logits = outputs.at(spec.heads[0].name);
  r.haf = outputs.at(spec.heads[1].name);
  r.vaf = outputs.at(spec.heads[2].name);
  return r;
}

}  // namespace lane
