#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lane/affinity.hpp"
#include "lane/dataset.hpp"
#include "lane/tusimple_eval.hpp"

namespace lanecli {

struct Context {
  std::vector<std::string> args;  // for the manifest
  unsigned jobs = 1;
};

struct EncodeOptions {
  std::string labels;
  std::string out;
  int thickness = lane::kDefaultThickness;
  std::string res = "160x88";
};

struct DecodeOptions {
  std::string seg, haf, vaf;
  std::string out;
  bool seg_logits = false;
  lane::DecodeConfig cfg;
  std::string tusimple;  // optional prediction line output
  std::string raw_file;
  bool record_time = false;  // adds run_time (ms) to the prediction line
};

struct EvalOptions {
  std::string pred, gt;
  lane::EvalConfig cfg;
  std::string triple;  // "acc,fp,fn"
  bool table = false;
  std::string out;
};

struct ArchOptions {
  std::string input = "640x352";
  bool shared_heads = false;
  int projection_ratio = 4;
  std::string report = "shapes,params,flops";
  bool json = false;
  std::string out;
};

struct RoundtripOptions {
  int scenes = 100;
  std::uint64_t seed = 0;
  double noise = 0.0;
  double merge_split = 0.2;
  bool quiet = false;
  std::string out;
};

struct InferOptions {
  std::string weights;
  bool random_init = false;
  std::uint64_t seed = 0;
  std::string image;
  std::string out;
  bool decode = false;
  bool shared_heads = false;
  std::string input = "640x352";
  std::string save_weights;
};

struct SynthOptions {
  std::uint64_t seed = 0;
  std::string out;
  int lanes = 0;  // 0 draws a random scene
  std::string curvature = "0,0";
  double spacing = 24.0;
  int width = lane::kDefaultThickness;
  bool merge_split = false;
  double merge_split_prob = 0.2;
};

/// --pred holds seg_logits.aft, haf.aft and vaf.aft (as written by infer);
/// --gt holds mask.aft (as written by synth or encode).
struct LossOptions {
  std::string pred, gt;
  std::optional<double> weight;
  std::string out;
};

int cmd_encode(const Context& ctx, const EncodeOptions& o);
int cmd_decode(const Context& ctx, const DecodeOptions& o);
int cmd_eval(const Context& ctx, const EvalOptions& o);
int cmd_arch(const Context& ctx, const ArchOptions& o);
int cmd_roundtrip(const Context& ctx, const RoundtripOptions& o);
int cmd_infer(const Context& ctx, const InferOptions& o);
int cmd_synth(const Context& ctx, const SynthOptions& o);
int cmd_loss(const Context& ctx, const LossOptions& o);

/// Per-scene seed used by `roundtrip`.
std::uint64_t scene_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace lanecli
