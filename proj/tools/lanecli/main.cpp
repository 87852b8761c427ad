// lanecli: encode labels, decode fields, score predictions, inspect the
// network and run synthetic round trips.

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "io.hpp"
#include "lane/error.hpp"
#include "lane/parallel.hpp"
#include "lane/version.hpp"

namespace {

using namespace lanecli;

int run(std::vector<std::string> args);

int cmd_rerun(const std::string& manifest_path, const std::string& out) {
  std::ifstream in(manifest_path);
  if (!in)
    throw lane::Error(lane::ErrorKind::Io, "cannot open: " + manifest_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw lane::Error(lane::ErrorKind::InvalidArgument,
                      std::string("bad manifest: ") + e.what());
  }
  if (!j.contains("args") || !j["args"].is_array())
    throw lane::Error(lane::ErrorKind::InvalidArgument,
                      "manifest has no args list");
  auto args = j["args"].get<std::vector<std::string>>();
  if (!args.empty() && args.front() == "rerun")
    throw lane::Error(lane::ErrorKind::InvalidArgument,
                      "manifest records a rerun");
  if (!out.empty()) {
    bool replaced = false;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--out" && i + 1 < args.size()) {
        args[i + 1] = out;
        replaced = true;
      } else if (args[i].rfind("--out=", 0) == 0) {
        args[i] = "--out=" + out;
        replaced = true;
      }
    }
    if (!replaced) {
      args.push_back("--out");
      args.push_back(out);
    }
  }
  return run(std::move(args));
}

unsigned resolve_jobs(unsigned flag) {
  if (const char* env = std::getenv("LANECLI_JOBS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw lane::Error(lane::ErrorKind::InvalidArgument,
                      std::string("LANECLI_JOBS must be a positive integer, got '") +
                          env + "'");
  }
  return flag ? flag : lane::default_jobs();
}

int run(std::vector<std::string> args) {
  CLI::App app{"Lane detection with horizontal and vertical affinity fields"};
  app.set_version_flag("--version", lane::kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  unsigned jobs = 0;
  app.add_option("--jobs", jobs,
                 "worker threads (default: all cores; LANECLI_JOBS overrides)");

  EncodeOptions enc;
  auto* s_enc = app.add_subcommand("encode", "rasterize TuSimple labels into mask/HAF/VAF maps");
  s_enc->add_option("--labels", enc.labels, "TuSimple JSON-lines label file")->required();
  s_enc->add_option("--out", enc.out, "output directory")->required();
  s_enc->add_option("--thickness", enc.thickness, "lane stroke width in map pixels")
      ->capture_default_str();
  s_enc->add_option("--res", enc.res, "map resolution WxH")->capture_default_str();

  DecodeOptions dec;
  auto* s_dec = app.add_subcommand("decode", "decode lane instances from seg/HAF/VAF maps");
  s_dec->add_option("--seg", dec.seg, "segmentation probabilities (AFT1)")->required();
  s_dec->add_option("--haf", dec.haf, "HAF map (AFT1)")->required();
  s_dec->add_option("--vaf", dec.vaf, "VAF map (AFT1)")->required();
  s_dec->add_option("--out", dec.out, "lanes JSON")->required();
  s_dec->add_flag("--seg-logits", dec.seg_logits, "apply a sigmoid to --seg first");
  s_dec->add_option("--fg-thresh", dec.cfg.fg_threshold)->capture_default_str();
  s_dec->add_option("--assoc-thresh", dec.cfg.assoc_threshold)->capture_default_str();
  s_dec->add_option("--min-cluster", dec.cfg.min_cluster_size)->capture_default_str();
  s_dec->add_option("--min-lane-rows", dec.cfg.min_lane_rows)->capture_default_str();
  s_dec->add_option("--max-row-gap", dec.cfg.max_row_gap)->capture_default_str();
  s_dec->add_option("--tusimple", dec.tusimple,
                    "also write a TuSimple prediction line here");
  s_dec->add_option("--raw-file", dec.raw_file, "raw_file key for --tusimple");
  s_dec->add_flag("--record-time", dec.record_time,
                  "add the decode time as run_time (makes output vary)");

  EvalOptions ev;
  auto* s_ev = app.add_subcommand("eval", "score TuSimple predictions against ground truth");
  s_ev->add_option("--pred", ev.pred, "predictions (JSON lines)");
  s_ev->add_option("--gt", ev.gt, "ground truth (JSON lines)");
  s_ev->add_option("--px-thresh", ev.cfg.px_threshold)->capture_default_str();
  s_ev->add_option("--lane-thresh", ev.cfg.lane_match_threshold)->capture_default_str();
  s_ev->add_option("--triple", ev.triple, "score an accuracy,fp,fn triple directly");
  s_ev->add_flag("--table", ev.table, "print an Accuracy/FP/FN/F1 table");
  s_ev->add_option("--out", ev.out, "write the result JSON here instead of stdout");

  ArchOptions ar;
  auto* s_ar = app.add_subcommand("arch", "per-layer shapes, parameters and FLOPs");
  s_ar->add_option("--input", ar.input, "input WxH")->capture_default_str();
  s_ar->add_flag("--shared-heads", ar.shared_heads, "share rows 19-20 between the heads");
  s_ar->add_option("--projection-ratio", ar.projection_ratio)->capture_default_str();
  s_ar->add_option("--report", ar.report, "sections: shapes,params,flops")
      ->capture_default_str();
  s_ar->add_flag("--json", ar.json, "print JSON instead of the table");
  s_ar->add_option("--out", ar.out, "also write the JSON report here");

  RoundtripOptions rt;
  auto* s_rt = app.add_subcommand("roundtrip", "encode/decode synthetic scenes and score identity");
  s_rt->add_option("--scenes", rt.scenes)->capture_default_str();
  s_rt->add_option("--seed", rt.seed)->capture_default_str();
  s_rt->add_option("--noise", rt.noise, "field perturbation sigma")->capture_default_str();
  s_rt->add_option("--merge-split", rt.merge_split, "fraction of lane-change scenes")
      ->capture_default_str();
  s_rt->add_flag("--quiet", rt.quiet, "aggregate line only");
  s_rt->add_option("--out", rt.out, "per-scene JSON report");

  InferOptions inf;
  auto* s_inf = app.add_subcommand("infer", "run the network on one image");
  auto* o_w = s_inf->add_option("--weights", inf.weights, "AFW1 weight file");
  auto* o_r = s_inf->add_flag("--random-init", inf.random_init, "seeded random weights");
  o_w->excludes(o_r);
  s_inf->add_option("--seed", inf.seed)->capture_default_str();
  s_inf->add_option("--image", inf.image, "P6 PPM or AFT1 (3,H,W) image")->required();
  s_inf->add_option("--out", inf.out, "output directory")->required();
  s_inf->add_flag("--decode", inf.decode, "decode lanes from the outputs");
  s_inf->add_flag("--shared-heads", inf.shared_heads);
  s_inf->add_option("--input", inf.input, "network input WxH")->capture_default_str();
  s_inf->add_option("--save-weights", inf.save_weights, "write the weights used");

  SynthOptions sy;
  auto* s_sy = app.add_subcommand("synth", "write a synthetic scene");
  s_sy->add_option("--seed", sy.seed)->capture_default_str();
  s_sy->add_option("--out", sy.out, "output directory")->required();
  s_sy->add_option("--lanes", sy.lanes, "lane count; omit for a random scene");
  s_sy->add_option("--curvature", sy.curvature, "lo,hi bend in map pixels")
      ->capture_default_str();
  s_sy->add_option("--spacing", sy.spacing)->capture_default_str();
  s_sy->add_option("--width", sy.width)->capture_default_str();
  s_sy->add_flag("--merge-split", sy.merge_split, "one lane ends mid-image");
  s_sy->add_option("--merge-split-prob", sy.merge_split_prob,
                   "lane-change probability for random scenes")
      ->capture_default_str();

  LossOptions lo;
  double weight = 0;
  auto* s_lo = app.add_subcommand("loss", "evaluate the training losses on saved maps");
  s_lo->add_option("--pred", lo.pred, "directory with seg_logits/haf/vaf .aft")
      ->required();
  s_lo->add_option("--gt", lo.gt, "directory with mask.aft")->required();
  auto* o_weight = s_lo->add_option("--weight", weight, "foreground weight (default Nbg/Nfg)");
  s_lo->add_option("--out", lo.out);

  std::string manifest, rerun_out;
  auto* s_re = app.add_subcommand("rerun", "repeat the command recorded in a manifest");
  s_re->add_option("--manifest", manifest)->required();
  s_re->add_option("--out", rerun_out, "redirect the outputs");

  Context ctx;
  ctx.args = args;
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }
  ctx.jobs = resolve_jobs(jobs);
  lane::set_default_jobs(ctx.jobs);

  if (*s_enc) return cmd_encode(ctx, enc);
  if (*s_dec) return cmd_decode(ctx, dec);
  if (*s_ev) return cmd_eval(ctx, ev);
  if (*s_ar) return cmd_arch(ctx, ar);
  if (*s_rt) return cmd_roundtrip(ctx, rt);
  if (*s_inf) return cmd_infer(ctx, inf);
  if (*s_sy) return cmd_synth(ctx, sy);
  if (*s_lo) {
    if (*o_weight) lo.weight = weight;
    return cmd_loss(ctx, lo);
  }
  if (*s_re) return cmd_rerun(manifest, rerun_out);
  return kInput;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run(std::move(args));
  } catch (const lane::Error& e) {
    std::cerr << "lanecli: " << lane::to_string(e.kind()) << ": " << e.what()
              << "\n";
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "lanecli: internal error: " << e.what() << "\n";
    return kInternal;
  }
}
