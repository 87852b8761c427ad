#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "io.hpp"
#include "lane/enet.hpp"
#include "lane/error.hpp"
#include "lane/kernels.hpp"
#include "lane/losses.hpp"
#include "lane/parallel.hpp"
#include "lane/synthlab.hpp"
#include "lane/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lanecli {

using lane::Error;
using lane::ErrorKind;

namespace {

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

json decode_config_json(const lane::DecodeConfig& c) {
  return {{"fg_threshold", c.fg_threshold},
          {"assoc_threshold", c.assoc_threshold},
          {"min_cluster_size", c.min_cluster_size},
          {"min_lane_rows", c.min_lane_rows},
          {"max_row_gap", c.max_row_gap}};
}

json lanes_json(const lane::DecodedLanes& d) {
  json lanes = json::array();
  for (const auto& l : d.lanes) {
    json pts = json::array();
    for (const auto& p : l.points) pts.push_back({p.x, p.y});
    lanes.push_back({{"id", l.id}, {"points", std::move(pts)}});
  }
  return lanes;
}

json decoded_json(const lane::DecodedLanes& d, const lane::DecodeConfig& cfg) {
  json j;
  j["version"] = lane::kVersion;
  j["config"] = decode_config_json(cfg);
  j["resolution"] = {d.height, d.width};
  j["lanes"] = lanes_json(d);
  return j;
}

json counts_json(const lane::EvalCounts& c) {
  return {{"correct_vertices", c.correct}, {"gt_vertices", c.gt_vertices},
          {"false_lanes", c.false_lanes},  {"pred_lanes", c.pred_lanes},
          {"missed_lanes", c.missed_lanes}, {"gt_lanes", c.gt_lanes}};
}

// Drops a leading batch axis of 1.
lane::TensorF32 squeeze_batch(const lane::TensorF32& t) {
  if (t.rank() == 4 && t.dim(0) == 1)
    return t.reshaped({t.dim(1), t.dim(2), t.dim(3)});
  return t;
}

void emit(const std::string& out, const json& j) {
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    write_atomic(out, text);
  }
}

std::vector<double> parse_doubles(const std::string& s, std::size_t n,
                                  const char* what) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  try {
    while (std::getline(ss, item, ',')) {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    }
  } catch (const std::logic_error&) {
    v.clear();
  }
  if (v.size() != n)
    throw Error(ErrorKind::InvalidArgument,
                std::string(what) + ": expected " + std::to_string(n) +
                    " comma-separated numbers, got '" + s + "'");
  return v;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t scene_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ index);
}

// ---------------------------------------------------------------------------

int cmd_encode(const Context& ctx, const EncodeOptions& o) {
  const auto [W, H] = parse_resolution(o.res);
  if (o.thickness < 1)
    throw Error(ErrorKind::InvalidArgument, "--thickness must be >= 1");
  const auto parsed = lane::parse_tusimple(o.labels);
  ensure_dir(o.out);

  const std::size_t n = parsed.annotations.size();
  std::vector<std::string> log(n);
  std::vector<bool> ok(n, false);
  lane::parallel_for(n, ctx.jobs, [&](std::size_t i) {
    const auto& ann = parsed.annotations[i];
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05zu", i);
    const std::string dir = join(o.out, name);
    try {
      std::vector<std::string> warnings;
      const auto mask = lane::rasterize(ann, H, W, o.thickness, &warnings);
      const auto af = lane::encode_affinities(mask);
      fs::create_directories(dir);
      write_tensor(join(dir, "mask.aft"), mask.to_tensor());
      write_tensor(join(dir, "haf.aft"), af.haf);
      write_tensor(join(dir, "vaf.aft"), af.vaf);
      std::string msg = std::string(name) + ": " + ann.raw_file + " lanes=" +
                        std::to_string(mask.lane_count());
      for (const auto& w : warnings) msg += "\n  warning: " + w;
      log[i] = msg;
      ok[i] = true;
    } catch (const std::exception& e) {
      log[i] = std::string(name) + ": " + ann.raw_file + " FAILED: " + e.what();
    }
  });

  Manifest m;
  m.command = "encode";
  m.args = ctx.args;
  m.config = {{"thickness", o.thickness}, {"width", W}, {"height", H}};
  m.inputs = {o.labels};
  json index = json::array();
  int failures = static_cast<int>(parsed.errors.size());
  for (const auto& e : parsed.errors)
    std::cerr << "line " << e.line << ": " << e.message << "\n";
  for (std::size_t i = 0; i < n; ++i) {
    std::cerr << log[i] << "\n";
    if (!ok[i]) {
      ++failures;
      continue;
    }
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05zu", i);
    index.push_back({{"frame", name},
                     {"raw_file", parsed.annotations[i].raw_file}});
    for (const char* f : {"mask.aft", "haf.aft", "vaf.aft"})
      m.outputs.push_back(join(name, f));
  }
  write_atomic(join(o.out, "index.json"), index.dump(2) + "\n");
  m.outputs.push_back("index.json");
  m.write(manifest_path_for_dir(o.out));
  std::cout << "encoded " << index.size() << " of " << n + parsed.errors.size()
            << " frames into " << o.out << "\n";
  return failures ? kInput : kOk;
}

// ---------------------------------------------------------------------------

int cmd_decode(const Context& ctx, const DecodeOptions& o) {
  o.cfg.validate();
  auto seg = read_tensor(o.seg);
  const auto haf = read_tensor(o.haf);
  const auto vaf = read_tensor(o.vaf);
  if (o.seg_logits) seg = lane::sigmoid(seg);
  const auto af = lane::AffinityPair::from_tensors(haf, vaf);
  const auto t0 = std::chrono::steady_clock::now();
  const auto decoded = lane::decode(seg, af, o.cfg);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();

  json j = decoded_json(decoded, o.cfg);

  Manifest m;
  m.command = "decode";
  m.args = ctx.args;
  m.config = decode_config_json(o.cfg);
  m.config["seg_logits"] = o.seg_logits;
  m.config["record_time"] = o.record_time;
  m.inputs = {o.seg, o.haf, o.vaf};
  m.outputs = {o.out};
  std::string line;
  if (!o.tusimple.empty()) {
    const auto hs = lane::tusimple_h_samples();
    auto ann = lane::lanes_to_annotation(
        decoded, hs, o.raw_file.empty() ? o.seg : o.raw_file);
    if (o.record_time) ann.run_time = ms;
    line = lane::to_json_line(ann) + "\n";
    m.outputs.push_back(o.tusimple);
  }
  write_atomic(o.out, j.dump(2) + "\n");
  if (!line.empty()) write_atomic(o.tusimple, line);
  m.write(manifest_path_for_file(o.out));
  std::cout << "decoded " << decoded.lanes.size() << " lanes -> " << o.out
            << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_eval(const Context& ctx, const EvalOptions& o) {
  o.cfg.validate();
  json j;
  j["version"] = lane::kVersion;
  j["config"] = {{"px_threshold", o.cfg.px_threshold},
                 {"lane_match_threshold", o.cfg.lane_match_threshold}};

  if (!o.triple.empty()) {
    const auto v = parse_doubles(o.triple, 3, "--triple");
    j["accuracy"] = v[0];
    j["fp"] = v[1];
    j["fn"] = v[2];
    j["f1"] = lane::f1_paper(v[0], v[1], v[2]);
    if (o.table)
      std::printf("%-12s %8s %8s %12s\n%12.2f %8.4f %8.4f %12.2f\n",
                  "Accuracy (%)", "FP", "FN", "F1-score (%)", 100 * v[0],
                  v[1], v[2], 100 * j["f1"].get<double>());
    else
      emit(o.out, j);
    return kOk;
  }
  if (o.pred.empty() || o.gt.empty())
    throw Error(ErrorKind::InvalidArgument,
                "eval needs --pred and --gt, or --triple");

  const auto pred = lane::parse_tusimple(o.pred);
  const auto gt = lane::parse_tusimple(o.gt);
  for (const auto* r : {&pred, &gt})
    for (const auto& e : r->errors)
      std::cerr << (r == &pred ? o.pred : o.gt) << ":" << e.line << ": "
                << e.message << "\n";
  if (!pred.errors.empty() || !gt.errors.empty()) return kInput;

  std::map<std::string, const lane::LaneAnnotation*> by_name;
  for (const auto& a : pred.annotations)
    if (!by_name.emplace(a.raw_file, &a).second)
      throw Error(ErrorKind::InvalidArgument,
                  "duplicate raw_file in predictions: " + a.raw_file);
  std::set<std::string> gt_names;
  std::vector<std::string> missing;
  std::vector<std::pair<const lane::LaneAnnotation*,
                        const lane::LaneAnnotation*>> frames;
  for (const auto& a : gt.annotations) {
    if (!gt_names.insert(a.raw_file).second)
      throw Error(ErrorKind::InvalidArgument,
                  "duplicate raw_file in ground truth: " + a.raw_file);
    auto it = by_name.find(a.raw_file);
    if (it == by_name.end()) {
      missing.push_back(a.raw_file);
    } else {
      frames.emplace_back(it->second, &a);
    }
  }
  std::vector<std::string> extra;
  for (const auto& [name, a] : by_name)
    if (!gt_names.count(name)) extra.push_back(name);
  std::sort(missing.begin(), missing.end());

  std::vector<lane::EvalResult> results(frames.size());
  lane::parallel_for(frames.size(), ctx.jobs, [&](std::size_t i) {
    results[i] = lane::evaluate_frame(*frames[i].first, *frames[i].second,
                                      o.cfg);
  });
  j["frames"] = frames.size();
  if (!results.empty()) {
    const auto r = lane::aggregate(results);
    j["accuracy"] = r.accuracy;
    j["fp"] = r.fp_rate;
    j["fn"] = r.fn_rate;
    j["f1"] = r.f1_defined ? json(r.f1) : json(nullptr);
    j["counts"] = counts_json(r.counts);
  }
  j["missing_in_pred"] = missing;
  j["unexpected_in_pred"] = extra;
  if (o.table && !results.empty()) {
    std::printf("%-12s %8s %8s %12s\n", "Accuracy (%)", "FP", "FN",
                "F1-score (%)");
    const double f1 = j["f1"].is_null() ? 0.0 : j["f1"].get<double>();
    std::printf("%12.2f %8.4f %8.4f %12.2f\n",
                100 * j["accuracy"].get<double>(), j["fp"].get<double>(),
                j["fn"].get<double>(), 100 * f1);
    if (!o.out.empty()) write_atomic(o.out, j.dump(2) + "\n");
  } else {
    emit(o.out, j);
  }
  if (!o.out.empty()) {
    Manifest m;
    m.command = "eval";
    m.args = ctx.args;
    m.config = j["config"];
    m.inputs = {o.pred, o.gt};
    m.outputs = {o.out};
    m.write(manifest_path_for_file(o.out));
  }
  for (const auto& name : missing)
    std::cerr << "missing prediction for " << name << "\n";
  for (const auto& name : extra)
    std::cerr << "prediction without ground truth: " << name << "\n";
  return missing.empty() && extra.empty() ? kOk : kMismatch;
}

// ---------------------------------------------------------------------------

int cmd_arch(const Context& ctx, const ArchOptions& o) {
  const auto [W, H] = parse_resolution(o.input);
  std::set<std::string> sections;
  {
    std::stringstream ss(o.report);
    std::string s;
    while (std::getline(ss, s, ',')) {
      if (s != "shapes" && s != "params" && s != "flops")
        throw Error(ErrorKind::InvalidArgument,
                    "--report takes shapes,params,flops; got '" + s + "'");
      sections.insert(s);
    }
  }
  const auto spec = lane::build_enet21(o.shared_heads, o.projection_ratio);
  const auto report = lane::analyze(spec, {3, H, W});

  json j;
  j["version"] = lane::kVersion;
  j["input"] = {{"channels", 3}, {"height", H}, {"width", W}};
  j["shared_heads"] = o.shared_heads;
  j["projection_ratio"] = o.projection_ratio;
  json layers = json::array();
  for (const auto& l : report.per_layer) {
    json e = {{"id", l.id}, {"name", l.name}, {"branch", l.branch}};
    if (sections.count("shapes")) e["output"] = l.output_dims;
    if (sections.count("params")) e["params"] = l.params;
    if (sections.count("flops")) e["flops"] = l.flops;
    layers.push_back(std::move(e));
  }
  j["layers"] = std::move(layers);
  if (sections.count("params")) j["total_params"] = report.total_params;
  if (sections.count("flops")) j["total_flops"] = report.total_flops;

  if (o.json) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::printf("%-4s %-22s %-7s", "id", "layer", "branch");
    if (sections.count("shapes")) std::printf(" %-16s", "output (CxHxW)");
    if (sections.count("params")) std::printf(" %10s", "params");
    if (sections.count("flops")) std::printf(" %14s", "flops");
    std::printf("\n");
    for (const auto& l : report.per_layer) {
      std::printf("%-4d %-22s %-7s", l.id, l.name.c_str(), l.branch.c_str());
      if (sections.count("shapes")) {
        const auto& d = l.output_dims;
        const std::string s = std::to_string(d[0]) + "x" +
                              std::to_string(d[1]) + "x" +
                              std::to_string(d[2]);
        std::printf(" %-16s", s.c_str());
      }
      if (sections.count("params"))
        std::printf(" %10lld", static_cast<long long>(l.params));
      if (sections.count("flops"))
        std::printf(" %14lld", static_cast<long long>(l.flops));
      std::printf("\n");
    }
    if (sections.count("params"))
      std::printf("total params: %lld (%.3fM)\n",
                  static_cast<long long>(report.total_params),
                  report.total_params / 1e6);
    if (sections.count("flops"))
      std::printf("total flops:  %lld (%.3fG)\n",
                  static_cast<long long>(report.total_flops),
                  report.total_flops / 1e9);
  }
  if (!o.out.empty()) {
    write_atomic(o.out, j.dump(2) + "\n");
    Manifest m;
    m.command = "arch";
    m.args = ctx.args;
    m.config = {{"input", o.input},
                {"shared_heads", o.shared_heads},
                {"projection_ratio", o.projection_ratio},
                {"report", o.report}};
    m.outputs = {o.out};
    m.write(manifest_path_for_file(o.out));
  }
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_roundtrip(const Context& ctx, const RoundtripOptions& o) {
  if (o.scenes < 1)
    throw Error(ErrorKind::InvalidArgument, "--scenes must be >= 1");
  if (!(o.noise >= 0))
    throw Error(ErrorKind::InvalidArgument, "--noise must be >= 0");
  const auto n = static_cast<std::size_t>(o.scenes);
  struct Row {
    std::uint64_t seed;
    lane::SceneSpec spec;
    int expected, decoded;
    double agreement;
  };
  std::vector<Row> rows(n);
  lane::parallel_for(n, ctx.jobs, [&](std::size_t i) {
    Row& r = rows[i];
    r.seed = scene_seed(o.seed, i);
    const auto scene = lane::sample_scene(r.seed, o.merge_split, &r.spec);
    const auto rt = lane::round_trip(scene.mask, o.noise, r.seed ^ 0x5EEDull);
    r.expected = rt.expected_lanes;
    r.decoded = rt.decoded_lanes;
    r.agreement = rt.agreement;
  });

  double sum = 0;
  int exact = 0;
  json per = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = rows[i];
    sum += r.agreement;
    exact += r.expected == r.decoded;
    if (!o.quiet)
      std::printf("scene %zu seed=%llu lanes=%d decoded=%d merge_split=%d "
                  "agreement=%.6f\n",
                  i, static_cast<unsigned long long>(r.seed), r.expected,
                  r.decoded, r.spec.merge_split ? 1 : 0, r.agreement);
    per.push_back({{"scene", i},
                   {"seed", r.seed},
                   {"lanes", r.expected},
                   {"decoded", r.decoded},
                   {"merge_split", r.spec.merge_split},
                   {"agreement", r.agreement}});
  }
  const double mean = sum / static_cast<double>(n);
  std::printf("aggregate scenes=%zu noise=%g exact_lane_count=%d/%zu "
              "agreement=%.6f\n",
              n, o.noise, exact, n, mean);

  const bool enforce = o.noise == 0.0;
  const bool pass = mean >= 0.99;
  if (!o.out.empty()) {
    json j = {{"version", lane::kVersion},
              {"scenes", per},
              {"agreement", mean},
              {"exact_lane_count", exact},
              {"threshold_enforced", enforce}};
    write_atomic(o.out, j.dump(2) + "\n");
    Manifest m;
    m.command = "roundtrip";
    m.args = ctx.args;
    m.config = {{"scenes", o.scenes},
                {"noise", o.noise},
                {"merge_split", o.merge_split}};
    m.seed = o.seed;
    m.outputs = {o.out};
    m.write(manifest_path_for_file(o.out));
  }
  if (enforce && !pass) {
    std::fprintf(stderr, "agreement %.6f below 0.99\n", mean);
    return kMismatch;
  }
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_infer(const Context& ctx, const InferOptions& o) {
  const auto [W, H] = parse_resolution(o.input);
  const auto spec = lane::build_enet21(o.shared_heads);
  if (o.random_init == !o.weights.empty())
    throw Error(ErrorKind::InvalidArgument,
                "give exactly one of --weights or --random-init");
  const auto weights = o.random_init ? lane::random_weights(spec, o.seed)
                                     : lane::load_weights(o.weights, spec);

  if (!fs::exists(o.image))
    throw Error(ErrorKind::Io, "image not found: " + o.image);
  lane::TensorF32 image;
  if (fs::path(o.image).extension() == ".aft") {
    image = read_tensor(o.image);
    if (image.rank() == 3) image = image.reshaped({1, image.dim(0), image.dim(1), image.dim(2)});
  } else {
    image = lane::read_ppm(o.image);
  }
  if (image.rank() != 4 || image.dim(0) != 1 || image.dim(1) != 3)
    throw Error(ErrorKind::ShapeMismatch,
                "image must be (3, H, W) or (1, 3, H, W), got " +
                    lane::to_string(image.dims()));
  image = lane::resize_bilinear(image, H, W);

  const auto r = lane::forward(spec, weights, image, lane::Mode::Infer, o.seed);
  ensure_dir(o.out);
  const auto logits = squeeze_batch(r.seg_logits);
  const auto prob = lane::sigmoid(logits);
  const auto haf = squeeze_batch(r.haf);
  const auto vaf = squeeze_batch(r.vaf);
  write_tensor(join(o.out, "seg.aft"), prob);
  write_tensor(join(o.out, "seg_logits.aft"), logits);
  write_tensor(join(o.out, "haf.aft"), haf);
  write_tensor(join(o.out, "vaf.aft"), vaf);

  Manifest m;
  m.command = "infer";
  m.args = ctx.args;
  m.config = {{"input", o.input},
              {"shared_heads", o.shared_heads},
              {"random_init", o.random_init},
              {"decode", o.decode}};
  if (o.random_init) m.seed = o.seed;
  m.inputs = {o.image};
  if (!o.weights.empty()) m.inputs.push_back(o.weights);
  m.outputs = {"seg.aft", "seg_logits.aft", "haf.aft", "vaf.aft"};

  if (o.decode) {
    const lane::DecodeConfig cfg;
    const auto decoded =
        lane::decode(prob, lane::AffinityPair::from_tensors(haf, vaf), cfg);
    write_atomic(join(o.out, "lanes.json"),
                 decoded_json(decoded, cfg).dump(2) + "\n");
    m.outputs.push_back("lanes.json");
    m.config["decode_config"] = decode_config_json(cfg);
  }
  if (!o.save_weights.empty()) {
    lane::save_weights(weights, o.save_weights);
    m.outputs.push_back(o.save_weights);
  }
  m.write(manifest_path_for_dir(o.out));
  std::cout << "seg " << lane::to_string(prob.dims()) << " haf "
            << lane::to_string(haf.dims()) << " vaf "
            << lane::to_string(vaf.dims()) << " -> " << o.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_synth(const Context& ctx, const SynthOptions& o) {
  lane::SceneSpec spec;
  lane::Scene scene;
  if (o.lanes > 0) {
    const auto c = parse_doubles(o.curvature, 2, "--curvature");
    spec.lane_count = o.lanes;
    spec.curvature_lo = c[0];
    spec.curvature_hi = c[1];
    spec.spacing = o.spacing;
    spec.width = o.width;
    spec.merge_split = o.merge_split;
    spec.seed = o.seed;
    scene = lane::generate(spec);
  } else {
    scene = lane::sample_scene(o.seed, o.merge_split_prob, &spec);
  }
  const auto af = lane::encode_affinities(scene.mask);
  lane::TensorF32 seg({1, scene.mask.height, scene.mask.width});
  for (std::size_t i = 0; i < scene.mask.grid.size(); ++i)
    seg[i] = scene.mask.grid[i] > 0 ? 1.0f : 0.0f;

  ensure_dir(o.out);
  write_tensor(join(o.out, "mask.aft"), scene.mask.to_tensor());
  write_tensor(join(o.out, "haf.aft"), af.haf);
  write_tensor(join(o.out, "vaf.aft"), af.vaf);
  write_tensor(join(o.out, "seg.aft"), seg);
  write_atomic(join(o.out, "label.json"),
               lane::to_json_line(scene.annotation) + "\n");

  Manifest m;
  m.command = "synth";
  m.args = ctx.args;
  m.config = {{"lane_count", spec.lane_count},
              {"curvature_lo", spec.curvature_lo},
              {"curvature_hi", spec.curvature_hi},
              {"spacing", spec.spacing},
              {"width", spec.width},
              {"merge_split", spec.merge_split},
              {"scene_seed", spec.seed},
              {"terminated_lane", scene.terminated_lane}};
  m.seed = o.seed;
  m.outputs = {"mask.aft", "haf.aft", "vaf.aft", "seg.aft", "label.json"};
  m.write(manifest_path_for_dir(o.out));
  std::cout << "scene with " << scene.mask.lane_count() << " lanes -> "
            << o.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_loss(const Context& ctx, const LossOptions& o) {
  const std::string f_logits = join(o.pred, "seg_logits.aft");
  const std::string f_haf = join(o.pred, "haf.aft");
  const std::string f_vaf = join(o.pred, "vaf.aft");
  const std::string f_mask = join(o.gt, "mask.aft");
  const auto logits = read_tensor(f_logits);
  const auto haf = read_tensor(f_haf);
  const auto vaf = read_tensor(f_vaf);
  const auto mask = lane::LaneMask::from_tensor(read_tensor(f_mask));
  const auto gt = lane::encode_affinities(mask);
  lane::TensorF32 target({1, mask.height, mask.width});
  for (std::size_t i = 0; i < mask.grid.size(); ++i)
    target[i] = mask.grid[i] > 0 ? 1.0f : 0.0f;
  const auto l = lane::total_loss(logits.reshaped(target.dims()), target,
                                  haf, vaf, gt, o.weight);
  json j = {{"version", lane::kVersion},
            {"foreground_weight",
             o.weight ? *o.weight : lane::default_foreground_weight(target)},
            {"wbce", l.wbce},
            {"iou", l.iou},
            {"af", l.af},
            {"total", l.total}};
  emit(o.out, j);
  if (!o.out.empty()) {
    Manifest m;
    m.command = "loss";
    m.args = ctx.args;
    m.config = {{"weight", o.weight ? json(*o.weight) : json(nullptr)}};
    m.inputs = {f_logits, f_haf, f_vaf, f_mask};
    m.outputs = {o.out};
    m.write(manifest_path_for_file(o.out));
  }
  return kOk;
}

}  // namespace lanecli
