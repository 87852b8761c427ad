#include "lane/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "lane/error.hpp"

namespace lane {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Annotations

void LaneAnnotation::validate() const {
  for (std::size_t l = 0; l < lanes.size(); ++l) {
    if (lanes[l].size() != h_samples.size())
      throw Error(ErrorKind::InvalidArgument,
                  "lane " + std::to_string(l) + " has " +
                      std::to_string(lanes[l].size()) + " points but " +
                      std::to_string(h_samples.size()) + " h_samples");
    for (double x : lanes[l])
      if (x != kAbsent && !(x >= 0.0 && x <= kOrigWidth - 1))
        throw Error(ErrorKind::InvalidArgument,
                    "lane " + std::to_string(l) + " has x out of range: " +
                        std::to_string(x));
  }
}

int LaneAnnotation::present_vertices(std::size_t lane) const {
  return static_cast<int>(std::count_if(lanes.at(lane).begin(),
                                        lanes.at(lane).end(),
                                        [](double x) { return x != kAbsent; }));
}

LaneAnnotation parse_tusimple_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::InvalidArgument,
                std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object())
    throw Error(ErrorKind::InvalidArgument, "line is not a JSON object");
  for (const char* key : {"lanes", "h_samples", "raw_file"})
    if (!j.contains(key))
      throw Error(ErrorKind::InvalidArgument,
                  std::string("missing key '") + key + "'");
  LaneAnnotation a;
  try {
    a.raw_file = j.at("raw_file").get<std::string>();
    a.h_samples = j.at("h_samples").get<std::vector<int>>();
    a.lanes = j.at("lanes").get<std::vector<std::vector<double>>>();
    if (j.contains("run_time"))
      a.run_time = j.at("run_time").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument,
                std::string("wrong value type: ") + e.what());
  }
  a.validate();
  return a;
}

ParseResult parse_tusimple(std::istream& in) {
  ParseResult r;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      r.annotations.push_back(parse_tusimple_line(line));
    } catch (const Error& e) {
      r.errors.push_back({n, e.what()});
    }
  }
  return r;
}

ParseResult parse_tusimple(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open: " + path);
  return parse_tusimple(in);
}

namespace {

json x_value(double x) {
  if (x == std::floor(x) && std::abs(x) < 1e15)
    return json(static_cast<std::int64_t>(x));
  return json(x);
}

}  // namespace

std::string to_json_line(const LaneAnnotation& ann) {
  json lanes = json::array();
  for (const auto& lane : ann.lanes) {
    json l = json::array();
    for (double x : lane) l.push_back(x_value(x));
    lanes.push_back(std::move(l));
  }
  json j;
  j["lanes"] = std::move(lanes);
  j["h_samples"] = ann.h_samples;
  j["raw_file"] = ann.raw_file;
  if (ann.run_time) j["run_time"] = *ann.run_time;
  return j.dump();
}

void write_tusimple(std::ostream& out, std::span<const LaneAnnotation> anns) {
  for (const auto& a : anns) out << to_json_line(a) << '\n';
}

std::vector<int> tusimple_h_samples() {
  std::vector<int> h;
  for (int y = 160; y <= 710; y += 10) h.push_back(y);
  return h;
}

// ---------------------------------------------------------------------------
// Rasterization

namespace {

struct Vertex {
  double x, y;
};

// x of the polyline at y (vertices sorted by ascending y, y inside range).
double polyline_x(const std::vector<Vertex>& v, double y) {
  if (y <= v.front().y) return v.front().x;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (y <= v[i].y) {
      const double t = (y - v[i - 1].y) / (v[i].y - v[i - 1].y);
      return v[i - 1].x + t * (v[i].x - v[i - 1].x);
    }
  }
  return v.back().x;
}

// Keeps only the longest run of `id` in row y.
void trim_row(LaneMask& m, std::size_t y, std::int32_t id) {
  int best_start = -1, best_len = 0, start = -1;
  const int W = static_cast<int>(m.width);
  for (int x = 0; x <= W; ++x) {
    const bool on = x < W && m.at(y, static_cast<std::size_t>(x)) == id;
    if (on && start < 0) start = x;
    if (!on && start >= 0) {
      if (x - start > best_len) {
        best_len = x - start;
        best_start = start;
      }
      start = -1;
    }
  }
  for (int x = 0; x < W; ++x)
    if (m.at(y, static_cast<std::size_t>(x)) == id &&
        (x < best_start || x >= best_start + best_len))
      m.at(y, static_cast<std::size_t>(x)) = 0;
}

}  // namespace

LaneMask rasterize(const LaneAnnotation& ann, std::size_t height,
                   std::size_t width, int thickness,
                   std::vector<std::string>* warnings) {
  if (thickness < 1)
    throw Error(ErrorKind::InvalidArgument, "rasterize: thickness must be >= 1");
  ann.validate();
  LaneMask m(height, width);
  const double sx = static_cast<double>(width) / kOrigWidth;
  const double sy = static_cast<double>(height) / kOrigHeight;
  const double half = (thickness - 1) / 2.0;
  std::int32_t id = 0;

  for (std::size_t l = 0; l < ann.lanes.size(); ++l) {
    std::vector<Vertex> v;
    for (std::size_t i = 0; i < ann.h_samples.size(); ++i)
      if (ann.lanes[l][i] != kAbsent)
        v.push_back({ann.lanes[l][i] * sx, ann.h_samples[i] * sy});
    if (v.size() < 2) {
      if (warnings)
        warnings->push_back("lane " + std::to_string(l) +
                            " skipped: fewer than 2 present vertices");
      continue;
    }
    std::sort(v.begin(), v.end(),
              [](const Vertex& a, const Vertex& b) { return a.y < b.y; });
    ++id;
    const double y0 = v.front().y, y1 = v.back().y;
    const long r0 = std::max(0L, static_cast<long>(std::ceil(y0)));
    const long r1 = std::min(static_cast<long>(height) - 1,
                             static_cast<long>(std::floor(y1)));
    for (long r = r0; r <= r1; ++r) {
      // Horizontal extent of the polyline over this row's band keeps
      // shallow segments connected.
      const double ya = std::max(y0, r - 0.5), yb = std::min(y1, r + 0.5);
      double lo = std::min(polyline_x(v, ya), polyline_x(v, yb));
      double hi = std::max(polyline_x(v, ya), polyline_x(v, yb));
      const double mid = polyline_x(v, static_cast<double>(r));
      lo = std::min(lo, mid);
      hi = std::max(hi, mid);
      for (const auto& p : v)
        if (p.y > ya && p.y < yb) {
          lo = std::min(lo, p.x);
          hi = std::max(hi, p.x);
        }
      // Labels reach x = 1279, just past the last pixel centre; keep such
      // strokes on the image instead of losing the row.
      const double edge = static_cast<double>(width) - 1;
      lo = std::clamp(lo, 0.0, edge);
      hi = std::clamp(hi, 0.0, edge);
      const long left = static_cast<long>(std::floor(lo - half + 0.5));
      const long right = static_cast<long>(std::floor(hi + half + 0.5));
      for (long x = std::max(0L, left);
           x <= std::min(static_cast<long>(width) - 1, right); ++x)
        m.at(static_cast<std::size_t>(r), static_cast<std::size_t>(x)) = id;
    }
  }

  for (std::size_t y = 0; y < height; ++y)
    for (std::int32_t k = 1; k <= id; ++k) trim_row(m, y, k);

  // Relabel if a lane was completely overwritten.
  std::vector<std::int32_t> remap(static_cast<std::size_t>(id) + 1, 0);
  for (auto v : m.grid) remap[static_cast<std::size_t>(v)] = 1;
  remap[0] = 0;
  std::int32_t next = 0;
  for (std::int32_t k = 1; k <= id; ++k) {
    if (remap[static_cast<std::size_t>(k)]) {
      remap[static_cast<std::size_t>(k)] = ++next;
    } else if (warnings) {
      warnings->push_back("lane id " + std::to_string(k) +
                          " fully overwritten by later lanes");
    }
  }
  for (auto& v : m.grid) v = remap[static_cast<std::size_t>(v)];
  return m;
}

LaneAnnotation lanes_to_annotation(const DecodedLanes& decoded,
                                   std::span<const int> h_samples,
                                   std::string raw_file) {
  LaneAnnotation a;
  a.raw_file = std::move(raw_file);
  a.h_samples.assign(h_samples.begin(), h_samples.end());
  const double sx = static_cast<double>(kOrigWidth) / decoded.width;
  const double sy = static_cast<double>(decoded.height) / kOrigHeight;
  for (const auto& lane : decoded.lanes) {
    std::vector<Point2> pts = lane.points;
    std::sort(pts.begin(), pts.end(),
              [](const Point2& p, const Point2& q) { return p.y < q.y; });
    std::vector<double> xs(h_samples.size(), kAbsent);
    if (!pts.empty()) {
      for (std::size_t i = 0; i < h_samples.size(); ++i) {
        const double y = h_samples[i] * sy;
        double x;
        if (pts.size() == 1) {
          if (std::abs(y - pts[0].y) > 0.5) continue;
          x = pts[0].x;
        } else {
          if (y < pts.front().y - 1.0 || y > pts.back().y + 1.0) continue;
          std::size_t j = 1;
          while (j + 1 < pts.size() && pts[j].y < y) ++j;
          const auto& p = pts[j - 1];
          const auto& q = pts[j];
          x = p.x + (y - p.y) / (q.y - p.y) * (q.x - p.x);
        }
        xs[i] = std::clamp(x * sx, 0.0, kOrigWidth - 1.0);
      }
    }
    a.lanes.push_back(std::move(xs));
  }
  return a;
}

// ---------------------------------------------------------------------------
// Images

TensorF32 add_noise(const TensorF32& image, NoiseKind kind, double sigma,
                    std::uint64_t seed) {
  if (!(sigma >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "add_noise: sigma must be >= 0");
  if (sigma == 0.0) return image;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  TensorF32 out = image;
  for (auto& v : out.data()) {
    const double e = n(rng);
    const double x = kind == NoiseKind::Gaussian ? v + e : v * (1.0 + e);
    v = static_cast<float>(std::clamp(x, 0.0, 1.0));
  }
  return out;
}

TensorF32 image_from_rgb8(std::span<const std::uint8_t> rgb,
                          std::size_t height, std::size_t width) {
  if (rgb.size() != height * width * 3)
    throw Error(ErrorKind::ShapeMismatch,
                "image_from_rgb8: buffer is not H x W x 3");
  TensorF32 t({1, 3, height, width});
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        t.at(0, c, y, x) = rgb[(y * width + x) * 3 + c] / 255.0f;
  return t;
}

TensorF32 resize_bilinear(const TensorF32& image, std::size_t height,
                          std::size_t width) {
  require_rank(image, 4, "resize_bilinear");
  if (height == 0 || width == 0)
    throw Error(ErrorKind::InvalidArgument, "resize_bilinear: empty target");
  if (image.h() == height && image.w() == width) return image;
  const std::size_t H = image.h(), W = image.w();
  TensorF32 out({image.n(), image.c(), height, width});
  const double fy = static_cast<double>(H) / height;
  const double fx = static_cast<double>(W) / width;
  for (std::size_t n = 0; n < image.n(); ++n)
    for (std::size_t c = 0; c < image.c(); ++c)
      for (std::size_t y = 0; y < height; ++y) {
        const double sy = std::clamp((y + 0.5) * fy - 0.5, 0.0, H - 1.0);
        const auto y0 = static_cast<std::size_t>(sy);
        const std::size_t y1 = std::min(y0 + 1, H - 1);
        const double ty = sy - y0;
        for (std::size_t x = 0; x < width; ++x) {
          const double sx = std::clamp((x + 0.5) * fx - 0.5, 0.0, W - 1.0);
          const auto x0 = static_cast<std::size_t>(sx);
          const std::size_t x1 = std::min(x0 + 1, W - 1);
          const double tx = sx - x0;
          const double top = image.at(n, c, y0, x0) * (1 - tx) +
                             image.at(n, c, y0, x1) * tx;
          const double bot = image.at(n, c, y1, x0) * (1 - tx) +
                             image.at(n, c, y1, x1) * tx;
          out.at(n, c, y, x) = static_cast<float>(top * (1 - ty) + bot * ty);
        }
      }
  return out;
}

TensorF32 read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open: " + path);
  auto token = [&]() {
    std::string t;
    char ch;
    while (in.get(ch)) {
      if (ch == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(ch))) {
        if (!t.empty()) break;
        continue;
      }
      t.push_back(ch);
    }
    return t;
  };
  if (token() != "P6") throw Error(ErrorKind::BadMagic, "not a P6 PPM: " + path);
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(token());
    h = std::stoul(token());
    maxval = std::stoul(token());
  } catch (const std::exception&) {
    throw Error(ErrorKind::Integrity, "malformed PPM header: " + path);
  }
  if (w == 0 || h == 0 || maxval != 255)
    throw Error(ErrorKind::Integrity, "unsupported PPM: " + path);
  std::vector<std::uint8_t> rgb(w * h * 3);
  if (!in.read(reinterpret_cast<char*>(rgb.data()),
               static_cast<std::streamsize>(rgb.size())))
    throw Error(ErrorKind::Truncated, "truncated PPM: " + path);
  return image_from_rgb8(rgb, h, w);
}

FrameRecord make_frame_record(std::span<const std::uint8_t> rgb,
                              std::size_t height, std::size_t width,
                              const LaneAnnotation& ann, int thickness) {
  FrameRecord f;
  f.image = resize_bilinear(image_from_rgb8(rgb, height, width), kInputHeight,
                            kInputWidth);
  f.mask = rasterize(ann, kMapHeight, kMapWidth, thickness);
  f.annotation = ann;
  return f;
}

}  // namespace lane
