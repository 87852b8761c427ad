#include "lane/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "lane/error.hpp"

namespace lane {

// ---------------------------------------------------------------------------
// LaneMask

int LaneMask::lane_count() const {
  std::int32_t m = 0;
  for (auto v : grid) m = std::max(m, v);
  return m;
}

std::size_t LaneMask::foreground_pixels() const {
  return static_cast<std::size_t>(
      std::count_if(grid.begin(), grid.end(), [](auto v) { return v > 0; }));
}

void LaneMask::validate() const {
  if (grid.size() != height * width)
    throw Error(ErrorKind::Integrity, "LaneMask: grid size mismatch");
  const int L = lane_count();
  std::vector<bool> seen(static_cast<std::size_t>(L) + 1, false);
  for (auto v : grid) {
    if (v < 0) throw Error(ErrorKind::Integrity, "LaneMask: negative id");
    seen[static_cast<std::size_t>(v)] = true;
  }
  for (int k = 1; k <= L; ++k)
    if (!seen[static_cast<std::size_t>(k)])
      throw Error(ErrorKind::Integrity,
                  "LaneMask: lane ids not contiguous, missing " +
                      std::to_string(k));
  std::vector<int> last(static_cast<std::size_t>(L) + 1);
  for (std::size_t y = 0; y < height; ++y) {
    std::fill(last.begin(), last.end(), -2);
    for (std::size_t x = 0; x < width; ++x) {
      const auto v = at(y, x);
      if (v == 0) continue;
      int& prev = last[static_cast<std::size_t>(v)];
      if (prev != -2 && prev != static_cast<int>(x) - 1)
        throw Error(ErrorKind::Integrity,
                    "LaneMask: lane " + std::to_string(v) +
                        " is not a single run in row " + std::to_string(y));
      prev = static_cast<int>(x);
    }
  }
}

TensorF32 LaneMask::to_tensor() const {
  TensorF32 t({1, height, width});
  for (std::size_t i = 0; i < grid.size(); ++i)
    t[i] = static_cast<float>(grid[i]);
  return t;
}

LaneMask LaneMask::from_tensor(const TensorF32& t) {
  const auto& d = t.dims();
  if (d.size() < 2 || product(d) != d[d.size() - 2] * d.back())
    throw Error(ErrorKind::ShapeMismatch,
                "LaneMask: expected a single-channel map, got " + to_string(d));
  LaneMask m(d[d.size() - 2], d.back());
  for (std::size_t i = 0; i < m.grid.size(); ++i) {
    const float v = t[i];
    if (!(v >= 0.0f) || v != std::floor(v))
      throw Error(ErrorKind::Integrity,
                  "LaneMask: non-integer or negative id in tensor");
    m.grid[i] = static_cast<std::int32_t>(v);
  }
  return m;
}

// ---------------------------------------------------------------------------
// AffinityPair

AffinityPair AffinityPair::zeros(std::size_t h, std::size_t w) {
  return {TensorF32({1, h, w}), TensorF32({2, h, w})};
}

namespace {

// Strips leading unit dims down to (C, H, W).
TensorF32 as_chw(const TensorF32& t, std::size_t channels, const char* what) {
  const auto& d = t.dims();
  if (d.size() < 2)
    throw Error(ErrorKind::ShapeMismatch,
                std::string(what) + ": rank too small " + to_string(d));
  const std::size_t h = d[d.size() - 2], w = d.back();
  if (t.size() != channels * h * w)
    throw Error(ErrorKind::ShapeMismatch,
                std::string(what) + ": expected " + std::to_string(channels) +
                    " channel(s), got " + to_string(d));
  return t.reshaped({channels, h, w});
}

}  // namespace

AffinityPair AffinityPair::from_tensors(const TensorF32& haf,
                                        const TensorF32& vaf) {
  AffinityPair p{as_chw(haf, 1, "haf"), as_chw(vaf, 2, "vaf")};
  if (p.haf.dim(1) != p.vaf.dim(1) || p.haf.dim(2) != p.vaf.dim(2))
    throw Error(ErrorKind::ShapeMismatch,
                "haf " + to_string(p.haf.dims()) + " vs vaf " +
                    to_string(p.vaf.dims()));
  return p;
}

// ---------------------------------------------------------------------------
// Encoding

double lane_center(std::span<const int> xs) {
  if (xs.empty()) return 0.0;
  const double mean =
      std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  return std::round(mean * 2.0) / 2.0;
}

AffinityPair encode_affinities(const LaneMask& mask) {
  try {
    mask.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Integrity,
                std::string("encode_affinities: rasterizer contract violated: ") +
                    e.what());
  }
  const std::size_t H = mask.height, W = mask.width;
  const auto L = static_cast<std::size_t>(mask.lane_count());
  AffinityPair af = AffinityPair::zeros(H, W);

  // Per-row, per-lane pixel lists and centers.
  std::vector<std::vector<std::vector<int>>> rows(
      H, std::vector<std::vector<int>>(L + 1));
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x)
      if (auto v = mask.at(y, x); v > 0)
        rows[y][static_cast<std::size_t>(v)].push_back(static_cast<int>(x));

  for (std::size_t yy = H; yy-- > 0;) {
    for (std::size_t l = 1; l <= L; ++l) {
      const auto& xs = rows[yy][l];
      if (xs.empty()) continue;
      const double c = lane_center(xs);
      const bool has_above = yy > 0 && !rows[yy - 1][l].empty();
      const double c_above = has_above ? lane_center(rows[yy - 1][l]) : 0.0;
      for (int x : xs) {
        const double dx = c - x;
        af.haf[yy * W + static_cast<std::size_t>(x)] =
            dx > 0 ? 1.0f : (dx < 0 ? -1.0f : 0.0f);
        double vx = 0.0, vy = -1.0;
        if (has_above) {
          const double ddx = c_above - x;
          const double n = std::hypot(ddx, 1.0);
          vx = ddx / n;
          vy = -1.0 / n;
        }
        af.vaf[yy * W + static_cast<std::size_t>(x)] = static_cast<float>(vx);
        af.vaf[(H + yy) * W + static_cast<std::size_t>(x)] =
            static_cast<float>(vy);
      }
    }
  }
  return af;
}

// ---------------------------------------------------------------------------
// Decoding

void DecodeConfig::validate() const {
  if (!(fg_threshold > 0.0 && fg_threshold < 1.0))
    throw Error(ErrorKind::InvalidArgument,
                "fg_threshold must lie in (0, 1)");
  if (!(assoc_threshold > 0.0))
    throw Error(ErrorKind::InvalidArgument, "assoc_threshold must be > 0");
  if (min_cluster_size < 1 || min_lane_rows < 1 || max_row_gap < 0)
    throw Error(ErrorKind::InvalidArgument,
                "min_cluster_size and min_lane_rows must be >= 1");
}

std::vector<Cluster> cluster_row_haf(std::span<const float> haf_row,
                                     std::span<const std::uint8_t> fg_row,
                                     int min_cluster_size) {
  if (haf_row.size() != fg_row.size())
    throw Error(ErrorKind::ShapeMismatch, "cluster_row_haf: row lengths differ");
  std::vector<Cluster> clusters;
  bool have_prev = false;
  float prev = 0.0f;
  for (std::size_t x = 0; x < haf_row.size(); ++x) {
    if (!fg_row[x]) continue;
    const float h = haf_row[x];
    if (!have_prev || (prev <= 0.0f && h > 0.0f)) clusters.emplace_back();
    clusters.back().push_back(static_cast<int>(x));
    prev = h;
    have_prev = true;
  }
  std::erase_if(clusters, [&](const Cluster& c) {
    return static_cast<int>(c.size()) < min_cluster_size;
  });
  return clusters;
}

double centroid(const Cluster& c) {
  return std::accumulate(c.begin(), c.end(), 0.0) /
         static_cast<double>(c.size());
}

double association_error(const ActiveLane& lane, double cx, int cy,
                         const AffinityPair& af) {
  if (lane.xs.empty()) return std::numeric_limits<double>::infinity();
  const double dy = static_cast<double>(cy - lane.row);
  const auto row = static_cast<std::size_t>(lane.row);
  double sum = 0.0;
  for (int x : lane.xs) {
    const double dx = cx - x;
    const double dist = std::hypot(dx, dy);
    const double vx = af.vaf_x(row, static_cast<std::size_t>(x));
    const double vy = af.vaf_y(row, static_cast<std::size_t>(x));
    sum += std::hypot(dx - vx * dist, dy - vy * dist);
  }
  return sum / static_cast<double>(lane.xs.size());
}

Assignment associate_clusters_vaf(std::span<const ActiveLane> lanes,
                                  std::span<const Cluster> clusters,
                                  const AffinityPair& af, int y_above,
                                  double tau) {
  Assignment a;
  a.errors.assign(lanes.size(), std::vector<double>(clusters.size()));
  std::vector<double> cx(clusters.size());
  for (std::size_t k = 0; k < clusters.size(); ++k) cx[k] = centroid(clusters[k]);

  std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
  for (std::size_t l = 0; l < lanes.size(); ++l)
    for (std::size_t k = 0; k < clusters.size(); ++k) {
      const double d = association_error(lanes[l], cx[k], y_above, af);
      a.errors[l][k] = d;
      if (d <= tau) candidates.emplace_back(d, l, k);
    }
  std::sort(candidates.begin(), candidates.end());

  std::vector<bool> lane_used(lanes.size(), false);
  std::vector<bool> cluster_used(clusters.size(), false);
  for (const auto& [d, l, k] : candidates) {
    if (lane_used[l] || cluster_used[k]) continue;
    lane_used[l] = cluster_used[k] = true;
    a.matches.emplace_back(l, k);
  }
  for (std::size_t k = 0; k < clusters.size(); ++k)
    if (!cluster_used[k]) a.new_lanes.push_back(k);
  for (std::size_t l = 0; l < lanes.size(); ++l)
    if (!lane_used[l]) a.unmatched_lanes.push_back(l);
  return a;
}

namespace {

struct Track {
  ActiveLane head;
  std::vector<std::pair<int, Cluster>> rows;  // (y, cluster), bottom-up
  bool active = true;
};

}  // namespace

DecodedLanes decode(const TensorF32& seg_prob, const AffinityPair& af,
                    const DecodeConfig& cfg) {
  cfg.validate();
  const std::size_t H = af.height(), W = af.width();
  const auto& sd = seg_prob.dims();
  if (sd.size() < 2 || sd[sd.size() - 2] != H || sd.back() != W ||
      seg_prob.size() != H * W)
    throw Error(ErrorKind::ShapeMismatch,
                "decode: seg " + to_string(sd) + " vs fields " +
                    to_string(af.haf.dims()));

  std::vector<std::uint8_t> fg(H * W);
  for (std::size_t i = 0; i < H * W; ++i)
    fg[i] = seg_prob[i] >= cfg.fg_threshold ? 1 : 0;

  std::vector<Track> tracks;
  for (std::size_t yy = H; yy-- > 0;) {
    const int y = static_cast<int>(yy);
    const auto clusters = cluster_row_haf(
        std::span<const float>(af.haf.data().subspan(yy * W, W)),
        std::span<const std::uint8_t>(fg.data() + yy * W, W),
        cfg.min_cluster_size);
    if (clusters.empty()) continue;

    std::vector<std::size_t> live;
    std::vector<ActiveLane> heads;
    for (std::size_t t = 0; t < tracks.size(); ++t) {
      auto& tr = tracks[t];
      if (!tr.active) continue;
      if (tr.head.row - y - 1 > cfg.max_row_gap) {
        tr.active = false;
        continue;
      }
      live.push_back(t);
      heads.push_back(tr.head);
    }
    const auto a =
        associate_clusters_vaf(heads, clusters, af, y, cfg.assoc_threshold);
    for (const auto& [l, k] : a.matches) {
      auto& tr = tracks[live[l]];
      tr.head = ActiveLane{tr.head.id, y, clusters[k]};
      tr.rows.emplace_back(y, clusters[k]);
    }
    for (std::size_t k : a.new_lanes) {
      Track tr;
      tr.head = ActiveLane{static_cast<int>(tracks.size()) + 1, y, clusters[k]};
      tr.rows.emplace_back(y, clusters[k]);
      tracks.push_back(std::move(tr));
    }
  }

  DecodedLanes out;
  out.height = H;
  out.width = W;
  out.cluster_map.assign(H * W, 0);
  int next_id = 1;
  for (const auto& tr : tracks) {
    const int span = tr.rows.front().first - tr.rows.back().first + 1;
    if (span < cfg.min_lane_rows) continue;
    DecodedLane lane{next_id, {}};
    for (const auto& [y, c] : tr.rows) {
      lane.points.push_back({centroid(c), static_cast<double>(y)});
      for (int x : c)
        out.cluster_map[static_cast<std::size_t>(y) * W +
                        static_cast<std::size_t>(x)] = next_id;
    }
    out.lanes.push_back(std::move(lane));
    ++next_id;
  }
  return out;
}

}  // namespace lane
