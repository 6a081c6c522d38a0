#include "strandrecon/phg.hpp"

#include "strandrecon/errors.hpp"
#include "strandrecon/parallel.hpp"
#include "strandrecon/rng.hpp"
#include "strandrecon/spatial.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <tuple>

namespace strandrecon {

void PhgParams::validate() const {
  if (step < 0.0) throw ConfigError("phg.step must be >= 0 (0 selects voxel_size / 2)");
  if (max_segment_vertices < 2) throw ConfigError("phg.max_segment_vertices must be >= 2");
  if (batch_size < 1) throw ConfigError("phg.batch_size must be >= 1");
  if (occupancy_cap < 1) throw ConfigError("phg.occupancy_cap must be >= 1");
  if (max_gap_steps < 0) throw ConfigError("phg.max_gap_steps must be >= 0");
  if (link_distance < 0.0) throw ConfigError("phg.link_distance must be >= 0 (0 selects 2 * step)");
  if (!(link_angle_deg > 0.0 && link_angle_deg < 90.0)) throw ConfigError("phg.link_angle_deg must be in (0, 90)");
  if (tangent_window < 1) throw ConfigError("phg.tangent_window must be >= 1");
  if (multiplicity < 1) throw ConfigError("phg.multiplicity must be >= 1");
  if (jitter < 0.0) throw ConfigError("phg.jitter must be >= 0");
  if (smoothing_strength < 0.0 || smoothing_strength > 1.0)
    throw ConfigError("phg.smoothing_strength must be in [0, 1]");
  if (smoothing_iterations < 0) throw ConfigError("phg.smoothing_iterations must be >= 0");
  if (!(attach_radius >= 0.0)) throw ConfigError("phg.attach_radius must be >= 0");
  if (min_strand_vertices < 2) throw ConfigError("phg.min_strand_vertices must be >= 2");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void warn(GrowReport* report, std::string msg) {
  if (report) report->warnings.push_back(std::move(msg));
}

Vec3 any_perpendicular(const Vec3& n) {
  const Vec3 a = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return n.cross(a).normalized();
}

struct TraceSeed {
  Vec3 position;
  Vec3 direction;
};

// Traces every seed of each batch against the counters as they stood when
// the batch began, then commits the visited voxels of the whole batch.
template <typename TraceFn>
std::vector<std::vector<Vec3>> trace_batch(OOVolume& vol, std::size_t count, int workers, TraceFn&& trace) {
  std::vector<std::vector<Vec3>> out(count);
  parallel_for(count, workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) out[i] = trace(i);
  });
  for (const auto& line : out)
    if (line.size() >= 2) vol.commit(visited_voxels(vol.grid(), line));
  return out;
}

}  // namespace

std::vector<Vec3> trace_strand(const OOVolume& vol, const Vec3& start, const Vec3& dir, const PhgParams& params) {
  const auto& g = vol.grid();
  const double step = params.resolved_step(g.voxel_size);
  const auto cap = static_cast<std::uint16_t>(std::min(params.occupancy_cap, 65535));
  std::vector<Vec3> verts{start};
  Vec3 v = start;
  Vec3 d = dir.normalized();
  int gap = 0;
  std::vector<std::size_t> own;  // voxels left behind, per_step_commit only
  std::optional<std::size_t> current;
  while (static_cast<int>(verts.size()) < params.max_segment_vertices) {
    const auto vox = g.voxel_of(v);
    if (!vox) break;
    int count = vol.counter(*vox);
    if (params.per_step_commit && vox != current) {
      count += static_cast<int>(std::count(own.begin(), own.end(), *vox));
      if (current) own.push_back(*current);
      current = vox;
    }
    if (count >= cap) break;
    if (vol.occupied(*vox)) {
      gap = 0;
    } else if (++gap > params.max_gap_steps) {
      break;
    }
    const auto o = sample_orientation(vol, v, d);
    if (!o) break;
    const Vec3 next = v + step * *o;
    if (!g.voxel_of(next)) break;
    v = next;
    d = *o;
    verts.push_back(v);
  }
  // Drop a trailing run that never re-entered occupied space.
  while (verts.size() > 1) {
    const auto vox = g.voxel_of(verts.back());
    if (vox && vol.occupied(*vox)) break;
    verts.pop_back();
  }
  return verts;
}

std::vector<std::size_t> visited_voxels(const VoxelGrid& grid, const std::vector<Vec3>& vertices) {
  std::vector<std::size_t> out;
  for (const auto& v : vertices) {
    const auto vox = grid.voxel_of(v);
    if (!vox) continue;
    if (std::find(out.begin(), out.end(), *vox) == out.end()) out.push_back(*vox);
  }
  return out;
}

StrandSet init_guide_strands(const ScalpMesh& scalp, OOVolume& vol, const PhgParams& params, int workers,
                             GrowReport* report) {
  params.validate();
  StrandSet out;
  if (scalp.seeds.empty()) {
    warn(report, "phg: no scalp seeds, no guide strands traced");
    return out;
  }
  if (vol.occupied_count() == 0) {
    warn(report, "phg: empty volume, no guide strands traced");
    return out;
  }
  const CounterRng base = CounterRng(params.seed).split("phg-jitter");
  std::vector<TraceSeed> seeds;
  seeds.reserve(scalp.seeds.size() * static_cast<std::size_t>(params.multiplicity));
  for (std::size_t i = 0; i < scalp.seeds.size(); ++i) {
    const auto& s = scalp.seeds[i];
    seeds.push_back({s.position, s.normal});
    if (params.multiplicity > 1) {
      CounterRng rng = base.split(static_cast<std::uint64_t>(i));
      const Vec3 a = any_perpendicular(s.normal);
      const Vec3 b = s.normal.cross(a);
      for (int m = 1; m < params.multiplicity; ++m) {
        const double r = params.jitter * std::sqrt(rng.uniform());
        const double phi = 2.0 * kPi * rng.uniform();
        seeds.push_back({s.position + r * (std::cos(phi) * a + std::sin(phi) * b), s.normal});
      }
    }
  }

  const auto bs = static_cast<std::size_t>(params.batch_size);
  for (std::size_t lo = 0; lo < seeds.size(); lo += bs) {
    const std::size_t n = std::min(bs, seeds.size() - lo);
    auto lines = trace_batch(vol, n, workers, [&](std::size_t i) {
      const auto& s = seeds[lo + i];
      return trace_strand(vol, s.position, s.direction, params);
    });
    if (report) ++report->batches;
    for (auto& line : lines) {
      if (line.size() < 2) continue;
      Strand st;
      st.vertices = std::move(line);
      st.rooted = true;
      st.source = StrandSource::traced;
      out.push_back(std::move(st));
    }
  }
  if (report) {
    report->seeds = seeds.size();
    report->guide_segments = out.size();
  }
  return out;
}

StrandSet grow_segments(const ScalpMesh& scalp, OOVolume& vol, const PhgParams& params, int workers,
                        GrowReport* report) {
  params.validate();
  StrandSet out;
  const auto candidates = vol.occupied_voxels();
  if (candidates.empty()) return out;
  const ScalpSurfaceIndex surface(scalp);
  const auto& g = vol.grid();
  const auto bs = static_cast<std::size_t>(params.batch_size);

  std::size_t cursor = 0;
  while (cursor < candidates.size()) {
    std::vector<std::size_t> batch;
    while (cursor < candidates.size() && batch.size() < bs) {
      const auto idx = candidates[cursor++];
      if (vol.counter(idx) == 0) batch.push_back(idx);
    }
    if (batch.empty()) break;
    auto lines = trace_batch(vol, batch.size(), workers, [&](std::size_t i) {
      const Vec3 c = g.center(batch[i]);
      const Vec3 o = vol.orientation(batch[i]);
      auto fwd = trace_strand(vol, c, o, params);
      auto bwd = trace_strand(vol, c, -o, params);
      std::vector<Vec3> line(bwd.rbegin(), bwd.rend());
      line.insert(line.end(), fwd.begin() + 1, fwd.end());
      if (line.size() >= 2 &&
          std::abs(surface.signed_distance(line.back())) < std::abs(surface.signed_distance(line.front())))
        std::reverse(line.begin(), line.end());
      return line;
    });
    if (report) ++report->batches;
    for (auto& line : lines) {
      if (line.size() < 2) continue;
      Strand st;
      st.vertices = std::move(line);
      st.source = StrandSource::traced;
      out.push_back(std::move(st));
    }
  }
  if (report) report->grown_segments = out.size();
  return out;
}

Vec3 end_tangent(const std::vector<Vec3>& v, int window) {
  const std::size_t n = v.size();
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(window), n - 1);
  Vec3 acc = Vec3::Zero();
  for (std::size_t k = n - w; k < n; ++k) {
    const Vec3 e = v[k] - v[k - 1];
    const double len = e.norm();
    if (len > 0.0) acc += e / len;
  }
  const double len = acc.norm();
  return len > 0.0 ? Vec3(acc / len) : Vec3::Zero();
}

Vec3 start_tangent(const std::vector<Vec3>& v, int window) {
  const std::size_t n = v.size();
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(window), n - 1);
  Vec3 acc = Vec3::Zero();
  for (std::size_t k = 1; k <= w; ++k) {
    const Vec3 e = v[k] - v[k - 1];
    const double len = e.norm();
    if (len > 0.0) acc += e / len;
  }
  const double len = acc.norm();
  return len > 0.0 ? Vec3(acc / len) : Vec3::Zero();
}

namespace {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> link_pairs(const StrandSet& segments, double link_distance,
                                                            double link_angle_deg, int tangent_window,
                                                            int workers) {
  const std::size_t n = segments.size();
  std::vector<std::pair<std::size_t, std::size_t>> links;
  if (n < 2) return links;
  for (const auto& s : segments)
    if (s.size() < 2) throw DataError("connect_segments: segment with fewer than 2 vertices");

  std::vector<IndexedPoint> starts;
  std::vector<Vec3> ends(n), t_end(n), t_start(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = segments[i].vertices;
    ends[i] = v.back();
    t_end[i] = end_tangent(v, tangent_window);
    t_start[i] = start_tangent(v, tangent_window);
    if (!segments[i].rooted) starts.push_back({v.front(), static_cast<std::int64_t>(i)});
  }
  const SpatialIndex index(std::move(starts));
  const auto hits = index.query_radius_batch(ends, link_distance, workers);
  const double cos_gate = std::cos(deg2rad(link_angle_deg));

  std::vector<std::tuple<double, std::size_t, std::size_t>> cands;
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& nb : hits[i]) {
      const auto j = static_cast<std::size_t>(nb.id);
      if (j == i) continue;
      const double dist = (ends[i] - segments[j].vertices.front()).norm();
      if (!(dist < link_distance)) continue;
      if (!(t_end[i].dot(t_start[j]) > cos_gate)) continue;
      cands.emplace_back(dist, i, j);
    }
  std::sort(cands.begin(), cands.end());

  std::vector<char> has_next(n, 0), has_prev(n, 0);
  UnionFind uf(n);
  for (const auto& [dist, i, j] : cands) {
    if (has_next[i] || has_prev[j]) continue;
    if (!uf.unite(i, j)) continue;
    has_next[i] = 1;
    has_prev[j] = 1;
    links.emplace_back(i, j);
  }
  return links;
}

std::vector<Vec3> smooth_polyline(const std::vector<Vec3>& v, double strength, int iterations) {
  std::vector<Vec3> cur = v;
  if (cur.size() < 3) return cur;
  std::vector<Vec3> next(cur.size());
  for (int it = 0; it < iterations; ++it) {
    next.front() = cur.front();
    next.back() = cur.back();
    for (std::size_t k = 1; k + 1 < cur.size(); ++k)
      next[k] = cur[k] + strength * (0.5 * (cur[k - 1] + cur[k + 1]) - cur[k]);
    std::swap(cur, next);
  }
  return cur;
}

StrandSet connect_segments(const StrandSet& segments, const PhgParams& params, double voxel_size, int workers,
                           GrowReport* report) {
  const double step = params.resolved_step(voxel_size);
  const auto links = link_pairs(segments, params.resolved_link_distance(voxel_size), params.link_angle_deg,
                                params.tangent_window, workers);
  if (report) report->links = links.size();
  const std::size_t n = segments.size();
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> next(n, kNone);
  std::vector<char> has_prev(n, 0);
  for (const auto& [i, j] : links) {
    next[i] = j;
    has_prev[j] = 1;
  }

  StrandSet out;
  for (std::size_t head = 0; head < n; ++head) {
    if (has_prev[head]) continue;
    if (next[head] == kNone) {
      out.push_back(segments[head]);
      continue;
    }
    Strand st;
    st.rooted = segments[head].rooted;
    st.source = StrandSource::linked;
    for (std::size_t s = head; s != kNone; s = next[s]) {
      const auto& v = segments[s].vertices;
      st.vertices.insert(st.vertices.end(), v.begin(), v.end());
    }
    if (params.smoothing) st.vertices = smooth_polyline(st.vertices, params.smoothing_strength, params.smoothing_iterations);
    st.vertices = resample_chords(st.vertices, step);
    out.push_back(std::move(st));
  }
  return out;
}

AttachResult attach_to_scalp(StrandSet strands, const ScalpMesh& scalp, double r_attach, double step) {
  AttachResult res;
  if (scalp.vertices.empty()) {
    for (const auto& s : strands)
      if (!s.rooted) ++res.unrooted;
    res.strands = std::move(strands);
    return res;
  }
  const ScalpSurfaceIndex surface(scalp);
  for (auto& s : strands) {
    if (s.rooted || s.vertices.empty()) {
      if (!s.rooted) ++res.unrooted;
      continue;
    }
    const Neighbor head = surface.nearest(s.vertices.front());
    const Neighbor tail = surface.nearest(s.vertices.back());
    const bool use_tail = tail.distance < head.distance;
    const Neighbor& hit = use_tail ? tail : head;
    if (!(hit.distance < r_attach)) {
      ++res.unrooted;
      continue;
    }
    if (use_tail) std::reverse(s.vertices.begin(), s.vertices.end());
    const Vec3 root = surface.points[static_cast<std::size_t>(hit.id)];
    if (hit.distance <= 0.5 * step)
      s.vertices.front() = root;
    else
      s.vertices.insert(s.vertices.begin(), root);
    s.vertices = resample_chords(s.vertices, step);
    s.tangents.clear();
    s.rooted = true;
    s.source = StrandSource::attached;
    ++res.attached;
  }
  res.strands = std::move(strands);
  return res;
}

GrowResult grow(const ScalpMesh& scalp, OOVolume& vol, const PhgParams& params, int workers) {
  params.validate();
  GrowResult res;
  GrowReport& rep = res.report;
  vol.reset_counters();
  const double voxel = vol.grid().voxel_size;
  const double step = params.resolved_step(voxel);

  if (vol.occupied_count() == 0) {
    rep.warnings.push_back("phg: empty volume, no strands grown");
    return res;
  }

  auto t0 = Clock::now();
  ScalpMesh seeded = scalp;
  if (params.n_root > 0) seeded.seeds = sample_scalp_seeds(scalp, params.n_root, params.seed);
  StrandSet segments = init_guide_strands(seeded, vol, params, workers, &rep);
  rep.timings.guide_init = seconds_since(t0);

  t0 = Clock::now();
  if (params.grow_segments) {
    StrandSet extra = grow_segments(seeded, vol, params, workers, &rep);
    segments.insert(segments.end(), std::make_move_iterator(extra.begin()), std::make_move_iterator(extra.end()));
  }
  StrandSet linked = connect_segments(segments, params, voxel, workers, &rep);
  rep.timings.segment_connection = seconds_since(t0);

  t0 = Clock::now();
  AttachResult att = attach_to_scalp(std::move(linked), seeded, params.attach_radius, step);
  rep.attached = att.attached;
  rep.unrooted = att.unrooted;
  for (auto& s : att.strands) {
    if (static_cast<int>(s.size()) < params.min_strand_vertices) {
      ++rep.discarded_short;
      continue;
    }
    res.strands.push_back(std::move(s));
  }
  rep.timings.scalp_attachment = seconds_since(t0);
  if (res.strands.empty()) rep.warnings.push_back("phg: no strand survived growing");
  return res;
}

}  // namespace strandrecon
