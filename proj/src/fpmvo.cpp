#include "strandrecon/fpmvo.hpp"

#include "strandrecon/errors.hpp"
#include "strandrecon/parallel.hpp"
#include "strandrecon/rng.hpp"

#include <algorithm>
#include <cmath>

namespace strandrecon {

void FpmvoParams::validate() const {
  if (depth_samples < 3 || depth_samples % 2 == 0) throw ConfigError("fpmvo.depth_samples must be odd and >= 3");
  if (top_views < 1) throw ConfigError("fpmvo.top_views must be >= 1");
  if (patch_size < 1 || patch_size % 2 == 0) throw ConfigError("fpmvo.patch_size must be odd");
  if (!(depth_half_range >= 0.0)) throw ConfigError("fpmvo.depth_half_range must be >= 0");
  if (!(eps_vis > 0.0)) throw ConfigError("fpmvo.eps_vis must be positive");
  if (!(pixel_offset > 0.0)) throw ConfigError("fpmvo.pixel_offset must be positive");
}

std::vector<double> depth_offsets(const FpmvoParams& params) {
  const int s = params.depth_samples;
  std::vector<double> out(static_cast<std::size_t>(s));
  if (params.stochastic_depth) {
    CounterRng rng(params.seed, hash_name("fpmvo-depth"));
    for (auto& d : out) d = rng.uniform(-params.depth_half_range, params.depth_half_range);
    std::sort(out.begin(), out.end());
    return out;
  }
  const int half = s / 2;
  for (int i = 0; i < s; ++i)
    out[static_cast<std::size_t>(i)] = half == 0 ? 0.0 : params.depth_half_range * (i - half) / half;
  return out;
}

namespace {

struct RankedView {
  int view;
  double weight;
  Vec2 uv;
  Vec2 orientation;
};

}  // namespace

std::optional<CandidateSet> sample_candidates(const Vec3& p, std::span<const CameraView> views,
                                              const FpmvoParams& params, OpCounts* ops) {
  std::vector<RankedView> ranked;
  for (std::size_t v = 0; v < views.size(); ++v) {
    const auto& cam = views[v];
    const double vis = visibility(cam, p, params.eps_vis);
    if (vis <= 0.0) continue;
    const auto proj = try_project(cam, p);
    const auto conf = sample_bilinear(cam.confidence, proj->uv);
    if (!conf || *conf <= 0.0) continue;
    const auto o = sample_orientation(cam.orientation, proj->uv);
    if (!o) continue;
    ranked.push_back({static_cast<int>(v), *conf * vis, proj->uv, *o});
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedView& a, const RankedView& b) {
    return a.weight != b.weight ? a.weight > b.weight : a.view < b.view;
  });

  const auto offsets = depth_offsets(params);
  CandidateSet set;
  for (const auto& rv : ranked) {
    if (static_cast<int>(set.views.size()) >= params.top_views) break;
    const auto& cam = views[static_cast<std::size_t>(rv.view)];
    const Vec2 shifted = rv.uv + params.pixel_offset * rv.orientation;
    const auto z = sample_depth(cam, shifted);
    if (!z) continue;  // sentinel or off-image at the shifted pixel

    ViewCandidates vc;
    vc.view = rv.view;
    vc.weight = rv.weight;
    vc.uv = rv.uv;
    bool ok = true;
    for (double delta : offsets) {
      const double zs = *z + delta;
      if (zs <= 0.0) {
        ok = false;
        break;
      }
      const Vec3 q = back_project(cam, shifted, zs);
      const Vec3 d = q - p;
      const double n = d.norm();
      if (n < 1e-9) {
        ok = false;
        break;
      }
      vc.offset_points.push_back(q);
      vc.directions.push_back(d / n);
    }
    if (ops) ops->back_projections += offsets.size();
    if (ok) set.views.push_back(std::move(vc));
  }
  if (set.views.empty()) return std::nullopt;
  std::sort(set.views.begin(), set.views.end(),
            [](const ViewCandidates& a, const ViewCandidates& b) { return a.view < b.view; });
  return set;
}

FusedCandidates fuse_medoid(const CandidateSet& cands, OpCounts* ops) {
  if (cands.views.empty()) throw DataError("fuse_medoid: empty candidate set");
  const int k = static_cast<int>(cands.views.size());
  const int s_count = cands.samples();
  FusedCandidates out;
  out.directions.resize(static_cast<std::size_t>(s_count));
  out.offset_points.resize(static_cast<std::size_t>(s_count));
  out.consistency.resize(static_cast<std::size_t>(s_count));
  out.winner.resize(static_cast<std::size_t>(s_count));

  double wsum = 0.0;
  for (const auto& v : cands.views) wsum += v.weight;

  for (int s = 0; s < s_count; ++s) {
    const auto su = static_cast<std::size_t>(s);
    int best = 0;
    double best_sigma = 1.0;
    if (k > 1) {
      best_sigma = -1.0;
      for (int i = 0; i < k; ++i) {
        const Vec3& di = cands.views[static_cast<std::size_t>(i)].directions[su];
        double acc = 0.0;
        for (int j = 0; j < k; ++j) {
          const auto& vj = cands.views[static_cast<std::size_t>(j)];
          acc += vj.weight * std::abs(di.dot(vj.directions[su]));
        }
        const double sigma = acc / wsum;
        if (sigma > best_sigma) {
          best_sigma = sigma;
          best = i;
        }
      }
    }
    const auto& win = cands.views[static_cast<std::size_t>(best)];
    out.directions[su] = win.directions[su];
    out.offset_points[su] = win.offset_points[su];
    out.consistency[su] = best_sigma;
    out.winner[su] = best;
  }
  if (ops) ops->similarity_terms += static_cast<std::uint64_t>(k) * k * s_count;
  return out;
}

int select_layer(const Vec3& p, const FusedCandidates& fused, const CandidateSet& cands,
                 std::span<const CameraView> views, const FpmvoParams& params, OpCounts* ops) {
  (void)p;
  const int half = params.patch_size / 2;
  const int s_count = static_cast<int>(fused.offset_points.size());
  int best = -1;
  double best_score = -1.0;
  for (int s = 0; s < s_count; ++s) {
    double score = 0.0;
    bool any = false;
    for (const auto& vc : cands.views) {
      const auto& cam = views[static_cast<std::size_t>(vc.view)];
      const auto q = try_project(cam, fused.offset_points[static_cast<std::size_t>(s)]);
      if (!q) continue;
      Vec2 r = q->uv - vc.uv;
      const double rn = r.norm();
      if (rn < 1e-6) continue;
      r /= rn;
      const int cx = static_cast<int>(std::floor(vc.uv.x() + 0.5));
      const int cy = static_cast<int>(std::floor(vc.uv.y() + 0.5));
      double patch_max = 0.0;
      for (int y = cy - half; y <= cy + half; ++y)
        for (int x = cx - half; x <= cx + half; ++x) {
          if (!cam.orientation.in_bounds(x, y)) continue;
          const double dot = r.x() * cam.orientation.at(x, y, 0) + r.y() * cam.orientation.at(x, y, 1);
          const double sim = std::max(dot, -dot);
          patch_max = std::max(patch_max, sim * cam.confidence.at(x, y));
        }
      if (ops) ops->patch_terms += static_cast<std::uint64_t>(params.patch_size) * params.patch_size;
      score += vc.weight * patch_max;
      any = true;
    }
    if (any && score > best_score) {
      best_score = score;
      best = s;
    }
  }
  return best;
}

Vec3 patch_refine(const Vec3& p, const FusedCandidates& fused, const CandidateSet& cands,
                  std::span<const CameraView> views, const FpmvoParams& params, OpCounts* ops) {
  if (fused.offset_points.empty()) throw DataError("patch_refine: no fused candidates");
  const int s = select_layer(p, fused, cands, views, params, ops);
  if (s < 0) {
    // Every view-layer pair degenerate: keep the most consistent fused direction.
    std::size_t best = 0;
    for (std::size_t i = 1; i < fused.consistency.size(); ++i)
      if (fused.consistency[i] > fused.consistency[best]) best = i;
    return fused.directions[best];
  }
  return (fused.offset_points[static_cast<std::size_t>(s)] - p).normalized();
}

OuterResult optimize_outer(const PointCloud& cloud, std::span<const CameraView> views, const FpmvoParams& params,
                           int workers) {
  params.validate();
  if (cloud.empty()) throw PipelineError("fpmvo", "empty input point cloud");
  if (views.empty()) throw PipelineError("fpmvo", "no camera views");

  std::vector<std::optional<Vec3>> dirs(cloud.size());
  const std::size_t slices = static_cast<std::size_t>(std::max(1, workers));
  std::vector<OpCounts> slice_ops(slices);
  const std::size_t chunk = (cloud.size() + slices - 1) / slices;

  parallel_for(slices, workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t t = b; t < e; ++t) {
      OpCounts& ops = slice_ops[t];
      const std::size_t lo = t * chunk;
      const std::size_t hi = std::min(cloud.size(), lo + chunk);
      for (std::size_t i = lo; i < hi; ++i) {
        const auto cands = sample_candidates(cloud[i], views, params, &ops);
        if (!cands) continue;
        const auto fused = fuse_medoid(*cands, &ops);
        dirs[i] = patch_refine(cloud[i], fused, *cands, views, params, &ops);
        ++ops.points;
      }
    }
  });

  OuterResult res;
  res.input_points = cloud.size();
  for (const auto& o : slice_ops) res.ops += o;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (dirs[i])
      res.points.push_back({cloud[i], *dirs[i]});
    else
      ++res.dropped;
  }
  if (res.points.empty()) throw PipelineError("fpmvo", "no point is visible with positive confidence in any view");
  return res;
}

}  // namespace strandrecon
