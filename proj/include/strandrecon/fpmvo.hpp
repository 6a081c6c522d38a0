#pragma once

#include "strandrecon/camera.hpp"
#include "strandrecon/geometry.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace strandrecon {

struct FpmvoParams {
  double pixel_offset = 5.0;      // lambda, px
  double depth_half_range = 5.0;  // Delta, mm
  int depth_samples = 11;         // S, odd
  int top_views = 5;              // K
  int patch_size = 5;             // P, odd
  double eps_vis = 5.0;           // mm
  bool stochastic_depth = false;  // draw offsets from `seed` instead of the uniform grid
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

// Depth offsets delta^(s), ascending. The uniform grid always contains 0.
std::vector<double> depth_offsets(const FpmvoParams& params);

/// Candidates contributed by one of the top-K views of a point.
struct ViewCandidates {
  int view = 0;          // index into the view list
  double weight = 0.0;   // C_v(u) * V_v(p)
  Vec2 uv = Vec2::Zero();  // projection of the point
  std::vector<Vec3> offset_points;  // one per depth sample
  std::vector<Vec3> directions;     // unit, one per depth sample
};

/// Top-K views of a point ordered by ascending view index.
struct CandidateSet {
  std::vector<ViewCandidates> views;
  int samples() const { return views.empty() ? 0 : static_cast<int>(views.front().directions.size()); }
};

struct FusedCandidates {
  std::vector<Vec3> directions;     // d_f^(s), member of layer s
  std::vector<Vec3> offset_points;  // winning view's offset point per layer
  std::vector<double> consistency;  // sigma of the winner per layer
  std::vector<int> winner;          // position in CandidateSet::views
};

// Work counters; the per-point model is K*S*(K + P^2).
struct OpCounts {
  std::uint64_t points = 0;
  std::uint64_t back_projections = 0;
  std::uint64_t similarity_terms = 0;  // G_ij evaluations
  std::uint64_t patch_terms = 0;       // sim_p * C_p evaluations

  OpCounts& operator+=(const OpCounts& o) {
    points += o.points;
    back_projections += o.back_projections;
    similarity_terms += o.similarity_terms;
    patch_terms += o.patch_terms;
    return *this;
  }
};

/// Offsets the projection along the local 2D orientation, samples S
/// depths around the depth found there and back-projects them into
/// candidate directions for each of the K best-weighted visible views.
/// nullopt when no view sees the point with positive weight.
std::optional<CandidateSet> sample_candidates(const Vec3& p, std::span<const CameraView> views,
                                              const FpmvoParams& params, OpCounts* ops = nullptr);

/// Per depth layer, picks the candidate with the highest weighted
/// absolute-cosine consistency against the other views (ties: lowest view).
FusedCandidates fuse_medoid(const CandidateSet& cands, OpCounts* ops = nullptr);

/// Chooses the depth layer whose reprojected offset best matches the
/// per-view orientation patches, and returns the direction to its fused
/// offset point.
Vec3 patch_refine(const Vec3& p, const FusedCandidates& fused, const CandidateSet& cands,
                  std::span<const CameraView> views, const FpmvoParams& params, OpCounts* ops = nullptr);

// Best layer index used by patch_refine; -1 when every view-layer pair is degenerate.
int select_layer(const Vec3& p, const FusedCandidates& fused, const CandidateSet& cands,
                 std::span<const CameraView> views, const FpmvoParams& params, OpCounts* ops = nullptr);

struct OuterResult {
  OrientedPointCloud points;
  std::size_t input_points = 0;
  std::size_t dropped = 0;
  OpCounts ops;
};

/// Runs sampling, fusion and patch refinement on every point. Points are
/// processed in independent slices; output order follows input order and
/// is identical for any worker count. Throws PipelineError when nothing
/// survives.
OuterResult optimize_outer(const PointCloud& cloud, std::span<const CameraView> views, const FpmvoParams& params,
                           int workers = 1);

}  // namespace strandrecon
