#pragma once

#include "strandrecon/scalp.hpp"
#include "strandrecon/strand.hpp"
#include "strandrecon/volume.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace strandrecon {

struct PhgParams {
  double step = 0.0;              // mm; <= 0 selects voxel_size / 2
  int max_segment_vertices = 240;
  int batch_size = 4096;          // seeds traced against one occupancy snapshot
  int occupancy_cap = 4;          // committed strands per voxel
  bool per_step_commit = false;   // a trace counts its own voxels as it enters them
  int max_gap_steps = 2;          // consecutive steps allowed in unoccupied voxels
  double link_distance = 0.0;     // delta_d, mm; <= 0 selects 2 * step
  double link_angle_deg = 30.0;   // delta_theta
  int tangent_window = 3;         // vertices averaged for end tangents
  std::size_t n_root = 30000;     // scalp seeds; 0 uses ScalpMesh::seeds as given
  int multiplicity = 1;           // traces per seed, extra ones jittered
  double jitter = 0.5;            // mm, tangent-plane jitter of extra traces
  bool grow_segments = true;      // seed segments in voxels no strand reached
  bool smoothing = true;          // Laplacian pass over linked strands
  double smoothing_strength = 0.25;
  int smoothing_iterations = 2;
  double attach_radius = 4.0;     // mm
  int min_strand_vertices = 4;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
  double resolved_step(double voxel_size) const { return step > 0.0 ? step : 0.5 * voxel_size; }
  double resolved_link_distance(double voxel_size) const {
    return link_distance > 0.0 ? link_distance : 2.0 * resolved_step(voxel_size);
  }
  // Serial strict baseline: every step commits before the next one, so a
  // voxel holds at most one strand and a trace cannot re-enter its own path.
  PhgParams strict_occupancy() const {
    PhgParams p = *this;
    p.batch_size = 1;
    p.occupancy_cap = 1;
    p.per_step_commit = true;
    return p;
  }
};

struct GrowTimings {
  double guide_init = 0.0;          // s
  double segment_connection = 0.0;  // s, segment growth + linking
  double scalp_attachment = 0.0;    // s
};

struct GrowReport {
  GrowTimings timings;
  std::size_t seeds = 0;
  std::size_t guide_segments = 0;
  std::size_t grown_segments = 0;
  std::size_t links = 0;
  std::size_t attached = 0;
  std::size_t unrooted = 0;
  std::size_t discarded_short = 0;
  std::size_t batches = 0;
  std::vector<std::string> warnings;
};

/// Traces one polyline from `start` along the volume field. Stops on an
/// unoccupied neighbourhood, more than max_gap_steps consecutive steps in
/// unoccupied voxels, a voxel whose committed counter is at the cap, the
/// vertex limit, or leaving the grid. With per_step_commit the voxels the
/// trace has already left count toward the cap as well.
std::vector<Vec3> trace_strand(const OOVolume& vol, const Vec3& start, const Vec3& dir, const PhgParams& params);

/// Distinct voxels touched by a polyline, in first-visit order.
std::vector<std::size_t> visited_voxels(const VoxelGrid& grid, const std::vector<Vec3>& vertices);

/// Guide strands from the scalp seeds. Seeds are split into batches; all
/// traces of a batch read the same counter snapshot and their voxels are
/// committed together once the batch finishes.
StrandSet init_guide_strands(const ScalpMesh& scalp, OOVolume& vol, const PhgParams& params, int workers = 1,
                             GrowReport* report = nullptr);

/// Bidirectional segments seeded at occupied voxels that still have a zero
/// counter, batched like the guide strands. Each segment is oriented so it
/// starts at the end nearer the scalp.
StrandSet grow_segments(const ScalpMesh& scalp, OOVolume& vol, const PhgParams& params, int workers = 1,
                        GrowReport* report = nullptr);

// Unit tangent averaged over the last (or first) `window` edges, pointing
// along the polyline.
Vec3 end_tangent(const std::vector<Vec3>& v, int window);
Vec3 start_tangent(const std::vector<Vec3>& v, int window);

/// Accepted (end of i -> start of j) links: candidates satisfy
/// |end_i - start_j| < delta_d and <t_i, t_j> > cos(delta_theta), and are
/// accepted greedily in ascending (distance, i, j) order with each side used
/// once and no cycles. Rooted segments never receive a predecessor.
std::vector<std::pair<std::size_t, std::size_t>> link_pairs(const StrandSet& segments, double link_distance,
                                                            double link_angle_deg, int tangent_window,
                                                            int workers = 1);

StrandSet connect_segments(const StrandSet& segments, const PhgParams& params, double voxel_size, int workers = 1,
                           GrowReport* report = nullptr);

// Laplacian smoothing with fixed endpoints.
std::vector<Vec3> smooth_polyline(const std::vector<Vec3>& v, double strength, int iterations);

struct AttachResult {
  StrandSet strands;
  std::size_t attached = 0;
  std::size_t unrooted = 0;
};

/// Roots every unrooted strand whose nearer endpoint lies within r_attach
/// of the scalp: orients it so that endpoint comes first, prepends the
/// nearest scalp point and resamples to `step`. Runs strand by strand.
AttachResult attach_to_scalp(StrandSet strands, const ScalpMesh& scalp, double r_attach, double step);

struct GrowResult {
  StrandSet strands;
  GrowReport report;
};

/// Guide initialisation, segment growth and linking, then scalp
/// attachment. Counters in `vol` are reset first and left as committed.
GrowResult grow(const ScalpMesh& scalp, OOVolume& vol, const PhgParams& params, int workers = 1);

}  // namespace strandrecon
