#pragma once

#include "strandrecon/geometry.hpp"
#include "strandrecon/strand.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace strandrecon {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// F1 = 2PR / (P + R), 0 when P + R == 0.
PRF make_prf(double precision, double recall);

struct MetricOptions {
  // 0 = same-voxel matching; r > 0 matches within a (2r+1)^3 voxel block.
  int dilation = 0;
};

/// Per-voxel sign-aligned mean tangents of a densified strand set on the
/// grid anchored at `origin`. Sorted by packed voxel key.
struct VoxelTangentSet {
  std::vector<std::int64_t> keys;
  std::vector<Vec3> tangents;
  std::size_t size() const { return keys.size(); }
};

// Shared grid origin: minimum corner of the ground-truth vertex bounds.
Vec3 metric_origin(const StrandSet& gt);
std::int64_t pack_voxel(int i, int j, int k);
VoxelTangentSet voxel_tangents(const StrandSet& strands, const Vec3& origin, double voxel_size);

/// Occupancy precision/recall on occupied-voxel sets. Throws DataError for
/// an empty ground truth; an empty reconstruction scores 0.
PRF occupancy_prf(const StrandSet& gt, const StrandSet& rec, double voxel_size, const MetricOptions& opt = {});

/// As occupancy, but a match additionally needs the mean tangents within
/// angle_deg (mod pi).
PRF orientation_prf(const StrandSet& gt, const StrandSet& rec, double voxel_size, double angle_deg,
                    const MetricOptions& opt = {});

struct MetricsEntry {
  double voxel_size = 0.0;
  double angle_deg = 0.0;
  PRF occupancy;
  PRF orientation;
};

struct MetricsReport {
  std::vector<MetricsEntry> entries;  // voxel-major, angle-minor
  std::size_t gt_strands = 0, rec_strands = 0;
  std::size_t gt_vertices = 0, rec_vertices = 0;
  std::vector<std::pair<std::string, double>> stage_seconds;  // filled by callers

  const MetricsEntry& at(double voxel_size, double angle_deg) const;  // throws DataError
};

struct MetricsGrid {
  std::vector<double> voxel_sizes{2.0, 3.0, 4.0};
  std::vector<double> angles_deg{20.0, 30.0, 40.0};
};

MetricsReport evaluate(const StrandSet& gt, const StrandSet& rec, const MetricsGrid& grid = {},
                       const MetricOptions& opt = {}, int workers = 1);

// Text table laid out as voxel size rows and angle column groups. Stage
// timings are appended only when include_timings is set.
std::string format_report(const MetricsReport& report, bool include_timings = false);
// Header "label,voxel_mm,angle_deg,occ_p,occ_r,occ_f1,ori_p,ori_r,ori_f1".
std::string format_csv(const MetricsReport& report, const std::string& label, bool header = true);

}  // namespace strandrecon
