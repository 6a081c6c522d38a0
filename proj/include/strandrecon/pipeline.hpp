#pragma once

#include "strandrecon/config.hpp"
#include "strandrecon/fpmvo.hpp"
#include "strandrecon/metrics.hpp"
#include "strandrecon/phg.hpp"
#include "strandrecon/synthgen.hpp"
#include "strandrecon/volume.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace strandrecon {

/// Back-projects every pixel with a valid depth in every view and keeps
/// the first sample per dedup_mm grid cell (views in order, pixels in
/// row-major order). dedup_mm 0 keeps everything.
PointCloud extract_shell(const std::vector<CameraView>& views, double dedup_mm, int workers = 1);

// Replaces each view's orientation/confidence with Gabor estimates from the
// grayscale image; depth is kept.
void apply_gabor(Scene& scene, const GaborParams& params, int workers = 1);

// Grid covering the cloud and the scalp, padded by two voxels.
VoxelGrid pipeline_grid(const PointCloud& cloud, const ScalpMesh& scalp, double voxel_size);

struct StageTiming {
  std::string name;
  double seconds = 0.0;
};

struct PipelineResult {
  std::size_t shell_points = 0;
  OuterResult outer;
  OOVolume volume;
  std::size_t filled = 0;
  GrowResult grown;
  MetricsReport metrics;
  std::vector<StageTiming> timings;
};

/// Shell extraction, outer optimisation, voxelisation and fill, growing,
/// and evaluation against scene.gt (skipped when the scene has none).
/// Failures are rethrown as PipelineError carrying the stage name.
PipelineResult run_pipeline(const Scene& scene, const PipelineConfig& cfg);

// Volume from an oriented cloud: voxelize on pipeline_grid, then fill.
FillResult build_volume(const OrientedPointCloud& cloud, const ScalpMesh& scalp, const PipelineConfig& cfg);

std::string format_timing_report(const PipelineResult& result);

struct BenchRow {
  std::string stage;
  int workers = 1;
  double seconds = 0.0;
  double speedup = 1.0;
};

/// FPMVO and PHG wall clock at each worker count (fastest of
/// cfg.bench_repeats runs); speedup is relative to the first row of a stage.
std::vector<BenchRow> run_bench(const Scene& scene, const PipelineConfig& cfg);
std::string format_bench_csv(const std::vector<BenchRow>& rows);  // stage,workers,seconds,speedup

// Text point files, one point per line: "x y z" or "x y z dx dy dz".
void write_points(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_points(const std::filesystem::path& path);
void write_oriented_points(const std::filesystem::path& path, const OrientedPointCloud& cloud);
OrientedPointCloud read_oriented_points(const std::filesystem::path& path);

}  // namespace strandrecon
