#include "strandrecon/pipeline.hpp"

#include "strandrecon/errors.hpp"
#include "strandrecon/orient2d.hpp"
#include "strandrecon/parallel.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace strandrecon {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(name, e.what());
  }
}

}  // namespace

PointCloud extract_shell(const std::vector<CameraView>& views, double dedup_mm, int workers) {
  std::vector<PointCloud> per_view(views.size());
  parallel_for(views.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t v = b; v < e; ++v) {
      const auto& cam = views[v];
      for (int y = 0; y < cam.depth.height; ++y)
        for (int x = 0; x < cam.depth.width; ++x) {
          const float z = cam.depth.at(x, y);
          if (z == kNoDepth || !(z > 0.0f)) continue;
          per_view[v].push_back(back_project(cam, Vec2(x, y), z));
        }
    }
  });
  PointCloud out;
  if (dedup_mm <= 0.0) {
    for (auto& pv : per_view) out.insert(out.end(), pv.begin(), pv.end());
    return out;
  }
  struct KeyHash {
    std::size_t operator()(const std::array<std::int64_t, 3>& k) const {
      std::uint64_t h = 1469598103934665603ull;
      for (auto v : k) h = (h ^ static_cast<std::uint64_t>(v)) * 1099511628211ull;
      return static_cast<std::size_t>(h);
    }
  };
  std::unordered_set<std::array<std::int64_t, 3>, KeyHash> seen;
  for (const auto& pv : per_view)
    for (const auto& p : pv) {
      const std::array<std::int64_t, 3> key{static_cast<std::int64_t>(std::floor(p.x() / dedup_mm)),
                                            static_cast<std::int64_t>(std::floor(p.y() / dedup_mm)),
                                            static_cast<std::int64_t>(std::floor(p.z() / dedup_mm))};
      if (seen.insert(key).second) out.push_back(p);
    }
  return out;
}

void apply_gabor(Scene& scene, const GaborParams& params, int workers) {
  const GaborBank bank = build_bank(params);
  if (scene.gray.size() != scene.views.size()) throw DataError("gabor front end needs a grayscale image per view");
  for (std::size_t v = 0; v < scene.views.size(); ++v) {
    if (scene.gray[v].empty()) throw DataError("missing grayscale image for view " + std::to_string(v));
    auto field = extract(scene.gray[v], bank, workers);
    auto& cam = scene.views[v];
    // Pixels without depth carry no usable observation.
    for (int y = 0; y < cam.height; ++y)
      for (int x = 0; x < cam.width; ++x)
        if (cam.depth.at(x, y) == kNoDepth) field.confidence.at(x, y) = 0.0f;
    cam.orientation = std::move(field.orientation);
    cam.confidence = std::move(field.confidence);
  }
}

VoxelGrid pipeline_grid(const PointCloud& cloud, const ScalpMesh& scalp, double voxel_size) {
  Aabb box = scalp.bounds();
  for (const auto& p : cloud) box.extend(p);
  if (box.empty()) throw DataError("empty geometry, cannot size the volume");
  box.pad(2.0 * voxel_size);
  return VoxelGrid::covering(box, voxel_size);
}

FillResult build_volume(const OrientedPointCloud& cloud, const ScalpMesh& scalp, const PipelineConfig& cfg) {
  PointCloud positions;
  positions.reserve(cloud.size());
  for (const auto& p : cloud) positions.push_back(p.position);
  const VoxelGrid grid = pipeline_grid(positions, scalp, cfg.voxel_size);
  OOVolume vol = voxelize(cloud, cfg.voxel_size, grid);
  if (!cfg.fill) return FillResult{std::move(vol), 0};
  return fill_interior(vol, scalp, cfg.fill_params, cfg.workers);
}

PipelineResult run_pipeline(const Scene& input, const PipelineConfig& cfg) {
  cfg.validate();
  PipelineResult res;
  const int workers = cfg.workers;

  auto t0 = Clock::now();
  Scene gabor_scene;
  const Scene* scene = &input;
  if (cfg.gabor) {
    gabor_scene = input;
    stage("gabor", [&] {
      apply_gabor(gabor_scene, cfg.gabor_params, workers);
      return 0;
    });
    scene = &gabor_scene;
  }
  const PointCloud shell = stage("extract-shell", [&] {
    auto s = extract_shell(scene->views, cfg.shell_dedup, workers);
    if (s.empty()) throw DataError("no valid depth in any view");
    return s;
  });
  res.shell_points = shell.size();
  res.outer = stage("fpmvo", [&] { return optimize_outer(shell, scene->views, cfg.fpmvo, workers); });
  res.timings.push_back({"Outer PointCloud Optimization", seconds_since(t0)});

  t0 = Clock::now();
  auto filled = stage("volume", [&] { return build_volume(res.outer.points, scene->scalp, cfg); });
  res.volume = std::move(filled.volume);
  res.filled = filled.filled;
  res.timings.push_back({"Inner PointCloud stand-in", seconds_since(t0)});

  t0 = Clock::now();
  res.grown = stage("grow", [&] { return grow(scene->scalp, res.volume, cfg.phg, workers); });
  res.timings.push_back({"Hair Growing", seconds_since(t0)});
  res.timings.push_back({"  guide init", res.grown.report.timings.guide_init});
  res.timings.push_back({"  segment growth/connection", res.grown.report.timings.segment_connection});
  res.timings.push_back({"  scalp attachment", res.grown.report.timings.scalp_attachment});

  if (!input.gt.empty()) {
    t0 = Clock::now();
    res.metrics = stage("eval", [&] {
      return evaluate(input.gt, res.grown.strands, cfg.metrics, cfg.metric_options, workers);
    });
    res.timings.push_back({"Evaluation", seconds_since(t0)});
  }
  return res;
}

std::string format_timing_report(const PipelineResult& r) {
  std::ostringstream os;
  os << "stage                                  seconds\n";
  for (const auto& t : r.timings) {
    char line[128];
    std::snprintf(line, sizeof line, "%-36s %10.4f\n", t.name.c_str(), t.seconds);
    os << line;
  }
  os << "\nshell points " << r.shell_points << ", oriented " << r.outer.points.size() << ", dropped "
     << r.outer.dropped << "\n";
  os << "occupied voxels " << r.volume.occupied_count() << " (filled " << r.filled << ")\n";
  const auto& g = r.grown.report;
  os << "seeds " << g.seeds << ", guide segments " << g.guide_segments << ", grown segments " << g.grown_segments
     << ", links " << g.links << "\n";
  os << "strands " << r.grown.strands.size() << ", attached " << g.attached << ", unrooted " << g.unrooted
     << ", discarded short " << g.discarded_short << "\n";
  for (const auto& w : g.warnings) os << "warning: " << w << "\n";
  return os.str();
}

std::vector<BenchRow> run_bench(const Scene& scene, const PipelineConfig& cfg) {
  cfg.validate();
  const PointCloud shell = stage("extract-shell", [&] { return extract_shell(scene.views, cfg.shell_dedup, 1); });
  std::vector<BenchRow> rows;
  OuterResult reference;
  for (std::size_t i = 0; i < cfg.bench_workers.size(); ++i) {
    const int w = cfg.bench_workers[i];
    double best = 1e300;
    for (int r = 0; r < cfg.bench_repeats; ++r) {
      const auto t0 = Clock::now();
      auto out = stage("fpmvo", [&] { return optimize_outer(shell, scene.views, cfg.fpmvo, w); });
      best = std::min(best, seconds_since(t0));
      if (i == 0 && r == 0) reference = std::move(out);
    }
    rows.push_back({"fpmvo", w, best, 1.0});
  }
  const FillResult vol = stage("volume", [&] { return build_volume(reference.points, scene.scalp, cfg); });
  for (std::size_t i = 0; i < cfg.bench_workers.size(); ++i) {
    const int w = cfg.bench_workers[i];
    double best = 1e300;
    for (int r = 0; r < cfg.bench_repeats; ++r) {
      OOVolume v = vol.volume;
      const auto t0 = Clock::now();
      stage("grow", [&] { return grow(scene.scalp, v, cfg.phg, w); });
      best = std::min(best, seconds_since(t0));
    }
    rows.push_back({"phg", w, best, 1.0});
  }
  for (auto& row : rows) {
    const auto& base = *std::find_if(rows.begin(), rows.end(), [&](const BenchRow& b) { return b.stage == row.stage; });
    row.speedup = row.seconds > 0.0 ? base.seconds / row.seconds : 1.0;
  }
  return rows;
}

std::string format_bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "stage,workers,seconds,speedup\n";
  for (const auto& r : rows) {
    char line[128];
    std::snprintf(line, sizeof line, "%s,%d,%.6f,%.4f\n", r.stage.c_str(), r.workers, r.seconds, r.speedup);
    os << line;
  }
  return os.str();
}

namespace {

std::vector<std::vector<double>> read_rows(const std::filesystem::path& path, std::size_t cols) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open point file " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> row(cols);
    for (auto& v : row)
      if (!(ls >> v)) throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(cols) + " numbers");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void write_points(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  char buf[160];
  for (const auto& p : cloud) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    os << buf;
  }
}

PointCloud read_points(const std::filesystem::path& path) {
  PointCloud out;
  for (const auto& r : read_rows(path, 3)) out.emplace_back(r[0], r[1], r[2]);
  return out;
}

void write_oriented_points(const std::filesystem::path& path, const OrientedPointCloud& cloud) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  char buf[320];
  for (const auto& p : cloud) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g %.17g %.17g\n", p.position.x(), p.position.y(),
                  p.position.z(), p.direction.x(), p.direction.y(), p.direction.z());
    os << buf;
  }
}

OrientedPointCloud read_oriented_points(const std::filesystem::path& path) {
  OrientedPointCloud out;
  for (const auto& r : read_rows(path, 6)) out.push_back({Vec3(r[0], r[1], r[2]), Vec3(r[3], r[4], r[5])});
  return out;
}

}  // namespace strandrecon
