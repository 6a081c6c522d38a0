#include "strandrecon/metrics.hpp"

#include "strandrecon/errors.hpp"
#include "strandrecon/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace strandrecon {

PRF make_prf(double precision, double recall) {
  PRF r{precision, recall, 0.0};
  if (precision + recall > 0.0) r.f1 = 2.0 * precision * recall / (precision + recall);
  return r;
}

Vec3 metric_origin(const StrandSet& gt) {
  Aabb box;
  for (const auto& s : gt)
    for (const auto& v : s.vertices) box.extend(v);
  if (box.empty()) throw DataError("metrics: empty ground truth");
  return box.lo;
}

namespace {

constexpr std::int64_t kBias = std::int64_t{1} << 20;

void unpack(std::int64_t key, int& i, int& j, int& k) {
  i = static_cast<int>((key >> 42) & 0x1FFFFF) - static_cast<int>(kBias);
  j = static_cast<int>((key >> 21) & 0x1FFFFF) - static_cast<int>(kBias);
  k = static_cast<int>(key & 0x1FFFFF) - static_cast<int>(kBias);
}

std::int64_t key_of(const Vec3& p, const Vec3& origin, double vs) {
  const Vec3 c = (p - origin) / vs;
  return pack_voxel(static_cast<int>(std::floor(c.x())), static_cast<int>(std::floor(c.y())),
                    static_cast<int>(std::floor(c.z())));
}

}  // namespace

std::int64_t pack_voxel(int i, int j, int k) {
  const auto b = [](int x) {
    const std::int64_t v = static_cast<std::int64_t>(x) + kBias;
    if (v < 0 || v >= 2 * kBias) throw DataError("metrics: geometry too far from the ground-truth grid");
    return v;
  };
  return (b(i) << 42) | (b(j) << 21) | b(k);
}

VoxelTangentSet voxel_tangents(const StrandSet& strands, const Vec3& origin, double voxel_size) {
  if (!(voxel_size > 0.0)) throw ConfigError("metrics: voxel size must be positive");
  std::unordered_map<std::int64_t, SignAlignedMean> acc;
  const double max_step = 0.5 * voxel_size;
  auto add = [&](const Vec3& p, const Vec3& t) { acc[key_of(p, origin, voxel_size)].add(t); };
  for (const auto& s : strands) {
    const auto& v = s.vertices;
    if (v.size() == 1) {
      add(v[0], Vec3::UnitZ());
      continue;
    }
    for (std::size_t e = 0; e + 1 < v.size(); ++e) {
      const Vec3 d = v[e + 1] - v[e];
      const double len = d.norm();
      if (len <= 0.0) continue;
      const Vec3 t = d / len;
      const int n = std::max(1, static_cast<int>(std::ceil(len / max_step)));
      for (int q = 0; q < n; ++q) add(v[e] + (static_cast<double>(q) / n) * d, t);
      if (e + 2 == v.size()) add(v[e + 1], t);
    }
  }
  std::vector<std::int64_t> keys;
  keys.reserve(acc.size());
  for (const auto& kv : acc) keys.push_back(kv.first);
  std::sort(keys.begin(), keys.end());
  VoxelTangentSet out;
  out.keys = keys;
  out.tangents.reserve(keys.size());
  for (auto k : keys) out.tangents.push_back(acc.at(k).mean());
  return out;
}

namespace {

// Index of key in a sorted set, -1 if absent.
std::ptrdiff_t find_key(const VoxelTangentSet& s, std::int64_t key) {
  const auto it = std::lower_bound(s.keys.begin(), s.keys.end(), key);
  if (it == s.keys.end() || *it != key) return -1;
  return it - s.keys.begin();
}

// Fraction of `from` voxels with a compatible voxel in `to` (same voxel,
// or within the dilation block).
double matched_fraction(const VoxelTangentSet& from, const VoxelTangentSet& to, double cos_gate, bool use_angle,
                        int dilation) {
  if (from.size() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t a = 0; a < from.size(); ++a) {
    int i, j, k;
    unpack(from.keys[a], i, j, k);
    bool ok = false;
    for (int dz = -dilation; dz <= dilation && !ok; ++dz)
      for (int dy = -dilation; dy <= dilation && !ok; ++dy)
        for (int dx = -dilation; dx <= dilation && !ok; ++dx) {
          const auto b = find_key(to, pack_voxel(i + dx, j + dy, k + dz));
          if (b < 0) continue;
          if (!use_angle || std::abs(from.tangents[a].dot(to.tangents[static_cast<std::size_t>(b)])) >= cos_gate)
            ok = true;
        }
    if (ok) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(from.size());
}

// Cosine gate with a small slack so exact-threshold angles count as matches.
double cos_of(double angle_deg) { return std::cos(deg2rad(angle_deg)) - 1e-12; }

PRF score(const VoxelTangentSet& g, const VoxelTangentSet& r, bool use_angle, double angle_deg, int dilation) {
  const double c = use_angle ? cos_of(angle_deg) : -1.0;
  return make_prf(matched_fraction(r, g, c, use_angle, dilation), matched_fraction(g, r, c, use_angle, dilation));
}

}  // namespace

PRF occupancy_prf(const StrandSet& gt, const StrandSet& rec, double voxel_size, const MetricOptions& opt) {
  const Vec3 origin = metric_origin(gt);
  return score(voxel_tangents(gt, origin, voxel_size), voxel_tangents(rec, origin, voxel_size), false, 0.0,
               opt.dilation);
}

PRF orientation_prf(const StrandSet& gt, const StrandSet& rec, double voxel_size, double angle_deg,
                    const MetricOptions& opt) {
  const Vec3 origin = metric_origin(gt);
  return score(voxel_tangents(gt, origin, voxel_size), voxel_tangents(rec, origin, voxel_size), true, angle_deg,
               opt.dilation);
}

const MetricsEntry& MetricsReport::at(double voxel_size, double angle_deg) const {
  for (const auto& e : entries)
    if (e.voxel_size == voxel_size && e.angle_deg == angle_deg) return e;
  throw DataError("metrics: no entry for the requested thresholds");
}

MetricsReport evaluate(const StrandSet& gt, const StrandSet& rec, const MetricsGrid& grid, const MetricOptions& opt,
                       int workers) {
  if (opt.dilation < 0) throw ConfigError("metrics.dilation must be >= 0");
  const Vec3 origin = metric_origin(gt);
  MetricsReport rep;
  rep.gt_strands = gt.size();
  rep.rec_strands = rec.size();
  rep.gt_vertices = total_vertices(gt);
  rep.rec_vertices = total_vertices(rec);
  const std::size_t nv = grid.voxel_sizes.size();
  const std::size_t na = grid.angles_deg.size();
  rep.entries.resize(nv * na);
  parallel_for(nv, workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t v = b; v < e; ++v) {
      const double vs = grid.voxel_sizes[v];
      const auto g = voxel_tangents(gt, origin, vs);
      const auto r = voxel_tangents(rec, origin, vs);
      const PRF occ = score(g, r, false, 0.0, opt.dilation);
      for (std::size_t a = 0; a < na; ++a) {
        auto& entry = rep.entries[v * na + a];
        entry.voxel_size = vs;
        entry.angle_deg = grid.angles_deg[a];
        entry.occupancy = occ;
        entry.orientation = score(g, r, true, grid.angles_deg[a], opt.dilation);
      }
    }
  });
  return rep;
}

namespace {

std::string fmt(const char* f, double a, double b, double c) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

}  // namespace

std::string format_report(const MetricsReport& report, bool include_timings) {
  std::ostringstream os;
  os << "strands  gt " << report.gt_strands << "  rec " << report.rec_strands << "\n";
  os << "vertices gt " << report.gt_vertices << "  rec " << report.rec_vertices << "\n\n";
  std::vector<double> sizes, angles;
  for (const auto& e : report.entries) {
    if (std::find(sizes.begin(), sizes.end(), e.voxel_size) == sizes.end()) sizes.push_back(e.voxel_size);
    if (std::find(angles.begin(), angles.end(), e.angle_deg) == angles.end()) angles.push_back(e.angle_deg);
  }
  os << "Occupancy (voxel size in mm)\n";
  os << "voxel      P       R      F1\n";
  for (double vs : sizes) {
    const auto& e = report.at(vs, angles.front());
    char head[16];
    std::snprintf(head, sizeof head, "%5.1f", vs);
    os << head << fmt("  %6.4f  %6.4f  %6.4f", e.occupancy.precision, e.occupancy.recall, e.occupancy.f1) << "\n";
  }
  os << "\nOrientation (voxel size in mm / angle in deg)\n";
  os << "voxel  angle      P       R      F1\n";
  for (double vs : sizes)
    for (double ang : angles) {
      const auto& e = report.at(vs, ang);
      char head[32];
      std::snprintf(head, sizeof head, "%5.1f  %5.1f", vs, ang);
      os << head << fmt("  %6.4f  %6.4f  %6.4f", e.orientation.precision, e.orientation.recall, e.orientation.f1)
         << "\n";
    }
  if (include_timings && !report.stage_seconds.empty()) {
    os << "\nWall clock (s)\n";
    for (const auto& [name, sec] : report.stage_seconds) {
      char line[96];
      std::snprintf(line, sizeof line, "%-20s %10.4f\n", name.c_str(), sec);
      os << line;
    }
  }
  return os.str();
}

std::string format_csv(const MetricsReport& report, const std::string& label, bool header) {
  std::ostringstream os;
  if (header) os << "label,voxel_mm,angle_deg,occ_p,occ_r,occ_f1,ori_p,ori_r,ori_f1\n";
  for (const auto& e : report.entries) {
    char line[256];
    std::snprintf(line, sizeof line, "%s,%g,%g,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", label.c_str(), e.voxel_size,
                  e.angle_deg, e.occupancy.precision, e.occupancy.recall, e.occupancy.f1, e.orientation.precision,
                  e.orientation.recall, e.orientation.f1);
    os << line;
  }
  return os.str();
}

}  // namespace strandrecon
