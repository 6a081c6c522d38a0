#include "strandrecon/volume.hpp"

#include "binary_io.hpp"
#include "strandrecon/errors.hpp"
#include "strandrecon/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <tuple>

namespace strandrecon {

std::optional<std::size_t> VoxelGrid::voxel_of(const Vec3& p) const {
  const Vec3 c = (p - origin) / voxel_size;
  const int i = static_cast<int>(std::floor(c.x()));
  const int j = static_cast<int>(std::floor(c.y()));
  const int k = static_cast<int>(std::floor(c.z()));
  if (!in_range(i, j, k)) return std::nullopt;
  return linear(i, j, k);
}

Vec3 VoxelGrid::center(std::size_t idx) const {
  const auto c = coords(idx);
  return origin + voxel_size * Vec3(c[0] + 0.5, c[1] + 0.5, c[2] + 0.5);
}

Aabb VoxelGrid::bounds() const {
  Aabb b;
  b.lo = origin;
  b.hi = origin + voxel_size * Vec3(dims[0], dims[1], dims[2]);
  return b;
}

VoxelGrid VoxelGrid::covering(const Aabb& box, double voxel_size) {
  if (!(voxel_size > 0.0)) throw ConfigError("voxel_size must be positive");
  VoxelGrid g;
  g.voxel_size = voxel_size;
  if (box.empty()) return g;
  g.origin = box.lo;
  for (int a = 0; a < 3; ++a)
    g.dims[static_cast<std::size_t>(a)] = std::max(1, static_cast<int>(std::floor((box.hi[a] - box.lo[a]) / voxel_size)) + 1);
  return g;
}

OOVolume::OOVolume(const VoxelGrid& grid)
    : grid_(grid),
      bits_((grid.count() + 63) / 64, 0),
      orientation_(grid.count(), Vec3f::Zero()),
      counters_(grid.count(), 0) {}

void OOVolume::set(std::size_t idx, const Vec3& dir) {
  const double n = dir.norm();
  if (!(n > 0.0)) throw DataError("OOVolume::set: zero orientation");
  if (!occupied(idx)) ++occupied_count_;
  bits_[idx >> 6] |= (std::uint64_t{1} << (idx & 63));
  orientation_[idx] = canonical_sign(dir / n).cast<float>();
}

void OOVolume::set_exact(std::size_t idx, const Vec3f& dir) {
  if (!occupied(idx)) ++occupied_count_;
  bits_[idx >> 6] |= (std::uint64_t{1} << (idx & 63));
  orientation_[idx] = dir;
}

std::vector<std::size_t> OOVolume::occupied_voxels() const {
  std::vector<std::size_t> out;
  out.reserve(occupied_count_);
  for (std::size_t w = 0; w < bits_.size(); ++w) {
    std::uint64_t word = bits_[w];
    while (word) {
      const int b = __builtin_ctzll(word);
      out.push_back(w * 64 + static_cast<std::size_t>(b));
      word &= word - 1;
    }
  }
  return out;
}

void OOVolume::commit(std::span<const std::size_t> voxels) {
  for (auto v : voxels)
    if (counters_[v] < std::numeric_limits<std::uint16_t>::max()) ++counters_[v];
}

void OOVolume::reset_counters() { std::fill(counters_.begin(), counters_.end(), 0); }

bool operator==(const OOVolume& a, const OOVolume& b) {
  if (a.grid_.origin != b.grid_.origin || a.grid_.voxel_size != b.grid_.voxel_size || a.grid_.dims != b.grid_.dims)
    return false;
  if (a.bits_ != b.bits_) return false;
  for (auto idx : a.occupied_voxels())
    if (a.orientation_[idx] != b.orientation_[idx]) return false;
  return true;
}

OOVolume voxelize(const OrientedPointCloud& cloud, double voxel_size, std::optional<VoxelGrid> grid) {
  if (cloud.empty()) throw DataError("voxelize: empty point cloud");
  if (!grid) {
    Aabb box;
    for (const auto& p : cloud) box.extend(p.position);
    box.pad(voxel_size);
    grid = VoxelGrid::covering(box, voxel_size);
  }
  struct Member {
    std::size_t voxel;
    const OrientedPoint* point;
  };
  std::vector<Member> members;
  members.reserve(cloud.size());
  for (const auto& p : cloud) {
    const auto v = grid->voxel_of(p.position);
    if (v) members.push_back({*v, &p});
  }
  auto key = [](const Member& m) {
    const auto& q = *m.point;
    return std::make_tuple(m.voxel, q.position.x(), q.position.y(), q.position.z(), q.direction.x(),
                           q.direction.y(), q.direction.z());
  };
  std::sort(members.begin(), members.end(), [&](const Member& a, const Member& b) { return key(a) < key(b); });

  OOVolume vol(*grid);
  for (std::size_t i = 0; i < members.size();) {
    SignAlignedMean mean;
    std::size_t j = i;
    for (; j < members.size() && members[j].voxel == members[i].voxel; ++j) mean.add(members[j].point->direction);
    vol.set(members[i].voxel, mean.mean());
    i = j;
  }
  return vol;
}

namespace {

// First occupied voxel (other than the start) met by the ray p + t u,
// 0 < t <= max_t, walking every voxel the ray passes through.
std::size_t first_occupied_along(const OOVolume& vol, const Vec3& p, const Vec3& u, double max_t) {
  const auto& g = vol.grid();
  const Vec3 c = (p - g.origin) / g.voxel_size;
  int cell[3] = {static_cast<int>(std::floor(c.x())), static_cast<int>(std::floor(c.y())),
                 static_cast<int>(std::floor(c.z()))};
  int step[3];
  double t_max[3], t_delta[3];
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (u[a] > 0.0) {
      step[a] = 1;
      t_delta[a] = g.voxel_size / u[a];
      t_max[a] = (cell[a] + 1 - c[a]) * g.voxel_size / u[a];
    } else if (u[a] < 0.0) {
      step[a] = -1;
      t_delta[a] = -g.voxel_size / u[a];
      t_max[a] = (c[a] - cell[a]) * g.voxel_size / -u[a];
    } else {
      step[a] = 0;
      t_delta[a] = kInf;
      t_max[a] = kInf;
    }
  }
  for (;;) {
    const int a = t_max[0] <= t_max[1] ? (t_max[0] <= t_max[2] ? 0 : 2) : (t_max[1] <= t_max[2] ? 1 : 2);
    if (t_max[a] > max_t) return std::numeric_limits<std::size_t>::max();
    cell[a] += step[a];
    t_max[a] += t_delta[a];
    if (!g.in_range(cell[0], cell[1], cell[2])) return std::numeric_limits<std::size_t>::max();
    const auto idx = g.linear(cell[0], cell[1], cell[2]);
    if (vol.occupied(idx)) return idx;
  }
}

}  // namespace

FillResult fill_interior(const OOVolume& vol, const ScalpMesh& scalp, const FillParams& params, int workers) {
  const auto& g = vol.grid();
  const Aabb gb = g.bounds();
  const Aabb sb = scalp.bounds();
  if (sb.empty() || !gb.contains(sb.lo) || !gb.contains(sb.hi))
    throw ConfigError("fill_interior: scalp lies outside the volume bounds");
  if (!(params.max_depth >= 0.0)) throw ConfigError("fill_interior: negative max_depth");
  FillResult res{vol, 0};
  const int reach = static_cast<int>(std::ceil(params.max_depth / g.voxel_size));
  if (reach == 0 || vol.occupied_count() == 0) return res;

  // Candidates: unoccupied voxels within `reach` 26-steps of an occupied one.
  std::vector<std::uint8_t> ring(g.count(), 0);
  std::vector<std::size_t> frontier = vol.occupied_voxels();
  for (auto idx : frontier) ring[idx] = 1;
  std::vector<std::size_t> candidates;
  for (int r = 0; r < reach && !frontier.empty(); ++r) {
    std::vector<std::size_t> next;
    for (auto idx : frontier) {
      const auto c = g.coords(idx);
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int i = c[0] + dx, j = c[1] + dy, k = c[2] + dz;
            if (!g.in_range(i, j, k)) continue;
            const auto nb = g.linear(i, j, k);
            if (ring[nb]) continue;
            ring[nb] = 1;
            next.push_back(nb);
          }
    }
    candidates.insert(candidates.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  std::sort(candidates.begin(), candidates.end());

  // March from each candidate away from the head centre (or, for a scalp
  // with no usable centre, away from its nearest scalp point); the first
  // observed voxel within reach supplies the orientation.
  const ScalpSurfaceIndex surface(scalp);
  const Sphere head = fit_head_sphere(scalp);
  const bool radial = head.radius > 0.0;
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> source(candidates.size(), kNone);
  parallel_for(candidates.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t n = b; n < e; ++n) {
      const Vec3 centre = g.center(candidates[n]);
      auto outside = [&](Vec3* away) {
        const auto nb = surface.nearest(centre);
        const auto si = static_cast<std::size_t>(nb.id);
        *away = centre - surface.points[si];
        if (nb.distance > 0.0) *away /= nb.distance;
        return nb.distance > 0.0 && away->dot(surface.normals[si]) > 0.0;
      };
      Vec3 away;
      if (radial) {
        const Vec3 r = centre - head.center;
        if (r.norm() < 1e-9) continue;
        const auto hit = first_occupied_along(vol, centre, r.normalized(), params.max_depth);
        if (hit != kNone && outside(&away)) source[n] = hit;
      } else if (outside(&away)) {
        source[n] = first_occupied_along(vol, centre, away, params.max_depth);
      }
    }
  });

  // Keep only fills 26-connected to the observed voxels.
  std::vector<std::size_t> slot(g.count(), kNone);
  for (std::size_t n = 0; n < candidates.size(); ++n)
    if (source[n] != kNone) slot[candidates[n]] = n;
  std::deque<std::size_t> queue;
  for (auto idx : vol.occupied_voxels()) queue.push_back(idx);
  while (!queue.empty()) {
    const auto c = g.coords(queue.front());
    queue.pop_front();
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int i = c[0] + dx, j = c[1] + dy, k = c[2] + dz;
          if (!g.in_range(i, j, k)) continue;
          const auto nb = g.linear(i, j, k);
          if (slot[nb] == kNone || res.volume.occupied(nb)) continue;
          res.volume.set(nb, vol.orientation(source[slot[nb]]));
          ++res.filled;
          queue.push_back(nb);
        }
  }
  return res;
}

std::optional<Vec3> sample_orientation(const OOVolume& vol, const Vec3& p, const Vec3& prev_dir) {
  const auto& g = vol.grid();
  const Vec3 c = (p - g.origin) / g.voxel_size - Vec3::Constant(0.5);
  const int i0 = static_cast<int>(std::floor(c.x()));
  const int j0 = static_cast<int>(std::floor(c.y()));
  const int k0 = static_cast<int>(std::floor(c.z()));
  const Vec3 f(c.x() - i0, c.y() - j0, c.z() - k0);
  Vec3 acc = Vec3::Zero();
  bool any = false;
  for (int dz = 0; dz <= 1; ++dz)
    for (int dy = 0; dy <= 1; ++dy)
      for (int dx = 0; dx <= 1; ++dx) {
        const int i = i0 + dx, j = j0 + dy, k = k0 + dz;
        if (!g.in_range(i, j, k)) continue;
        const auto idx = g.linear(i, j, k);
        if (!vol.occupied(idx)) continue;
        const double w = (dx ? f.x() : 1.0 - f.x()) * (dy ? f.y() : 1.0 - f.y()) * (dz ? f.z() : 1.0 - f.z());
        Vec3 o = vol.orientation(idx);
        if (o.dot(prev_dir) < 0.0) o = -o;
        acc += w * o;
        any = true;
      }
  if (!any) return std::nullopt;
  const double n = acc.norm();
  if (n < 1e-12) return std::nullopt;
  return acc / n;
}

void write_volume(const std::filesystem::path& path, const OOVolume& vol) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  const auto& g = vol.grid();
  detail::put_u32(os, kVolumeMagic);
  for (int d : g.dims) detail::put_u32(os, static_cast<std::uint32_t>(d));
  detail::put_f64(os, g.voxel_size);
  for (int a = 0; a < 3; ++a) detail::put_f64(os, g.origin[a]);
  const std::size_t n = g.count();
  for (std::size_t byte = 0; byte < (n + 7) / 8; ++byte) {
    unsigned char b = 0;
    for (int bit = 0; bit < 8; ++bit) {
      const std::size_t idx = byte * 8 + static_cast<std::size_t>(bit);
      if (idx < n && vol.occupied(idx)) b |= static_cast<unsigned char>(1u << bit);
    }
    os.put(static_cast<char>(b));
  }
  for (auto idx : vol.occupied_voxels()) {
    const Vec3 o = vol.orientation(idx);  // exact float widening
    for (int a = 0; a < 3; ++a) detail::put_f32(os, static_cast<float>(o[a]));
  }
  if (!os) throw DataError("write failed: " + path.string());
}

OOVolume read_volume(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open volume file " + path.string());
  const std::string what = "volume file " + path.string();
  if (detail::get_u32(is, what) != kVolumeMagic) throw DataError("bad magic in " + what);
  VoxelGrid g;
  for (int& d : g.dims) {
    d = static_cast<int>(detail::get_u32(is, what));
    if (d <= 0 || d > 100000) throw DataError("bad dimensions in " + what);
  }
  g.voxel_size = detail::get_f64(is, what);
  for (int a = 0; a < 3; ++a) g.origin[a] = detail::get_f64(is, what);
  if (!(g.voxel_size > 0.0)) throw DataError("bad voxel size in " + what);
  const std::size_t n = g.count();
  std::vector<unsigned char> bytes((n + 7) / 8);
  if (!is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
    throw DataError("truncated " + what);
  OOVolume vol(g);
  for (std::size_t idx = 0; idx < n; ++idx) {
    if (!((bytes[idx / 8] >> (idx % 8)) & 1u)) continue;
    Vec3f o;
    for (int a = 0; a < 3; ++a) o[a] = detail::get_f32(is, what);
    vol.set_exact(idx, o);
  }
  return vol;
}

}  // namespace strandrecon
