#pragma once

#include "strandrecon/geometry.hpp"
#include "strandrecon/scalp.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace strandrecon {

/// Regular grid; voxel (i, j, k) spans origin + [i, i+1) * voxel_size, etc.
/// Linear index is i + nx * (j + ny * k).
struct VoxelGrid {
  Vec3 origin = Vec3::Zero();
  double voxel_size = 2.0;
  std::array<int, 3> dims{0, 0, 0};

  std::size_t count() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(dims[2]);
  }
  std::size_t linear(int i, int j, int k) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(dims[0]) *
                                             (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(k));
  }
  std::array<int, 3> coords(std::size_t idx) const {
    const auto nx = static_cast<std::size_t>(dims[0]);
    const auto ny = static_cast<std::size_t>(dims[1]);
    return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny), static_cast<int>(idx / (nx * ny))};
  }
  bool in_range(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
  }
  std::optional<std::size_t> voxel_of(const Vec3& p) const;
  Vec3 center(std::size_t idx) const;
  Aabb bounds() const;

  // Smallest grid with the given voxel size covering `box`.
  static VoxelGrid covering(const Aabb& box, double voxel_size);
};

/// Dense occupancy/orientation volume with a per-voxel committed-strand
/// counter. Orientation is unit and sign-canonical exactly where occupied.
class OOVolume {
 public:
  OOVolume() = default;
  explicit OOVolume(const VoxelGrid& grid);

  const VoxelGrid& grid() const { return grid_; }
  bool occupied(std::size_t idx) const { return (bits_[idx >> 6] >> (idx & 63)) & 1u; }
  Vec3 orientation(std::size_t idx) const { return orientation_[idx].cast<double>(); }
  void set(std::size_t idx, const Vec3& dir);
  // Stores a unit, canonical orientation verbatim (file loading).
  void set_exact(std::size_t idx, const Vec3f& dir);
  std::size_t occupied_count() const { return occupied_count_; }
  std::vector<std::size_t> occupied_voxels() const;

  std::uint16_t counter(std::size_t idx) const { return counters_[idx]; }
  // Adds one to each listed voxel (saturating).
  void commit(std::span<const std::size_t> voxels);
  void reset_counters();

  friend bool operator==(const OOVolume& a, const OOVolume& b);

 private:
  VoxelGrid grid_;
  std::vector<std::uint64_t> bits_;
  std::vector<Vec3f> orientation_;
  std::vector<std::uint16_t> counters_;
  std::size_t occupied_count_ = 0;
};

/// Occupies every voxel holding a point; orientation is the sign-aligned
/// mean of member directions taken in a fixed per-voxel order (sorted by
/// position then direction), so the result does not depend on input order.
/// With no explicit grid the cloud bounding box (padded by one voxel) is used.
OOVolume voxelize(const OrientedPointCloud& cloud, double voxel_size, std::optional<VoxelGrid> grid = std::nullopt);

struct FillParams {
  double max_depth = 16.0;  // mm, how far below the shell the fill reaches
};

struct FillResult {
  OOVolume volume;
  std::size_t filled = 0;
};

/// Interior stand-in: an unoccupied voxel outside the scalp is filled when
/// marching from its centre away from the head centre (fit_head_sphere;
/// away from the nearest scalp point when the fit degenerates) meets an
/// occupied voxel within max_depth; it takes that voxel's orientation.
/// Only fills 26-connected to the occupied input are kept. Throws
/// ConfigError when the scalp is not inside the grid.
FillResult fill_interior(const OOVolume& vol, const ScalpMesh& scalp, const FillParams& params = {}, int workers = 1);

/// Trilinear blend of occupied neighbour orientations, each flipped to
/// agree with prev_dir first. nullopt when no neighbour is occupied.
std::optional<Vec3> sample_orientation(const OOVolume& vol, const Vec3& p, const Vec3& prev_dir);

inline constexpr std::uint32_t kVolumeMagic = 0x4C4F5648;  // "HVOL"

// Header (magic, nx, ny, nz, voxel_size f64, origin 3 x f64), occupancy
// bitset (LSB-first bytes), float32 orientation triplets for occupied voxels
// in linear index order.
void write_volume(const std::filesystem::path& path, const OOVolume& vol);
OOVolume read_volume(const std::filesystem::path& path);

}  // namespace strandrecon
