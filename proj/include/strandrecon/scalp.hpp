#pragma once

#include "strandrecon/geometry.hpp"
#include "strandrecon/spatial.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace strandrecon {

struct ScalpSeed {
  Vec3 position;
  Vec3 normal;
};

/// Triangle mesh with outward unit vertex normals and sampled root seeds.
struct ScalpMesh {
  std::vector<Vec3> vertices;
  std::vector<Vec3> normals;
  std::vector<std::array<int, 3>> triangles;
  std::vector<ScalpSeed> seeds;

  double area() const;
  Aabb bounds() const;
  // Interpolated, normalised vertex normal at barycentric coordinates.
  Vec3 normal_at(std::size_t tri, double b1, double b2) const;
};

// Area-uniform samples on the mesh from a fixed seed.
std::vector<ScalpSeed> sample_scalp_seeds(const ScalpMesh& scalp, std::size_t count, std::uint64_t seed);

/// Dense point sampling of the scalp (vertices, triangle centroids and
/// seeds) with normals, used for nearest-scalp and inside/outside tests.
struct ScalpSurfaceIndex {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  SpatialIndex index;

  explicit ScalpSurfaceIndex(const ScalpMesh& scalp);
  // Distance to the nearest scalp sample, negative on the inner side.
  double signed_distance(const Vec3& p) const;
  Neighbor nearest(const Vec3& p) const { return index.nearest(p); }
};

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

// Point nearest (least squares) to every vertex normal line, with the mean
// vertex distance as radius. Radius 0 when the normals are near parallel.
Sphere fit_head_sphere(const ScalpMesh& scalp);

// Text form: "v x y z nx ny nz", "f a b c", "s x y z nx ny nz".
void write_scalp(const std::filesystem::path& path, const ScalpMesh& scalp);
ScalpMesh read_scalp(const std::filesystem::path& path);

}  // namespace strandrecon
