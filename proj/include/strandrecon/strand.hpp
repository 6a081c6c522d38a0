#pragma once

#include "strandrecon/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace strandrecon {

enum class StrandSource { traced, linked, attached };

struct Strand {
  std::vector<Vec3> vertices;  // mm, vertex 0 is the root when rooted
  std::vector<Vec3> tangents;  // optional, unit; filled for ground truth
  bool rooted = false;
  StrandSource source = StrandSource::traced;

  std::size_t size() const { return vertices.size(); }
  double length() const;
};

using StrandSet = std::vector<Strand>;

// Unit tangent at vertex i from neighbouring vertices (one-sided at ends).
Vec3 vertex_tangent(const std::vector<Vec3>& vertices, std::size_t i);

// Uniform-arclength resampling; keeps both endpoints.
std::vector<Vec3> resample_polyline(const std::vector<Vec3>& vertices, double step);

// Walks the polyline placing each vertex exactly `step` (chord) from the
// previous one. The last input vertex is kept when it is at least
// 0.8 * step from the last placed vertex, or when nothing else was placed.
std::vector<Vec3> resample_chords(const std::vector<Vec3>& vertices, double step);

// Subdivides every segment so consecutive vertices are at most max_step apart.
std::vector<Vec3> densify_polyline(const std::vector<Vec3>& vertices, double max_step);

std::size_t total_vertices(const StrandSet& strands);

inline constexpr std::uint32_t kStrandMagic = 0x44525453;  // "STRD"

// u32 magic, u32 strand count, then per strand u32 vertex count and
// float32 x, y, z triplets; all little-endian.
void write_strands(const std::filesystem::path& path, const StrandSet& strands);
StrandSet read_strands(const std::filesystem::path& path);
// Debug text form: "strand <n> <rooted>" header then one vertex per line.
void write_strands_text(const std::filesystem::path& path, const StrandSet& strands);

}  // namespace strandrecon
