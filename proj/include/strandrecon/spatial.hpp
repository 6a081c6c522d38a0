#pragma once

#include "strandrecon/geometry.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace strandrecon {

struct IndexedPoint {
  Vec3 position;
  std::int64_t id = 0;
};

struct Neighbor {
  std::int64_t id = 0;
  double distance = 0.0;
};

/// Exact balanced KD-tree over 3D points. Immutable after construction;
/// every query is safe to run concurrently.
class SpatialIndex {
 public:
  SpatialIndex() = default;
  explicit SpatialIndex(std::vector<IndexedPoint> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  // All ids within distance r (inclusive), sorted by distance then id.
  std::vector<Neighbor> query_radius(const Vec3& q, double r) const;
  std::vector<std::vector<Neighbor>> query_radius_batch(std::span<const Vec3> queries, double r,
                                                        int workers = 1) const;

  // Globally nearest point, ties by lowest id. Throws DataError when empty.
  Neighbor nearest(const Vec3& q) const;
  std::vector<Neighbor> nearest_batch(std::span<const Vec3> queries, int workers = 1) const;

  const IndexedPoint& point(std::size_t i) const { return points_[i]; }

 private:
  struct Node {
    int axis = -1;        // -1 for leaves
    double split = 0.0;
    std::uint32_t begin = 0, end = 0;  // range in points_
    std::int32_t left = -1, right = -1;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void radius_rec(std::int32_t node, const Vec3& q, double r2, std::vector<Neighbor>& out) const;
  void nearest_rec(std::int32_t node, const Vec3& q, Neighbor& best, double& best_d2) const;

  static constexpr std::uint32_t kLeafSize = 8;
  std::vector<IndexedPoint> points_;
  std::vector<Node> nodes_;
};

SpatialIndex build_index(std::vector<IndexedPoint> points);

}  // namespace strandrecon
