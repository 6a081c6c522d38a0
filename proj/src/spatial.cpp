#include "strandrecon/spatial.hpp"

#include "strandrecon/errors.hpp"
#include "strandrecon/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace strandrecon {

SpatialIndex::SpatialIndex(std::vector<IndexedPoint> points) : points_(std::move(points)) {
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

SpatialIndex build_index(std::vector<IndexedPoint> points) { return SpatialIndex(std::move(points)); }

std::int32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{-1, 0.0, begin, end, -1, -1});
  if (end - begin <= kLeafSize) return id;

  Aabb box;
  for (auto i = begin; i < end; ++i) box.extend(points_[i].position);
  const Vec3 extent = box.hi - box.lo;
  int axis = 0;
  if (extent.y() > extent[axis]) axis = 1;
  if (extent.z() > extent[axis]) axis = 2;
  if (extent[axis] <= 0.0) return id;  // all coincident: keep as a leaf

  const auto mid = begin + (end - begin) / 2;
  std::nth_element(points_.begin() + begin, points_.begin() + mid, points_.begin() + end,
                   [axis](const IndexedPoint& a, const IndexedPoint& b) {
                     return a.position[axis] < b.position[axis];
                   });
  const double split = points_[mid].position[axis];
  const auto left = build(begin, mid);
  const auto right = build(mid, end);
  auto& n = nodes_[static_cast<std::size_t>(id)];
  n.axis = axis;
  n.split = split;
  n.left = left;
  n.right = right;
  return id;
}

void SpatialIndex::radius_rec(std::int32_t node, const Vec3& q, double r2, std::vector<Neighbor>& out) const {
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  if (n.axis < 0) {
    for (auto i = n.begin; i < n.end; ++i) {
      const double d2 = (points_[i].position - q).squaredNorm();
      if (d2 <= r2) out.push_back(Neighbor{points_[i].id, d2});
    }
    return;
  }
  const double diff = q[n.axis] - n.split;
  if (diff <= 0.0 || diff * diff <= r2) radius_rec(n.left, q, r2, out);
  if (diff >= 0.0 || diff * diff <= r2) radius_rec(n.right, q, r2, out);
}

std::vector<Neighbor> SpatialIndex::query_radius(const Vec3& q, double r) const {
  std::vector<Neighbor> out;
  if (points_.empty() || r < 0.0) return out;
  radius_rec(0, q, r * r, out);
  // Sort on squared distance so ordering matches a brute-force scan bit-for-bit.
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  });
  for (auto& nb : out) nb.distance = std::sqrt(nb.distance);
  return out;
}

std::vector<std::vector<Neighbor>> SpatialIndex::query_radius_batch(std::span<const Vec3> queries, double r,
                                                                    int workers) const {
  std::vector<std::vector<Neighbor>> out(queries.size());
  parallel_for(queries.size(), workers, [&](std::size_t b, std::size_t e) {
    for (auto i = b; i < e; ++i) out[i] = query_radius(queries[i], r);
  });
  return out;
}

void SpatialIndex::nearest_rec(std::int32_t node, const Vec3& q, Neighbor& best, double& best_d2) const {
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  if (n.axis < 0) {
    for (auto i = n.begin; i < n.end; ++i) {
      const double d2 = (points_[i].position - q).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && points_[i].id < best.id)) {
        best_d2 = d2;
        best.id = points_[i].id;
      }
    }
    return;
  }
  const double diff = q[n.axis] - n.split;
  const auto near = diff <= 0.0 ? n.left : n.right;
  const auto far = diff <= 0.0 ? n.right : n.left;
  nearest_rec(near, q, best, best_d2);
  if (diff * diff <= best_d2) nearest_rec(far, q, best, best_d2);
}

Neighbor SpatialIndex::nearest(const Vec3& q) const {
  if (points_.empty()) throw DataError("nearest() on an empty spatial index");
  Neighbor best{std::numeric_limits<std::int64_t>::max(), 0.0};
  double best_d2 = std::numeric_limits<double>::infinity();
  nearest_rec(0, q, best, best_d2);
  best.distance = std::sqrt(best_d2);
  return best;
}

std::vector<Neighbor> SpatialIndex::nearest_batch(std::span<const Vec3> queries, int workers) const {
  std::vector<Neighbor> out(queries.size());
  parallel_for(queries.size(), workers, [&](std::size_t b, std::size_t e) {
    for (auto i = b; i < e; ++i) out[i] = nearest(queries[i]);
  });
  return out;
}

}  // namespace strandrecon
