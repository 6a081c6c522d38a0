#include "strandrecon/errors.hpp"
#include "strandrecon/spatial.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace strandrecon;

namespace {

// Ties are decided on squared distances, as computed by the index.
std::vector<Neighbor> scan_radius(const std::vector<IndexedPoint>& pts, const Vec3& q, double r) {
  std::vector<Neighbor> out;
  for (const auto& p : pts) {
    const double d2 = (p.position - q).squaredNorm();
    if (d2 <= r * r) out.push_back({p.id, d2});
  }
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  });
  for (auto& n : out) n.distance = std::sqrt(n.distance);
  return out;
}

Neighbor scan_nearest(const std::vector<IndexedPoint>& pts, const Vec3& q) {
  Neighbor best{-1, 1e300};
  for (const auto& p : pts) {
    const double d2 = (p.position - q).squaredNorm();
    if (d2 < best.distance || (d2 == best.distance && p.id < best.id)) best = {p.id, d2};
  }
  best.distance = std::sqrt(best.distance);
  return best;
}

std::vector<IndexedPoint> random_points(std::size_t n, std::uint64_t seed, bool lattice = false) {
  CounterRng rng(seed);
  std::vector<IndexedPoint> pts(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 p(rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-100, 100));
    // Lattice coordinates give many exact distance ties and duplicates.
    if (lattice) p = p.array().round() / 10.0;
    pts[i] = {p, static_cast<std::int64_t>(rng.below(n / 2))};
  }
  return pts;
}

void expect_same(const std::vector<Neighbor>& a, const std::vector<Neighbor>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].distance, b[i].distance);
  }
}

}  // namespace

TEST(SpatialIndex, EmptyIndex) {
  const SpatialIndex idx = build_index({});
  EXPECT_TRUE(idx.empty());
  EXPECT_TRUE(idx.query_radius(Vec3::Zero(), 1e9).empty());
  const std::vector<Vec3> qs{Vec3::Zero(), Vec3::Ones()};
  for (const auto& r : idx.query_radius_batch(qs, 5.0)) EXPECT_TRUE(r.empty());
  EXPECT_THROW(idx.nearest(Vec3::Zero()), DataError);
}

TEST(SpatialIndex, SinglePoint) {
  const SpatialIndex idx = build_index({{Vec3(1, 2, 3), 42}});
  CounterRng rng(3);
  for (int i = 0; i < 50; ++i) {
    const Vec3 q(rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3));
    const auto n = idx.nearest(q);
    EXPECT_EQ(n.id, 42);
    EXPECT_DOUBLE_EQ(n.distance, (q - Vec3(1, 2, 3)).norm());
  }
}

TEST(SpatialIndex, ZeroRadiusReturnsCoincidentPoints) {
  auto pts = random_points(500, 8);
  pts.push_back({pts[17].position, 9001});
  const SpatialIndex idx = build_index(pts);
  const auto hit = idx.query_radius(pts[17].position, 0.0);
  ASSERT_EQ(hit.size(), 2u);
  EXPECT_EQ(hit[0].distance, 0.0);
  EXPECT_EQ(hit[1].distance, 0.0);
  EXPECT_LT(hit[0].id, hit[1].id);
}

TEST(SpatialIndex, FarQueryWithSmallRadiusIsEmpty) {
  const SpatialIndex idx = build_index(random_points(1000, 9));
  EXPECT_TRUE(idx.query_radius(Vec3(1e4, 0, 0), 1.0).empty());
}

TEST(SpatialIndex, MatchesLinearScan) {
  const auto pts = random_points(10000, 11);
  const SpatialIndex idx = build_index(pts);
  CounterRng rng(12);
  std::vector<Vec3> qs(1000);
  for (auto& q : qs) q = Vec3(rng.uniform(-120, 120), rng.uniform(-120, 120), rng.uniform(-120, 120));
  const double r = 12.0;
  const auto batch = idx.query_radius_batch(qs, r, 4);
  const auto near = idx.nearest_batch(qs, 4);
  for (std::size_t i = 0; i < qs.size(); ++i) {
    expect_same(batch[i], scan_radius(pts, qs[i], r));
    const auto o = scan_nearest(pts, qs[i]);
    EXPECT_EQ(near[i].id, o.id);
    EXPECT_EQ(near[i].distance, o.distance);
  }
}

TEST(SpatialIndex, TiesBrokenByLowestId) {
  const auto pts = random_points(4000, 13, true);
  const SpatialIndex idx = build_index(pts);
  CounterRng rng(14);
  for (int i = 0; i < 500; ++i) {
    // Queries on lattice points and midpoints, where ties are common.
    const Vec3 q = Vec3(rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-100, 100)).array().round() / 20.0;
    const auto o = scan_nearest(pts, q);
    const auto n = idx.nearest(q);
    EXPECT_EQ(n.id, o.id);
    EXPECT_EQ(n.distance, o.distance);
    expect_same(idx.query_radius(q, 0.15), scan_radius(pts, q, 0.15));
  }
}

TEST(SpatialIndex, BatchIndependentOfWorkers) {
  const auto pts = random_points(3000, 15);
  const SpatialIndex idx = build_index(pts);
  CounterRng rng(16);
  std::vector<Vec3> qs(300);
  for (auto& q : qs) q = Vec3(rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-100, 100));
  const auto a = idx.query_radius_batch(qs, 15.0, 1);
  const auto b = idx.query_radius_batch(qs, 15.0, 7);
  for (std::size_t i = 0; i < qs.size(); ++i) {
    expect_same(a[i], b[i]);
    expect_same(a[i], idx.query_radius(qs[i], 15.0));
  }
}
