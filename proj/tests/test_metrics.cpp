#include "strandrecon/errors.hpp"
#include "strandrecon/metrics.hpp"
#include "strandrecon/synthgen.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

using namespace strandrecon;
namespace tst = strandrecon::testing;

namespace {

StrandSet synth_strands(HairStyle style, std::size_t n, std::uint64_t seed) {
  ScalpParams sp;
  sp.rings = 16;
  sp.segments = 48;
  auto scalp = generate_scalp(sp);
  StyleParams st;
  st.style = style;
  st.strand_count = n;
  st.seed = seed;
  return generate_strands(scalp, st);
}

// One 0.8 mm stick per voxel centre on a 2 mm lattice anchored at the origin,
// plus an anchor stick in voxel (0, 0, 0) that pins the grid origin.
struct Sticks {
  std::vector<Vec3> centers;
  std::vector<Vec3> dirs;
};

Sticks random_sticks(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  std::set<std::tuple<int, int, int>> used;
  Sticks s;
  while (s.centers.size() < n) {
    const int i = 1 + static_cast<int>(rng.below(30)), j = 1 + static_cast<int>(rng.below(30)),
              k = 1 + static_cast<int>(rng.below(30));
    if (!used.insert({i, j, k}).second) continue;
    s.centers.push_back(Vec3(2 * i + 1, 2 * j + 1, 2 * k + 1));
    s.dirs.push_back(tst::random_unit(rng));
  }
  return s;
}

StrandSet stick_strands(const Sticks& s, const Vec3& anchor_dir) {
  StrandSet out;
  Strand a;
  a.vertices = {Vec3::Zero(), 0.5 * anchor_dir};
  out.push_back(a);
  for (std::size_t i = 0; i < s.centers.size(); ++i) {
    Strand st;
    st.vertices = {s.centers[i] - 0.4 * s.dirs[i], s.centers[i] + 0.4 * s.dirs[i]};
    out.push_back(st);
  }
  return out;
}

Vec3 rotate_about_random_axis(const Vec3& t, double angle, CounterRng& rng) {
  Vec3 axis = t.cross(tst::random_unit(rng));
  while (axis.norm() < 1e-6) axis = t.cross(tst::random_unit(rng));
  return Eigen::AngleAxisd(angle, axis.normalized()) * t;
}

using VoxelSet = std::set<std::tuple<long, long, long>>;

// Sampling rule of the metric: every edge split into ceil(len / (vs / 2))
// pieces, start points plus the final vertex.
VoxelSet oracle_voxels(const StrandSet& strands, const Vec3& origin, double vs) {
  VoxelSet out;
  auto add = [&](const Vec3& p) {
    const Vec3 c = (p - origin) / vs;
    out.insert({std::lround(std::floor(c.x())), std::lround(std::floor(c.y())), std::lround(std::floor(c.z()))});
  };
  for (const auto& s : strands) {
    const auto& v = s.vertices;
    for (std::size_t e = 0; e + 1 < v.size(); ++e) {
      const Vec3 d = v[e + 1] - v[e];
      const int n = std::max(1, static_cast<int>(std::ceil(d.norm() / (0.5 * vs))));
      for (int q = 0; q < n; ++q) add(v[e] + (static_cast<double>(q) / n) * d);
    }
    if (v.size() >= 2) add(v.back());
  }
  return out;
}

std::size_t intersection_size(const VoxelSet& a, const VoxelSet& b) {
  std::size_t n = 0;
  for (const auto& x : a) n += b.count(x);
  return n;
}

}  // namespace

TEST(Prf, F1Formula) {
  EXPECT_DOUBLE_EQ(make_prf(0.5, 1.0).f1, 2 * 0.5 / 1.5);
  EXPECT_EQ(make_prf(0.0, 0.0).f1, 0.0);
  EXPECT_EQ(make_prf(1.0, 0.0).f1, 0.0);
}

TEST(Occupancy, IdentityIsPerfect) {
  const auto gt = synth_strands(HairStyle::wavy, 200, 3);
  const auto rep = evaluate(gt, gt);
  ASSERT_EQ(rep.entries.size(), 9u);
  for (const auto& e : rep.entries) {
    EXPECT_EQ(e.occupancy.precision, 1.0);
    EXPECT_EQ(e.occupancy.recall, 1.0);
    EXPECT_EQ(e.orientation.f1, 1.0);
  }
}

TEST(Occupancy, EmptyInputs) {
  const auto gt = synth_strands(HairStyle::straight, 50, 3);
  const PRF r = occupancy_prf(gt, {}, 2.0);
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.recall, 0.0);
  EXPECT_EQ(r.f1, 0.0);
  EXPECT_EQ(orientation_prf(gt, {}, 2.0, 30.0).f1, 0.0);
  EXPECT_THROW(occupancy_prf({}, gt, 2.0), DataError);
  EXPECT_THROW(evaluate({}, gt), DataError);
}

TEST(Occupancy, OneVoxelTranslationMatchesSetOracle) {
  const auto gt = synth_strands(HairStyle::curly, 150, 5);
  for (double vs : {2.0, 3.0, 4.0}) {
    StrandSet rec = gt;
    for (auto& s : rec)
      for (auto& v : s.vertices) v.x() += vs;
    const Vec3 origin = metric_origin(gt);
    const auto g = oracle_voxels(gt, origin, vs);
    const auto r = oracle_voxels(rec, origin, vs);
    const std::size_t both = intersection_size(g, r);
    const PRF got = occupancy_prf(gt, rec, vs);
    EXPECT_DOUBLE_EQ(got.precision, static_cast<double>(both) / r.size()) << vs;
    EXPECT_DOUBLE_EQ(got.recall, static_cast<double>(both) / g.size()) << vs;
    EXPECT_LT(got.f1, 1.0);
    EXPECT_GT(got.f1, 0.0);
  }
}

TEST(Orientation, RotatedTangentsScoreZero) {
  const auto sticks = random_sticks(800, 7);
  const StrandSet gt = stick_strands(sticks, Vec3::UnitZ());
  Sticks rot = sticks;
  CounterRng rng(8);
  for (auto& d : rot.dirs) d = rotate_about_random_axis(d, kPi / 2, rng);
  const StrandSet rec = stick_strands(rot, Vec3::UnitX());
  const auto rep = evaluate(gt, rec, MetricsGrid{{2.0}, {20.0, 30.0, 40.0}});
  for (const auto& e : rep.entries) {
    EXPECT_EQ(e.occupancy.f1, 1.0);
    EXPECT_EQ(e.orientation.f1, 0.0);
  }
}

TEST(Orientation, NoisyTangentsMatchPerVoxelOracle) {
  const auto sticks = random_sticks(1500, 9);
  const StrandSet gt = stick_strands(sticks, Vec3::UnitZ());
  Sticks noisy = sticks;
  CounterRng rng(10);
  for (auto& d : noisy.dirs) d = rotate_about_random_axis(d, deg2rad(25.0) * rng.normal(), rng);
  const StrandSet rec = stick_strands(noisy, Vec3::UnitZ());
  for (double angle : {20.0, 30.0, 40.0}) {
    std::size_t ok = 1;  // the anchor voxel agrees exactly
    for (std::size_t i = 0; i < sticks.dirs.size(); ++i)
      if (rad2deg(std::acos(std::min(1.0, std::abs(sticks.dirs[i].dot(noisy.dirs[i]))))) <= angle) ++ok;
    const double expected = static_cast<double>(ok) / static_cast<double>(sticks.dirs.size() + 1);
    const PRF got = orientation_prf(gt, rec, 2.0, angle);
    EXPECT_NEAR(got.precision, expected, 1e-12) << angle;
    EXPECT_NEAR(got.recall, expected, 1e-12) << angle;
    if (angle == 20.0) EXPECT_LT(got.recall, occupancy_prf(gt, rec, 2.0).recall);
  }
}

TEST(Occupancy, PrecisionAndRecallSwapWithArguments) {
  // A shared anchor strand pins both bounding boxes to the same minimum.
  auto a = synth_strands(HairStyle::straight, 120, 11);
  auto b = synth_strands(HairStyle::wavy, 120, 12);
  Strand anchor;
  anchor.vertices = {Vec3(-200, -200, -200), Vec3(-199, -200, -200)};
  a.push_back(anchor);
  b.push_back(anchor);
  for (double vs : {2.0, 3.0, 4.0}) {
    const PRF ab = occupancy_prf(a, b, vs), ba = occupancy_prf(b, a, vs);
    EXPECT_DOUBLE_EQ(ab.precision, ba.recall);
    EXPECT_DOUBLE_EQ(ab.recall, ba.precision);
  }
}

TEST(Orientation, NeverExceedsOccupancyOnRandomPairs) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto gt = synth_strands(static_cast<HairStyle>(s % 3), 60, 100 + s);
    const auto rec = synth_strands(static_cast<HairStyle>((s + 1) % 3), 60, 200 + s);
    const auto rep = evaluate(gt, rec, {}, {}, 3);
    double prev_angle_f1 = -1.0;
    for (const auto& e : rep.entries) {
      EXPECT_LE(e.orientation.precision, e.occupancy.precision);
      EXPECT_LE(e.orientation.recall, e.occupancy.recall);
      for (double x : {e.occupancy.precision, e.occupancy.recall, e.occupancy.f1, e.orientation.precision,
                       e.orientation.recall, e.orientation.f1}) {
        EXPECT_GE(x, 0.0);
        EXPECT_LE(x, 1.0);
      }
      // Entries are voxel-major, angle-minor.
      if (e.angle_deg == 20.0) prev_angle_f1 = -1.0;
      EXPECT_GE(e.orientation.f1, prev_angle_f1);
      prev_angle_f1 = e.orientation.f1;
    }
  }
}

TEST(Occupancy, DilationOnlyAddsMatches) {
  const auto gt = synth_strands(HairStyle::straight, 100, 21);
  const auto rec = synth_strands(HairStyle::straight, 100, 22);
  MetricOptions wide;
  wide.dilation = 1;
  for (double vs : {2.0, 3.0}) {
    const PRF a = occupancy_prf(gt, rec, vs), b = occupancy_prf(gt, rec, vs, wide);
    EXPECT_GE(b.precision, a.precision);
    EXPECT_GE(b.recall, a.recall);
  }
  MetricOptions bad;
  bad.dilation = -1;
  EXPECT_THROW(evaluate(gt, rec, {}, bad), ConfigError);
}

TEST(Report, LayoutAndLookup) {
  const auto gt = synth_strands(HairStyle::straight, 40, 30);
  auto rep = evaluate(gt, gt, {}, {}, 2);
  EXPECT_EQ(rep.at(3.0, 30.0).voxel_size, 3.0);
  EXPECT_THROW(rep.at(5.0, 30.0), DataError);
  const std::string csv = format_csv(rep, "x");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "label,voxel_mm,angle_deg,occ_p,occ_r,occ_f1,ori_p,ori_r,ori_f1");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 10);
  rep.stage_seconds = {{"fpmvo", 1.5}};
  EXPECT_EQ(format_report(rep).find("fpmvo"), std::string::npos);
  EXPECT_NE(format_report(rep, true).find("fpmvo"), std::string::npos);
  EXPECT_EQ(evaluate(gt, gt, {}, {}, 1).entries.size(), evaluate(gt, gt, {}, {}, 4).entries.size());
}
