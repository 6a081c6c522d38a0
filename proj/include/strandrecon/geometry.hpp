#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <limits>
#include <vector>

namespace strandrecon {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec3f = Eigen::Vector3f;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

struct OrientedPoint {
  Vec3 position = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
};

using PointCloud = std::vector<Vec3>;
using OrientedPointCloud = std::vector<OrientedPoint>;

// Sign convention for mod-pi 3D directions: z > 0, else y > 0, else x >= 0.
inline Vec3 canonical_sign(const Vec3& d) {
  if (d.z() > 0.0) return d;
  if (d.z() < 0.0) return -d;
  if (d.y() > 0.0) return d;
  if (d.y() < 0.0) return -d;
  return d.x() >= 0.0 ? d : Vec3(-d);
}

// Canonical half-plane for 2D orientations: y >= 0, tie-break x >= 0.
inline Vec2 canonical_half_plane(const Vec2& o) {
  if (o.y() > 0.0) return o;
  if (o.y() < 0.0) return -o;
  return o.x() >= 0.0 ? o : Vec2(-o);
}

// Angle between two undirected lines, in [0, pi/2].
inline double line_angle(const Vec3& a, const Vec3& b) {
  const double c = std::abs(a.normalized().dot(b.normalized()));
  return std::acos(std::min(1.0, c));
}

inline double line_angle(const Vec2& a, const Vec2& b) {
  const double c = std::abs(a.normalized().dot(b.normalized()));
  return std::acos(std::min(1.0, c));
}

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  bool empty() const { return (lo.array() > hi.array()).any(); }
  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void extend(const Aabb& o) {
    if (o.empty()) return;
    extend(o.lo);
    extend(o.hi);
  }
  void pad(double margin) {
    lo.array() -= margin;
    hi.array() += margin;
  }
  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
};

/// Running sign-aligned accumulation of undirected directions. Each sample
/// is flipped to agree with the current sum before it is added.
class SignAlignedMean {
 public:
  void add(const Vec3& d) {
    if (count_ == 0) first_ = d;
    sum_ += (sum_.dot(d) < 0.0) ? Vec3(-d) : d;
    ++count_;
  }
  int count() const { return count_; }
  // Falls back to the first sample when the sum degenerates.
  Vec3 mean() const {
    const double n = sum_.norm();
    if (n < 1e-6) return first_.normalized();
    return sum_ / n;
  }

 private:
  Vec3 sum_ = Vec3::Zero();
  Vec3 first_ = Vec3::UnitZ();
  int count_ = 0;
};

}  // namespace strandrecon
