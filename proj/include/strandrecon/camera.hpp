#pragma once

#include "strandrecon/geometry.hpp"
#include "strandrecon/raster.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace strandrecon {

// Depth maps store camera-space z in mm; this marks pixels with no hair hit.
inline constexpr float kNoDepth = 0.0f;

struct Intrinsics {
  double fx = 1.0, fy = 1.0;
  double cx = 0.0, cy = 0.0;
};

/// Distortion-free pinhole view with its per-pixel observation maps.
/// Pixel coordinates put integer values at pixel centres, so the image
/// covers [-0.5, width - 0.5) x [-0.5, height - 0.5).
struct CameraView {
  Intrinsics intrinsics;
  Mat3 rotation = Mat3::Identity();  // world -> camera
  Vec3 translation = Vec3::Zero();   // mm
  int width = 0;
  int height = 0;

  Raster orientation;  // 2 channels, unit vectors where confidence > 0
  Raster confidence;   // 1 channel, [0, 1]
  Raster depth;        // 1 channel, camera z in mm or kNoDepth

  Vec3 center() const { return -rotation.transpose() * translation; }
  Eigen::Matrix<double, 3, 4> world_to_camera() const;
  Vec3 to_camera(const Vec3& p) const { return rotation * p + translation; }
  bool contains(const Vec2& uv) const {
    return uv.x() >= -0.5 && uv.y() >= -0.5 && uv.x() < width - 0.5 && uv.y() < height - 0.5;
  }

  // Allocates empty maps matching the image size.
  void allocate_maps();

  // Rotation looking from `eye` toward `target` with the image y axis
  // pointing roughly along -up.
  static CameraView look_at(const Vec3& eye, const Vec3& target, const Vec3& up, const Intrinsics& k,
                            int width, int height);
};

struct PixelSample {
  Vec2 uv = Vec2::Zero();
  double depth = 0.0;  // camera z, mm
};

// Throws OutOfFrustumError when p is not in front of the camera.
PixelSample project(const CameraView& cam, const Vec3& p);
std::optional<PixelSample> try_project(const CameraView& cam, const Vec3& p);

// Throws InvalidDepthError for z <= 0.
Vec3 back_project(const CameraView& cam, const Vec2& uv, double z);

/// V = max(0, 1 - |z_cam(p) - D(u)| / eps_vis); 0 outside the frame or on
/// sentinel depth.
double visibility(const CameraView& cam, const Vec3& p, double eps_vis);

// Bilinear sample of one channel; nullopt outside the image.
std::optional<double> sample_bilinear(const Raster& map, const Vec2& uv, int channel = 0);
// Nearest-neighbour sample of one channel; nullopt outside the image.
std::optional<double> sample_nearest(const Raster& map, const Vec2& uv, int channel = 0);
/// Bilinear blend of a 2-channel mod-pi orientation map. Neighbours are
/// sign-aligned to the heaviest one before blending and the result is
/// renormalised. nullopt outside the image or where the blend vanishes.
std::optional<Vec2> sample_orientation(const Raster& map, const Vec2& uv);

std::optional<double> sample_depth(const CameraView& cam, const Vec2& uv);

// Rig file: text, one block per camera (size, intrinsics, 3x4 row-major
// world-to-camera matrix in mm).
void write_rig(const std::filesystem::path& path, const std::vector<CameraView>& cams);
std::vector<CameraView> read_rig(const std::filesystem::path& path);

}  // namespace strandrecon
