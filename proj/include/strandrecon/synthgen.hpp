#pragma once

#include "strandrecon/camera.hpp"
#include "strandrecon/raster.hpp"
#include "strandrecon/scalp.hpp"
#include "strandrecon/strand.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace strandrecon {

struct ScalpParams {
  double radius = 80.0;        // mm
  double cap_fraction = 0.45;  // polar extent of the cap as a fraction of pi, measured from +z
  int rings = 48;
  int segments = 128;
  Vec3 center = Vec3::Zero();
};

/// Spherical cap around +z triangulated in latitude rings, outward unit
/// normals. cap_fraction 1 closes the mesh at the south pole. Throws
/// ConfigError for invalid parameters.
ScalpMesh generate_scalp(const ScalpParams& params);

enum class HairStyle { straight, wavy, curly };
std::string to_string(HairStyle s);
HairStyle parse_style(const std::string& s);  // throws ConfigError

struct StyleParams {
  HairStyle style = HairStyle::straight;
  std::size_t strand_count = 5000;
  double length_min = 90.0;   // mm
  double length_max = 160.0;  // mm
  double wave_amplitude = 4.0;   // mm
  double wavelength = 30.0;      // mm
  double curl_radius = 8.0;      // mm
  double curl_pitch = 15.0;      // mm
  double gravity = 1.0;  // 0 gives radial strands; larger values comb strands down faster
  double lift = 10.0;        // mm, height the combed layer settles above the head
  double lift_jitter = 0.6;  // relative spread of the per-strand lift
  double comb_rate = 0.15;   // rad, angular decay constant of the lift at gravity 1
  double step = 1.0;         // mm, vertex spacing
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError
};

/// Ground-truth strands rooted on area-uniform scalp seeds. The guide runs
/// from the root around the head in the root's meridian plane, settling at
/// radius r + lift, and continues along its tangent below the equator.
/// With gravity 0 the guide is the radial line along the root normal.
/// Offsets use the frame e = (-sin phi, cos phi, 0), phi = atan2(n_y, n_x)
/// of the root normal n, and N = e x T for the guide tangent T:
///   wavy   A sin(2 pi s / wavelength) e
///   curly  r ((cos psi - 1) N + sin psi e),  psi = 2 pi s / pitch
/// where s is guide arclength. On combed strands the pitch is adjusted per
/// strand so the combed part holds a whole number of turns. Vertices are
/// spaced uniformly in arclength and tangents are the exact curve derivatives.
StrandSet generate_strands(const ScalpMesh& scalp, const StyleParams& style);

struct RigParams {
  int views = 16;               // orbit cameras; one top view is added
  bool top_view = true;
  double distance = 600.0;      // mm from target
  double elevation_deg = 10.0;  // orbit elevation
  int width = 512;
  int height = 512;
  double focal = 900.0;  // px
  Vec3 target{0.0, 0.0, -10.0};
};

std::vector<CameraView> make_rig(const RigParams& params);

struct RenderedMaps {
  Raster orientation;  // 2 channels
  Raster confidence;
  Raster depth;
  Raster gray;  // anti-aliased strand coverage
};

/// Z-buffered thick-line rasterisation of every strand segment. Depth is
/// perspective-correct camera z; orientation is the canonical projected
/// segment direction of the front-most hit; confidence is 1 on covered
/// pixels. An optional occluder sphere hides strands behind it and leaves
/// its own pixels empty.
RenderedMaps render_maps(const StrandSet& strands, const CameraView& cam, double line_width_px,
                         const std::optional<Sphere>& occluder = std::nullopt);

struct DegradeParams {
  double angle_noise_deg = 0.0;     // std of per-pixel rotation
  double confidence_dropout = 0.0;  // fraction of pixels whose confidence is zeroed
  double depth_noise_mm = 0.0;      // std of additive depth noise
};

/// Per-pixel noise on hair pixels, drawn from a counter stream keyed by
/// (seed, pixel), so results do not depend on traversal order. Zero
/// parameters leave the maps untouched.
void degrade(CameraView& view, const DegradeParams& params, std::uint64_t seed);

struct SceneParams {
  ScalpParams scalp;
  StyleParams style;
  RigParams rig;
  double line_width_px = 1.5;
  DegradeParams noise;
  std::uint64_t seed = 1;  // root seed; style.seed is derived from it
};

struct Scene {
  ScalpMesh scalp;
  StrandSet gt;
  std::vector<CameraView> views;  // maps populated
  std::vector<Raster> gray;
};

Scene generate_scene(const SceneParams& params, int workers = 1);

// Bundle layout: cameras.txt, scalp.txt, gt_strands.bin, manifest.json and
// per view view_NN_{orientation,confidence,depth,gray}.map.
void write_scene(const std::filesystem::path& dir, const Scene& scene, const SceneParams& params);
Scene read_scene(const std::filesystem::path& dir, bool load_gray = true);

}  // namespace strandrecon
