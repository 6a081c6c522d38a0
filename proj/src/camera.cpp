#include "strandrecon/camera.hpp"

#include "strandrecon/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace strandrecon {

Eigen::Matrix<double, 3, 4> CameraView::world_to_camera() const {
  Eigen::Matrix<double, 3, 4> m;
  m.leftCols<3>() = rotation;
  m.col(3) = translation;
  return m;
}

void CameraView::allocate_maps() {
  orientation = Raster(width, height, 2, 0.0f);
  confidence = Raster(width, height, 1, 0.0f);
  depth = Raster(width, height, 1, kNoDepth);
}

CameraView CameraView::look_at(const Vec3& eye, const Vec3& target, const Vec3& up, const Intrinsics& k,
                               int width, int height) {
  const Vec3 f = (target - eye).normalized();
  Vec3 x = (-up).cross(f);
  if (x.norm() < 1e-9) throw ConfigError("look_at: up vector parallel to viewing direction");
  x.normalize();
  const Vec3 y = f.cross(x);
  CameraView cam;
  cam.rotation.row(0) = x.transpose();
  cam.rotation.row(1) = y.transpose();
  cam.rotation.row(2) = f.transpose();
  cam.translation = -cam.rotation * eye;
  cam.intrinsics = k;
  cam.width = width;
  cam.height = height;
  return cam;
}

std::optional<PixelSample> try_project(const CameraView& cam, const Vec3& p) {
  const Vec3 c = cam.to_camera(p);
  if (!(c.z() > 0.0)) return std::nullopt;
  const auto& k = cam.intrinsics;
  return PixelSample{Vec2(k.fx * c.x() / c.z() + k.cx, k.fy * c.y() / c.z() + k.cy), c.z()};
}

PixelSample project(const CameraView& cam, const Vec3& p) {
  auto s = try_project(cam, p);
  if (!s) throw OutOfFrustumError("point behind camera");
  return *s;
}

Vec3 back_project(const CameraView& cam, const Vec2& uv, double z) {
  if (!(z > 0.0)) throw InvalidDepthError("back_project requires positive depth");
  const auto& k = cam.intrinsics;
  const Vec3 c((uv.x() - k.cx) / k.fx * z, (uv.y() - k.cy) / k.fy * z, z);
  return cam.rotation.transpose() * (c - cam.translation);
}

std::optional<double> sample_nearest(const Raster& map, const Vec2& uv, int channel) {
  const int x = static_cast<int>(std::floor(uv.x() + 0.5));
  const int y = static_cast<int>(std::floor(uv.y() + 0.5));
  if (!map.in_bounds(x, y)) return std::nullopt;
  return map.at(x, y, channel);
}

namespace {

struct Bilinear {
  int x[4], y[4];
  double w[4];
};

std::optional<Bilinear> bilinear_taps(const Raster& map, const Vec2& uv) {
  if (uv.x() < -0.5 || uv.y() < -0.5 || uv.x() >= map.width - 0.5 || uv.y() >= map.height - 0.5)
    return std::nullopt;
  const double fx = std::floor(uv.x());
  const double fy = std::floor(uv.y());
  const double ax = uv.x() - fx;
  const double ay = uv.y() - fy;
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  Bilinear b;
  const int xs[2] = {std::clamp(x0, 0, map.width - 1), std::clamp(x0 + 1, 0, map.width - 1)};
  const int ys[2] = {std::clamp(y0, 0, map.height - 1), std::clamp(y0 + 1, 0, map.height - 1)};
  b.x[0] = xs[0], b.y[0] = ys[0], b.w[0] = (1 - ax) * (1 - ay);
  b.x[1] = xs[1], b.y[1] = ys[0], b.w[1] = ax * (1 - ay);
  b.x[2] = xs[0], b.y[2] = ys[1], b.w[2] = (1 - ax) * ay;
  b.x[3] = xs[1], b.y[3] = ys[1], b.w[3] = ax * ay;
  return b;
}

}  // namespace

std::optional<double> sample_bilinear(const Raster& map, const Vec2& uv, int channel) {
  const auto b = bilinear_taps(map, uv);
  if (!b) return std::nullopt;
  double v = 0.0;
  for (int i = 0; i < 4; ++i) v += b->w[i] * map.at(b->x[i], b->y[i], channel);
  return v;
}

std::optional<Vec2> sample_orientation(const Raster& map, const Vec2& uv) {
  const auto b = bilinear_taps(map, uv);
  if (!b) return std::nullopt;
  // Reference is the heaviest tap holding a non-zero vector.
  int ref = -1;
  for (int i = 0; i < 4; ++i) {
    if (map.at(b->x[i], b->y[i], 0) == 0.0f && map.at(b->x[i], b->y[i], 1) == 0.0f) continue;
    if (ref < 0 || b->w[i] > b->w[ref]) ref = i;
  }
  if (ref < 0) return std::nullopt;
  const Vec2 r(map.at(b->x[ref], b->y[ref], 0), map.at(b->x[ref], b->y[ref], 1));
  Vec2 acc = Vec2::Zero();
  for (int i = 0; i < 4; ++i) {
    Vec2 o(map.at(b->x[i], b->y[i], 0), map.at(b->x[i], b->y[i], 1));
    if (o.dot(r) < 0.0) o = -o;
    acc += b->w[i] * o;
  }
  const double n = acc.norm();
  if (n < 1e-9) return std::nullopt;
  return canonical_half_plane(acc / n);
}

std::optional<double> sample_depth(const CameraView& cam, const Vec2& uv) {
  auto d = sample_nearest(cam.depth, uv);
  if (!d || *d == kNoDepth) return std::nullopt;
  return d;
}

double visibility(const CameraView& cam, const Vec3& p, double eps_vis) {
  const auto s = try_project(cam, p);
  if (!s || !cam.contains(s->uv)) return 0.0;
  const auto d = sample_depth(cam, s->uv);
  if (!d) return 0.0;
  return std::max(0.0, 1.0 - std::abs(s->depth - *d) / eps_vis);
}

void write_rig(const std::filesystem::path& path, const std::vector<CameraView>& cams) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os << std::setprecision(17);
  os << "# strandrecon camera rig: world-to-camera 3x4 row-major, mm\n";
  os << "cameras " << cams.size() << "\n";
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const auto& c = cams[i];
    os << "camera " << i << "\n";
    os << "size " << c.width << " " << c.height << "\n";
    os << "intrinsics " << c.intrinsics.fx << " " << c.intrinsics.fy << " " << c.intrinsics.cx << " "
       << c.intrinsics.cy << "\n";
    os << "extrinsics";
    const auto m = c.world_to_camera();
    for (int r = 0; r < 3; ++r)
      for (int k = 0; k < 4; ++k) os << " " << m(r, k);
    os << "\n";
  }
  if (!os) throw DataError("write failed: " + path.string());
}

std::vector<CameraView> read_rig(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open rig file " + path.string());
  std::vector<CameraView> cams;
  std::size_t expected = 0;
  std::string line;
  auto fail = [&](const std::string& why) { throw DataError("rig file " + path.string() + ": " + why); };
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "cameras") {
      ls >> expected;
    } else if (tag == "camera") {
      cams.emplace_back();
    } else if (tag == "size") {
      if (cams.empty()) fail("size before camera");
      ls >> cams.back().width >> cams.back().height;
    } else if (tag == "intrinsics") {
      if (cams.empty()) fail("intrinsics before camera");
      auto& k = cams.back().intrinsics;
      ls >> k.fx >> k.fy >> k.cx >> k.cy;
    } else if (tag == "extrinsics") {
      if (cams.empty()) fail("extrinsics before camera");
      Eigen::Matrix<double, 3, 4> m;
      for (int r = 0; r < 3; ++r)
        for (int k = 0; k < 4; ++k) ls >> m(r, k);
      cams.back().rotation = m.leftCols<3>();
      cams.back().translation = m.col(3);
    } else {
      fail("unknown record '" + tag + "'");
    }
    if (ls.fail()) fail("malformed line '" + line + "'");
  }
  if (cams.size() != expected) fail("camera count mismatch");
  for (const auto& c : cams)
    if (c.width <= 0 || c.height <= 0) fail("invalid image size");
  return cams;
}

}  // namespace strandrecon
