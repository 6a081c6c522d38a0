#include "strandrecon/scalp.hpp"

#include "strandrecon/errors.hpp"
#include "strandrecon/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace strandrecon {

namespace {

double triangle_area(const ScalpMesh& m, const std::array<int, 3>& t) {
  const Vec3& a = m.vertices[static_cast<std::size_t>(t[0])];
  const Vec3& b = m.vertices[static_cast<std::size_t>(t[1])];
  const Vec3& c = m.vertices[static_cast<std::size_t>(t[2])];
  return 0.5 * (b - a).cross(c - a).norm();
}

}  // namespace

double ScalpMesh::area() const {
  double a = 0.0;
  for (const auto& t : triangles) a += triangle_area(*this, t);
  return a;
}

Aabb ScalpMesh::bounds() const {
  Aabb box;
  for (const auto& v : vertices) box.extend(v);
  return box;
}

Vec3 ScalpMesh::normal_at(std::size_t tri, double b1, double b2) const {
  const auto& t = triangles[tri];
  const Vec3 n = (1.0 - b1 - b2) * normals[static_cast<std::size_t>(t[0])] +
                 b1 * normals[static_cast<std::size_t>(t[1])] + b2 * normals[static_cast<std::size_t>(t[2])];
  return n.normalized();
}

std::vector<ScalpSeed> sample_scalp_seeds(const ScalpMesh& scalp, std::size_t count, std::uint64_t seed) {
  std::vector<ScalpSeed> out;
  if (scalp.triangles.empty() || count == 0) return out;
  std::vector<double> cdf(scalp.triangles.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < scalp.triangles.size(); ++i) {
    acc += triangle_area(scalp, scalp.triangles[i]);
    cdf[i] = acc;
  }
  CounterRng rng(seed, hash_name("scalp-seeds"));
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double r = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), r);
    const auto tri = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), cdf.size() - 1));
    double u = rng.uniform(), v = rng.uniform();
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    const auto& t = scalp.triangles[tri];
    const Vec3 p = (1.0 - u - v) * scalp.vertices[static_cast<std::size_t>(t[0])] +
                   u * scalp.vertices[static_cast<std::size_t>(t[1])] + v * scalp.vertices[static_cast<std::size_t>(t[2])];
    out.push_back(ScalpSeed{p, scalp.normal_at(tri, u, v)});
  }
  return out;
}

ScalpSurfaceIndex::ScalpSurfaceIndex(const ScalpMesh& scalp) {
  for (std::size_t i = 0; i < scalp.vertices.size(); ++i) {
    points.push_back(scalp.vertices[i]);
    normals.push_back(scalp.normals[i]);
  }
  for (std::size_t t = 0; t < scalp.triangles.size(); ++t) {
    const auto& tri = scalp.triangles[t];
    points.push_back((scalp.vertices[static_cast<std::size_t>(tri[0])] + scalp.vertices[static_cast<std::size_t>(tri[1])] +
                      scalp.vertices[static_cast<std::size_t>(tri[2])]) /
                     3.0);
    normals.push_back(scalp.normal_at(t, 1.0 / 3.0, 1.0 / 3.0));
  }
  for (const auto& s : scalp.seeds) {
    points.push_back(s.position);
    normals.push_back(s.normal);
  }
  std::vector<IndexedPoint> ip;
  ip.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) ip.push_back({points[i], static_cast<std::int64_t>(i)});
  index = SpatialIndex(std::move(ip));
}

double ScalpSurfaceIndex::signed_distance(const Vec3& p) const {
  const auto nb = index.nearest(p);
  const auto i = static_cast<std::size_t>(nb.id);
  return (p - points[i]).dot(normals[i]) < 0.0 ? -nb.distance : nb.distance;
}

Sphere fit_head_sphere(const ScalpMesh& scalp) {
  Mat3 a = Mat3::Zero();
  Vec3 b = Vec3::Zero();
  for (std::size_t i = 0; i < scalp.vertices.size(); ++i) {
    const Vec3& n = scalp.normals[i];
    const Mat3 proj = Mat3::Identity() - n * n.transpose();
    a += proj;
    b += proj * scalp.vertices[i];
  }
  Sphere s;
  if (scalp.vertices.empty() || std::abs(a.determinant()) < 1e-9 * std::pow(static_cast<double>(scalp.vertices.size()), 3))
    return s;
  s.center = a.ldlt().solve(b);
  for (const auto& v : scalp.vertices) s.radius += (v - s.center).norm();
  s.radius /= static_cast<double>(scalp.vertices.size());
  return s;
}

void write_scalp(const std::filesystem::path& path, const ScalpMesh& scalp) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os << std::setprecision(17);
  os << "# strandrecon scalp mesh\n";
  for (std::size_t i = 0; i < scalp.vertices.size(); ++i) {
    const auto& p = scalp.vertices[i];
    const auto& n = scalp.normals[i];
    os << "v " << p.x() << " " << p.y() << " " << p.z() << " " << n.x() << " " << n.y() << " " << n.z() << "\n";
  }
  for (const auto& t : scalp.triangles) os << "f " << t[0] << " " << t[1] << " " << t[2] << "\n";
  for (const auto& s : scalp.seeds)
    os << "s " << s.position.x() << " " << s.position.y() << " " << s.position.z() << " " << s.normal.x() << " "
       << s.normal.y() << " " << s.normal.z() << "\n";
}

ScalpMesh read_scalp(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open scalp file " + path.string());
  ScalpMesh m;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v" || tag == "s") {
      Vec3 p, n;
      ls >> p.x() >> p.y() >> p.z() >> n.x() >> n.y() >> n.z();
      if (tag == "v") {
        m.vertices.push_back(p);
        m.normals.push_back(n);
      } else {
        m.seeds.push_back({p, n});
      }
    } else if (tag == "f") {
      std::array<int, 3> t{};
      ls >> t[0] >> t[1] >> t[2];
      m.triangles.push_back(t);
    } else {
      throw DataError("scalp file " + path.string() + ": unknown record '" + tag + "'");
    }
    if (ls.fail()) throw DataError("scalp file " + path.string() + ": malformed line '" + line + "'");
  }
  for (const auto& t : m.triangles)
    for (int k : t)
      if (k < 0 || static_cast<std::size_t>(k) >= m.vertices.size())
        throw DataError("scalp file " + path.string() + ": face index out of range");
  return m;
}

}  // namespace strandrecon
