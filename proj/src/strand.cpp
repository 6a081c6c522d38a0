#include "strandrecon/strand.hpp"

#include "binary_io.hpp"
#include "strandrecon/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

namespace strandrecon {

double Strand::length() const {
  double len = 0.0;
  for (std::size_t i = 1; i < vertices.size(); ++i) len += (vertices[i] - vertices[i - 1]).norm();
  return len;
}

Vec3 vertex_tangent(const std::vector<Vec3>& v, std::size_t i) {
  if (v.size() < 2) return Vec3::UnitZ();
  const std::size_t a = i == 0 ? 0 : i - 1;
  const std::size_t b = i + 1 >= v.size() ? v.size() - 1 : i + 1;
  const Vec3 d = v[b] - v[a];
  const double n = d.norm();
  return n > 0.0 ? Vec3(d / n) : Vec3::UnitZ();
}

std::vector<Vec3> resample_polyline(const std::vector<Vec3>& v, double step) {
  if (v.size() < 2 || !(step > 0.0)) return v;
  std::vector<double> cum(v.size(), 0.0);
  for (std::size_t i = 1; i < v.size(); ++i) cum[i] = cum[i - 1] + (v[i] - v[i - 1]).norm();
  const double total = cum.back();
  if (total <= 0.0) return {v.front(), v.back()};
  const int segments = std::max(1, static_cast<int>(std::lround(total / step)));
  const double h = total / segments;
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(segments) + 1);
  out.push_back(v.front());
  std::size_t j = 1;
  for (int k = 1; k < segments; ++k) {
    const double s = k * h;
    while (j + 1 < v.size() && cum[j] < s) ++j;
    const double seg = cum[j] - cum[j - 1];
    const double t = seg > 0.0 ? (s - cum[j - 1]) / seg : 0.0;
    out.push_back(v[j - 1] + t * (v[j] - v[j - 1]));
  }
  out.push_back(v.back());
  return out;
}

std::vector<Vec3> resample_chords(const std::vector<Vec3>& v, double step) {
  if (v.size() < 2 || !(step > 0.0)) return v;
  std::vector<Vec3> out{v.front()};
  const double s2 = step * step;
  std::size_t seg = 0;
  double t = 0.0;
  while (seg + 1 < v.size()) {
    const Vec3& prev = out.back();
    const Vec3 e = v[seg + 1] - v[seg];
    if ((v[seg + 1] - prev).squaredNorm() < s2 || e.squaredNorm() == 0.0) {
      ++seg;
      t = 0.0;
      continue;
    }
    // Larger root of |v[seg] + u e - prev|^2 = step^2; the point at t is inside.
    const Vec3 w = v[seg] - prev;
    const double a = e.squaredNorm();
    const double b = 2.0 * w.dot(e);
    const double c = w.squaredNorm() - s2;
    const double u = (-b + std::sqrt(std::max(0.0, b * b - 4.0 * a * c))) / (2.0 * a);
    t = std::clamp(u, t, 1.0);
    out.push_back(v[seg] + t * e);
  }
  if (out.size() == 1 || (v.back() - out.back()).norm() >= 0.8 * step) out.push_back(v.back());
  return out;
}

std::vector<Vec3> densify_polyline(const std::vector<Vec3>& v, double max_step) {
  if (v.size() < 2) return v;
  std::vector<Vec3> out;
  out.push_back(v.front());
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double len = (v[i] - v[i - 1]).norm();
    const int n = std::max(1, static_cast<int>(std::ceil(len / max_step)));
    for (int k = 1; k <= n; ++k) out.push_back(v[i - 1] + (static_cast<double>(k) / n) * (v[i] - v[i - 1]));
  }
  return out;
}

std::size_t total_vertices(const StrandSet& strands) {
  std::size_t n = 0;
  for (const auto& s : strands) n += s.size();
  return n;
}

void write_strands(const std::filesystem::path& path, const StrandSet& strands) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  detail::put_u32(os, kStrandMagic);
  detail::put_u32(os, static_cast<std::uint32_t>(strands.size()));
  for (const auto& s : strands) {
    detail::put_u32(os, static_cast<std::uint32_t>(s.vertices.size()));
    for (const auto& p : s.vertices)
      for (int k = 0; k < 3; ++k) detail::put_f32(os, static_cast<float>(p[k]));
  }
  if (!os) throw DataError("write failed: " + path.string());
}

StrandSet read_strands(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open strand file " + path.string());
  const std::string what = "strand file " + path.string();
  if (detail::get_u32(is, what) != kStrandMagic) throw DataError("bad magic in " + what);
  const auto count = detail::get_u32(is, what);
  StrandSet out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Strand s;
    const auto n = detail::get_u32(is, what);
    s.vertices.resize(n);
    for (auto& p : s.vertices)
      for (int k = 0; k < 3; ++k) p[k] = detail::get_f32(is, what);
    out.push_back(std::move(s));
  }
  return out;
}

void write_strands_text(const std::filesystem::path& path, const StrandSet& strands) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os << std::setprecision(9);
  for (std::size_t i = 0; i < strands.size(); ++i) {
    const auto& s = strands[i];
    os << "strand " << i << " " << s.vertices.size() << " " << (s.rooted ? "rooted" : "free") << "\n";
    for (const auto& p : s.vertices) os << p.x() << " " << p.y() << " " << p.z() << "\n";
    os << "\n";
  }
}

}  // namespace strandrecon
