#include "strandrecon/synthgen.hpp"

#include "strandrecon/errors.hpp"
#include "strandrecon/parallel.hpp"
#include "strandrecon/rng.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace strandrecon {

ScalpMesh generate_scalp(const ScalpParams& p) {
  if (!(p.cap_fraction > 0.0 && p.cap_fraction <= 1.0)) throw ConfigError("scene.cap_fraction must be in (0, 1]");
  if (!(p.radius > 0.0)) throw ConfigError("scene.scalp_radius must be positive");
  if (p.rings < 1 || p.segments < 3) throw ConfigError("scene.scalp_rings >= 1 and scene.scalp_segments >= 3 required");
  const bool closed = p.cap_fraction >= 1.0;
  if (closed && p.rings < 2) throw ConfigError("a closed sphere needs at least 2 rings");
  const double theta_max = p.cap_fraction * kPi;

  ScalpMesh m;
  auto add = [&](double theta, double phi) {
    const Vec3 n(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
    m.vertices.push_back(p.center + p.radius * n);
    m.normals.push_back(n);
  };
  add(0.0, 0.0);
  const int open_rings = closed ? p.rings - 1 : p.rings;
  for (int i = 1; i <= open_rings; ++i)
    for (int j = 0; j < p.segments; ++j) add(theta_max * i / p.rings, 2.0 * kPi * j / p.segments);
  auto ring = [&](int i, int j) { return 1 + (i - 1) * p.segments + (j % p.segments); };
  for (int j = 0; j < p.segments; ++j) m.triangles.push_back({0, ring(1, j), ring(1, j + 1)});
  for (int i = 1; i < open_rings; ++i)
    for (int j = 0; j < p.segments; ++j) {
      const int a = ring(i, j), b = ring(i, j + 1), c = ring(i + 1, j), d = ring(i + 1, j + 1);
      m.triangles.push_back({a, c, d});
      m.triangles.push_back({a, d, b});
    }
  if (closed) {
    m.vertices.push_back(p.center - p.radius * Vec3::UnitZ());
    m.normals.push_back(-Vec3::UnitZ());
    const int south = static_cast<int>(m.vertices.size()) - 1;
    for (int j = 0; j < p.segments; ++j) m.triangles.push_back({ring(open_rings, j), south, ring(open_rings, j + 1)});
  }
  return m;
}

std::string to_string(HairStyle s) {
  switch (s) {
    case HairStyle::straight: return "straight";
    case HairStyle::wavy: return "wavy";
    case HairStyle::curly: return "curly";
  }
  return "straight";
}

HairStyle parse_style(const std::string& s) {
  if (s == "straight") return HairStyle::straight;
  if (s == "wavy") return HairStyle::wavy;
  if (s == "curly") return HairStyle::curly;
  throw ConfigError("scene.style: unknown style '" + s + "' (straight, wavy, curly)");
}

void StyleParams::validate() const {
  if (strand_count == 0) throw ConfigError("scene.strands must be > 0");
  if (!(length_min > 0.0 && length_max >= length_min)) throw ConfigError("scene.length_min/length_max invalid");
  if (!(step > 0.0)) throw ConfigError("scene.step must be positive");
  if (gravity < 0.0) throw ConfigError("scene.gravity must be >= 0");
  if (!(comb_rate > 0.0)) throw ConfigError("scene.comb_rate must be positive");
  if (lift < 0.0 || lift_jitter < 0.0 || lift_jitter > 1.0) throw ConfigError("scene.lift/lift_jitter invalid");
  if (style == HairStyle::wavy && !(wavelength > 0.0)) throw ConfigError("scene.wavelength must be positive");
  if (style == HairStyle::curly && !(curl_radius > 0.0)) throw ConfigError("scene.curl_radius must be positive");
  if (style == HairStyle::curly && !(curl_pitch > 0.0)) throw ConfigError("scene.curl_pitch must be positive");
}

namespace {

/// One ground-truth curve, parameterised by t: polar angle on the combed
/// part, then linear along the straight continuation.
class StrandCurve {
 public:
  StrandCurve(const Vec3& root, const Vec3& normal, double head_radius, double lift, const StyleParams& st)
      : st_(st), root_(root), normal_(normal.normalized()) {
    phi0_ = std::atan2(normal_.y(), normal_.x());
    rho_ = Vec3(std::cos(phi0_), std::sin(phi0_), 0.0);
    e_ = Vec3(-std::sin(phi0_), std::cos(phi0_), 0.0);
    combed_ = st.gravity > 0.0 && head_radius > 0.0;
    if (!combed_) {
      t_begin_ = t_h_ = 0.0;
      g_h_ = root_;
      v_h_ = normal_;
    } else {
      theta0_ = std::acos(std::clamp(normal_.z(), -1.0, 1.0));
      r_ = head_radius;
      h_ = lift;
      tau_ = st.comb_rate / st.gravity;
      origin_ = root_ - r_ * rhat(theta0_);
      t_begin_ = theta0_;
      t_h_ = std::max(theta0_, 0.5 * kPi);
      Vec3 d1, d2;
      g_h_ = combed_guide(t_h_, d1, d2);
      v_h_ = d1;
      build_guide_table();
    }
    curl_k_ = 2.0 * kPi / st.curl_pitch;
    // Whole turns on the combed part: cos(psi) = 1 where the guide curvature
    // drops to zero, so the curl stays tangent-continuous there.
    if (combed_ && s_h_ > 0.0) curl_k_ = 2.0 * kPi * std::max(1.0, std::round(s_h_ / st.curl_pitch)) / s_h_;
  }

  double t_begin() const { return t_begin_; }

  Vec3 position(double t) const {
    Vec3 d1, d2;
    const Vec3 g = guide(t, d1, d2);
    return g + offset(t, d1, d2, nullptr);
  }

  Vec3 derivative(double t) const {
    Vec3 d1, d2;
    guide(t, d1, d2);
    Vec3 od;
    offset(t, d1, d2, &od);
    return d1 + od;
  }

 private:
  Vec3 rhat(double th) const { return std::sin(th) * rho_ + std::cos(th) * Vec3::UnitZ(); }
  Vec3 that(double th) const { return std::cos(th) * rho_ - std::sin(th) * Vec3::UnitZ(); }

  Vec3 combed_guide(double th, Vec3& d1, Vec3& d2) const {
    const double ex = std::exp(-(th - theta0_) / tau_);
    const double rr = r_ + h_ * (1.0 - ex);
    const double r1 = h_ / tau_ * ex;
    const double r2 = -h_ / (tau_ * tau_) * ex;
    const Vec3 rh = rhat(th), th_ = that(th);
    d1 = r1 * rh + rr * th_;
    d2 = (r2 - rr) * rh + 2.0 * r1 * th_;
    return origin_ + rr * rh;
  }

  Vec3 guide(double t, Vec3& d1, Vec3& d2) const {
    if (combed_ && t < t_h_) return combed_guide(t, d1, d2);
    d1 = v_h_;
    d2 = Vec3::Zero();
    return g_h_ + (t - t_h_) * v_h_;
  }

  // Guide arclength and its t-derivative. The combed part uses a cubic
  // Hermite interpolant of a Simpson table so s and ds stay consistent.
  double guide_arclength(double t, double& ds) const {
    if (!combed_ || t >= t_h_ || s_tab_.size() < 2) {
      ds = v_h_.norm();
      return s_h_ + (t - t_h_) * ds;
    }
    const double u = (t - theta0_) / dt_;
    const auto i = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(u))), s_tab_.size() - 2);
    const double x = u - static_cast<double>(i);
    const double x2 = x * x, x3 = x2 * x;
    const double s0 = s_tab_[i], s1 = s_tab_[i + 1];
    const double m0 = m_tab_[i] * dt_, m1 = m_tab_[i + 1] * dt_;
    const double s = (2 * x3 - 3 * x2 + 1) * s0 + (x3 - 2 * x2 + x) * m0 + (-2 * x3 + 3 * x2) * s1 + (x3 - x2) * m1;
    ds = ((6 * x2 - 6 * x) * s0 + (3 * x2 - 4 * x + 1) * m0 + (-6 * x2 + 6 * x) * s1 + (3 * x2 - 2 * x) * m1) / dt_;
    return s;
  }

  void build_guide_table() {
    const double span = t_h_ - theta0_;
    s_h_ = 0.0;
    if (span <= 0.0) return;
    const int n = std::max(8, static_cast<int>(std::ceil(span / 0.002)));
    dt_ = span / n;
    s_tab_.assign(static_cast<std::size_t>(n) + 1, 0.0);
    m_tab_.assign(static_cast<std::size_t>(n) + 1, 0.0);
    Vec3 d1, d2;
    auto speed = [&](double th) {
      combed_guide(th, d1, d2);
      return d1.norm();
    };
    for (int i = 0; i <= n; ++i) m_tab_[static_cast<std::size_t>(i)] = speed(theta0_ + i * dt_);
    for (int i = 0; i < n; ++i) {
      const double mid = speed(theta0_ + (i + 0.5) * dt_);
      s_tab_[static_cast<std::size_t>(i) + 1] =
          s_tab_[static_cast<std::size_t>(i)] +
          dt_ / 6.0 * (m_tab_[static_cast<std::size_t>(i)] + 4.0 * mid + m_tab_[static_cast<std::size_t>(i) + 1]);
    }
    s_h_ = s_tab_.back();
  }

  Vec3 offset(double t, const Vec3& d1, const Vec3& d2, Vec3* deriv) const {
    if (st_.style == HairStyle::straight) {
      if (deriv) deriv->setZero();
      return Vec3::Zero();
    }
    double ds = 0.0;
    const double s = guide_arclength(t, ds);
    if (st_.style == HairStyle::wavy) {
      const double k = 2.0 * kPi / st_.wavelength;
      if (deriv) *deriv = st_.wave_amplitude * k * std::cos(k * s) * ds * e_;
      return st_.wave_amplitude * std::sin(k * s) * e_;
    }
    const double psi = curl_k_ * s, dpsi = curl_k_ * ds;
    const double sp = d1.norm();
    const Vec3 tan = d1 / sp;
    const Vec3 nn = e_.cross(tan);
    const double rc = st_.curl_radius;
    if (deriv) {
      const Vec3 dtan = (d2 - tan * tan.dot(d2)) / sp;
      const Vec3 dn = e_.cross(dtan);
      *deriv = rc * (-std::sin(psi) * dpsi * nn + (std::cos(psi) - 1.0) * dn + std::cos(psi) * dpsi * e_);
    }
    return rc * ((std::cos(psi) - 1.0) * nn + std::sin(psi) * e_);
  }

  const StyleParams& st_;
  Vec3 root_, normal_;
  double phi0_ = 0.0;
  Vec3 rho_, e_;
  bool combed_ = false;
  double theta0_ = 0.0, r_ = 0.0, h_ = 0.0, tau_ = 1.0;
  Vec3 origin_ = Vec3::Zero();
  double t_begin_ = 0.0, t_h_ = 0.0;
  Vec3 g_h_ = Vec3::Zero(), v_h_ = Vec3::UnitZ();
  double s_h_ = 0.0, dt_ = 1.0;
  double curl_k_ = 1.0;
  std::vector<double> s_tab_, m_tab_;
};

Strand sample_curve(const StrandCurve& c, double length, double step) {
  // Arclength table with steps of about step/4, Simpson per interval.
  std::vector<double> ts{c.t_begin()}, ss{0.0};
  double t = c.t_begin();
  double f0 = c.derivative(t).norm();
  while (ss.back() < length) {
    const double dt = 0.25 * step / std::max(f0, 1e-9);
    const double fm = c.derivative(t + 0.5 * dt).norm();
    const double f1 = c.derivative(t + dt).norm();
    ss.push_back(ss.back() + dt / 6.0 * (f0 + 4.0 * fm + f1));
    t += dt;
    ts.push_back(t);
    f0 = f1;
  }
  const int n = std::max(1, static_cast<int>(std::lround(length / step)));
  const double h = length / n;
  Strand s;
  s.rooted = true;
  s.vertices.reserve(static_cast<std::size_t>(n) + 1);
  s.tangents.reserve(static_cast<std::size_t>(n) + 1);
  std::size_t seg = 0;
  for (int k = 0; k <= n; ++k) {
    const double target = k * h;
    while (seg + 2 < ss.size() && ss[seg + 1] < target) ++seg;
    const double a = ss[seg], b = ss[seg + 1];
    const double w = b > a ? std::clamp((target - a) / (b - a), 0.0, 1.0) : 0.0;
    const double tk = ts[seg] + w * (ts[seg + 1] - ts[seg]);
    s.vertices.push_back(c.position(tk));
    s.tangents.push_back(c.derivative(tk).normalized());
  }
  return s;
}

}  // namespace

StrandSet generate_strands(const ScalpMesh& scalp, const StyleParams& style) {
  style.validate();
  const Sphere head = fit_head_sphere(scalp);
  const auto roots = sample_scalp_seeds(scalp, style.strand_count, style.seed);
  const CounterRng base(style.seed, hash_name("gt-strands"));
  StrandSet out;
  out.reserve(roots.size());
  for (std::size_t i = 0; i < roots.size(); ++i) {
    CounterRng rng = base.split(static_cast<std::uint64_t>(i));
    const double length = rng.uniform(style.length_min, style.length_max);
    const double lift = style.lift * (1.0 + style.lift_jitter * (2.0 * rng.uniform() - 1.0));
    const StrandCurve curve(roots[i].position, roots[i].normal, head.radius, lift, style);
    out.push_back(sample_curve(curve, length, style.step));
  }
  return out;
}

std::vector<CameraView> make_rig(const RigParams& p) {
  if (p.views < 0 || (p.views == 0 && !p.top_view)) throw ConfigError("scene.views must be > 0");
  if (p.width < 1 || p.height < 1 || !(p.focal > 0.0) || !(p.distance > 0.0))
    throw ConfigError("scene camera size, focal and distance must be positive");
  const Intrinsics k{p.focal, p.focal, 0.5 * (p.width - 1), 0.5 * (p.height - 1)};
  std::vector<CameraView> cams;
  const double el = deg2rad(p.elevation_deg);
  for (int v = 0; v < p.views; ++v) {
    const double az = 2.0 * kPi * v / p.views;
    const Vec3 eye = p.target + p.distance * Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    cams.push_back(CameraView::look_at(eye, p.target, Vec3::UnitZ(), k, p.width, p.height));
  }
  if (p.top_view)
    cams.push_back(CameraView::look_at(p.target + p.distance * Vec3::UnitZ(), p.target, Vec3::UnitY(), k, p.width,
                                       p.height));
  return cams;
}

RenderedMaps render_maps(const StrandSet& strands, const CameraView& cam, double line_width_px,
                         const std::optional<Sphere>& occluder) {
  const int w = cam.width, h = cam.height;
  RenderedMaps out{Raster(w, h, 2), Raster(w, h, 1), Raster(w, h, 1), Raster(w, h, 1)};
  constexpr float kFar = std::numeric_limits<float>::infinity();
  std::vector<float> zbuf(static_cast<std::size_t>(w) * h, kFar);
  std::vector<char> is_head(zbuf.size(), 0);
  std::vector<float> gray_depth(zbuf.size(), kFar);

  if (occluder && occluder->radius > 0.0) {
    const Vec3 eye = cam.center();
    const Mat3 rt = cam.rotation.transpose();
    const auto& k = cam.intrinsics;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const Vec3 d = rt * Vec3((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
        const Vec3 oc = eye - occluder->center;
        const double a = d.squaredNorm(), b = 2.0 * d.dot(oc), c = oc.squaredNorm() - occluder->radius * occluder->radius;
        const double disc = b * b - 4.0 * a * c;
        if (disc < 0.0) continue;
        const double lam = (-b - std::sqrt(disc)) / (2.0 * a);
        if (lam <= 0.0) continue;
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        zbuf[i] = static_cast<float>(lam);
        gray_depth[i] = zbuf[i];
        is_head[i] = 1;
      }
  }

  const double hw = 0.5 * line_width_px;
  for (const auto& s : strands) {
    for (std::size_t e = 0; e + 1 < s.vertices.size(); ++e) {
      const auto a = try_project(cam, s.vertices[e]);
      const auto b = try_project(cam, s.vertices[e + 1]);
      if (!a || !b) continue;
      const Vec2 ab = b->uv - a->uv;
      const double len2 = ab.squaredNorm();
      if (len2 < 1e-12) continue;
      const Vec2 dir = canonical_half_plane(ab / std::sqrt(len2));
      const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a->uv.x(), b->uv.x()) - hw - 1.0)));
      const int x1 = std::min(w - 1, static_cast<int>(std::ceil(std::max(a->uv.x(), b->uv.x()) + hw + 1.0)));
      const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a->uv.y(), b->uv.y()) - hw - 1.0)));
      const int y1 = std::min(h - 1, static_cast<int>(std::ceil(std::max(a->uv.y(), b->uv.y()) + hw + 1.0)));
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          const Vec2 q(x, y);
          const double t = std::clamp((q - a->uv).dot(ab) / len2, 0.0, 1.0);
          const double dist = (q - (a->uv + t * ab)).norm();
          const double cover = std::clamp(hw + 0.5 - dist, 0.0, 1.0);
          if (cover <= 0.0) continue;
          const double z = 1.0 / ((1.0 - t) / a->depth + t / b->depth);
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          const auto zf = static_cast<float>(z);
          if (zf < gray_depth[i]) {
            float& g = out.gray.at(x, y);
            g = std::max(g, static_cast<float>(cover));
          }
          if (dist > hw || !(zf < zbuf[i])) continue;
          zbuf[i] = zf;
          is_head[i] = 0;
          out.orientation.at(x, y, 0) = static_cast<float>(dir.x());
          out.orientation.at(x, y, 1) = static_cast<float>(dir.y());
        }
    }
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (is_head[i] || zbuf[i] == kFar) {
        out.orientation.at(x, y, 0) = 0.0f;
        out.orientation.at(x, y, 1) = 0.0f;
        continue;
      }
      out.depth.at(x, y) = zbuf[i];
      out.confidence.at(x, y) = 1.0f;
    }
  return out;
}

void degrade(CameraView& view, const DegradeParams& p, std::uint64_t seed) {
  if (p.angle_noise_deg < 0.0 || p.confidence_dropout < 0.0 || p.confidence_dropout > 1.0 || p.depth_noise_mm < 0.0)
    throw ConfigError("noise parameters must be >= 0 and dropout <= 1");
  const CounterRng base(seed, hash_name("degrade"));
  const double sigma = deg2rad(p.angle_noise_deg);
  for (int y = 0; y < view.height; ++y)
    for (int x = 0; x < view.width; ++x) {
      if (view.confidence.at(x, y) <= 0.0f && view.depth.at(x, y) == kNoDepth) continue;
      CounterRng rng = base.split(static_cast<std::uint64_t>(y) * static_cast<std::uint64_t>(view.width) + x);
      const double angle = rng.normal();
      const double drop = rng.uniform();
      const double dz = rng.normal();
      if (sigma > 0.0) {
        const double a = sigma * angle;
        const double ox = view.orientation.at(x, y, 0), oy = view.orientation.at(x, y, 1);
        const Vec2 r = canonical_half_plane(Vec2(std::cos(a) * ox - std::sin(a) * oy, std::sin(a) * ox + std::cos(a) * oy));
        view.orientation.at(x, y, 0) = static_cast<float>(r.x());
        view.orientation.at(x, y, 1) = static_cast<float>(r.y());
      }
      if (p.confidence_dropout > 0.0 && drop < p.confidence_dropout) view.confidence.at(x, y) = 0.0f;
      if (p.depth_noise_mm > 0.0 && view.depth.at(x, y) != kNoDepth) {
        const double z = view.depth.at(x, y) + p.depth_noise_mm * dz;
        view.depth.at(x, y) = static_cast<float>(std::max(z, 1e-3));
      }
    }
}

Scene generate_scene(const SceneParams& params, int workers) {
  Scene scene;
  scene.scalp = generate_scalp(params.scalp);
  StyleParams style = params.style;
  style.seed = CounterRng(params.seed).split("style").next_u64();
  scene.gt = generate_strands(scene.scalp, style);
  scene.views = make_rig(params.rig);
  scene.gray.resize(scene.views.size());
  Sphere head = fit_head_sphere(scene.scalp);
  head.radius = std::max(0.0, head.radius - 1.0);
  const std::uint64_t noise_seed = CounterRng(params.seed).split("noise").next_u64();
  parallel_for(scene.views.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t v = b; v < e; ++v) {
      auto& cam = scene.views[v];
      auto maps = render_maps(scene.gt, cam, params.line_width_px, head);
      cam.orientation = std::move(maps.orientation);
      cam.confidence = std::move(maps.confidence);
      cam.depth = std::move(maps.depth);
      scene.gray[v] = std::move(maps.gray);
      degrade(cam, params.noise, noise_seed + v);
    }
  });
  return scene;
}

namespace {

nlohmann::ordered_json scene_json(const SceneParams& p) {
  nlohmann::ordered_json j;
  j["seed"] = p.seed;
  j["scalp"] = {{"radius", p.scalp.radius},
                {"cap_fraction", p.scalp.cap_fraction},
                {"rings", p.scalp.rings},
                {"segments", p.scalp.segments}};
  const auto& s = p.style;
  j["style"] = {{"style", to_string(s.style)},   {"strands", s.strand_count},     {"length_min", s.length_min},
                {"length_max", s.length_max},    {"wave_amplitude", s.wave_amplitude}, {"wavelength", s.wavelength},
                {"curl_radius", s.curl_radius},  {"curl_pitch", s.curl_pitch},   {"gravity", s.gravity},
                {"lift", s.lift},                {"lift_jitter", s.lift_jitter}, {"comb_rate", s.comb_rate},
                {"step", s.step}};
  const auto& r = p.rig;
  j["rig"] = {{"views", r.views},   {"top_view", r.top_view}, {"distance", r.distance},
              {"elevation_deg", r.elevation_deg}, {"width", r.width}, {"height", r.height},
              {"focal", r.focal},   {"target", {r.target.x(), r.target.y(), r.target.z()}}};
  j["line_width_px"] = p.line_width_px;
  j["noise"] = {{"angle_noise_deg", p.noise.angle_noise_deg},
                {"confidence_dropout", p.noise.confidence_dropout},
                {"depth_noise_mm", p.noise.depth_noise_mm}};
  return j;
}

std::string view_file(std::size_t v, const char* what) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "view_%02zu_%s.map", v, what);
  return buf;
}

}  // namespace

void write_scene(const std::filesystem::path& dir, const Scene& scene, const SceneParams& params) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create bundle directory " + dir.string() + ": " + ec.message());
  write_rig(dir / "cameras.txt", scene.views);
  write_scalp(dir / "scalp.txt", scene.scalp);
  write_strands(dir / "gt_strands.bin", scene.gt);
  for (std::size_t v = 0; v < scene.views.size(); ++v) {
    write_raster(dir / view_file(v, "orientation"), scene.views[v].orientation);
    write_raster(dir / view_file(v, "confidence"), scene.views[v].confidence);
    write_raster(dir / view_file(v, "depth"), scene.views[v].depth);
    if (v < scene.gray.size()) write_raster(dir / view_file(v, "gray"), scene.gray[v]);
  }
  nlohmann::ordered_json m;
  m["kind"] = "strandrecon-scene";
  m["views"] = scene.views.size();
  m["gt_strands"] = scene.gt.size();
  m["gt_vertices"] = total_vertices(scene.gt);
  m["params"] = scene_json(params);
  std::ofstream os(dir / "manifest.json");
  if (!os) throw DataError("cannot write manifest in " + dir.string());
  os << m.dump(2) << "\n";
}

Scene read_scene(const std::filesystem::path& dir, bool load_gray) {
  if (!std::filesystem::is_directory(dir)) throw DataError("scene bundle not found: " + dir.string());
  Scene scene;
  scene.views = read_rig(dir / "cameras.txt");
  scene.scalp = read_scalp(dir / "scalp.txt");
  if (std::filesystem::exists(dir / "gt_strands.bin")) scene.gt = read_strands(dir / "gt_strands.bin");
  for (std::size_t v = 0; v < scene.views.size(); ++v) {
    auto& cam = scene.views[v];
    cam.orientation = read_raster(dir / view_file(v, "orientation"));
    cam.confidence = read_raster(dir / view_file(v, "confidence"));
    cam.depth = read_raster(dir / view_file(v, "depth"));
    if (cam.orientation.width != cam.width || cam.orientation.height != cam.height || cam.orientation.channels != 2 ||
        cam.confidence.width != cam.width || cam.depth.width != cam.width || cam.confidence.height != cam.height ||
        cam.depth.height != cam.height)
      throw DataError("map size mismatch for view " + std::to_string(v) + " in " + dir.string());
    if (load_gray) {
      const auto g = dir / view_file(v, "gray");
      scene.gray.push_back(std::filesystem::exists(g) ? read_raster(g) : Raster());
    }
  }
  return scene;
}

}  // namespace strandrecon
