// Acceptance run: one PASS/FAIL line per criterion A1..A9. A9 is reported
// only; the exit status reflects A1..A8.

#include "strandrecon/camera.hpp"
#include "strandrecon/config.hpp"
#include "strandrecon/fpmvo.hpp"
#include "strandrecon/metrics.hpp"
#include "strandrecon/phg.hpp"
#include "strandrecon/pipeline.hpp"
#include "strandrecon/spatial.hpp"
#include "strandrecon/synthgen.hpp"

#include "test_support.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <string>
#include <thread>
#include <tuple>

using namespace strandrecon;
namespace fs = std::filesystem;
namespace tst = strandrecon::testing;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int hard_failures = 0;

void report(const char* id, bool pass, const std::string& detail, bool soft = false) {
  std::printf("%s %s%s  %s\n", id, soft ? "SOFT " : "", pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass && !soft) ++hard_failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- A1 -------------------------------------------------------------------

CandidateSet random_candidates(CounterRng& rng, int k, int s) {
  CandidateSet c;
  for (int v = 0; v < k; ++v) {
    ViewCandidates vc;
    vc.view = v;
    vc.weight = rng.below(4) == 0 ? 0.5 : rng.uniform(0.05, 1.0);
    for (int i = 0; i < s; ++i) {
      if (v > 0 && rng.below(5) == 0)
        vc.directions.push_back(c.views[rng.below(static_cast<std::uint64_t>(v))].directions[static_cast<std::size_t>(i)]);
      else
        vc.directions.push_back(tst::random_unit(rng));
      vc.offset_points.push_back(Vec3(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)));
    }
    c.views.push_back(std::move(vc));
  }
  return c;
}

// Full K x K similarity matrix, weighted row sums, first maximum.
int oracle_medoid(const CandidateSet& c, std::size_t s, double* sigma_out) {
  const auto k = c.views.size();
  double wsum = 0.0;
  for (const auto& v : c.views) wsum += v.weight;
  std::vector<double> sigma(k);
  for (std::size_t i = 0; i < k; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      acc += c.views[j].weight * std::abs(c.views[i].directions[s].dot(c.views[j].directions[s]));
    sigma[i] = acc / wsum;
  }
  if (k == 1) {
    *sigma_out = 1.0;
    return 0;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < k; ++i)
    if (sigma[i] > sigma[best]) best = i;
  *sigma_out = sigma[best];
  return static_cast<int>(best);
}

void a1() {
  const auto t0 = Clock::now();
  CounterRng rng(1000);
  int mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    const int k = 1 + static_cast<int>(rng.below(8));
    const int s = 1 + static_cast<int>(rng.below(16));
    const auto c = random_candidates(rng, k, s);
    const auto f = fuse_medoid(c);
    for (std::size_t l = 0; l < static_cast<std::size_t>(s); ++l) {
      double sigma = 0.0;
      const int w = oracle_medoid(c, l, &sigma);
      if (f.winner[l] != w || f.directions[l] != c.views[static_cast<std::size_t>(w)].directions[l] ||
          std::abs(f.consistency[l] - sigma) > 1e-12)
        ++mismatches;
    }
  }
  const double secs = since(t0);
  report("A1", mismatches == 0 && secs < 10.0, fmt("fuse_medoid vs oracle: %d mismatches on 1000 sets, %.2f s", mismatches, secs));
}

// ---- A2..A4 ---------------------------------------------------------------

PipelineConfig wig_config(HairStyle style, const DegradeParams& noise = {}) {
  PipelineConfig cfg;
  cfg.scene.style.style = style;
  cfg.scene.noise = noise;
  cfg.derive_seeds();
  cfg.validate();
  return cfg;
}

double relative_drop(double clean, double noisy) { return (clean - noisy) / clean; }

void a2_to_a4() {
  auto t0 = Clock::now();
  const PipelineConfig cfg = wig_config(HairStyle::straight);
  const Scene scene = generate_scene(cfg.scene, cfg.workers);
  const PipelineResult clean = run_pipeline(scene, cfg);
  const double secs = since(t0);
  const double occ = clean.metrics.at(3.0, 30.0).occupancy.f1, ori = clean.metrics.at(3.0, 30.0).orientation.f1;
  report("A2", occ >= 0.70 && ori >= 0.50 && secs < 600.0,
         fmt("straight wig 5k strands, %zu views: occupancy F1@3mm %.4f (>= 0.70), orientation F1@3mm/30deg %.4f "
             "(>= 0.50), %.1f s",
             scene.views.size(), occ, ori, secs));

  t0 = Clock::now();
  const PipelineConfig curly_cfg = wig_config(HairStyle::curly);
  const PipelineResult curly = run_pipeline(generate_scene(curly_cfg.scene, curly_cfg.workers), curly_cfg);
  const double curly_occ = curly.metrics.at(4.0, 30.0).occupancy.f1;
  report("A3", curly_occ >= 0.60,
         fmt("curly wig (radius %.0f mm, pitch %.0f mm): occupancy F1@4mm %.4f (>= 0.60), %.1f s",
             curly_cfg.scene.style.curl_radius, curly_cfg.scene.style.curl_pitch, curly_occ, since(t0)));

  t0 = Clock::now();
  const PipelineConfig noisy_cfg = wig_config(HairStyle::straight, DegradeParams{20.0, 0.3, 0.0});
  const Scene noisy_scene = generate_scene(noisy_cfg.scene, noisy_cfg.workers);
  const PipelineResult noisy = run_pipeline(noisy_scene, noisy_cfg);
  const double noisy_occ = noisy.metrics.at(3.0, 30.0).occupancy.f1;
  const double relaxed_drop = relative_drop(occ, noisy_occ);

  // The baseline grows on the same volumes the relaxed runs produced.
  const PhgParams strict = cfg.phg.strict_occupancy();
  auto strict_f1 = [&](const PipelineResult& r) {
    OOVolume vol = r.volume;
    const auto grown = grow(scene.scalp, vol, strict, cfg.workers);
    return occupancy_prf(scene.gt, grown.strands, 3.0, cfg.metric_options).f1;
  };
  const double strict_clean = strict_f1(clean), strict_noisy = strict_f1(noisy);
  const double strict_drop = relative_drop(strict_clean, strict_noisy);
  report("A4", relaxed_drop < 0.30 && strict_drop > relaxed_drop,
         fmt("20deg noise + 30%% dropout: relaxed occupancy F1@3mm %.4f -> %.4f (drop %.2f%%, < 30%%); "
             "strict %.4f -> %.4f (drop %.2f%%, must exceed relaxed), %.1f s",
             occ, noisy_occ, 100 * relaxed_drop, strict_clean, strict_noisy, 100 * strict_drop, since(t0)));
}

// ---- A5 -------------------------------------------------------------------

Vec3 oracle_tangent(const std::vector<Vec3>& v, bool at_end, std::size_t w) {
  w = std::min(w, v.size() - 1);
  Vec3 acc = Vec3::Zero();
  for (std::size_t k = 0; k < w; ++k) {
    const std::size_t a = at_end ? v.size() - 1 - k : k + 1;
    const Vec3 e = v[a] - v[a - 1];
    if (e.norm() > 0) acc += e.normalized();
  }
  return acc.norm() > 0 ? Vec3(acc.normalized()) : Vec3::Zero();
}

std::vector<std::pair<std::size_t, std::size_t>> oracle_links(const StrandSet& segs, double dist, double angle_deg) {
  const std::size_t n = segs.size();
  std::vector<std::tuple<double, std::size_t, std::size_t>> cands;
  const double c = std::cos(deg2rad(angle_deg));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || segs[j].rooted) continue;
      const double d = (segs[i].vertices.back() - segs[j].vertices.front()).norm();
      if (!(d < dist)) continue;
      if (!(oracle_tangent(segs[i].vertices, true, 3).dot(oracle_tangent(segs[j].vertices, false, 3)) > c)) continue;
      cands.emplace_back(d, i, j);
    }
  std::sort(cands.begin(), cands.end());
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> next(n, kNone), prev(n, kNone);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& [d, i, j] : cands) {
    if (next[i] != kNone || prev[j] != kNone) continue;
    std::size_t k = j;
    while (next[k] != kNone && k != i) k = next[k];
    if (k == i) continue;
    next[i] = j;
    prev[j] = i;
    out.emplace_back(i, j);
  }
  return out;
}

void a5() {
  const auto t0 = Clock::now();
  CounterRng rng(77);
  StrandSet segs;
  for (int i = 0; i < 5000; ++i) {
    const Vec3 p(rng.uniform(0, 60), rng.uniform(0, 60), rng.uniform(0, 60));
    const Vec3 d = (Vec3(1, 0.3, 0.1) + 0.5 * tst::random_unit(rng)).normalized();
    Strand s;
    const int n = 2 + static_cast<int>(rng.below(6));
    Vec3 q = p;
    for (int k = 0; k < n; ++k) {
      s.vertices.push_back(q);
      q += (d + 0.2 * tst::random_unit(rng)).normalized();
    }
    s.rooted = rng.uniform() < 0.1;
    segs.push_back(std::move(s));
  }
  const auto expected = oracle_links(segs, 2.0, 30.0);
  const bool links_ok = link_pairs(segs, 2.0, 30.0, 3, 1) == expected && link_pairs(segs, 2.0, 30.0, 3, 8) == expected;
  PhgParams p;
  p.smoothing = false;
  p.step = 1e9;
  p.link_distance = 2.0;
  const bool count_ok = connect_segments(segs, p, 2.0).size() == segs.size() - expected.size();

  std::vector<IndexedPoint> pts(10000);
  for (std::size_t i = 0; i < pts.size(); ++i)
    pts[i] = {Vec3(rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-100, 100)), static_cast<std::int64_t>(i)};
  const SpatialIndex idx = build_index(pts);
  std::size_t spatial_bad = 0;
  for (int qi = 0; qi < 1000; ++qi) {
    const Vec3 q(rng.uniform(-120, 120), rng.uniform(-120, 120), rng.uniform(-120, 120));
    std::vector<std::pair<double, std::int64_t>> scan;
    std::pair<double, std::int64_t> best{1e300, -1};
    for (const auto& pt : pts) {
      const double d2 = (pt.position - q).squaredNorm();
      if (d2 <= 144.0) scan.emplace_back(d2, pt.id);
      best = std::min(best, {d2, pt.id});
    }
    std::sort(scan.begin(), scan.end());
    const auto got = idx.query_radius(q, 12.0);
    bool same = got.size() == scan.size();
    for (std::size_t k = 0; same && k < got.size(); ++k)
      same = got[k].id == scan[k].second && got[k].distance == std::sqrt(scan[k].first);
    const auto near = idx.nearest(q);
    same = same && near.id == best.second && near.distance == std::sqrt(best.first);
    spatial_bad += !same;
  }
  report("A5", links_ok && count_ok && spatial_bad == 0,
         fmt("linking: %zu oracle links on 5000 segments, %s, strand count %s; spatial: %zu/1000 queries differ from "
             "linear scan over 10000 points, %.1f s",
             expected.size(), links_ok ? "identical" : "DIFFERENT", count_ok ? "consistent" : "WRONG", spatial_bad,
             since(t0)));
}

// ---- A6 -------------------------------------------------------------------

StrandSet synth_strands(HairStyle style, std::size_t n, std::uint64_t seed) {
  ScalpParams sp;
  sp.rings = 16;
  sp.segments = 48;
  StyleParams st;
  st.style = style;
  st.strand_count = n;
  st.seed = seed;
  return generate_strands(generate_scalp(sp), st);
}

using VoxelSet = std::set<std::tuple<long, long, long>>;

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

void a6() {
  const auto gt = synth_strands(HairStyle::wavy, 1000, 3);
  const auto self = evaluate(gt, gt);
  bool identity = self.entries.size() == 9;
  for (const auto& e : self.entries)
    identity = identity && e.occupancy.precision == 1.0 && e.occupancy.recall == 1.0 && e.occupancy.f1 == 1.0 &&
               e.orientation.precision == 1.0 && e.orientation.recall == 1.0 && e.orientation.f1 == 1.0;

  int bound_violations = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto a = synth_strands(static_cast<HairStyle>(s % 3), 200, 100 + s);
    const auto b = synth_strands(static_cast<HairStyle>((s + 1) % 3), 200, 200 + s);
    for (const auto& e : evaluate(a, b).entries)
      bound_violations += e.orientation.precision > e.occupancy.precision || e.orientation.recall > e.occupancy.recall;
  }

  int translation_bad = 0;
  const auto curly = synth_strands(HairStyle::curly, 300, 5);
  for (double vs : {2.0, 3.0, 4.0}) {
    StrandSet moved = curly;
    for (auto& s : moved)
      for (auto& v : s.vertices) v.x() += vs;
    const Vec3 origin = metric_origin(curly);
    const auto g = oracle_voxels(curly, origin, vs), r = oracle_voxels(moved, origin, vs);
    std::size_t both = 0;
    for (const auto& x : g) both += r.count(x);
    const PRF got = occupancy_prf(curly, moved, vs);
    translation_bad += got.precision != static_cast<double>(both) / r.size() ||
                       got.recall != static_cast<double>(both) / g.size();
  }
  report("A6", identity && bound_violations == 0 && translation_bad == 0,
         fmt("eval(gt, gt) %s at 9 thresholds; orientation > occupancy in %d of 180 entries over 20 pairs; "
             "translated copy differs from voxel-set oracle at %d of 3 voxel sizes",
             identity ? "is 1.0" : "is NOT 1.0", bound_violations, translation_bad));
}

// ---- A7 -------------------------------------------------------------------

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(STRANDRECON_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void a7() {
  const auto t0 = Clock::now();
  const auto d = tst::temp_dir("acceptance_a7");
  const fs::path log = d / "log.txt";
  bool ok = run_cli("synth --seed 5 --out " + (d / "s1").string(), log) == 0 &&
            run_cli("synth --seed 5 --workers 8 --out " + (d / "s2").string(), log) == 0;
  std::size_t files = 0, differing = 0;
  if (ok)
    for (const auto& e : fs::directory_iterator(d / "s1")) {
      ++files;
      differing += tst::read_bytes(e.path()) != tst::read_bytes(d / "s2" / e.path().filename());
    }
  ok = ok && run_cli("pipeline --workers 1 --scene " + (d / "s1").string() + " --out " + (d / "p1").string(), log) == 0 &&
       run_cli("pipeline --workers 8 --scene " + (d / "s1").string() + " --out " + (d / "p8").string(), log) == 0;
  const bool strands_same = ok && tst::read_bytes(d / "p1" / "strands.bin") == tst::read_bytes(d / "p8" / "strands.bin");
  const bool metrics_same = ok && tst::read_bytes(d / "p1" / "metrics.txt") == tst::read_bytes(d / "p8" / "metrics.txt");
  report("A7", ok && files > 0 && differing == 0 && strands_same && metrics_same,
         fmt("scene bundles: %zu of %zu files differ; pipeline workers 1 vs 8: strands.bin %s, metrics.txt %s, %.1f s",
             differing, files, strands_same ? "identical" : "DIFFERENT", metrics_same ? "identical" : "DIFFERENT",
             since(t0)));
}

// ---- A8 -------------------------------------------------------------------

Vec3 helix_tangent(const Vec3& p, double pitch_rate) {
  const double phi = std::atan2(p.y(), p.x());
  const double rho = std::hypot(p.x(), p.y());
  return Vec3(-rho * std::sin(phi), rho * std::cos(phi), pitch_rate).normalized();
}

void a8() {
  ScalpParams sp;
  sp.rings = 16;
  sp.segments = 48;
  const auto scalp = generate_scalp(sp);
  double fd_worst = 0.0;
  for (auto style : {HairStyle::straight, HairStyle::wavy, HairStyle::curly}) {
    StyleParams st;
    st.style = style;
    st.strand_count = 20;
    st.step = 0.01;
    for (const auto& s : generate_strands(scalp, st)) {
      const auto& v = s.vertices;
      for (std::size_t q = 1; q + 1 < v.size(); ++q)
        fd_worst = std::max(fd_worst, ((v[q + 1] - v[q - 1]).normalized() - s.tangents[q]).norm());
    }
  }

  const double voxel = 2.0, rho = 50.0, c = 20.0;
  Aabb box;
  box.extend(Vec3(-62, -62, -4));
  box.extend(Vec3(62, 62, 60));
  OOVolume vol(VoxelGrid::covering(box, voxel));
  const auto& g = vol.grid();
  for (std::size_t i = 0; i < g.count(); ++i) {
    const Vec3 q = g.center(i);
    const double r = std::hypot(q.x(), q.y());
    if (r > 40 && r < 60) vol.set(i, helix_tangent(q, c));
  }
  PhgParams p;
  p.max_segment_vertices = 101;
  const Vec3 start(rho, 0, 0);
  const auto v = trace_strand(vol, start, helix_tangent(start, c), p);
  const double t = 100 * p.resolved_step(voxel) / std::hypot(rho, c);
  const double helix_err = v.size() == 101 ? (v.back() - Vec3(rho * std::cos(t), rho * std::sin(t), c * t)).norm() : 1e9;

  CounterRng rng(12);
  double cam_worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const auto cam = tst::random_camera(rng);
    const Vec3 x = 80.0 * tst::random_unit(rng) * rng.uniform();
    const auto s = project(cam, x);
    cam_worst = std::max(cam_worst, (back_project(cam, s.uv, s.depth) - x).norm());
  }
  report("A8", fd_worst < 1e-4 && helix_err < voxel && cam_worst < 1e-6,
         fmt("tangent vs finite difference %.2e (< 1e-4); helix trace endpoint error %.3f mm over 100 steps "
             "(< %.0f mm voxel); project/back_project round trip %.2e mm (< 1e-6)",
             fd_worst, helix_err, voxel, cam_worst));
}

// ---- A9 -------------------------------------------------------------------

void a9() {
  PipelineConfig cfg = wig_config(HairStyle::straight);
  cfg.bench_workers = {1, 2, 4, 8};
  const Scene scene = generate_scene(cfg.scene);
  const auto rows = run_bench(scene, cfg);
  bool scaling = true;
  std::string speedups;
  for (const auto& r : rows) {
    if (r.stage != "phg" || r.workers == 1) continue;
    scaling = scaling && r.speedup >= 0.5 * r.workers;
    speedups += fmt(" T=%d %.2fx", r.workers, r.speedup);
  }

  const PointCloud shell = extract_shell(scene.views, cfg.shell_dedup);
  const PointCloud sub(shell.begin(), shell.begin() + std::min<std::size_t>(shell.size(), 5000));
  const auto outer = optimize_outer(sub, scene.views, cfg.fpmvo, 1);
  const double k = cfg.fpmvo.top_views, s = cfg.fpmvo.depth_samples, pp = cfg.fpmvo.patch_size;
  const double per_point =
      static_cast<double>(outer.ops.similarity_terms + outer.ops.patch_terms) / static_cast<double>(outer.ops.points);
  const double ratio = per_point / (k * s * (k + pp * pp));
  report("A9", scaling && ratio > 0.5 && ratio < 2.0,
         fmt("PHG speedup (>= 0.5 T):%s on %u hardware threads; FPMVO ops/point %.1f = %.2f x K*S*(K+P^2)", speedups.c_str(),
             std::thread::hardware_concurrency(), per_point, ratio),
         true);
}

}  // namespace

int main() {
  a1();
  a2_to_a4();
  a5();
  a6();
  a7();
  a8();
  a9();
  std::printf("%d hard criteria failed\n", hard_failures);
  return hard_failures == 0 ? 0 : 1;
}
