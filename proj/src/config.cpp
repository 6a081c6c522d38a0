#include "strandrecon/config.hpp"

#include "strandrecon/errors.hpp"
#include "strandrecon/rng.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace strandrecon {

void PipelineConfig::derive_seeds() {
  const CounterRng root(seed);
  scene.seed = root.split("scene").next_u64();
  fpmvo.seed = root.split("fpmvo").next_u64();
  phg.seed = root.split("phg").next_u64();
}

void PipelineConfig::validate() const {
  if (workers < 1) throw ConfigError("workers must be >= 1");
  scene.style.validate();
  fpmvo.validate();
  phg.validate();
  if (!(shell_dedup >= 0.0)) throw ConfigError("fpmvo.shell_dedup must be >= 0");
  if (!(voxel_size > 0.0)) throw ConfigError("volume.voxel_size must be positive");
  if (!(fill_params.max_depth >= 0.0)) throw ConfigError("volume.fill_depth must be >= 0");
  if (metrics.voxel_sizes.empty() || metrics.angles_deg.empty()) throw ConfigError("metrics lists must not be empty");
  for (double v : metrics.voxel_sizes)
    if (!(v > 0.0)) throw ConfigError("metrics.voxel_sizes must be positive");
  for (double a : metrics.angles_deg)
    if (!(a >= 0.0 && a <= 90.0)) throw ConfigError("metrics.angles must be in [0, 90]");
  if (metric_options.dilation < 0) throw ConfigError("metrics.dilation must be >= 0");
  if (bench_workers.empty()) throw ConfigError("bench.workers must not be empty");
  for (int w : bench_workers)
    if (w < 1) throw ConfigError("bench.workers entries must be >= 1");
  if (bench_repeats < 1) throw ConfigError("bench.repeats must be >= 1");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& name, const std::string& v, const char* what) {
  throw ConfigError(name + ": invalid value '" + v + "' (expected " + what + ")");
}

double parse_double(const std::string& name, const std::string& v) {
  const std::string t = trim(v);
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) bad_value(name, v, "a number");
  return d;
}

template <typename Int>
Int parse_int(const std::string& name, const std::string& v) {
  const std::string t = trim(v);
  Int out{};
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || ec != std::errc() || p != t.data() + t.size()) bad_value(name, v, "an integer");
  return out;
}

bool parse_bool(const std::string& name, const std::string& v) {
  std::string t = trim(v);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  bad_value(name, v, "true or false");
}

template <typename T>
std::vector<T> parse_list(const std::string& name, const std::string& v) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if constexpr (std::is_floating_point_v<T>)
      out.push_back(parse_double(name, item));
    else
      out.push_back(parse_int<T>(name, item));
  }
  if (out.empty()) bad_value(name, v, "a comma-separated list");
  return out;
}

std::string fmt_double(double d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  // Prefer the shortest text that reads back to the same value.
  for (int prec = 1; prec <= 17; ++prec) {
    char probe[64];
    std::snprintf(probe, sizeof probe, "%.*g", prec, d);
    if (std::strtod(probe, nullptr) == d) return probe;
  }
  return buf;
}

template <typename T>
std::string fmt_list(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_floating_point_v<T>)
      s += fmt_double(v[i]);
    else
      s += std::to_string(v[i]);
  }
  return s;
}

using Cfg = PipelineConfig;

template <typename Field>
ConfigOption number(std::string section, std::string key, std::string help, Field field) {
  ConfigOption o{section, key, std::move(help), nullptr, nullptr};
  const std::string name = o.name();
  o.set = [field, name](Cfg& c, const std::string& v) {
    auto& ref = field(c);
    using T = std::remove_reference_t<decltype(ref)>;
    if constexpr (std::is_same_v<T, bool>)
      ref = parse_bool(name, v);
    else if constexpr (std::is_floating_point_v<T>)
      ref = parse_double(name, v);
    else
      ref = parse_int<T>(name, v);
  };
  o.get = [field](const Cfg& c) {
    auto& ref = field(const_cast<Cfg&>(c));
    using T = std::remove_reference_t<decltype(ref)>;
    if constexpr (std::is_same_v<T, bool>)
      return std::string(ref ? "true" : "false");
    else if constexpr (std::is_floating_point_v<T>)
      return fmt_double(ref);
    else
      return std::to_string(ref);
  };
  return o;
}

#define FIELD(expr) [](Cfg& c) -> auto& { return c.expr; }

std::vector<ConfigOption> build_options() {
  std::vector<ConfigOption> o;
  o.push_back(number("", "seed", "root seed; every stage seed is split from it", FIELD(seed)));
  o.push_back(number("", "workers", "worker threads", FIELD(workers)));

  o.push_back({"scene", "style", "straight | wavy | curly",
               [](Cfg& c, const std::string& v) { c.scene.style.style = parse_style(trim(v)); },
               [](const Cfg& c) { return to_string(c.scene.style.style); }});
  o.push_back(number("scene", "strands", "ground-truth strand count", FIELD(scene.style.strand_count)));
  o.push_back(number("scene", "length_min", "shortest strand, mm", FIELD(scene.style.length_min)));
  o.push_back(number("scene", "length_max", "longest strand, mm", FIELD(scene.style.length_max)));
  o.push_back(number("scene", "wave_amplitude", "wavy amplitude, mm", FIELD(scene.style.wave_amplitude)));
  o.push_back(number("scene", "wavelength", "wavy wavelength, mm", FIELD(scene.style.wavelength)));
  o.push_back(number("scene", "curl_radius", "curly helix radius, mm", FIELD(scene.style.curl_radius)));
  o.push_back(number("scene", "curl_pitch", "curly helix pitch, mm", FIELD(scene.style.curl_pitch)));
  o.push_back(number("scene", "gravity", "combing strength, 0 = radial strands", FIELD(scene.style.gravity)));
  o.push_back(number("scene", "lift", "height of the combed layer above the scalp, mm", FIELD(scene.style.lift)));
  o.push_back(number("scene", "lift_jitter", "relative per-strand lift spread", FIELD(scene.style.lift_jitter)));
  o.push_back(number("scene", "comb_rate", "angular decay of the lift, rad", FIELD(scene.style.comb_rate)));
  o.push_back(number("scene", "step", "ground-truth vertex spacing, mm", FIELD(scene.style.step)));
  o.push_back(number("scene", "scalp_radius", "head radius, mm", FIELD(scene.scalp.radius)));
  o.push_back(number("scene", "cap_fraction", "scalp cap polar extent as a fraction of pi", FIELD(scene.scalp.cap_fraction)));
  o.push_back(number("scene", "scalp_rings", "scalp latitude rings", FIELD(scene.scalp.rings)));
  o.push_back(number("scene", "scalp_segments", "scalp longitude segments", FIELD(scene.scalp.segments)));
  o.push_back(number("scene", "views", "orbit cameras", FIELD(scene.rig.views)));
  o.push_back(number("scene", "top_view", "add a camera above the head", FIELD(scene.rig.top_view)));
  o.push_back(number("scene", "distance", "camera distance to target, mm", FIELD(scene.rig.distance)));
  o.push_back(number("scene", "elevation_deg", "orbit elevation, deg", FIELD(scene.rig.elevation_deg)));
  o.push_back(number("scene", "width", "image width, px", FIELD(scene.rig.width)));
  o.push_back(number("scene", "height", "image height, px", FIELD(scene.rig.height)));
  o.push_back(number("scene", "focal", "focal length, px", FIELD(scene.rig.focal)));
  o.push_back(number("scene", "line_width_px", "rendered strand width, px", FIELD(scene.line_width_px)));
  o.push_back(number("scene", "angle_noise_deg", "orientation noise std, deg", FIELD(scene.noise.angle_noise_deg)));
  o.push_back(number("scene", "confidence_dropout", "fraction of hair pixels with confidence zeroed",
                     FIELD(scene.noise.confidence_dropout)));
  o.push_back(number("scene", "depth_noise_mm", "depth noise std, mm", FIELD(scene.noise.depth_noise_mm)));

  o.push_back(number("fpmvo", "pixel_offset", "image-space offset along the 2D orientation, px", FIELD(fpmvo.pixel_offset)));
  o.push_back(number("fpmvo", "depth_half_range", "depth sampling half range, mm", FIELD(fpmvo.depth_half_range)));
  o.push_back(number("fpmvo", "depth_samples", "depth samples per view (odd)", FIELD(fpmvo.depth_samples)));
  o.push_back(number("fpmvo", "top_views", "views per point", FIELD(fpmvo.top_views)));
  o.push_back(number("fpmvo", "patch_size", "patch edge, px (odd)", FIELD(fpmvo.patch_size)));
  o.push_back(number("fpmvo", "eps_vis", "visibility depth tolerance, mm", FIELD(fpmvo.eps_vis)));
  o.push_back(number("fpmvo", "stochastic_depth", "random depth offsets instead of a uniform grid",
                     FIELD(fpmvo.stochastic_depth)));
  o.push_back(number("fpmvo", "shell_dedup", "merge grid for back-projected depth samples, mm", FIELD(shell_dedup)));
  o.push_back(number("fpmvo", "gabor", "use Gabor maps from the grayscale images", FIELD(gabor)));
  o.push_back(number("fpmvo", "gabor_orientations", "filter bank size", FIELD(gabor_params.num_orientations)));
  o.push_back(number("fpmvo", "gabor_wavelength", "filter wavelength, px", FIELD(gabor_params.wavelength)));
  o.push_back(number("fpmvo", "gabor_sigma", "filter envelope, px", FIELD(gabor_params.sigma)));
  o.push_back(number("fpmvo", "gabor_kernel", "kernel edge, px (odd)", FIELD(gabor_params.kernel_size)));

  o.push_back(number("volume", "voxel_size", "voxel edge, mm", FIELD(voxel_size)));
  o.push_back(number("volume", "fill", "run the interior fill", FIELD(fill)));
  o.push_back(number("volume", "fill_depth", "interior fill reach, mm", FIELD(fill_params.max_depth)));

  o.push_back(number("phg", "step", "trace step, mm (0 = voxel_size / 2)", FIELD(phg.step)));
  o.push_back(number("phg", "max_segment_vertices", "vertex limit per traced segment", FIELD(phg.max_segment_vertices)));
  o.push_back(number("phg", "batch_size", "seeds per batch", FIELD(phg.batch_size)));
  o.push_back(number("phg", "occupancy_cap", "committed strands per voxel", FIELD(phg.occupancy_cap)));
  o.push_back(number("phg", "per_step_commit", "traces count their own voxels toward the cap", FIELD(phg.per_step_commit)));
  o.push_back(number("phg", "max_gap_steps", "steps allowed through unoccupied voxels", FIELD(phg.max_gap_steps)));
  o.push_back(number("phg", "link_distance", "link distance, mm (0 = 2 * step)", FIELD(phg.link_distance)));
  o.push_back(number("phg", "link_angle_deg", "link angle, deg", FIELD(phg.link_angle_deg)));
  o.push_back(number("phg", "tangent_window", "edges averaged for end tangents", FIELD(phg.tangent_window)));
  o.push_back(number("phg", "n_root", "scalp seeds (0 = seeds stored with the scalp)", FIELD(phg.n_root)));
  o.push_back(number("phg", "multiplicity", "traces per seed", FIELD(phg.multiplicity)));
  o.push_back(number("phg", "jitter", "jitter of extra traces, mm", FIELD(phg.jitter)));
  o.push_back(number("phg", "grow_segments", "grow segments in voxels no strand reached", FIELD(phg.grow_segments)));
  o.push_back(number("phg", "smoothing", "smooth linked strands", FIELD(phg.smoothing)));
  o.push_back(number("phg", "smoothing_strength", "Laplacian weight", FIELD(phg.smoothing_strength)));
  o.push_back(number("phg", "smoothing_iterations", "Laplacian passes", FIELD(phg.smoothing_iterations)));
  o.push_back(number("phg", "attach_radius", "scalp attachment radius, mm", FIELD(phg.attach_radius)));
  o.push_back(number("phg", "min_strand_vertices", "shorter output strands are dropped", FIELD(phg.min_strand_vertices)));

  o.push_back({"metrics", "voxel_sizes", "comma-separated voxel sizes, mm",
               [](Cfg& c, const std::string& v) { c.metrics.voxel_sizes = parse_list<double>("metrics.voxel_sizes", v); },
               [](const Cfg& c) { return fmt_list(c.metrics.voxel_sizes); }});
  o.push_back({"metrics", "angles", "comma-separated angle thresholds, deg",
               [](Cfg& c, const std::string& v) { c.metrics.angles_deg = parse_list<double>("metrics.angles", v); },
               [](const Cfg& c) { return fmt_list(c.metrics.angles_deg); }});
  o.push_back(number("metrics", "dilation", "neighbourhood radius in voxels (0 = same voxel)", FIELD(metric_options.dilation)));

  o.push_back({"bench", "workers", "comma-separated worker counts",
               [](Cfg& c, const std::string& v) { c.bench_workers = parse_list<int>("bench.workers", v); },
               [](const Cfg& c) { return fmt_list(c.bench_workers); }});
  o.push_back(number("bench", "repeats", "runs per worker count (minimum time is kept)", FIELD(bench_repeats)));
  return o;
}

#undef FIELD

}  // namespace

const std::vector<ConfigOption>& config_options() {
  static const std::vector<ConfigOption> opts = build_options();
  return opts;
}

void set_option(PipelineConfig& cfg, const std::string& name, const std::string& value) {
  for (const auto& o : config_options())
    if (o.name() == name) {
      o.set(cfg, value);
      return;
    }
  throw ConfigError("unknown config key '" + name + "'");
}

void apply_config_text(PipelineConfig& cfg, const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      static const char* known[] = {"scene", "fpmvo", "volume", "phg", "metrics", "bench"};
      if (std::find(std::begin(known), std::end(known), section) == std::end(known))
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      set_option(cfg, section.empty() ? key : section + "." + key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void apply_config_file(PipelineConfig& cfg, const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  apply_config_text(cfg, ss.str(), path.string());
}

std::string dump_config(const PipelineConfig& cfg) {
  std::ostringstream os;
  std::string section = "";
  for (const auto& o : config_options()) {
    if (o.section != section) {
      section = o.section;
      os << "\n[" << section << "]\n";
    }
    os << o.key << " = " << o.get(cfg) << "\n";
  }
  return os.str();
}

std::string config_hash(const PipelineConfig& cfg) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_name(dump_config(cfg))));
  return buf;
}

}  // namespace strandrecon
