#pragma once

#include "strandrecon/fpmvo.hpp"
#include "strandrecon/metrics.hpp"
#include "strandrecon/orient2d.hpp"
#include "strandrecon/phg.hpp"
#include "strandrecon/synthgen.hpp"
#include "strandrecon/volume.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace strandrecon {

struct PipelineConfig {
  std::uint64_t seed = 1;
  int workers = 1;

  SceneParams scene;

  FpmvoParams fpmvo;
  double shell_dedup = 1.0;  // mm, grid used to merge back-projected depth samples
  bool gabor = false;        // orientation/confidence from the grayscale image instead of ideal maps
  GaborParams gabor_params;

  double voxel_size = 2.0;
  bool fill = true;
  FillParams fill_params;

  PhgParams phg;

  MetricsGrid metrics;
  MetricOptions metric_options;

  std::vector<int> bench_workers{1, 2, 4, 8};
  int bench_repeats = 1;

  // Per-stage seeds split from the root seed.
  void derive_seeds();
  void validate() const;  // throws ConfigError
};

/// One named parameter "section.key" (global keys have an empty section).
struct ConfigOption {
  std::string section;
  std::string key;
  std::string help;
  std::function<void(PipelineConfig&, const std::string&)> set;  // throws ConfigError
  std::function<std::string(const PipelineConfig&)> get;
  std::string name() const { return section.empty() ? key : section + "." + key; }
};

const std::vector<ConfigOption>& config_options();

// Sets "section.key" (or a global key) from text. Unknown names throw
// ConfigError naming the key.
void set_option(PipelineConfig& cfg, const std::string& name, const std::string& value);

/// Flat INI-style text: "[section]" headers, "key = value" lines, '#' or
/// ';' comments. Keys before any header are global (seed, workers).
void apply_config_text(PipelineConfig& cfg, const std::string& text, const std::string& origin = "config");
void apply_config_file(PipelineConfig& cfg, const std::filesystem::path& path);

// Canonical dump of every option, loadable by apply_config_text.
std::string dump_config(const PipelineConfig& cfg);
std::string config_hash(const PipelineConfig& cfg);  // 16 hex digits of the canonical dump

}  // namespace strandrecon
