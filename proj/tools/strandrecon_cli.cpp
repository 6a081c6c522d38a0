// strandrecon command line: scene synthesis, the individual pipeline
// stages, the full pipeline and the scaling benchmark.

#include "strandrecon/config.hpp"
#include "strandrecon/errors.hpp"
#include "strandrecon/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <map>

#ifndef STRANDRECON_GIT_REV
#define STRANDRECON_GIT_REV "unknown"
#endif

using namespace strandrecon;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kStage = 3 };

struct Command {
  CLI::App* app = nullptr;
  std::string config_file;
  std::map<std::string, std::string> values;  // option name -> text
  std::map<std::string, CLI::Option*> flags;
};

void add_config_flags(Command& cmd) {
  const PipelineConfig defaults;
  cmd.app->add_option("--config", cmd.config_file, "INI config file; flags override its values")
      ->check(CLI::ExistingFile);
  for (const auto& o : config_options()) {
    const std::string name = o.name();
    auto* opt = cmd.app->add_option("--" + name, cmd.values[name], o.help + " [default: " + o.get(defaults) + "]");
    opt->group(o.section.empty() ? "Global" : "[" + o.section + "]");
    cmd.flags[name] = opt;
  }
}

PipelineConfig resolve(const Command& cmd) {
  PipelineConfig cfg;
  if (!cmd.config_file.empty()) apply_config_file(cfg, cmd.config_file);
  for (const auto& [name, opt] : cmd.flags)
    if (opt->count() > 0) set_option(cfg, name, cmd.values.at(name));
  cfg.derive_seeds();
  cfg.validate();
  return cfg;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  os << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Strand-level hair reconstruction from multi-view orientation maps"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("strandrecon ") + STRANDRECON_GIT_REV);

  std::string out, scene_dir, points, volume_file, strands_file, gt_file, csv_file, text_file;

  Command synth{app.add_subcommand("synth", "generate a synthetic scene bundle")};
  synth.app->add_option("--out", out, "bundle directory")->required();
  add_config_flags(synth);

  Command shell{app.add_subcommand("extract-shell", "back-project bundle depth maps to a point cloud")};
  shell.app->add_option("--scene", scene_dir, "bundle directory")->required();
  shell.app->add_option("--out", out, "point file (x y z per line)")->required();
  add_config_flags(shell);

  Command fpmvo{app.add_subcommand("fpmvo", "orient an outer point cloud from the view maps")};
  fpmvo.app->add_option("--scene", scene_dir, "bundle directory")->required();
  fpmvo.app->add_option("--points", points, "point file; extracted from depth when omitted");
  fpmvo.app->add_option("--out", out, "oriented point file (x y z dx dy dz)")->required();
  add_config_flags(fpmvo);

  Command volume{app.add_subcommand("volume", "voxelize an oriented cloud and fill the interior")};
  volume.app->add_option("--scene", scene_dir, "bundle directory (scalp)")->required();
  volume.app->add_option("--points", points, "oriented point file")->required();
  volume.app->add_option("--out", out, "volume file")->required();
  add_config_flags(volume);

  Command growc{app.add_subcommand("grow", "grow strands through a volume")};
  growc.app->add_option("--scene", scene_dir, "bundle directory (scalp)")->required();
  growc.app->add_option("--volume", volume_file, "volume file")->required();
  growc.app->add_option("--out", out, "strand file")->required();
  growc.app->add_option("--text", text_file, "also write the strands as text");
  add_config_flags(growc);

  Command evalc{app.add_subcommand("eval", "occupancy/orientation metrics against ground truth")};
  evalc.app->add_option("--gt", gt_file, "ground-truth strand file");
  evalc.app->add_option("--scene", scene_dir, "bundle directory (uses gt_strands.bin)");
  evalc.app->add_option("--strands", strands_file, "reconstructed strand file")->required();
  evalc.app->add_option("--out", out, "report file; stdout when omitted");
  evalc.app->add_option("--csv", csv_file, "CSV file");
  add_config_flags(evalc);

  Command pipe{app.add_subcommand("pipeline", "run every stage and evaluate")};
  pipe.app->add_option("--scene", scene_dir, "bundle directory")->required();
  pipe.app->add_option("--out", out, "output directory")->required();
  add_config_flags(pipe);

  Command bench{app.add_subcommand("bench", "FPMVO and PHG wall clock across worker counts")};
  bench.app->add_option("--scene", scene_dir, "bundle directory")->required();
  bench.app->add_option("--out", out, "CSV file; stdout when omitted");
  add_config_flags(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (synth.app->parsed()) {
      const auto cfg = resolve(synth);
      const Scene scene = generate_scene(cfg.scene, cfg.workers);
      write_scene(out, scene, cfg.scene);
      std::cout << "wrote " << scene.views.size() << " views, " << scene.gt.size() << " strands to " << out << "\n";
    } else if (shell.app->parsed()) {
      const auto cfg = resolve(shell);
      const Scene scene = read_scene(scene_dir, false);
      const auto cloud = extract_shell(scene.views, cfg.shell_dedup, cfg.workers);
      write_points(out, cloud);
      std::cout << cloud.size() << " points\n";
    } else if (fpmvo.app->parsed()) {
      const auto cfg = resolve(fpmvo);
      Scene scene = read_scene(scene_dir, cfg.gabor);
      if (cfg.gabor) apply_gabor(scene, cfg.gabor_params, cfg.workers);
      const PointCloud cloud = points.empty() ? extract_shell(scene.views, cfg.shell_dedup, cfg.workers) : read_points(points);
      const auto res = optimize_outer(cloud, scene.views, cfg.fpmvo, cfg.workers);
      write_oriented_points(out, res.points);
      std::cout << res.points.size() << " oriented, " << res.dropped << " dropped\n";
    } else if (volume.app->parsed()) {
      const auto cfg = resolve(volume);
      const Scene scene = read_scene(scene_dir, false);
      const auto cloud = read_oriented_points(points);
      if (cloud.empty()) throw DataError("empty oriented point file " + points);
      const auto res = build_volume(cloud, scene.scalp, cfg);
      write_volume(out, res.volume);
      std::cout << res.volume.occupied_count() << " occupied voxels (" << res.filled << " filled)\n";
    } else if (growc.app->parsed()) {
      const auto cfg = resolve(growc);
      const Scene scene = read_scene(scene_dir, false);
      OOVolume vol = read_volume(volume_file);
      const auto res = grow(scene.scalp, vol, cfg.phg, cfg.workers);
      write_strands(out, res.strands);
      if (!text_file.empty()) write_strands_text(text_file, res.strands);
      for (const auto& w : res.report.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << res.strands.size() << " strands\n";
    } else if (evalc.app->parsed()) {
      const auto cfg = resolve(evalc);
      if (gt_file.empty() == scene_dir.empty()) throw ConfigError("eval needs exactly one of --gt or --scene");
      const StrandSet gt = read_strands(gt_file.empty() ? std::filesystem::path(scene_dir) / "gt_strands.bin"
                                                        : std::filesystem::path(gt_file));
      const StrandSet rec = read_strands(strands_file);
      const auto rep = evaluate(gt, rec, cfg.metrics, cfg.metric_options, cfg.workers);
      if (out.empty())
        std::cout << format_report(rep);
      else
        write_text(out, format_report(rep));
      if (!csv_file.empty()) write_text(csv_file, format_csv(rep, "eval"));
    } else if (pipe.app->parsed()) {
      const auto cfg = resolve(pipe);
      const Scene scene = read_scene(scene_dir, cfg.gabor);
      const auto res = run_pipeline(scene, cfg);
      const std::filesystem::path dir(out);
      std::filesystem::create_directories(dir);
      write_strands(dir / "strands.bin", res.grown.strands);
      write_text(dir / "metrics.txt", format_report(res.metrics));
      write_text(dir / "metrics.csv", format_csv(res.metrics, "pipeline"));
      write_text(dir / "timing.txt", format_timing_report(res));
      write_text(dir / "config.ini", dump_config(cfg));
      nlohmann::ordered_json m;
      m["config_hash"] = config_hash(cfg);
      m["seed"] = cfg.seed;
      m["git_revision"] = STRANDRECON_GIT_REV;
      m["workers"] = cfg.workers;
      m["scene"] = scene_dir;
      m["strands"] = res.grown.strands.size();
      nlohmann::ordered_json t = nlohmann::ordered_json::object();
      for (const auto& s : res.timings) t[s.name] = s.seconds;
      m["timings_s"] = t;
      write_text(dir / "manifest.json", m.dump(2) + "\n");
      std::cout << format_report(res.metrics) << "\n" << format_timing_report(res);
    } else if (bench.app->parsed()) {
      const auto cfg = resolve(bench);
      const Scene scene = read_scene(scene_dir, false);
      const auto csv = format_bench_csv(run_bench(scene, cfg));
      if (out.empty())
        std::cout << csv;
      else
        write_text(out, csv);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const PipelineError& e) {
    std::cerr << "stage " << e.stage() << " failed: " << e.what() << "\n";
    return kStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
