#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;
using strandrecon::testing::read_bytes;
using strandrecon::testing::temp_dir;

namespace {

const char* kSmall =
    " --scene.strands 300 --scene.views 4 --scene.width 128 --scene.height 128 --scene.focal 225"
    " --scene.scalp_rings 16 --scene.scalp_segments 48";

struct Run {
  int code = -1;
  std::string out, err;
};

Run run(const std::string& args, const fs::path& scratch) {
  const fs::path o = scratch / "stdout.txt", e = scratch / "stderr.txt";
  const std::string cmd = std::string(STRANDRECON_CLI) + " " + args + " > " + o.string() + " 2> " + e.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_bytes(o);
  r.err = read_bytes(e);
  return r;
}

// A small bundle shared by the tests below.
const fs::path& bundle() {
  static const fs::path dir = [] {
    const auto d = temp_dir("cli_bundle");
    const auto r = run("synth --out " + (d / "scene").string() + kSmall, d);
    EXPECT_EQ(r.code, 0) << r.err;
    return d / "scene";
  }();
  return dir;
}

}  // namespace

TEST(Cli, UsageErrors) {
  const auto d = temp_dir("cli_usage");
  EXPECT_EQ(run("--help", d).code, 0);
  EXPECT_EQ(run("", d).code, 1);
  EXPECT_EQ(run("frobnicate", d).code, 1);
  EXPECT_EQ(run("synth", d).code, 1);  // --out is required
  const auto r = run("synth --out " + (d / "x").string() + " --scene.no_such_key 3", d);
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, HelpListsDefaults) {
  const auto d = temp_dir("cli_help");
  const auto r = run("pipeline --help", d);
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("--phg.occupancy_cap"), std::string::npos);
  EXPECT_NE(r.out.find("[default: 4]"), std::string::npos);
}

TEST(Cli, InvalidStyleNamesTheKey) {
  const auto d = temp_dir("cli_style");
  const auto r = run("synth --out " + (d / "x").string() + " --scene.style braided", d);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("scene.style"), std::string::npos) << r.err;
}

TEST(Cli, UnknownConfigFileKeyRejected) {
  const auto d = temp_dir("cli_cfg");
  std::ofstream(d / "bad.ini") << "[phg]\nocupancy_cap = 2\n";
  const auto r = run("synth --out " + (d / "x").string() + " --config " + (d / "bad.ini").string(), d);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("ocupancy_cap"), std::string::npos) << r.err;
  std::ofstream(d / "bad2.ini") << "[colour]\nhue = 2\n";
  EXPECT_EQ(run("synth --out " + (d / "x").string() + " --config " + (d / "bad2.ini").string(), d).code, 1);
}

TEST(Cli, FlagsOverrideConfigFile) {
  const auto d = temp_dir("cli_prec");
  std::ofstream(d / "c.ini") << "seed = 7\n[scene]\nstrands = 50\nviews = 2\nwidth = 64\nheight = 64\n";
  const auto r = run("synth --out " + (d / "s").string() + " --config " + (d / "c.ini").string() + " --scene.strands 60", d);
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string manifest = read_bytes(d / "s" / "manifest.json");
  EXPECT_NE(manifest.find("\"strands\": 60"), std::string::npos) << manifest;
  ASSERT_EQ(run("synth --seed 7 --out " + (d / "t").string() +
                    " --scene.strands 60 --scene.views 2 --scene.width 64 --scene.height 64",
                d)
                .code,
            0);
  EXPECT_EQ(read_bytes(d / "s" / "gt_strands.bin"), read_bytes(d / "t" / "gt_strands.bin"));
}

TEST(Cli, DefaultSynthWritesSeventeenViews) {
  const auto d = temp_dir("cli_default");
  const auto r = run("synth --out " + (d / "s").string() + " --scene.strands 100", d);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(d / "s" / "view_16_depth.map"));
  EXPECT_FALSE(fs::exists(d / "s" / "view_17_depth.map"));
}

TEST(Cli, SameSeedGivesIdenticalBundles) {
  const auto d = temp_dir("cli_det");
  ASSERT_EQ(run("synth --out " + (d / "a").string() + kSmall, d).code, 0);
  ASSERT_EQ(run("synth --workers 3 --out " + (d / "b").string() + kSmall, d).code, 0);
  ASSERT_EQ(run("synth --seed 2 --out " + (d / "c").string() + kSmall, d).code, 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(d / "a")) {
    ++files;
    EXPECT_EQ(read_bytes(e.path()), read_bytes(d / "b" / e.path().filename())) << e.path();
  }
  EXPECT_EQ(files, (4u + 1) * 4 + 4);  // ring views plus the top view
  EXPECT_NE(read_bytes(d / "a" / "gt_strands.bin"), read_bytes(d / "c" / "gt_strands.bin"));
}

TEST(Cli, MissingBundleFails) {
  const auto d = temp_dir("cli_missing");
  const auto r = run("pipeline --scene " + (d / "nope").string() + " --out " + (d / "o").string(), d);
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, PipelineIndependentOfWorkers) {
  const auto d = temp_dir("cli_pipe");
  const std::string common = " --phg.n_root 3000 --scene " + bundle().string();
  const auto a = run("pipeline --workers 1 --out " + (d / "a").string() + common, d);
  ASSERT_EQ(a.code, 0) << a.err;
  const auto b = run("pipeline --workers 4 --out " + (d / "b").string() + common, d);
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(read_bytes(d / "a" / "strands.bin"), read_bytes(d / "b" / "strands.bin"));
  EXPECT_EQ(read_bytes(d / "a" / "metrics.txt"), read_bytes(d / "b" / "metrics.txt"));
  EXPECT_EQ(read_bytes(d / "a" / "metrics.csv"), read_bytes(d / "b" / "metrics.csv"));
  const std::string timing = read_bytes(d / "a" / "timing.txt");
  for (const char* stage : {"Outer PointCloud Optimization", "Inner PointCloud stand-in", "Hair Growing", "guide init",
                            "segment growth/connection", "scalp attachment"})
    EXPECT_NE(timing.find(stage), std::string::npos) << stage;
  const std::string manifest = read_bytes(d / "a" / "manifest.json");
  for (const char* key : {"config_hash", "seed", "git_revision", "timings_s"})
    EXPECT_NE(manifest.find(key), std::string::npos) << key;
}

TEST(Cli, StagewiseCommandsChain) {
  const auto d = temp_dir("cli_chain");
  const std::string scene = " --scene " + bundle().string();
  EXPECT_EQ(run("extract-shell --out " + (d / "shell.txt").string() + scene, d).code, 0);
  EXPECT_EQ(run("fpmvo --points " + (d / "shell.txt").string() + " --out " + (d / "outer.txt").string() + scene, d).code, 0);
  EXPECT_EQ(run("volume --points " + (d / "outer.txt").string() + " --out " + (d / "v.bin").string() + scene, d).code, 0);
  EXPECT_EQ(run("grow --phg.n_root 3000 --volume " + (d / "v.bin").string() + " --out " + (d / "s.bin").string() +
                    " --text " + (d / "s.txt").string() + scene,
                d)
                .code,
            0);
  const auto r = run("eval --strands " + (d / "s.bin").string() + " --csv " + (d / "m.csv").string() + scene, d);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Occupancy"), std::string::npos);
  EXPECT_EQ(read_bytes(d / "m.csv").substr(0, 9), "label,vox");
  // gt against itself scores 1 everywhere.
  const auto self = run("eval --strands " + (bundle() / "gt_strands.bin").string() + scene, d);
  EXPECT_NE(self.out.find("1.0000  1.0000  1.0000"), std::string::npos) << self.out;
  EXPECT_EQ(run("eval --strands " + (d / "s.bin").string(), d).code, 1);  // needs --gt or --scene
  EXPECT_EQ(run("grow --volume " + (d / "missing.bin").string() + " --out " + (d / "t.bin").string() + scene, d).code, 2);
}

TEST(Cli, BenchCsv) {
  const auto d = temp_dir("cli_bench");
  const auto r = run("bench --bench.workers 1,2 --phg.n_root 2000 --scene " + bundle().string() + " --out " +
                         (d / "b.csv").string(),
                     d);
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream is(d / "b.csv");
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "stage,workers,seconds,speedup");
  int ones = 0, rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    if (line.find(",1,") != std::string::npos) {
      ++ones;
      EXPECT_EQ(line.substr(line.rfind(',') + 1), "1.0000") << line;
    }
  }
  EXPECT_EQ(rows, 4);
  EXPECT_EQ(ones, 2);
}
