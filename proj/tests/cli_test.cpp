/* Copyright 2026 The scseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "scseg/cli.hpp"
#include "scseg/data.hpp"
#include "test_util.hpp"

namespace scseg {
namespace {

using testing::read_file;
using testing::TempDir;
namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

// Small phantoms and a tiny network so full commands finish in seconds.
constexpr const char* kTinyConfig = R"({
  "seed": 7,
  "network": { "depth": 2, "base_channels": 2, "patch_size": 8, "deep_supervision_heads": 2 },
  "train": { "epochs": 2, "batches_per_epoch": 2, "eval_every": 1 },
  "phantom": { "grid": 16, "wt_radius_min": 3, "wt_radius_max": 4, "num_cases": 5 }
})";

class CliTest : public ::testing::Test {
 protected:
  CliTest() : dir_("cli") {
    config_ = (dir_.path() / "run.json").string();
    std::ofstream(config_) << kTinyConfig;
    data_ = (dir_.path() / "data").string();
  }

  std::vector<std::string> with_config(std::vector<std::string> args) const {
    args.insert(args.end(), {"--config", config_, "--data", data_});
    return args;
  }

  void generate() { ASSERT_EQ(run(with_config({"gen-data", "--out", data_})).code, 0); }

  fs::path path(const std::string& name) const { return dir_.path() / name; }

  TempDir dir_;
  std::string config_, data_;
};

TEST_F(CliTest, GenDataDefaultConfigWritesEightyTwenty) {
  const auto r = run({"gen-data", "--out", path("full").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = read_manifest(path("full"));
  EXPECT_EQ(m.ids("train").size(), 64u);
  EXPECT_EQ(m.ids("val").size(), 16u);
  EXPECT_NO_THROW(read_case(path("full"), m.ids("val").front()));
}

TEST_F(CliTest, GenDataIsByteIdenticalForOneSeed) {
  ASSERT_EQ(run(with_config({"gen-data", "--out", path("a").string()})).code, 0);
  ASSERT_EQ(run(with_config({"gen-data", "--out", path("b").string()})).code, 0);
  for (const auto& entry : fs::directory_iterator(path("a"))) {
    EXPECT_EQ(read_file(entry.path()), read_file(path("b") / entry.path().filename()))
        << entry.path().filename();
  }
}

TEST_F(CliTest, GenDataRejectsMisorderedRadii) {
  std::ofstream(path("bad.json")) << R"({"phantom": {"wt_radius_min": 12, "wt_radius_max": 9}})";
  const auto r = run({"gen-data", "--config", path("bad.json").string(), "--out", path("x").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("radii misordered"), std::string::npos) << r.err;
}

TEST_F(CliTest, GenDataUnwritablePathFails) {
  std::ofstream(path("file")) << "not a directory";
  const auto r = run(with_config({"gen-data", "--out", (path("file") / "sub").string()}));
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, UnknownConfigKeyIsUsageError) {
  std::ofstream(path("typo.json")) << R"({"network": {"depht": 3}})";
  const auto r = run({"params", "--config", path("typo.json").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("network.depht"), std::string::npos) << r.err;
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"train", "--variant", "m9", "--data", data_}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliTest, TrainMissingDatasetIsDataError) {
  const auto r = run(with_config({"train", "--out", path("run").string()}));
  EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, MinimalTrainWritesOneRecordAndCheckpoints) {
  generate();
  const auto run_dir = path("run");
  const auto r = run(with_config({"train", "--epochs", "1", "--batches", "1", "--out", run_dir.string()}));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string log = read_file(run_dir / "log.jsonl");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 1);
  EXPECT_TRUE(fs::exists(run_dir / "final.ckpt"));
  EXPECT_TRUE(fs::exists(run_dir / "best.ckpt"));
  EXPECT_TRUE(fs::exists(run_dir / "run_config.json"));
}

TEST_F(CliTest, DeterministicTrainingRepeatsLogBytes) {
  generate();
  for (const char* name : {"r1", "r2"}) {
    ASSERT_EQ(run(with_config({"train", "--deterministic", "--variant", "m2", "--out", path(name).string()})).code, 0);
  }
  const std::string a = read_file(path("r1") / "log.jsonl");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, read_file(path("r2") / "log.jsonl"));
  EXPECT_EQ(a.find("seconds"), std::string::npos);
  EXPECT_NE(read_file(path("r1") / "run_config.json").find("\"m2\""), std::string::npos);
}

TEST_F(CliTest, EvalReportsAreStableAndHaveFourColumns) {
  generate();
  const auto run_dir = path("run").string();
  ASSERT_EQ(run(with_config({"train", "--out", run_dir})).code, 0);
  const auto first = run(with_config({"eval", "--out", run_dir}));
  ASSERT_EQ(first.code, 0) << first.err;
  for (const char* col : {"ET", "TC", "WT", "AVG"}) {
    EXPECT_NE(first.out.find(col), std::string::npos) << col;
  }
  const std::string records = read_file(fs::path(run_dir) / "eval_val.jsonl");
  const auto second = run(with_config({"eval", "--out", run_dir}));
  EXPECT_EQ(first.out, second.out);
  EXPECT_EQ(records, read_file(fs::path(run_dir) / "eval_val.jsonl"));
  EXPECT_EQ(run(with_config({"eval", "--split", "train", "--out", run_dir})).code, 0);
}

TEST_F(CliTest, EvalOracleScoresOneHundred) {
  generate();
  const auto r = run(with_config({"eval", "--oracle", "--out", path("o").string()}));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::regex cell(R"(100\.00_\{0\.00\})");
  EXPECT_EQ(std::distance(std::sregex_iterator(r.out.begin(), r.out.end(), cell), std::sregex_iterator()), 4)
      << r.out;
}

TEST_F(CliTest, EvalWithMismatchedVariantNamesTensor) {
  generate();
  const auto run_dir = path("run").string();
  ASSERT_EQ(run(with_config({"train", "--epochs", "1", "--batches", "1", "--out", run_dir})).code, 0);
  const auto r = run(with_config({"eval", "--variant", "m2", "--out", run_dir}));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("checkpoint mismatch at tensor skip0.sc.split.weight"), std::string::npos) << r.err;
}

TEST_F(CliTest, InferWritesLabelsAndRenders) {
  generate();
  const auto run_dir = path("run");
  ASSERT_EQ(run(with_config({"train", "--out", run_dir.string()})).code, 0);
  const auto r = run(with_config({"infer", "--case", "case_000", "--render", "--out", run_dir.string()}));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto pred = read_case(run_dir, "case_000_pred");
  for (auto l : pred.labels.voxels) EXPECT_LE(l, 3);
  for (const char* m : {"T1", "T1Gd", "T2", "FLAIR"}) {
    const std::string ppm = read_file(run_dir / (std::string("case_000_pred_") + m + ".ppm"));
    EXPECT_EQ(ppm.substr(0, 3), "P6\n");
  }
  EXPECT_EQ(run(with_config({"infer", "--case", "nope", "--out", run_dir.string()})).code, 2);
}

TEST(RenderOverlay, LegendUsesThreeDistinctColours) {
  const std::set<Rgb> colours{overlay_color(kNCR), overlay_color(kED), overlay_color(kET)};
  EXPECT_EQ(colours.size(), 3u);
  EXPECT_EQ(colours.count(overlay_color(kBackground)), 0u);

  CaseVolume v;
  v.extents = {1, 1, 4};
  v.intensities.assign(16, 0.0f);
  v.labels = LabelVolume{{1, 1, 4}, {0, 1, 2, 3}};
  const std::string ppm = render_slice_ppm(v, v.labels, 0, 0);
  const std::string header = "P6\n4 1\n255\n";
  ASSERT_EQ(ppm.size(), header.size() + 12);
  std::set<std::string> pixels;
  for (int i = 0; i < 4; ++i) pixels.insert(ppm.substr(header.size() + 3 * i, 3));
  EXPECT_EQ(pixels.size(), 4u);
}

TEST(CliGradcheck, ScopesPassAndUnknownFails) {
  for (const char* scope : {"conv3d", "scconv"}) {
    const auto r = run({"gradcheck", scope});
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find(std::string("PASS ") + scope), std::string::npos);
  }
  EXPECT_EQ(run({"gradcheck", "warp-drive"}).code, 1);
}

TEST(CliParams, OrderingStabilityAndSkipDelta) {
  const auto a = run({"params"});
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, run({"params"}).out);
  std::map<std::string, std::pair<long long, long long>> rows;
  long long skip_total = -1;
  std::istringstream lines(a.out);
  std::string line;
  while (std::getline(lines, line)) {
    std::istringstream f(line);
    std::string name;
    long long n = 0, delta = 0;
    if (f >> name >> n >> delta) rows[name] = {n, delta};
    std::smatch m;
    if (std::regex_search(line, m, std::regex(R"(skip SC modules: (\d+))"))) skip_total = std::stoll(m[1]);
  }
  ASSERT_EQ(rows.size(), 4u) << a.out;
  EXPECT_LT(rows["baseline"].first, rows["m2"].first);
  EXPECT_LE(rows["m2"].first, rows["m3"].first);
  EXPECT_LT(rows["baseline"].first, rows["m1"].first);
  EXPECT_LE(rows["m1"].first, rows["m3"].first);
  EXPECT_EQ(rows["m2"].second, skip_total);
}

}  // namespace
}  // namespace scseg
