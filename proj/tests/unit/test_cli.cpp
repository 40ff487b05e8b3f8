#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <sys/wait.h>

#include "lrf/finance.hpp"
#include "lrf/synthgen.hpp"
#include "unit/test_helpers.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int status = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(LRF_CLI_PATH) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t lines(const fs::path& p) {
  const auto text = read(p);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

const char* kSmallGrids =
    "grids:\n"
    "  LRF: {max_depth: [2], min_samples_leaf: [5], feature_subset: [ALL], trees: [6]}\n"
    "  GRF: {max_depth: [4], min_samples_leaf: [5], feature_subset: [SQRT], trees: [6]}\n"
    "  GDT: {max_depth: [2, 4], min_samples_leaf: [5], feature_subset: [ALL]}\n";

}  // namespace

TEST(Cli, SynthRowAccounting) {
  const auto dir = testing_util::temp_dir("cli_synth");
  const auto cfg = testing_util::write_text(
      dir / "c.yaml", std::string(kSmallGrids) + "synth:\n  n: 200\n  rho: [0.6, 0.9]\n  repeats: 2\n  folds: 3\n");
  const auto r = run("synth --config " + cfg.string() + " --out-dir " + (dir / "out").string());
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_EQ(lines(dir / "out" / "sweep.csv"), 1u + 2 * 3 * 2);
  const auto summary = nlohmann::json::parse(read(dir / "out" / "sweep_summary.json"));
  EXPECT_EQ(summary["cells"].size(), 6u);

  const auto one = run("synth --config " + cfg.string() + " --out-dir " + (dir / "one").string() +
                       " --rho 0.7 --repeats 1 --classifiers GDT");
  ASSERT_EQ(one.status, 0) << one.output;
  EXPECT_EQ(lines(dir / "one" / "sweep.csv"), 2u);

  const auto listed = run("synth --config " + cfg.string() + " --out-dir " + (dir / "list").string() +
                          " --rho 0.6,0.8 --repeats 1 --classifiers GDT,GRF");
  ASSERT_EQ(listed.status, 0) << listed.output;
  EXPECT_EQ(lines(dir / "list" / "sweep.csv"), 1u + 2 * 2);
}

TEST(Cli, InvalidRhoRejectedBeforeCompute) {
  const auto dir = testing_util::temp_dir("cli_rho");
  const auto cfg = testing_util::write_text(dir / "c.yaml", "synth:\n  rho: [0.4]\n");
  const auto r = run("synth --config " + cfg.string() + " --out-dir " + dir.string());
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("c.yaml:2:"), std::string::npos) << r.output;
  EXPECT_FALSE(fs::exists(dir / "sweep.csv"));
  EXPECT_EQ(run("synth --rho 0.4 --out-dir " + dir.string()).status, 2);
  EXPECT_NE(run("frobnicate").status, 0);
}

TEST(Cli, TrainPredictImportanceHeatmap) {
  const auto dir = testing_util::temp_dir("cli_model");
  const auto data = lrf::generate({300, 1.0, 0, 0, 0.05, 3});
  {
    std::ofstream out(dir / "xor.csv");
    lrf::write_feature_csv(data, out);
  }
  const std::string common = " --out-dir " + dir.string();
  const auto train = run("train --data " + (dir / "xor.csv").string() + common);
  ASSERT_EQ(train.status, 0) << train.output;
  const auto pred = run("predict --data " + (dir / "xor.csv").string() + " --label-column y" + common);
  ASSERT_EQ(pred.status, 0) << pred.output;
  EXPECT_NE(pred.output.find("accuracy 1.000000"), std::string::npos) << pred.output;
  EXPECT_EQ(lines(dir / "predictions.csv"), 301u);

  testing_util::write_text(dir / "three.csv", "F0,F1,F2,y\n0.1,0.2,0.3,1\n");
  const auto bad = run("predict --data " + (dir / "three.csv").string() + " --label-column y" + common);
  EXPECT_EQ(bad.status, 1);
  EXPECT_NE(bad.output.find("schema mismatch"), std::string::npos) << bad.output;

  ASSERT_EQ(run("importance" + common).status, 0);
  EXPECT_EQ(lines(dir / "importance.csv"), 3u);

  const auto heat = run("heatmap --x F0 --y F1 --resolution 100" + common);
  ASSERT_EQ(heat.status, 0) << heat.output;
  EXPECT_EQ(lines(dir / "heatmap.csv"), 10001u);
  EXPECT_NE(heat.output.find("F0 x F1  1.0000"), std::string::npos) << heat.output;
  EXPECT_EQ(run("heatmap --x F0 --y F0" + common).status, 1);

  const auto tuned = run("train --tune --classifier GDT --data " + (dir / "xor.csv").string() + common);
  ASSERT_EQ(tuned.status, 0) << tuned.output;
  EXPECT_TRUE(fs::exists(dir / "cv.csv"));
  EXPECT_TRUE(fs::exists(dir / "cv.json"));
}

TEST(Cli, StumpForestImportanceIsZero) {
  const auto dir = testing_util::temp_dir("cli_stump");
  const lrf::Forest stumps({lrf::DecisionTree::leaf({2, 0}, 2)}, {}, {"a", "b"});
  std::ofstream(dir / "m.json") << stumps.to_json().dump();
  ASSERT_EQ(run("importance --model " + (dir / "m.json").string() + " --out-dir " + dir.string()).status, 0);
  EXPECT_EQ(read(dir / "importance.csv"), "feature,share\na,0\nb,0\n");
}

TEST(Cli, BacktestWritesAlignedCurves) {
  const auto dir = testing_util::temp_dir("cli_bt");
  const auto bars = lrf::generate_xor_market({2000, 0.7, 0.01, 2});
  {
    std::ofstream out(dir / "bars.csv");
    lrf::write_ohlcv_csv(bars, out);
  }
  const auto cfg = testing_util::write_text(dir / "c.yaml", std::string(kSmallGrids) + "backtest:\n  thetas: [0.0, 0.05]\n");
  const auto r = run("backtest --config " + cfg.string() + " --data " + (dir / "bars.csv").string() +
                     " --out-dir " + dir.string());
  ASSERT_EQ(r.status, 0) << r.output;
  const std::size_t n = lines(dir / "equity_lrf.csv");
  EXPECT_EQ(n, 1u + (2000 - 22 - 1250));
  EXPECT_EQ(lines(dir / "equity_grf.csv"), n);
  EXPECT_EQ(lines(dir / "equity_buy_and_hold.csv"), n);
  const auto report = nlohmann::json::parse(read(dir / "report.json"));
  for (const char* key : {"lrf", "grf", "buy_and_hold"}) EXPECT_TRUE(report.contains(key));

  {
    std::ofstream out(dir / "short.csv");
    lrf::write_ohlcv_csv(std::span(bars).first(1200), out);
  }
  const auto short_run = run("backtest --data " + (dir / "short.csv").string() + " --out-dir " + dir.string());
  EXPECT_EQ(short_run.status, 1);
  EXPECT_NE(short_run.output.find("insufficient history"), std::string::npos);
}
