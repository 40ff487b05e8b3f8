#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lrf/backtest.hpp"
#include "lrf/dataset.hpp"
#include "lrf/forest.hpp"
#include "lrf/synthgen.hpp"
#include "lrf/tuning.hpp"

namespace lrf {

/// Configuration problem, prefixed with "<source>:<line>:<column>: " when it
/// can be tied to a place in the file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SynthSection {
  SynthConfig base;  // base.rho unused
  std::vector<double> rhos;
  std::size_t repeats = 20;
  std::vector<Classifier> classifiers{Classifier::LRF, Classifier::GRF, Classifier::GDT};
  double train_fraction = 0.75;
  std::size_t folds = 5;
};

struct TrainSection {
  std::string data;
  std::string label_column = "y";
  LabelTokens tokens;
  Classifier classifier = Classifier::LRF;
  bool tune = false;  // grid search over grids.<classifier> instead of `params`
  std::size_t folds = 5;
  ForestParams params;
  std::string model = "model.json";  // written under out_dir
};

struct PredictSection {
  std::string model;  // empty: <out_dir>/model.json
  std::string data;
  std::string label_column;  // optional; enables the accuracy echo
  LabelTokens tokens;
  std::string output = "predictions.csv";
};

struct ImportanceSection {
  std::string model;
  std::string output = "importance.csv";
};

struct BacktestSection {
  std::string data;
  WindowPlan plan;
  std::vector<double> thetas{0.0, 0.02, 0.05, 0.1};
  std::vector<std::string> features;  // empty: all eight indicators
};

struct HeatmapSection {
  std::string model;
  std::string feature_x;
  std::string feature_y;
  std::size_t resolution = 100;
  std::string output = "heatmap.csv";
};

struct RunConfig {
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out_dir = ".";
  SynthSection synth;
  std::map<Classifier, ParamGrid> grids;
  TrainSection train;
  PredictSection predict;
  ImportanceSection importance;
  BacktestSection backtest;
  HeatmapSection heatmap;

  /// Cross-field checks (grid validity, bounds); throws ConfigError.
  void validate() const;
};

/// Built-in defaults; identical to configs/default.yaml.
RunConfig default_config();

/// Parses YAML text on top of the defaults. Unknown keys, wrong types and
/// out-of-range values are rejected with the line they occur on.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

}  // namespace lrf
