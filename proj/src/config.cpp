#include "lrf/config.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace lrf {

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
    const auto mark = node.Mark();
    if (mark.line >= 0) {
      throw ConfigError(fmt::format("{}:{}:{}: {}", source_, mark.line + 1, mark.column + 1, message));
    }
    throw ConfigError(fmt::format("{}: {}", source_, message));
  }

  void require_map(const YAML::Node& node, const std::string& where) const {
    if (!node.IsMap()) fail(node, fmt::format("'{}' must be a mapping", where));
  }

  // Rejects keys outside `allowed`.
  void check_keys(const YAML::Node& node, const std::string& where,
                  const std::set<std::string>& allowed) const {
    require_map(node, where);
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, fmt::format("unknown key '{}' in {}", key, where));
    }
  }

  template <typename T>
  void read(const YAML::Node& parent, const char* key, T& out) const {
    const YAML::Node node = parent[key];
    if (!node) return;
    try {
      out = node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, fmt::format("'{}' has the wrong type", key));
    }
  }

  template <typename T>
  void read_list(const YAML::Node& parent, const char* key, std::vector<T>& out) const {
    const YAML::Node node = parent[key];
    if (!node) return;
    if (!node.IsSequence()) fail(node, fmt::format("'{}' must be a list", key));
    std::vector<T> values;
    for (const auto& item : node) {
      try {
        values.push_back(item.as<T>());
      } catch (const YAML::Exception&) {
        fail(item, fmt::format("'{}' has an entry of the wrong type", key));
      }
    }
    out = std::move(values);
  }

  template <typename T, typename Parse>
  void read_enum(const YAML::Node& parent, const char* key, T& out, Parse parse) const {
    const YAML::Node node = parent[key];
    if (!node) return;
    try {
      out = parse(node.as<std::string>());
    } catch (const std::exception& e) {
      fail(node, e.what());
    }
  }

  template <typename T, typename Parse>
  void read_enum_list(const YAML::Node& parent, const char* key, std::vector<T>& out, Parse parse) const {
    std::vector<std::string> names;
    read_list(parent, key, names);
    if (!parent[key]) return;
    std::vector<T> values;
    std::size_t i = 0;
    for (const auto& item : parent[key]) {
      try {
        values.push_back(parse(names[i++]));
      } catch (const std::exception& e) {
        fail(item, e.what());
      }
    }
    out = std::move(values);
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

void read_grid(const Reader& r, const YAML::Node& node, const std::string& where, ParamGrid& grid) {
  r.check_keys(node, where,
               {"max_depth", "min_samples_leaf", "feature_subset", "buckets", "trees", "bootstrap"});
  r.read_list(node, "max_depth", grid.max_depth);
  r.read_list(node, "min_samples_leaf", grid.min_samples_leaf);
  r.read_enum_list(node, "feature_subset", grid.feature_subset, parse_feature_subset);
  r.read_list(node, "buckets", grid.buckets);
  r.read_list(node, "trees", grid.n_trees);
  r.read(node, "bootstrap", grid.bootstrap);
  for (const char* key : {"max_depth", "min_samples_leaf", "feature_subset", "buckets", "trees"}) {
    if (node[key] && node[key].size() == 0) r.fail(node[key], fmt::format("'{}' must not be empty", key));
  }
}

void read_tokens(const Reader& r, const YAML::Node& node, LabelTokens& tokens) {
  r.read(node, "pos_token", tokens.pos);
  r.read(node, "neg_token", tokens.neg);
}

}  // namespace

RunConfig default_config() {
  RunConfig c;
  c.synth.rhos = {0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0};
  c.synth.base = SynthConfig{2000, 1.0, 6, 0, 0.05, 0};

  ParamGrid lrf;
  lrf.max_depth = {2, 4};
  lrf.min_samples_leaf = {5, 25};
  lrf.feature_subset = {FeatureSubset::Sqrt, FeatureSubset::All};
  lrf.buckets = {32};
  lrf.n_trees = {100};
  ParamGrid grf = lrf;
  grf.max_depth = {4, 8};
  ParamGrid gdt = lrf;
  gdt.max_depth = {2, 4, 6};
  gdt.feature_subset = {FeatureSubset::All};
  gdt.n_trees = {1};
  gdt.bootstrap = false;
  c.grids = {{Classifier::LRF, lrf}, {Classifier::GRF, grf}, {Classifier::GDT, gdt}};

  c.train.params.n_trees = 100;
  c.train.params.tree = TreeParams{2, 5, FeatureSubset::All, 32, InductionMode::Lookahead};
  return c;
}

void RunConfig::validate() const {
  try {
    if (jobs < 1) throw std::invalid_argument("jobs must be at least 1");
    SweepSpec spec{synth.rhos, synth.base, synth.classifiers, synth.repeats, grids, synth.folds,
                   synth.train_fraction};
    spec.validate();
    for (const auto& [c, grid] : grids) grid.validate(induction_mode(c));
    train.params.validate();
    backtest.plan.validate();
    ParamGrid thetas;
    thetas.theta = backtest.thetas;
    thetas.validate(InductionMode::Greedy);
    if (heatmap.resolution < 1) throw std::invalid_argument("heatmap resolution must be positive");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("invalid configuration: {}", e.what()));
  }
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(fmt::format("{}:{}:{}: {}", source, e.mark.line + 1, e.mark.column + 1, e.msg));
  }
  RunConfig c = default_config();
  if (root.IsNull()) return c;
  const Reader r(source);
  r.check_keys(root, "the top level",
               {"seed", "jobs", "out_dir", "synth", "grids", "train", "predict", "importance",
                "backtest", "heatmap"});
  r.read(root, "seed", c.seed);
  r.read(root, "jobs", c.jobs);
  r.read(root, "out_dir", c.out_dir);

  if (const auto s = root["synth"]) {
    r.check_keys(s, "synth",
                 {"n", "rho", "noise_features", "linear_features", "beta", "repeats", "classifiers",
                  "train_fraction", "folds"});
    r.read(s, "n", c.synth.base.n);
    r.read_list(s, "rho", c.synth.rhos);
    r.read(s, "noise_features", c.synth.base.n_noise);
    r.read(s, "linear_features", c.synth.base.n_linear);
    r.read(s, "beta", c.synth.base.beta);
    r.read(s, "repeats", c.synth.repeats);
    r.read_enum_list(s, "classifiers", c.synth.classifiers, parse_classifier);
    r.read(s, "train_fraction", c.synth.train_fraction);
    r.read(s, "folds", c.synth.folds);
    if (const auto rho = s["rho"]) {
      for (const auto& item : rho) {
        const double v = item.as<double>();
        if (!(v >= 0.5 && v <= 1.0)) r.fail(item, fmt::format("rho {} outside [0.5, 1]", v));
      }
    }
    if (s["n"] && c.synth.base.n < 1) r.fail(s["n"], "n must be positive");
    if (s["repeats"] && c.synth.repeats < 1) r.fail(s["repeats"], "repeats must be positive");
    if (s["beta"] && c.synth.base.beta < 0) r.fail(s["beta"], "beta must be non-negative");
  }

  if (const auto g = root["grids"]) {
    r.check_keys(g, "grids", {"LRF", "GRF", "GDT"});
    for (const auto& kv : g) {
      const auto name = kv.first.as<std::string>();
      const auto cls = parse_classifier(name);
      read_grid(r, kv.second, "grids." + name, c.grids[cls]);
      try {
        c.grids[cls].validate(induction_mode(cls));
      } catch (const std::invalid_argument& e) {
        r.fail(kv.second, e.what());
      }
    }
  }

  if (const auto t = root["train"]) {
    r.check_keys(t, "train",
                 {"data", "label_column", "pos_token", "neg_token", "classifier", "tune", "folds",
                  "params", "model"});
    r.read(t, "data", c.train.data);
    r.read(t, "label_column", c.train.label_column);
    read_tokens(r, t, c.train.tokens);
    r.read_enum(t, "classifier", c.train.classifier, parse_classifier);
    c.train.params.tree.mode = induction_mode(c.train.classifier);
    r.read(t, "tune", c.train.tune);
    r.read(t, "folds", c.train.folds);
    r.read(t, "model", c.train.model);
    if (const auto p = t["params"]) {
      r.check_keys(p, "train.params",
                   {"max_depth", "min_samples_leaf", "feature_subset", "buckets", "trees", "bootstrap"});
      r.read(p, "max_depth", c.train.params.tree.max_depth);
      r.read(p, "min_samples_leaf", c.train.params.tree.min_samples_leaf);
      r.read_enum(p, "feature_subset", c.train.params.tree.feature_subset, parse_feature_subset);
      r.read(p, "buckets", c.train.params.tree.buckets);
      r.read(p, "trees", c.train.params.n_trees);
      r.read(p, "bootstrap", c.train.params.bootstrap);
      try {
        c.train.params.validate();
      } catch (const std::invalid_argument& e) {
        r.fail(p, e.what());
      }
    }
  }

  if (const auto p = root["predict"]) {
    r.check_keys(p, "predict", {"model", "data", "label_column", "pos_token", "neg_token", "output"});
    r.read(p, "model", c.predict.model);
    r.read(p, "data", c.predict.data);
    r.read(p, "label_column", c.predict.label_column);
    read_tokens(r, p, c.predict.tokens);
    r.read(p, "output", c.predict.output);
  }

  if (const auto i = root["importance"]) {
    r.check_keys(i, "importance", {"model", "output"});
    r.read(i, "model", c.importance.model);
    r.read(i, "output", c.importance.output);
  }

  if (const auto b = root["backtest"]) {
    r.check_keys(b, "backtest",
                 {"data", "in_sample", "cross_validation", "out_of_sample", "step", "thetas", "features"});
    r.read(b, "data", c.backtest.data);
    r.read(b, "in_sample", c.backtest.plan.is_len);
    r.read(b, "cross_validation", c.backtest.plan.cv_len);
    r.read(b, "out_of_sample", c.backtest.plan.os_len);
    c.backtest.plan.step = c.backtest.plan.os_len;
    r.read(b, "step", c.backtest.plan.step);
    r.read_list(b, "thetas", c.backtest.thetas);
    r.read_list(b, "features", c.backtest.features);
    if (const auto th = b["thetas"]) {
      for (const auto& item : th) {
        const double v = item.as<double>();
        if (!(v >= 0.0 && v < 0.5)) r.fail(item, fmt::format("theta {} outside [0, 0.5)", v));
      }
    }
    for (const auto& name : c.backtest.features) {
      if (std::find(indicator_names().begin(), indicator_names().end(), name) == indicator_names().end()) {
        r.fail(b["features"], fmt::format("unknown indicator '{}'", name));
      }
    }
  }

  if (const auto h = root["heatmap"]) {
    r.check_keys(h, "heatmap", {"model", "feature_x", "feature_y", "resolution", "output"});
    r.read(h, "model", c.heatmap.model);
    r.read(h, "feature_x", c.heatmap.feature_x);
    r.read(h, "feature_y", c.heatmap.feature_y);
    r.read(h, "resolution", c.heatmap.resolution);
    r.read(h, "output", c.heatmap.output);
  }

  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open configuration '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.string());
}

}  // namespace lrf
