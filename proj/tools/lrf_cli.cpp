// Command-line front end: synth | train | predict | importance | backtest |
// heatmap | market. Every output is written, read back and checked before
// the command reports success.

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "lrf/backtest.hpp"
#include "lrf/config.hpp"
#include "lrf/finance.hpp"
#include "lrf/forest.hpp"
#include "lrf/random.hpp"
#include "lrf/synthgen.hpp"
#include "lrf/tuning.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct OutputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

// Writes `content` to `path` and reads it back. `expected_lines` counts the
// header.
void write_checked(const fs::path& path, const std::string& content,
                   std::optional<std::size_t> expected_lines = std::nullopt) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::binary);
    out << content;
    out.close();
    if (!out) throw OutputError(fmt::format("failed to write '{}'", path.string()));
  }
  std::ifstream in(path, std::ios::binary);
  std::stringstream back;
  back << in.rdbuf();
  if (back.str() != content) throw OutputError(fmt::format("'{}' did not read back intact", path.string()));
  if (expected_lines && count_lines(content) != *expected_lines) {
    throw OutputError(fmt::format("'{}' has {} lines, expected {}", path.string(), count_lines(content),
                                  *expected_lines));
  }
}

void write_json_checked(const fs::path& path, const json& doc) {
  const std::string text = doc.dump(2) + "\n";
  write_checked(path, text);
  if (json::parse(text) != doc) throw OutputError(fmt::format("'{}' does not parse back", path.string()));
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

fs::path resolve_model(const lrf::RunConfig& cfg, const std::string& model) {
  if (!model.empty()) return model;
  return fs::path(cfg.out_dir) / cfg.train.model;
}

lrf::Forest load_model(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open model '{}'", path.string()));
  return lrf::Forest::from_json(json::parse(in));
}

const std::string& require(const std::string& value, const char* what) {
  if (value.empty()) throw lrf::ConfigError(fmt::format("missing {}", what));
  return value;
}

int cmd_synth(const lrf::RunConfig& cfg) {
  lrf::SweepSpec spec{cfg.synth.rhos, cfg.synth.base, cfg.synth.classifiers, cfg.synth.repeats,
                      cfg.grids, cfg.synth.folds, cfg.synth.train_fraction};
  spec.base.seed = cfg.seed;
  const auto result = lrf::run_sweep(spec, cfg.jobs);

  std::ostringstream csv;
  lrf::write_sweep_csv(result, csv);
  const fs::path out(cfg.out_dir);
  write_checked(out / "sweep.csv", csv.str(),
                1 + spec.rhos.size() * spec.classifiers.size() * spec.repeats);
  write_json_checked(out / "sweep_summary.json", lrf::sweep_summary_json(result));
  for (const auto& s : result.summary()) {
    fmt::print("rho={:.2f} {:<3} accuracy {:.4f} +/- {:.4f}\n", s.rho, lrf::to_string(s.classifier),
               s.mean_accuracy, s.std_accuracy);
  }
  return 0;
}

int cmd_train(const lrf::RunConfig& cfg) {
  const auto data = lrf::load_feature_csv(require(cfg.train.data, "train.data"), cfg.train.label_column,
                                          cfg.train.tokens);
  const auto mode = lrf::induction_mode(cfg.train.classifier);
  const fs::path out(cfg.out_dir);
  lrf::ForestParams params = cfg.train.params;
  params.tree.mode = mode;
  if (cfg.train.tune) {
    lrf::ParamGrid grid = cfg.grids.at(cfg.train.classifier);
    if (cfg.train.classifier == lrf::Classifier::GDT) {
      grid.n_trees = {1};
      grid.bootstrap = false;
    }
    const auto cv = lrf::cross_validate(data, grid, cfg.train.folds, mode, lrf::derive_seed(cfg.seed, 0),
                                        cfg.jobs);
    std::ostringstream csv;
    lrf::write_cv_csv(cv, csv);
    write_checked(out / "cv.csv", csv.str(), 1 + cv.candidates.size() * cfg.train.folds);
    write_json_checked(out / "cv.json", lrf::cv_summary_json(cv));
    params = cv.best().params;
    fmt::print("selected {} (cv accuracy {:.4f})\n", lrf::params_json(params).dump(), cv.best().mean);
  } else if (cfg.train.classifier == lrf::Classifier::GDT) {
    params.n_trees = 1;
    params.bootstrap = false;
  }
  params.seed = lrf::derive_seed(cfg.seed, 1);
  const auto forest = lrf::fit(data, params, cfg.jobs);

  const fs::path model_path = out / cfg.train.model;
  const json doc = forest.to_json();
  write_json_checked(model_path, doc);
  if (!(load_model(model_path) == forest)) {
    throw OutputError(fmt::format("'{}' does not reload to the trained model", model_path.string()));
  }
  fmt::print("trained {} trees on {} rows; training accuracy {:.6f}\n", forest.trees().size(),
             data.n_rows(), lrf::accuracy(forest, data));
  return 0;
}

int cmd_predict(const lrf::RunConfig& cfg) {
  const auto forest = load_model(resolve_model(cfg, cfg.predict.model));
  const auto& path = require(cfg.predict.data, "predict.data");
  const bool labelled = !cfg.predict.label_column.empty();
  const auto data = lrf::load_feature_csv(path, cfg.predict.label_column, cfg.predict.tokens);
  if (data.n_features() != forest.n_features()) {
    throw std::runtime_error(fmt::format("schema mismatch: model expects {} features, data has {}",
                                         forest.n_features(), data.n_features()));
  }
  if (data.feature_names() != forest.feature_names()) {
    throw std::runtime_error("schema mismatch: feature names differ from the model's");
  }
  const auto p = forest.predict_proba(data);
  std::string csv = labelled ? "row,p_plus,prediction,label\n" : "row,p_plus,prediction\n";
  std::size_t correct = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto pred = lrf::classify_proba(p[i]);
    csv += fmt::format("{},{},{}", i, num(p[i]), pred == lrf::Label::Pos ? 1 : 0);
    if (labelled) {
      csv += fmt::format(",{}", data.label(i) == lrf::Label::Pos ? 1 : 0);
      correct += pred == data.label(i);
    }
    csv += '\n';
  }
  write_checked(fs::path(cfg.out_dir) / cfg.predict.output, csv, 1 + p.size());
  if (labelled) fmt::print("accuracy {:.6f}\n", static_cast<double>(correct) / static_cast<double>(p.size()));
  return 0;
}

int cmd_importance(const lrf::RunConfig& cfg) {
  const auto forest = load_model(resolve_model(cfg, cfg.importance.model));
  const auto report = lrf::feature_importance(forest);
  std::string csv = "feature,share\n";
  for (std::size_t f = 0; f < report.share.size(); ++f) {
    csv += fmt::format("{},{}\n", report.feature_names[f], num(report.share[f]));
    fmt::print("{:<16} {:.4f}\n", report.feature_names[f], report.share[f]);
  }
  write_checked(fs::path(cfg.out_dir) / cfg.importance.output, csv, 1 + report.share.size());
  return 0;
}

json walkforward_json(const lrf::WalkForwardResult& result, const lrf::MarketData& market) {
  json doc = lrf::to_json(lrf::evaluate(result.curve));
  json windows = json::array();
  for (const auto& w : result.windows) {
    windows.push_back({{"os_first_day", lrf::format_date(market.return_date(w.window.os_begin))},
                       {"os_days", w.window.os_end - w.window.os_begin},
                       {"params", lrf::params_json(w.chosen)},
                       {"theta", w.theta},
                       {"cv_sharpe", w.cv_sharpe ? json(*w.cv_sharpe) : json(nullptr)}});
  }
  doc["windows"] = std::move(windows);
  return doc;
}

int cmd_backtest(const lrf::RunConfig& cfg) {
  auto bars = lrf::load_ohlcv(require(cfg.backtest.data, "backtest.data"));
  const lrf::MarketData market(std::move(bars), cfg.backtest.features);
  const fs::path out(cfg.out_dir);

  json report;
  std::size_t os_days = 0;
  const std::pair<lrf::Classifier, const char*> runs[] = {{lrf::Classifier::LRF, "lrf"},
                                                            {lrf::Classifier::GRF, "grf"}};
  std::vector<lrf::Window> windows;
  for (const auto& [cls, name] : runs) {
    lrf::WalkForwardConfig wf{cfg.backtest.plan, cfg.grids.at(cls), lrf::induction_mode(cls), cfg.seed,
                              cfg.jobs};
    wf.grid.theta = cfg.backtest.thetas;
    const auto result = lrf::run_walkforward(market, wf);
    std::ostringstream csv;
    lrf::write_equity_csv(result.curve, csv);
    write_checked(out / fmt::format("equity_{}.csv", name), csv.str(), 1 + result.curve.points.size());
    report[name] = walkforward_json(result, market);
    os_days = result.curve.points.size();
    windows.clear();
    for (const auto& w : result.windows) windows.push_back(w.window);
    const auto perf = lrf::evaluate(result.curve);
    fmt::print("{:<3} CAGR {:+.4f} Sharpe {} MDD {:.4f}\n", lrf::to_string(cls), perf.cagr,
               perf.sharpe ? fmt::format("{:+.3f}", *perf.sharpe) : std::string("n/a"), perf.mdd);
  }
  const auto hold = lrf::buy_and_hold(market, windows);
  std::ostringstream csv;
  lrf::write_equity_csv(hold, csv);
  write_checked(out / "equity_buy_and_hold.csv", csv.str(), 1 + os_days);
  report["buy_and_hold"] = lrf::to_json(lrf::evaluate(hold));
  report["features"] = market.frame.dataset.feature_names();
  write_json_checked(out / "report.json", report);
  return 0;
}

std::size_t feature_by_name(const lrf::Forest& forest, const std::string& name) {
  const auto& names = forest.feature_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::runtime_error(fmt::format("model has no feature '{}'", name));
  return static_cast<std::size_t>(it - names.begin());
}

int cmd_heatmap(const lrf::RunConfig& cfg) {
  const auto forest = load_model(resolve_model(cfg, cfg.heatmap.model));
  const auto pairs = lrf::top_feature_pairs(forest, 5);
  fmt::print("most frequent feature pairs:\n");
  for (const auto& p : pairs) {
    fmt::print("  {} x {}  {:.4f}\n", forest.feature_names()[p.first], forest.feature_names()[p.second],
               p.frequency);
  }
  std::string fx = cfg.heatmap.feature_x;
  std::string fy = cfg.heatmap.feature_y;
  if (fx.empty() && fy.empty() && !pairs.empty()) {
    fx = forest.feature_names()[pairs.front().first];
    fy = forest.feature_names()[pairs.front().second];
  }
  const std::size_t ix = feature_by_name(forest, require(fx, "heatmap.feature_x"));
  const std::size_t iy = feature_by_name(forest, require(fy, "heatmap.feature_y"));
  if (ix == iy) throw std::runtime_error("heatmap needs two distinct features");
  const auto grid = lrf::heatmap_grid(forest, ix, iy, cfg.heatmap.resolution);
  std::ostringstream csv;
  lrf::write_heatmap_csv(grid, csv);
  write_checked(fs::path(cfg.out_dir) / cfg.heatmap.output, csv.str(),
                1 + cfg.heatmap.resolution * cfg.heatmap.resolution);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lookahead random forests: synthetic studies, training and walk-forward backtests"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out_dir;
  app.add_option("--config", config_path, "YAML run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", out_dir, "directory for all outputs");

  // Flag overrides, applied on top of the config file.
  std::vector<double> rhos;
  std::optional<std::size_t> repeats, n_rows;
  std::vector<std::string> classifiers;
  std::string data, label_column, model, output, classifier, fx, fy;
  std::optional<std::size_t> resolution;
  bool tune = false;
  std::size_t n_days = 2500;
  double market_rho = 0.65;

  auto* synth = app.add_subcommand("synth", "accuracy-vs-rho sweep on noisy XOR data");
  synth->add_option("--rho", rhos, "signal-to-noise values")->delimiter(',');
  synth->add_option("--repeats", repeats, "datasets per rho");
  synth->add_option("--n", n_rows, "rows per dataset");
  synth->add_option("--classifiers", classifiers, "LRF, GRF and/or GDT")->delimiter(',');

  auto* train = app.add_subcommand("train", "fit a forest on a feature CSV and save it");
  train->add_option("--data", data, "feature CSV");
  train->add_option("--label-column", label_column, "label column name");
  train->add_option("--classifier", classifier, "LRF, GRF or GDT");
  train->add_flag("--tune", tune, "cross-validated grid search");
  train->add_option("--model", model, "model file name under the output directory");

  auto* predict = app.add_subcommand("predict", "score a feature CSV with a saved forest");
  predict->add_option("--model", model, "model JSON");
  predict->add_option("--data", data, "feature CSV");
  predict->add_option("--label-column", label_column, "label column (enables the accuracy echo)");
  predict->add_option("--output", output, "prediction CSV name");

  auto* importance = app.add_subcommand("importance", "split-count feature importance of a saved forest");
  importance->add_option("--model", model, "model JSON");
  importance->add_option("--output", output, "importance CSV name");

  auto* backtest = app.add_subcommand("backtest", "walk-forward LRF and GRF strategies on OHLCV bars");
  backtest->add_option("--data", data, "OHLCV CSV");

  auto* heatmap = app.add_subcommand("heatmap", "P+ over a grid of two features");
  heatmap->add_option("--model", model, "model JSON");
  heatmap->add_option("--x", fx, "first feature");
  heatmap->add_option("--y", fy, "second feature");
  heatmap->add_option("--resolution", resolution, "cells per axis");
  heatmap->add_option("--output", output, "heat-map CSV name");

  auto* market = app.add_subcommand("market", "write a synthetic XOR-driven OHLCV series");
  market->add_option("--days", n_days, "number of bars");
  market->add_option("--rho", market_rho, "probability the XOR rule sets the next move");
  market->add_option("--output", output, "OHLCV CSV name");

  CLI11_PARSE(app, argc, argv);

  try {
    lrf::RunConfig cfg = config_path.empty() ? lrf::default_config() : lrf::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (jobs) cfg.jobs = *jobs;
    if (out_dir) cfg.out_dir = *out_dir;
    const auto set = [](std::string& dst, const std::string& src) {
      if (!src.empty()) dst = src;
    };

    if (synth->parsed()) {
      if (!rhos.empty()) cfg.synth.rhos = rhos;
      if (repeats) cfg.synth.repeats = *repeats;
      if (n_rows) cfg.synth.base.n = *n_rows;
      if (!classifiers.empty()) {
        cfg.synth.classifiers.clear();
        for (const auto& c : classifiers) cfg.synth.classifiers.push_back(lrf::parse_classifier(c));
      }
      for (double r : cfg.synth.rhos) {
        if (!(r >= 0.5 && r <= 1.0)) throw lrf::ConfigError(fmt::format("rho {} outside [0.5, 1]", r));
      }
    } else if (train->parsed()) {
      set(cfg.train.data, data);
      set(cfg.train.label_column, label_column);
      set(cfg.train.model, model);
      if (!classifier.empty()) cfg.train.classifier = lrf::parse_classifier(classifier);
      cfg.train.tune = cfg.train.tune || tune;
    } else if (predict->parsed()) {
      set(cfg.predict.model, model);
      set(cfg.predict.data, data);
      set(cfg.predict.label_column, label_column);
      set(cfg.predict.output, output);
    } else if (importance->parsed()) {
      set(cfg.importance.model, model);
      set(cfg.importance.output, output);
    } else if (backtest->parsed()) {
      set(cfg.backtest.data, data);
    } else if (heatmap->parsed()) {
      set(cfg.heatmap.model, model);
      set(cfg.heatmap.feature_x, fx);
      set(cfg.heatmap.feature_y, fy);
      if (resolution) cfg.heatmap.resolution = *resolution;
      set(cfg.heatmap.output, output);
    }
    cfg.validate();

    if (synth->parsed()) return cmd_synth(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (predict->parsed()) return cmd_predict(cfg);
    if (importance->parsed()) return cmd_importance(cfg);
    if (backtest->parsed()) return cmd_backtest(cfg);
    if (heatmap->parsed()) return cmd_heatmap(cfg);
    if (market->parsed()) {
      const auto bars = lrf::generate_xor_market({n_days, market_rho, 0.01, cfg.seed});
      std::ostringstream csv;
      lrf::write_ohlcv_csv(bars, csv);
      write_checked(fs::path(cfg.out_dir) / (output.empty() ? "market.csv" : output), csv.str(),
                    1 + bars.size());
      return 0;
    }
  } catch (const lrf::ConfigError& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 1;
}
