#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lrf/dataset.hpp"
#include "lrf/finance.hpp"
#include "lrf/tuning.hpp"

namespace lrf {

/// Noisy XOR data: F0, F1 ~ U[0,1]; the label equals XOR(F0 >= 1/2, F1 >= 1/2)
/// with probability rho and its complement otherwise. Noise features are
/// U[0,1] and independent of the label; each weak-linear feature is
/// clamp(U + beta (2y - 1), 0, 1).
struct SynthConfig {
  std::size_t n = 2000;
  double rho = 1.0;
  std::size_t n_noise = 6;
  std::size_t n_linear = 0;
  double beta = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Columns F0, F1 (XOR pair), then noise, then weak-linear features, named
/// F0..F{k-1}.
LabeledDataset generate(const SynthConfig& config);

/// Accuracy of the noiseless XOR rule on generated data, which is rho.
double bayes_accuracy(double rho);

enum class Classifier { LRF, GRF, GDT };

std::string to_string(Classifier c);
Classifier parse_classifier(const std::string& text);
InductionMode induction_mode(Classifier c);

struct SweepSpec {
  std::vector<double> rhos;
  SynthConfig base;  // rho ignored, seed is the master seed
  std::vector<Classifier> classifiers;
  std::size_t repeats = 20;
  std::map<Classifier, ParamGrid> grids;
  std::size_t n_folds = 5;
  double train_fraction = 0.75;

  void validate() const;
};

struct SweepCell {
  double rho = 0.0;
  Classifier classifier = Classifier::LRF;
  std::size_t repeat = 0;
  double accuracy = 0.0;
  std::vector<double> importance;
  ForestParams selected;
};

struct SweepSummary {
  double rho = 0.0;
  Classifier classifier = Classifier::LRF;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  std::vector<double> mean_importance;
};

struct SweepResult {
  std::vector<std::string> feature_names;
  std::vector<SweepCell> cells;  // ordered by (rho, repeat, classifier)

  std::vector<SweepSummary> summary() const;
};

/// For every (rho, repeat): a fresh dataset, a random train/test holdout,
/// then per classifier a cross-validated grid search on the training part,
/// a refit with the winner and its test accuracy and split-count importance.
/// All classifiers in a repeat share the dataset and the split. A GDT is a
/// single greedy tree without bootstrap whatever its grid says.
SweepResult run_sweep(const SweepSpec& spec, int jobs = 1);

/// Long-form CSV: rho, classifier, repeat, accuracy, imp_<feature>...
void write_sweep_csv(const SweepResult& result, std::ostream& out);
nlohmann::json sweep_summary_json(const SweepResult& result);

/// Daily OHLCV series whose next-day return sign follows the noisy XOR rule
/// applied to the sign of the day's overnight gap and the sign of its close
/// location value. Day t's move is up with probability rho when exactly one
/// of the two is non-negative, and down with probability rho otherwise.
struct XorMarketConfig {
  std::size_t n_days = 2500;
  double rho = 0.65;
  double mean_abs_return = 0.01;
  std::uint64_t seed = 0;
};

std::vector<OhlcvBar> generate_xor_market(const XorMarketConfig& config);

}  // namespace lrf
