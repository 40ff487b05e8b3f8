#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lrf/dataset.hpp"
#include "lrf/tree.hpp"

namespace lrf {

struct ForestParams {
  int n_trees = 100;
  TreeParams tree;
  bool bootstrap = true;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

/// Per-feature summary of the training data, kept for heat-map ranges.
struct FeatureStats {
  double min = 0.0;
  double max = 0.0;
  double median = 0.0;
  friend bool operator==(const FeatureStats&, const FeatureStats&) = default;
};

class Forest {
 public:
  Forest(std::vector<DecisionTree> trees, ForestParams params, std::vector<std::string> feature_names,
         std::vector<FeatureStats> stats = {});

  /// Unweighted mean of the per-tree leaf P+.
  double predict_proba(std::span<const double> sample) const;
  std::vector<double> predict_proba(const LabeledDataset& data) const;
  /// Pos iff P+ > 0.5.
  Label classify(std::span<const double> sample) const;

  const std::vector<DecisionTree>& trees() const { return trees_; }
  const ForestParams& params() const { return params_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::vector<FeatureStats>& feature_stats() const { return stats_; }
  std::size_t n_features() const { return feature_names_.size(); }

  nlohmann::json to_json() const;
  static Forest from_json(const nlohmann::json& doc);

  friend bool operator==(const Forest&, const Forest&) = default;

 private:
  std::vector<DecisionTree> trees_;
  ForestParams params_;
  std::vector<std::string> feature_names_;
  std::vector<FeatureStats> stats_;
};

inline Label classify_proba(double p_plus) { return p_plus > 0.5 ? Label::Pos : Label::Neg; }

/// Trains params.n_trees trees, each on its own size-N bootstrap resample
/// (or on all rows when bootstrap is off). Tree t draws from the stream
/// derive_seed(params.seed, t), so the result does not depend on `jobs`.
Forest fit(const LabeledDataset& data, const ForestParams& params, int jobs = 1);

/// Fraction of rows whose classification matches the label.
double accuracy(const Forest& forest, const LabeledDataset& test);

struct ImportanceReport {
  std::vector<std::string> feature_names;
  std::vector<double> share;  // split count per feature / total splits
  std::size_t total_splits = 0;
};

ImportanceReport feature_importance(const Forest& forest);

struct FeaturePairFrequency {
  std::size_t first = 0;  // first < second
  std::size_t second = 0;
  std::size_t count = 0;
  double frequency = 0.0;
};

/// Unordered pairs of distinct features that occur together in a depth-2
/// block (a split at even depth and a split directly beneath it), most
/// frequent first; ties by feature indices.
std::vector<FeaturePairFrequency> top_feature_pairs(const Forest& forest, std::size_t limit = 5);

}  // namespace lrf
