#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lrf/dataset.hpp"
#include "lrf/forest.hpp"

namespace lrf {

/// Candidate values for each tunable knob. The candidate set is the
/// Cartesian product, enumerated with max_depth outermost and n_trees
/// innermost. `theta` is only consumed by the trading strategy.
struct ParamGrid {
  std::vector<int> max_depth{2};
  std::vector<int> min_samples_leaf{1};
  std::vector<FeatureSubset> feature_subset{FeatureSubset::All};
  std::vector<int> buckets{32};
  std::vector<int> n_trees{100};
  std::vector<double> theta{0.0};
  bool bootstrap = true;

  void validate(InductionMode mode) const;
  std::vector<ForestParams> candidates(InductionMode mode, std::uint64_t seed) const;
};

/// True when `a` is the simpler model: smaller depth, then larger leaves,
/// then fewer trees.
bool simpler_than(const ForestParams& a, const ForestParams& b);

struct CandidateScore {
  ForestParams params;
  std::vector<double> fold_accuracy;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation across folds
};

struct CVResult {
  std::vector<CandidateScore> candidates;
  std::size_t selected = 0;

  const CandidateScore& best() const { return candidates.at(selected); }
};

/// k-fold cross-validated grid search on accuracy. Every candidate sees the
/// same folds and the same per-fold forest seed, so comparisons are paired.
/// The highest mean wins; ties go to the simpler candidate (simpler_than),
/// then to grid order.
CVResult cross_validate(const LabeledDataset& data, const ParamGrid& grid, std::size_t n_folds,
                        InductionMode mode, std::uint64_t seed, int jobs = 1);

/// One row per candidate x fold.
void write_cv_csv(const CVResult& result, std::ostream& out);
nlohmann::json cv_summary_json(const CVResult& result);

nlohmann::json params_json(const ForestParams& params);

}  // namespace lrf
