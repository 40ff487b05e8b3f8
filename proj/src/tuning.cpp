#include "lrf/tuning.hpp"

#include <fmt/format.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <ostream>
#include <stdexcept>

#include "lrf/random.hpp"

namespace lrf {

namespace {

template <typename T>
void require_non_empty(const std::vector<T>& values, const char* name) {
  if (values.empty()) throw std::invalid_argument(fmt::format("parameter grid: '{}' is empty", name));
}

}  // namespace

void ParamGrid::validate(InductionMode mode) const {
  require_non_empty(max_depth, "max_depth");
  require_non_empty(min_samples_leaf, "min_samples_leaf");
  require_non_empty(feature_subset, "feature_subset");
  require_non_empty(buckets, "buckets");
  require_non_empty(n_trees, "n_trees");
  require_non_empty(theta, "theta");
  for (const double t : theta) {
    if (!(t >= 0.0 && t < 0.5)) throw std::invalid_argument(fmt::format("theta {} outside [0, 0.5)", t));
  }
  for (const auto& p : candidates(mode, 0)) p.validate();
}

std::vector<ForestParams> ParamGrid::candidates(InductionMode mode, std::uint64_t seed) const {
  std::vector<ForestParams> out;
  for (const int depth : max_depth) {
    for (const int leaf : min_samples_leaf) {
      for (const auto rule : feature_subset) {
        for (const int b : buckets) {
          for (const int t : n_trees) {
            ForestParams p;
            p.n_trees = t;
            p.tree = TreeParams{depth, leaf, rule, b, mode};
            p.bootstrap = bootstrap;
            p.seed = seed;
            out.push_back(p);
          }
        }
      }
    }
  }
  return out;
}

bool simpler_than(const ForestParams& a, const ForestParams& b) {
  if (a.tree.max_depth != b.tree.max_depth) return a.tree.max_depth < b.tree.max_depth;
  if (a.tree.min_samples_leaf != b.tree.min_samples_leaf) {
    return a.tree.min_samples_leaf > b.tree.min_samples_leaf;
  }
  return a.n_trees < b.n_trees;
}

CVResult cross_validate(const LabeledDataset& data, const ParamGrid& grid, std::size_t n_folds,
                        InductionMode mode, std::uint64_t seed, int jobs) {
  grid.validate(mode);
  const FoldPlan folds = make_folds(data.n_rows(), n_folds, derive_seed(seed, 0));

  std::vector<LabeledDataset> train, test;
  for (std::size_t f = 0; f < n_folds; ++f) {
    const auto train_rows = folds.train_rows(f);
    const auto test_rows = folds.test_rows(f);
    train.push_back(data.subset(train_rows));
    test.push_back(data.subset(test_rows));
  }

  CVResult result;
  for (auto params : grid.candidates(mode, seed)) {
    CandidateScore score;
    score.params = params;
    for (std::size_t f = 0; f < n_folds; ++f) {
      params.seed = derive_seed(seed, 1, f);
      score.fold_accuracy.push_back(accuracy(fit(train[f], params, jobs), test[f]));
    }
    double sum = 0.0;
    for (const double a : score.fold_accuracy) sum += a;
    score.mean = sum / static_cast<double>(n_folds);
    double ss = 0.0;
    for (const double a : score.fold_accuracy) ss += (a - score.mean) * (a - score.mean);
    score.stddev = std::sqrt(ss / static_cast<double>(n_folds - 1));
    result.candidates.push_back(std::move(score));
  }

  for (std::size_t i = 1; i < result.candidates.size(); ++i) {
    const auto& c = result.candidates[i];
    const auto& best = result.candidates[result.selected];
    const double tol = 1e-12;
    if (c.mean > best.mean + tol ||
        (std::abs(c.mean - best.mean) <= tol && simpler_than(c.params, best.params))) {
      result.selected = i;
    }
  }
  return result;
}

nlohmann::json params_json(const ForestParams& p) {
  return {{"n_trees", p.n_trees},
          {"max_depth", p.tree.max_depth},
          {"min_samples_leaf", p.tree.min_samples_leaf},
          {"feature_subset", to_string(p.tree.feature_subset)},
          {"buckets", p.tree.buckets},
          {"mode", to_string(p.tree.mode)},
          {"bootstrap", p.bootstrap}};
}

void write_cv_csv(const CVResult& result, std::ostream& out) {
  out << "candidate,max_depth,min_samples_leaf,feature_subset,buckets,n_trees,fold,accuracy\n";
  for (std::size_t c = 0; c < result.candidates.size(); ++c) {
    const auto& cand = result.candidates[c];
    const auto& p = cand.params;
    for (std::size_t f = 0; f < cand.fold_accuracy.size(); ++f) {
      out << fmt::format("{},{},{},{},{},{},{},{}\n", c, p.tree.max_depth, p.tree.min_samples_leaf,
                         to_string(p.tree.feature_subset), p.tree.buckets, p.n_trees, f,
                         cand.fold_accuracy[f]);
    }
  }
}

nlohmann::json cv_summary_json(const CVResult& result) {
  nlohmann::json doc;
  auto cands = nlohmann::json::array();
  for (const auto& c : result.candidates) {
    cands.push_back({{"params", params_json(c.params)},
                     {"mean_accuracy", c.mean},
                     {"std_accuracy", c.stddev},
                     {"fold_accuracy", c.fold_accuracy}});
  }
  doc["candidates"] = std::move(cands);
  doc["selected"] = result.selected;
  doc["selected_params"] = params_json(result.best().params);
  doc["selected_mean_accuracy"] = result.best().mean;
  return doc;
}

}  // namespace lrf
