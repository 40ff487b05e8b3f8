#include <gtest/gtest.h>

#include <nlohmann/json.hpp>
#include <sstream>

#include "lrf/synthgen.hpp"
#include "lrf/tuning.hpp"

using namespace lrf;

TEST(ParamGrid, CandidateOrderAndValidation) {
  ParamGrid g;
  g.max_depth = {2, 4};
  g.min_samples_leaf = {1, 5};
  g.n_trees = {10, 20};
  const auto c = g.candidates(InductionMode::Greedy, 9);
  ASSERT_EQ(c.size(), 8u);
  EXPECT_EQ(c[0].tree.max_depth, 2);
  EXPECT_EQ(c[0].n_trees, 10);
  EXPECT_EQ(c[1].n_trees, 20);
  EXPECT_EQ(c[7].tree.max_depth, 4);
  for (const auto& p : c) EXPECT_EQ(p.tree.mode, InductionMode::Greedy);

  ParamGrid odd;
  odd.max_depth = {3};
  EXPECT_THROW(odd.validate(InductionMode::Lookahead), std::invalid_argument);
  EXPECT_NO_THROW(odd.validate(InductionMode::Greedy));
  ParamGrid empty;
  empty.buckets = {};
  EXPECT_THROW(empty.validate(InductionMode::Greedy), std::invalid_argument);
  ParamGrid bad_theta;
  bad_theta.theta = {0.6};
  EXPECT_THROW(bad_theta.validate(InductionMode::Greedy), std::invalid_argument);
}

TEST(ParamGrid, Simplicity) {
  ForestParams a, b;
  a.tree.max_depth = 2;
  b.tree.max_depth = 4;
  EXPECT_TRUE(simpler_than(a, b));
  b.tree.max_depth = 2;
  a.tree.min_samples_leaf = 10;
  b.tree.min_samples_leaf = 5;
  EXPECT_TRUE(simpler_than(a, b));
  EXPECT_FALSE(simpler_than(b, a));
}

TEST(CrossValidate, SingleCandidate) {
  const auto d = generate({200, 0.9, 2, 0, 0.05, 1});
  ParamGrid g;
  g.n_trees = {5};
  const auto r = cross_validate(d, g, 4, InductionMode::Lookahead, 3);
  ASSERT_EQ(r.candidates.size(), 1u);
  EXPECT_EQ(r.selected, 0u);
  const auto& s = r.best();
  ASSERT_EQ(s.fold_accuracy.size(), 4u);
  double mean = 0;
  for (double a : s.fold_accuracy) mean += a / 4;
  EXPECT_NEAR(s.mean, mean, 1e-15);
}

TEST(CrossValidate, DominatingCandidateWins) {
  // Depth-2 lookahead solves noiseless XOR; a one-row-minimum-leaf stump of
  // the huge leaf size cannot split at all.
  const auto d = generate({400, 1.0, 2, 0, 0.05, 4});
  ParamGrid g;
  g.min_samples_leaf = {1000, 1};
  g.n_trees = {5};
  const auto r = cross_validate(d, g, 5, InductionMode::Lookahead, 2);
  ASSERT_EQ(r.candidates.size(), 2u);
  for (std::size_t f = 0; f < 5; ++f) {
    EXPECT_GT(r.candidates[1].fold_accuracy[f], r.candidates[0].fold_accuracy[f]);
  }
  EXPECT_EQ(r.selected, 1u);
}

TEST(CrossValidate, IndependentOfJobsAndWritesOutputs) {
  const auto d = generate({300, 0.75, 3, 0, 0.05, 8});
  ParamGrid g;
  g.feature_subset = {FeatureSubset::Sqrt, FeatureSubset::All};
  g.n_trees = {6};
  const auto a = cross_validate(d, g, 3, InductionMode::Greedy, 5, 1);
  const auto b = cross_validate(d, g, 3, InductionMode::Greedy, 5, 3);
  std::ostringstream ca, cb;
  write_cv_csv(a, ca);
  write_cv_csv(b, cb);
  EXPECT_EQ(ca.str(), cb.str());
  EXPECT_EQ(cv_summary_json(a).dump(), cv_summary_json(b).dump());
  const std::string text = ca.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 2 * 3);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "candidate,max_depth,min_samples_leaf,feature_subset,buckets,n_trees,fold,accuracy");
}

TEST(CrossValidate, LookaheadPrefersAllFeaturesOnXor) {
  const auto d = generate({600, 0.85, 6, 0, 0.05, 12});
  ParamGrid g;
  g.feature_subset = {FeatureSubset::Sqrt, FeatureSubset::All};
  g.min_samples_leaf = {5};
  g.n_trees = {30};
  const auto r = cross_validate(d, g, 5, InductionMode::Lookahead, 1);
  EXPECT_EQ(r.best().params.tree.feature_subset, FeatureSubset::All);
}
