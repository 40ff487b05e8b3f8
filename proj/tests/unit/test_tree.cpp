#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "lrf/tree.hpp"
#include "oracles.hpp"
#include "unit/test_helpers.hpp"

using namespace lrf;
using testing_util::all_rows;
using testing_util::xor_points;

TEST(Impurity, GiniExamples) {
  EXPECT_DOUBLE_EQ(gini({15, 15}), 0.5);
  EXPECT_DOUBLE_EQ(gini({30, 0}), 0.0);
  EXPECT_NEAR(gini({10, 20}), 4.0 / 9.0, 1e-15);
  EXPECT_THROW((void)gini({0, 0}), std::invalid_argument);
}

TEST(Impurity, WeightedExamples) {
  EXPECT_NEAR(weighted_gini({10, 0}, {10, 10}), 1.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(weighted_gini({5, 0}, {0, 7}), 0.0);
  EXPECT_NEAR(weighted_gini({3, 9}, {3, 9}), gini({3, 9}), 1e-15);
}

TEST(Impurity, CumulativeExamples) {
  EXPECT_DOUBLE_EQ(cumulative_gini({{{4, 0}, {0, 3}, {2, 0}, {0, 9}}}), 0.0);
  // 25-row leaves cannot be exactly balanced; 13/12 gives 25 * 2 * 13/25 * 12/25.
  EXPECT_NEAR(cumulative_gini({{{13, 12}, {12, 13}, {13, 12}, {12, 13}}}), 4 * 2 * 13.0 * 12.0 / 25.0, 1e-12);
  EXPECT_DOUBLE_EQ(cumulative_gini({{{1, 0}, {0, 1}, {1, 0}, {0, 1}}}), 0.0);
  EXPECT_DOUBLE_EQ(cumulative_gini({{{10, 10}, {10, 10}, {10, 10}, {10, 10}}}), 40.0);
  EXPECT_DOUBLE_EQ(node_impurity({0, 0}), 0.0);
}

TEST(Impurity, AgainstHandArithmetic) {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const ClassCounts a{static_cast<std::int64_t>(rng.below(30)), static_cast<std::int64_t>(1 + rng.below(30))};
    const ClassCounts b{static_cast<std::int64_t>(1 + rng.below(30)), static_cast<std::int64_t>(rng.below(30))};
    const double ga = oracle::gini(a.n_pos, a.n_neg);
    const double gb = oracle::gini(b.n_pos, b.n_neg);
    EXPECT_NEAR(gini(a), ga, 1e-12);
    const double na = a.total(), nb = b.total();
    EXPECT_NEAR(weighted_gini(a, b), (na * ga + nb * gb) / (na + nb), 1e-12);
    EXPECT_NEAR(cumulative_gini({a, b, b, a}), 2 * na * ga + 2 * nb * gb, 1e-9);
  }
}

TEST(SubsetSize, Rules) {
  EXPECT_EQ(subset_size(FeatureSubset::Sqrt, 8), 3u);
  EXPECT_EQ(subset_size(FeatureSubset::Sqrt, 9), 3u);
  EXPECT_EQ(subset_size(FeatureSubset::Sqrt, 10), 4u);
  EXPECT_EQ(subset_size(FeatureSubset::Log2, 8), 3u);
  EXPECT_EQ(subset_size(FeatureSubset::Log2, 1), 1u);
  EXPECT_EQ(subset_size(FeatureSubset::Log2, 2), 1u);
  EXPECT_EQ(subset_size(FeatureSubset::All, 8), 8u);
  EXPECT_EQ(parse_feature_subset("SQRT"), FeatureSubset::Sqrt);
  EXPECT_THROW((void)parse_feature_subset("sqrt"), std::invalid_argument);
}

TEST(GreedySplit, OneDimensionalSeparable) {
  const LabeledDataset d({{0.1, 0.2, 0.8, 0.9}}, {"x"}, {Label::Neg, Label::Neg, Label::Pos, Label::Pos});
  const auto rows = all_rows(4);
  const std::vector<std::size_t> f{0};
  const auto cand = node_thresholds(d, rows, f, 4);
  const auto best = greedy_best_split(d, rows, cand, 1);
  ASSERT_TRUE(best);
  EXPECT_GT(best->split.threshold, 0.2);
  EXPECT_LE(best->split.threshold, 0.8);
  EXPECT_DOUBLE_EQ(best->weighted_gini, 0.0);
}

TEST(GreedySplit, PureNodeHasNoSplit) {
  const LabeledDataset d({{0.1, 0.2, 0.8}}, {"x"}, std::vector<Label>(3, Label::Pos));
  const auto rows = all_rows(3);
  const std::vector<std::size_t> f{0};
  EXPECT_FALSE(greedy_best_split(d, rows, node_thresholds(d, rows, f, 3), 1));
}

TEST(GreedySplit, XorSingleFeatureTiesGoLowest) {
  // Balanced XOR grid: every threshold on F0 leaves both sides 50/50.
  std::vector<std::vector<double>> cols(2);
  std::vector<Label> y;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      cols[0].push_back((i + 0.5) / 10);
      cols[1].push_back((j + 0.5) / 10);
      y.push_back(((i >= 5) != (j >= 5)) ? Label::Pos : Label::Neg);
    }
  }
  const LabeledDataset d(cols, {"F0", "F1"}, y);
  const auto rows = all_rows(100);
  const std::vector<QuantileThresholds> cand{quantile_thresholds(d, 0, 10)};
  const auto best = greedy_best_split(d, rows, cand, 1);
  ASSERT_TRUE(best);
  EXPECT_NEAR(best->weighted_gini, 0.5, 1e-12);
  EXPECT_EQ(best->split.threshold, cand[0].thresholds.front());
}

TEST(GreedySplit, FusedPathMatchesTwoStep) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 5 + rng.below(120);
    std::vector<std::vector<double>> cols(4, std::vector<double>(n));
    std::vector<Label> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& c : cols) c[i] = std::floor(rng.uniform() * 12) / 12;
      y[i] = rng.bernoulli(cols[0][i] > 0.5 ? 0.8 : 0.3) ? Label::Pos : Label::Neg;
    }
    const LabeledDataset d(cols, {"a", "b", "c", "d"}, y);
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = rng.below(n);
    const std::vector<std::size_t> feats{3, 0, 2};
    const int b = 2 + static_cast<int>(rng.below(10));
    const int msl = 1 + static_cast<int>(rng.below(4));
    const auto two = greedy_best_split(d, rows, node_thresholds(d, rows, feats, b), msl);
    const auto one = greedy_node_split(d, rows, feats, b, msl);
    ASSERT_EQ(two.has_value(), one.has_value());
    if (one) {
      EXPECT_EQ(one->split, two->split);
      EXPECT_EQ(one->weighted_gini, two->weighted_gini);
    }
  }
}

TEST(Lookahead, XorFigureLayout) {
  const auto d = xor_points(100, 17);
  const auto rows = all_rows(100);
  std::vector<QuantileThresholds> cand{quantile_thresholds(d, 0, 8), quantile_thresholds(d, 1, 8)};
  for (auto& q : cand) {
    q.thresholds.push_back(0.5);
    std::sort(q.thresholds.begin(), q.thresholds.end());
  }
  const auto block = lookahead_best_block(d, rows, cand, 1);
  ASSERT_TRUE(block);
  EXPECT_DOUBLE_EQ(block->cumulative_gini, 0.0);
  EXPECT_EQ(block->root, (SplitSpec{0, 0.5}));
  ASSERT_TRUE(block->left && block->right);
  EXPECT_EQ(*block->left, (SplitSpec{1, 0.5}));
  EXPECT_EQ(*block->right, (SplitSpec{1, 0.5}));
}

TEST(Lookahead, PureNodeHasNoBlock) {
  const LabeledDataset d({{0.1, 0.2, 0.8}}, {"x"}, std::vector<Label>(3, Label::Neg));
  const auto rows = all_rows(3);
  const std::vector<QuantileThresholds> cand{quantile_thresholds(d, 0, 3)};
  EXPECT_FALSE(lookahead_best_block(d, rows, cand, 1));
}

TEST(Lookahead, MatchesExhaustiveEnumeration) {
  Rng rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 10 + rng.below(150);
    const std::size_t k = 1 + rng.below(3);
    std::vector<std::vector<double>> cols(k, std::vector<double>(n));
    std::vector<Label> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& c : cols) c[i] = rng.uniform();
      const bool x = (cols[0][i] >= 0.4) != (cols[k - 1][i] >= 0.6);
      y[i] = rng.bernoulli(x ? 0.8 : 0.2) ? Label::Pos : Label::Neg;
    }
    std::vector<std::string> names;
    for (std::size_t f = 0; f < k; ++f) names.push_back("f" + std::to_string(f));
    const LabeledDataset d(cols, names, y);
    const auto rows = all_rows(n);
    std::vector<std::size_t> feats(k);
    std::iota(feats.begin(), feats.end(), std::size_t{0});
    const int b = 2 + static_cast<int>(rng.below(7));
    const int msl = 1 + static_cast<int>(rng.below(5));
    const auto cand = node_thresholds(d, rows, feats, b);
    const auto got = lookahead_best_block(d, rows, cand, msl);
    const auto want = oracle::best_block_cost(d, rows, cand, msl);
    ASSERT_EQ(got.has_value(), want.has_value()) << "trial " << trial;
    if (!got) continue;
    EXPECT_NEAR(got->cumulative_gini, *want, 1e-9) << "trial " << trial;
    EXPECT_LE(got->cumulative_gini, oracle::greedy_then_greedy_cost(d, rows, cand, msl) + 1e-9);
    // The reported block realizes the reported score.
    const auto l = oracle::filter(d, rows, got->root, false);
    const auto r = oracle::filter(d, rows, got->root, true);
    EXPECT_NEAR(*oracle::side_cost(d, l, got->left, msl) + *oracle::side_cost(d, r, got->right, msl),
                got->cumulative_gini, 1e-9);
  }
}

TEST(Tree, GreedyDepthTwoOnSeparableData) {
  // F0 is the most informative root; each half is then separable on F1 at
  // a different threshold.
  std::vector<std::vector<double>> cols(2);
  std::vector<Label> y;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      cols[0].push_back(i / 10.0);
      cols[1].push_back(j / 10.0);
      y.push_back((i < 5 && j >= 8) || (i >= 5 && j >= 2) ? Label::Pos : Label::Neg);
    }
  }
  const LabeledDataset d(cols, {"F0", "F1"}, y);
  FeatureSampler sampler(2, 2, 0);
  const auto tree = grow_tree(d, all_rows(100), {2, 1, FeatureSubset::All, 100, InductionMode::Greedy}, sampler);
  EXPECT_EQ(tree.n_splits(), 3u);
  EXPECT_EQ(tree.depth(), 2);
  EXPECT_EQ(tree.nodes().front().feature, 0);
  for (std::size_t r = 0; r < 100; ++r) EXPECT_EQ(tree.predict_proba(d.row(r)) > 0.5, d.label(r) == Label::Pos);
}

TEST(Tree, StoppingRules) {
  const LabeledDataset pure({{0.1, 0.5, 0.9}}, {"x"}, std::vector<Label>(3, Label::Pos));
  FeatureSampler s1(1, 1, 0);
  EXPECT_EQ(grow_tree(pure, all_rows(3), {}, s1).n_splits(), 0u);

  const auto d = xor_points(50, 1);
  FeatureSampler s2(2, 2, 0);
  EXPECT_EQ(grow_tree(d, all_rows(50), {2, 50, FeatureSubset::All, 32, InductionMode::Greedy}, s2).n_splits(), 0u);
  EXPECT_THROW(grow_tree(d, all_rows(50), {3, 1, FeatureSubset::All, 32, InductionMode::Lookahead}, s2),
               std::invalid_argument);
}

TEST(Tree, LookaheadSolvesXorAndRoutesBoundaryRight) {
  const auto d = xor_points(100, 4);
  FeatureSampler sampler(2, 2, 0);
  const auto tree = grow_tree(d, all_rows(100), {2, 1, FeatureSubset::All, 100, InductionMode::Lookahead}, sampler);
  for (std::size_t r = 0; r < 100; ++r) {
    EXPECT_EQ(tree.predict_proba(d.row(r)), d.label(r) == Label::Pos ? 1.0 : 0.0);
  }
  EXPECT_EQ(tree.predict_proba(std::vector<double>{0.9, 0.1}), 1.0);

  const auto& root = tree.nodes().front();
  std::vector<double> at(2, 0.0);
  at[static_cast<std::size_t>(root.feature)] = root.threshold;
  const auto& right_child = tree.nodes()[static_cast<std::size_t>(root.right)];
  at[static_cast<std::size_t>(right_child.feature)] = 0.0;
  EXPECT_EQ(&tree.leaf_for(at), &tree.nodes()[static_cast<std::size_t>(right_child.left)]);
}

TEST(Tree, SingleLeafAndJson) {
  const auto leaf = DecisionTree::leaf({3, 1}, 2);
  EXPECT_DOUBLE_EQ(leaf.predict_proba(std::vector<double>{5, -5}), 0.75);
  EXPECT_THROW((void)leaf.predict_proba(std::vector<double>{1}), std::invalid_argument);

  const auto d = xor_points(80, 9);
  FeatureSampler sampler(2, 1, 5);
  const auto tree = grow_tree(d, all_rows(80), {4, 2, FeatureSubset::Sqrt, 16, InductionMode::Lookahead}, sampler);
  const auto back = DecisionTree::from_json(tree.to_json(), 2);
  EXPECT_EQ(back, tree);
  EXPECT_THROW(DecisionTree::from_json(nlohmann::json{{"kind", "odd"}, {"n_pos", 1}, {"n_neg", 0}}, 2),
               std::invalid_argument);
}

TEST(Tree, SamplerDrawsSortedDistinctSubsets) {
  FeatureSampler s(8, 3, 1);
  for (int i = 0; i < 50; ++i) {
    const auto f = s.draw();
    ASSERT_EQ(f.size(), 3u);
    EXPECT_TRUE(std::is_sorted(f.begin(), f.end()));
    EXPECT_LT(f[0], f[1]);
    EXPECT_LT(f[1], f[2]);
    EXPECT_LT(f[2], 8u);
  }
}
