#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lrf/dataset.hpp"
#include "lrf/random.hpp"

namespace lrf {

struct ClassCounts {
  std::int64_t n_pos = 0;
  std::int64_t n_neg = 0;

  std::int64_t total() const { return n_pos + n_neg; }
  bool empty() const { return total() == 0; }
  bool pure() const { return n_pos == 0 || n_neg == 0; }
  double p_pos() const { return static_cast<double>(n_pos) / static_cast<double>(total()); }

  void add(Label y, std::int64_t times = 1) { (y == Label::Pos ? n_pos : n_neg) += times; }
  ClassCounts& operator+=(const ClassCounts& o) {
    n_pos += o.n_pos;
    n_neg += o.n_neg;
    return *this;
  }
  friend ClassCounts operator-(ClassCounts a, const ClassCounts& b) {
    a.n_pos -= b.n_pos;
    a.n_neg -= b.n_neg;
    return a;
  }
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

// Impurity. All throw std::invalid_argument on an empty node.

/// 2 P+ (1 - P+).
double gini(ClassCounts counts);
/// Sample-weighted mean Gini of two children.
double weighted_gini(ClassCounts left, ClassCounts right);
/// Unnormalized sum n_i G_i over the four leaves of a depth-2 block.
double cumulative_gini(const std::array<ClassCounts, 4>& leaves);
/// n G for a node, 0 for an empty one. The summand of cumulative_gini.
double node_impurity(ClassCounts counts);

/// Binary split. A sample goes right iff its value is >= threshold.
struct SplitSpec {
  std::size_t feature = 0;
  double threshold = 0.0;

  bool goes_right(double value) const { return value >= threshold; }
  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

enum class FeatureSubset { Sqrt, Log2, All };
enum class InductionMode { Greedy, Lookahead };

std::string to_string(FeatureSubset rule);
std::string to_string(InductionMode mode);
FeatureSubset parse_feature_subset(const std::string& text);
InductionMode parse_induction_mode(const std::string& text);

/// k~ for a given k: SQRT -> ceil(sqrt k), LOG2 -> max(1, ceil(log2 k)), ALL -> k.
std::size_t subset_size(FeatureSubset rule, std::size_t n_features);

struct TreeParams {
  int max_depth = 2;
  int min_samples_leaf = 1;
  FeatureSubset feature_subset = FeatureSubset::All;
  int buckets = 32;
  InductionMode mode = InductionMode::Lookahead;

  /// Throws std::invalid_argument; lookahead trees need an even depth.
  void validate() const;
  friend bool operator==(const TreeParams&, const TreeParams&) = default;
};

// Split search. `rows` index into `data` and may repeat (bootstrap); the
// candidate feature set is the set of features named in `candidates`.

struct ScoredSplit {
  SplitSpec split;
  double weighted_gini = 0.0;
};

/// Minimizes the weighted child Gini over all candidate (feature, threshold)
/// pairs leaving at least `min_samples_leaf` rows on each side. Ties go to
/// the lowest (feature index, threshold). Empty for a pure node or when no
/// candidate is admissible.
std::optional<ScoredSplit> greedy_best_split(const LabeledDataset& data,
                                             std::span<const std::size_t> rows,
                                             std::span<const QuantileThresholds> candidates,
                                             int min_samples_leaf);

/// Three jointly chosen splits forming a depth-2 block. A missing child
/// leaves its side as a single leaf.
struct LookaheadBlock {
  SplitSpec root;
  std::optional<SplitSpec> left;
  std::optional<SplitSpec> right;
  double cumulative_gini = 0.0;
};

/// Exact minimizer of the cumulative Gini sum n_i G_i over every
/// (root, left child, right child) combination of candidate splits.
///
/// Conditional on the root, the left child only affects the two left leaves
/// and the right child only the two right leaves, so each child is optimized
/// independently for every root candidate. Rows are swept from the right
/// side to the left in bucket order while per-feature bucket histograms of
/// both sides are maintained, which makes the whole search
/// O(k~ (n k~ + k~ B^2)).
///
/// A side that is pure, or admits no split with `min_samples_leaf` rows in
/// each leaf, stays unsplit and contributes its own n G. Ties are broken
/// lexicographically on (root feature, root threshold, left feature, left
/// threshold, right feature, right threshold), with "no split" after every
/// split.
std::optional<LookaheadBlock> lookahead_best_block(const LabeledDataset& data,
                                                   std::span<const std::size_t> rows,
                                                   std::span<const QuantileThresholds> candidates,
                                                   int min_samples_leaf);

/// Quantile candidates of each listed feature over `rows`, with B clamped to
/// the number of rows.
std::vector<QuantileThresholds> node_thresholds(const LabeledDataset& data,
                                                std::span<const std::size_t> rows,
                                                std::span<const std::size_t> features, int buckets);

/// node_thresholds followed by greedy_best_split, fused into one sort per
/// feature. The result is identical.
std::optional<ScoredSplit> greedy_node_split(const LabeledDataset& data,
                                             std::span<const std::size_t> rows,
                                             std::span<const std::size_t> features, int buckets,
                                             int min_samples_leaf);

/// greedy_node_split for callers that keep rows presorted. The node's rows
/// are given as positions into `rows`: sorted[f] lists them in ascending
/// order of feature f. Only the entries for `features` are read.
std::optional<ScoredSplit> greedy_presorted_split(const LabeledDataset& data,
                                                  std::span<const std::size_t> rows,
                                                  const std::vector<std::vector<std::uint32_t>>& sorted,
                                                  std::span<const std::size_t> features, int buckets,
                                                  int min_samples_leaf);

/// Draws the random feature subsets seen by a node or a lookahead block.
class FeatureSampler {
 public:
  FeatureSampler(std::size_t n_features, std::size_t subset_size, std::uint64_t seed);
  /// Sorted, distinct feature indices.
  std::vector<std::size_t> draw();

 private:
  std::size_t n_features_;
  std::size_t subset_size_;
  Rng rng_;
};

/// Binary decision tree stored as a pre-order node array; node 0 is the root.
class DecisionTree {
 public:
  struct Node {
    ClassCounts counts;     // training rows reaching the node
    std::int32_t feature = -1;  // -1 for a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;

    bool is_leaf() const { return feature < 0; }
    SplitSpec split() const { return {static_cast<std::size_t>(feature), threshold}; }
    friend bool operator==(const Node&, const Node&) = default;
  };

  DecisionTree(std::vector<Node> nodes, std::size_t n_features);
  static DecisionTree leaf(ClassCounts counts, std::size_t n_features);

  /// Leaf P+ reached by routing `sample` (>= goes right).
  double predict_proba(std::span<const double> sample) const;
  const Node& leaf_for(std::span<const double> sample) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t n_features() const { return n_features_; }
  std::size_t n_splits() const;
  int depth() const;

  nlohmann::json to_json() const;
  static DecisionTree from_json(const nlohmann::json& doc, std::size_t n_features);

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<Node> nodes_;
  std::size_t n_features_;
};

/// Grows a tree on `rows` of `data`. Greedy mode draws a fresh feature subset
/// per node; lookahead mode draws one subset per depth-2 block and appends
/// further blocks beneath each of its leaves until depth, purity or leaf
/// size stops growth.
DecisionTree grow_tree(const LabeledDataset& data, std::span<const std::size_t> rows,
                       const TreeParams& params, FeatureSampler& sampler);

}  // namespace lrf
