#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <nlohmann/json.hpp>
#include <numeric>
#include <stdexcept>

#include "lrf/tree.hpp"

namespace lrf {

std::string to_string(FeatureSubset rule) {
  switch (rule) {
    case FeatureSubset::Sqrt: return "SQRT";
    case FeatureSubset::Log2: return "LOG2";
    case FeatureSubset::All: return "ALL";
  }
  return "?";
}

std::string to_string(InductionMode mode) {
  return mode == InductionMode::Greedy ? "GREEDY" : "LOOKAHEAD";
}

FeatureSubset parse_feature_subset(const std::string& text) {
  if (text == "SQRT") return FeatureSubset::Sqrt;
  if (text == "LOG2") return FeatureSubset::Log2;
  if (text == "ALL") return FeatureSubset::All;
  throw std::invalid_argument(fmt::format("unknown feature subset rule '{}' (SQRT, LOG2, ALL)", text));
}

InductionMode parse_induction_mode(const std::string& text) {
  if (text == "GREEDY") return InductionMode::Greedy;
  if (text == "LOOKAHEAD") return InductionMode::Lookahead;
  throw std::invalid_argument(fmt::format("unknown induction mode '{}' (GREEDY, LOOKAHEAD)", text));
}

std::size_t subset_size(FeatureSubset rule, std::size_t k) {
  if (k == 0) return 0;
  switch (rule) {
    case FeatureSubset::Sqrt:
      return std::min(k, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(k)) - 1e-12)));
    case FeatureSubset::Log2:
      return std::clamp<std::size_t>(
          static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(k)) - 1e-12)), 1, k);
    case FeatureSubset::All:
      return k;
  }
  return k;
}

void TreeParams::validate() const {
  if (max_depth < 1) throw std::invalid_argument(fmt::format("max_depth {} < 1", max_depth));
  if (min_samples_leaf < 1) {
    throw std::invalid_argument(fmt::format("min_samples_leaf {} < 1", min_samples_leaf));
  }
  if (buckets < 2) throw std::invalid_argument(fmt::format("bucket count {} < 2", buckets));
  if (mode == InductionMode::Lookahead && max_depth % 2 != 0) {
    throw std::invalid_argument(
        fmt::format("lookahead trees grow in depth-2 blocks; max_depth {} is odd", max_depth));
  }
}

FeatureSampler::FeatureSampler(std::size_t n_features, std::size_t subset_size, std::uint64_t seed)
    : n_features_(n_features), subset_size_(std::min(subset_size, n_features)), rng_(seed) {
  if (subset_size_ == 0) throw std::invalid_argument("feature subset must be non-empty");
}

std::vector<std::size_t> FeatureSampler::draw() {
  std::vector<std::size_t> pool(n_features_);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  if (subset_size_ < n_features_) {
    for (std::size_t i = 0; i < subset_size_; ++i) {
      std::swap(pool[i], pool[i + rng_.below(n_features_ - i)]);
    }
    pool.resize(subset_size_);
    std::sort(pool.begin(), pool.end());
  }
  return pool;
}

DecisionTree::DecisionTree(std::vector<Node> nodes, std::size_t n_features)
    : nodes_(std::move(nodes)), n_features_(n_features) {
  if (nodes_.empty()) throw std::invalid_argument("tree has no nodes");
  const auto size = static_cast<std::int32_t>(nodes_.size());
  for (std::int32_t i = 0; i < size; ++i) {
    const Node& node = nodes_[static_cast<std::size_t>(i)];
    if (node.is_leaf()) {
      if (node.counts.empty()) throw std::invalid_argument(fmt::format("leaf {} is empty", i));
      continue;
    }
    if (static_cast<std::size_t>(node.feature) >= n_features_) {
      throw std::invalid_argument(fmt::format("node {} splits on unknown feature {}", i, node.feature));
    }
    if (node.left <= i || node.right <= i || node.left >= size || node.right >= size) {
      throw std::invalid_argument(fmt::format("node {} has invalid children", i));
    }
  }
}

DecisionTree DecisionTree::leaf(ClassCounts counts, std::size_t n_features) {
  Node node;
  node.counts = counts;
  return DecisionTree({node}, n_features);
}

const DecisionTree::Node& DecisionTree::leaf_for(std::span<const double> sample) const {
  if (sample.size() != n_features_) {
    throw std::invalid_argument(
        fmt::format("sample has {} features, tree expects {}", sample.size(), n_features_));
  }
  const Node* node = &nodes_.front();
  while (!node->is_leaf()) {
    const bool right = sample[static_cast<std::size_t>(node->feature)] >= node->threshold;
    node = &nodes_[static_cast<std::size_t>(right ? node->right : node->left)];
  }
  return *node;
}

double DecisionTree::predict_proba(std::span<const double> sample) const {
  return leaf_for(sample).counts.p_pos();
}

std::size_t DecisionTree::n_splits() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return !n.is_leaf(); }));
}

int DecisionTree::depth() const {
  std::function<int(std::int32_t)> walk = [&](std::int32_t i) -> int {
    const Node& node = nodes_[static_cast<std::size_t>(i)];
    if (node.is_leaf()) return 0;
    return 1 + std::max(walk(node.left), walk(node.right));
  };
  return walk(0);
}

nlohmann::json DecisionTree::to_json() const {
  std::function<nlohmann::json(std::int32_t)> emit = [&](std::int32_t i) {
    const Node& node = nodes_[static_cast<std::size_t>(i)];
    nlohmann::json out;
    out["n_pos"] = node.counts.n_pos;
    out["n_neg"] = node.counts.n_neg;
    if (node.is_leaf()) {
      out["kind"] = "leaf";
    } else {
      out["kind"] = "split";
      out["feature"] = node.feature;
      out["threshold"] = node.threshold;
      out["left"] = emit(node.left);
      out["right"] = emit(node.right);
    }
    return out;
  };
  return emit(0);
}

DecisionTree DecisionTree::from_json(const nlohmann::json& doc, std::size_t n_features) {
  std::vector<Node> nodes;
  std::function<std::int32_t(const nlohmann::json&)> read = [&](const nlohmann::json& j) {
    const auto index = static_cast<std::int32_t>(nodes.size());
    nodes.emplace_back();
    Node node;
    node.counts = {j.at("n_pos").get<std::int64_t>(), j.at("n_neg").get<std::int64_t>()};
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "split") {
      node.feature = j.at("feature").get<std::int32_t>();
      node.threshold = j.at("threshold").get<double>();
      node.left = read(j.at("left"));
      node.right = read(j.at("right"));
    } else if (kind != "leaf") {
      throw std::invalid_argument(fmt::format("unknown node kind '{}'", kind));
    }
    nodes[static_cast<std::size_t>(index)] = node;
    return index;
  };
  read(doc);
  return DecisionTree(std::move(nodes), n_features);
}

namespace {

class TreeGrower {
 public:
  TreeGrower(const LabeledDataset& data, const TreeParams& params, FeatureSampler& sampler)
      : data_(data), params_(params), sampler_(sampler) {}

  std::vector<DecisionTree::Node> grow(std::vector<std::size_t> rows) {
    if (params_.mode == InductionMode::Greedy) {
      grow_greedy_root(std::move(rows));
    } else {
      grow_block(std::move(rows), 0);
    }
    return std::move(nodes_);
  }

 private:
  std::int32_t add_leaf(const std::vector<std::size_t>& rows) {
    DecisionTree::Node node;
    for (const std::size_t r : rows) node.counts.add(data_.label(r));
    nodes_.push_back(node);
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  void make_split(std::int32_t index, const SplitSpec& split) {
    auto& node = nodes_[static_cast<std::size_t>(index)];
    node.feature = static_cast<std::int32_t>(split.feature);
    node.threshold = split.threshold;
  }

  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition(
      const std::vector<std::size_t>& rows, const SplitSpec& split) const {
    std::vector<std::size_t> left, right;
    const auto column = data_.column(split.feature);
    for (const std::size_t r : rows) (split.goes_right(column[r]) ? right : left).push_back(r);
    return {std::move(left), std::move(right)};
  }

  bool splittable(std::int32_t index) const {
    const auto& counts = nodes_[static_cast<std::size_t>(index)].counts;
    return !counts.pure() &&
           counts.total() >= 2 * static_cast<std::int64_t>(params_.min_samples_leaf);
  }

  // Greedy growth keeps, for every feature, the node's rows in ascending
  // value order; a split partitions those lists stably, so no node sorts.
  using SortedRows = std::vector<std::vector<std::uint32_t>>;

  std::int32_t grow_greedy_root(std::vector<std::size_t> rows) {
    SortedRows sorted(data_.n_features());
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      const auto column = data_.column(f);
      auto& order = sorted[f];
      order.resize(rows.size());
      std::iota(order.begin(), order.end(), std::uint32_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::uint32_t a, std::uint32_t b) { return column[rows[a]] < column[rows[b]]; });
    }
    root_rows_ = std::move(rows);
    return grow_greedy(std::move(sorted), 0);
  }

  std::int32_t grow_greedy(SortedRows sorted, int depth) {
    DecisionTree::Node node;
    for (const std::uint32_t s : sorted[0]) node.counts.add(data_.label(root_rows_[s]));
    nodes_.push_back(node);
    const auto index = static_cast<std::int32_t>(nodes_.size() - 1);
    if (depth >= params_.max_depth || !splittable(index)) return index;

    const auto features = sampler_.draw();
    const auto best = greedy_presorted_split(data_, root_rows_, sorted, features, params_.buckets,
                                             params_.min_samples_leaf);
    if (!best) return index;

    make_split(index, best->split);
    const auto column = data_.column(best->split.feature);
    SortedRows left(sorted.size()), right(sorted.size());
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      for (const std::uint32_t s : sorted[f]) {
        (best->split.goes_right(column[root_rows_[s]]) ? right : left)[f].push_back(s);
      }
    }
    sorted = {};
    const std::int32_t l = grow_greedy(std::move(left), depth + 1);
    const std::int32_t r = grow_greedy(std::move(right), depth + 1);
    nodes_[static_cast<std::size_t>(index)].left = l;
    nodes_[static_cast<std::size_t>(index)].right = r;
    return index;
  }

  // Child of a block: a split node with two block-rooted grandchildren, or a
  // leaf when the block left that side unsplit.
  std::int32_t grow_block_child(std::vector<std::size_t> rows, const std::optional<SplitSpec>& split,
                                int depth) {
    const std::int32_t index = add_leaf(rows);
    if (!split) return index;
    make_split(index, *split);
    auto [left, right] = partition(rows, *split);
    rows = {};
    const std::int32_t l = grow_block(std::move(left), depth + 1);
    const std::int32_t r = grow_block(std::move(right), depth + 1);
    nodes_[static_cast<std::size_t>(index)].left = l;
    nodes_[static_cast<std::size_t>(index)].right = r;
    return index;
  }

  std::int32_t grow_block(std::vector<std::size_t> rows, int depth) {
    const std::int32_t index = add_leaf(rows);
    if (depth + 2 > params_.max_depth || !splittable(index)) return index;

    const auto features = sampler_.draw();
    const auto candidates = node_thresholds(data_, rows, features, params_.buckets);
    const auto block = lookahead_best_block(data_, rows, candidates, params_.min_samples_leaf);
    if (!block) return index;

    make_split(index, block->root);
    auto [left, right] = partition(rows, block->root);
    rows = {};
    const std::int32_t l = grow_block_child(std::move(left), block->left, depth + 1);
    const std::int32_t r = grow_block_child(std::move(right), block->right, depth + 1);
    nodes_[static_cast<std::size_t>(index)].left = l;
    nodes_[static_cast<std::size_t>(index)].right = r;
    return index;
  }

  const LabeledDataset& data_;
  const TreeParams& params_;
  FeatureSampler& sampler_;
  std::vector<DecisionTree::Node> nodes_;
  std::vector<std::size_t> root_rows_;
};

}  // namespace

DecisionTree grow_tree(const LabeledDataset& data, std::span<const std::size_t> rows,
                       const TreeParams& params, FeatureSampler& sampler) {
  params.validate();
  if (rows.empty()) throw std::invalid_argument("cannot grow a tree on zero rows");
  TreeGrower grower(data, params, sampler);
  return DecisionTree(grower.grow({rows.begin(), rows.end()}), data.n_features());
}

}  // namespace lrf
