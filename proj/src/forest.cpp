#include "lrf/forest.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <optional>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "lrf/parallel.hpp"
#include "lrf/random.hpp"

namespace lrf {

void ForestParams::validate() const {
  if (n_trees < 1) throw std::invalid_argument(fmt::format("forest needs at least one tree, got {}", n_trees));
  tree.validate();
}

Forest::Forest(std::vector<DecisionTree> trees, ForestParams params,
               std::vector<std::string> feature_names, std::vector<FeatureStats> stats)
    : trees_(std::move(trees)),
      params_(params),
      feature_names_(std::move(feature_names)),
      stats_(std::move(stats)) {
  if (trees_.empty()) throw std::invalid_argument("forest has no trees");
  for (const auto& tree : trees_) {
    if (tree.n_features() != feature_names_.size()) {
      throw std::invalid_argument("tree feature schema differs from the forest's");
    }
  }
  if (!stats_.empty() && stats_.size() != feature_names_.size()) {
    throw std::invalid_argument("feature statistics do not match the feature schema");
  }
}

double Forest::predict_proba(std::span<const double> sample) const {
  if (sample.size() != n_features()) {
    throw std::invalid_argument(
        fmt::format("sample has {} features, model expects {}", sample.size(), n_features()));
  }
  double sum = 0.0;
  for (const auto& tree : trees_) sum += tree.predict_proba(sample);
  return sum / static_cast<double>(trees_.size());
}

std::vector<double> Forest::predict_proba(const LabeledDataset& data) const {
  if (data.n_features() != n_features()) {
    throw std::invalid_argument(fmt::format("data has {} features, model expects {}",
                                            data.n_features(), n_features()));
  }
  std::vector<double> out(data.n_rows());
  std::vector<double> sample(n_features());
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    for (std::size_t f = 0; f < n_features(); ++f) sample[f] = data.value(r, f);
    out[r] = predict_proba(sample);
  }
  return out;
}

Label Forest::classify(std::span<const double> sample) const {
  return classify_proba(predict_proba(sample));
}

nlohmann::json Forest::to_json() const {
  nlohmann::json doc;
  doc["format"] = "lrf-forest";
  doc["version"] = 1;
  doc["params"] = {
      {"n_trees", params_.n_trees},
      {"max_depth", params_.tree.max_depth},
      {"min_samples_leaf", params_.tree.min_samples_leaf},
      {"feature_subset", to_string(params_.tree.feature_subset)},
      {"buckets", params_.tree.buckets},
      {"mode", to_string(params_.tree.mode)},
      {"bootstrap", params_.bootstrap},
      {"seed", params_.seed},
  };
  doc["feature_names"] = feature_names_;
  auto stats = nlohmann::json::array();
  for (const auto& s : stats_) stats.push_back({{"min", s.min}, {"max", s.max}, {"median", s.median}});
  doc["feature_stats"] = stats;
  auto trees = nlohmann::json::array();
  for (const auto& tree : trees_) trees.push_back(tree.to_json());
  doc["trees"] = std::move(trees);
  return doc;
}

Forest Forest::from_json(const nlohmann::json& doc) {
  if (doc.value("format", std::string{}) != "lrf-forest") {
    throw std::invalid_argument("not a forest model document");
  }
  const auto& p = doc.at("params");
  ForestParams params;
  params.n_trees = p.at("n_trees").get<int>();
  params.tree.max_depth = p.at("max_depth").get<int>();
  params.tree.min_samples_leaf = p.at("min_samples_leaf").get<int>();
  params.tree.feature_subset = parse_feature_subset(p.at("feature_subset").get<std::string>());
  params.tree.buckets = p.at("buckets").get<int>();
  params.tree.mode = parse_induction_mode(p.at("mode").get<std::string>());
  params.bootstrap = p.at("bootstrap").get<bool>();
  params.seed = p.at("seed").get<std::uint64_t>();

  auto names = doc.at("feature_names").get<std::vector<std::string>>();
  std::vector<FeatureStats> stats;
  for (const auto& s : doc.at("feature_stats")) {
    stats.push_back({s.at("min").get<double>(), s.at("max").get<double>(), s.at("median").get<double>()});
  }
  std::vector<DecisionTree> trees;
  for (const auto& t : doc.at("trees")) trees.push_back(DecisionTree::from_json(t, names.size()));
  return Forest(std::move(trees), params, std::move(names), std::move(stats));
}

namespace {

std::vector<FeatureStats> compute_stats(const LabeledDataset& data) {
  std::vector<FeatureStats> stats;
  std::vector<double> values;
  for (std::size_t f = 0; f < data.n_features(); ++f) {
    const auto col = data.column(f);
    values.assign(col.begin(), col.end());
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    const double median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    stats.push_back({values.front(), values.back(), median});
  }
  return stats;
}

}  // namespace

Forest fit(const LabeledDataset& data, const ForestParams& params, int jobs) {
  params.validate();
  const std::size_t n = data.n_rows();
  const std::size_t k_sub = subset_size(params.tree.feature_subset, data.n_features());
  std::vector<std::optional<DecisionTree>> grown(static_cast<std::size_t>(params.n_trees));

  parallel_for(grown.size(), jobs, [&](std::size_t t) {
    Rng rng(derive_seed(params.seed, t, 0));
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = params.bootstrap ? rng.below(n) : i;
    if (params.bootstrap) std::sort(rows.begin(), rows.end());
    FeatureSampler sampler(data.n_features(), k_sub, derive_seed(params.seed, t, 1));
    grown[t] = grow_tree(data, rows, params.tree, sampler);
  });

  std::vector<DecisionTree> trees;
  trees.reserve(grown.size());
  for (auto& t : grown) trees.push_back(std::move(*t));
  return Forest(std::move(trees), params, data.feature_names(), compute_stats(data));
}

double accuracy(const Forest& forest, const LabeledDataset& test) {
  const auto proba = forest.predict_proba(test);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < test.n_rows(); ++r) {
    if (classify_proba(proba[r]) == test.label(r)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.n_rows());
}

ImportanceReport feature_importance(const Forest& forest) {
  ImportanceReport report{forest.feature_names(), std::vector<double>(forest.n_features(), 0.0), 0};
  std::vector<std::size_t> counts(forest.n_features(), 0);
  for (const auto& tree : forest.trees()) {
    for (const auto& node : tree.nodes()) {
      if (node.is_leaf()) continue;
      ++counts[static_cast<std::size_t>(node.feature)];
      ++report.total_splits;
    }
  }
  if (report.total_splits > 0) {
    for (std::size_t f = 0; f < counts.size(); ++f) {
      report.share[f] = static_cast<double>(counts[f]) / static_cast<double>(report.total_splits);
    }
  }
  return report;
}

std::vector<FeaturePairFrequency> top_feature_pairs(const Forest& forest, std::size_t limit) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& tree : forest.trees()) {
    const auto& nodes = tree.nodes();
    // Depth of each node; the array is pre-order so parents come first.
    std::vector<int> depth(nodes.size(), 0);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& node = nodes[i];
      if (node.is_leaf()) continue;
      depth[static_cast<std::size_t>(node.left)] = depth[i] + 1;
      depth[static_cast<std::size_t>(node.right)] = depth[i] + 1;
      if (depth[i] % 2 != 0) continue;
      for (const auto child : {node.left, node.right}) {
        const auto& c = nodes[static_cast<std::size_t>(child)];
        if (c.is_leaf() || c.feature == node.feature) continue;
        const auto a = static_cast<std::size_t>(std::min(node.feature, c.feature));
        const auto b = static_cast<std::size_t>(std::max(node.feature, c.feature));
        ++counts[{a, b}];
        ++total;
      }
    }
  }
  std::vector<FeaturePairFrequency> out;
  for (const auto& [pair, count] : counts) {
    out.push_back({pair.first, pair.second, count,
                   static_cast<double>(count) / static_cast<double>(total)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.count > b.count; });
  if (out.size() > limit) out.resize(limit);
  return out;
}

}  // namespace lrf
