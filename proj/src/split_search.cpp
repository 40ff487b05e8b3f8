#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lrf/tree.hpp"

namespace lrf {
namespace {

// Strict improvement with a relative tolerance, so near-equal scores fall
// back to the documented lexicographic order.
bool improves(double candidate, double best) {
  return candidate < best - 1e-12 * std::max(1.0, std::abs(best));
}

std::size_t bin_of(const std::vector<double>& thresholds, double v) {
  return static_cast<std::size_t>(std::upper_bound(thresholds.begin(), thresholds.end(), v) -
                                  thresholds.begin());
}

ClassCounts count_rows(const LabeledDataset& data, std::span<const std::size_t> rows) {
  ClassCounts c;
  for (const std::size_t r : rows) c.add(data.label(r));
  return c;
}

// Candidate features sorted by feature index.
std::vector<const QuantileThresholds*> ordered(std::span<const QuantileThresholds> candidates,
                                               std::size_t n_features) {
  std::vector<const QuantileThresholds*> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) {
    if (c.feature_index >= n_features) {
      throw std::out_of_range(fmt::format("candidate feature {} out of range", c.feature_index));
    }
    out.push_back(&c);
  }
  std::sort(out.begin(), out.end(),
            [](const auto* a, const auto* b) { return a->feature_index < b->feature_index; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i]->feature_index == out[i - 1]->feature_index) {
      throw std::invalid_argument(
          fmt::format("feature {} listed twice among candidates", out[i]->feature_index));
    }
  }
  return out;
}

struct SideChoice {
  double impurity = 0.0;  // n0 G0 + n1 G1, or n G when unsplit
  std::optional<SplitSpec> split;
};

// Per-feature bucket histograms of one side of a root split. Bucket b of
// feature g holds the rows whose value lies in [t_{b-1}, t_b).
class BucketHistogram {
 public:
  BucketHistogram(const std::vector<const QuantileThresholds*>& features)
      : features_(features), offsets_(features.size() + 1, 0) {
    for (std::size_t g = 0; g < features.size(); ++g) {
      offsets_[g + 1] = offsets_[g] + features[g]->thresholds.size() + 1;
    }
    cells_.assign(offsets_.back(), ClassCounts{});
  }

  void clear() {
    std::fill(cells_.begin(), cells_.end(), ClassCounts{});
    total_ = {};
  }

  void add(const std::uint32_t* bins, Label y, std::int64_t sign) {
    for (std::size_t g = 0; g < features_.size(); ++g) {
      cells_[offsets_[g] + bins[g]].add(y, sign);
    }
    total_.add(y, sign);
  }

  const ClassCounts& total() const { return total_; }

  SideChoice best_split(int min_leaf) const {
    SideChoice choice{node_impurity(total_), std::nullopt};
    if (total_.pure() || total_.total() < 2 * static_cast<std::int64_t>(min_leaf)) return choice;
    double best = 0.0;
    for (std::size_t g = 0; g < features_.size(); ++g) {
      const auto& thresholds = features_[g]->thresholds;
      ClassCounts left;
      for (std::size_t b = 0; b < thresholds.size(); ++b) {
        left += cells_[offsets_[g] + b];
        if (left.total() < min_leaf) continue;
        const ClassCounts right = total_ - left;
        if (right.total() < min_leaf) break;
        const double value = node_impurity(left) + node_impurity(right);
        if (!choice.split || improves(value, best)) {
          best = value;
          choice.split = SplitSpec{features_[g]->feature_index, thresholds[b]};
        }
      }
    }
    if (choice.split) choice.impurity = best;
    return choice;
  }

 private:
  const std::vector<const QuantileThresholds*>& features_;
  std::vector<std::size_t> offsets_;
  std::vector<ClassCounts> cells_;
  ClassCounts total_;
};

}  // namespace

std::optional<ScoredSplit> greedy_best_split(const LabeledDataset& data,
                                             std::span<const std::size_t> rows,
                                             std::span<const QuantileThresholds> candidates,
                                             int min_samples_leaf) {
  const auto features = ordered(candidates, data.n_features());
  const ClassCounts total = count_rows(data, rows);
  if (total.pure() || total.total() < 2 * static_cast<std::int64_t>(min_samples_leaf)) {
    return std::nullopt;
  }

  std::optional<ScoredSplit> best;
  double best_value = 0.0;
  std::vector<ClassCounts> hist;
  for (const auto* feature : features) {
    const auto& thresholds = feature->thresholds;
    if (thresholds.empty()) continue;
    hist.assign(thresholds.size() + 1, ClassCounts{});
    const auto column = data.column(feature->feature_index);
    for (const std::size_t r : rows) hist[bin_of(thresholds, column[r])].add(data.label(r));

    ClassCounts left;
    for (std::size_t b = 0; b < thresholds.size(); ++b) {
      left += hist[b];
      if (left.total() < min_samples_leaf) continue;
      const ClassCounts right = total - left;
      if (right.total() < min_samples_leaf) break;
      const double value = node_impurity(left) + node_impurity(right);
      if (!best || improves(value, best_value)) {
        best_value = value;
        best = ScoredSplit{{feature->feature_index, thresholds[b]}, weighted_gini(left, right)};
      }
    }
  }
  return best;
}

std::optional<LookaheadBlock> lookahead_best_block(const LabeledDataset& data,
                                                   std::span<const std::size_t> rows,
                                                   std::span<const QuantileThresholds> candidates,
                                                   int min_samples_leaf) {
  const auto features = ordered(candidates, data.n_features());
  const ClassCounts total = count_rows(data, rows);
  if (total.pure() || total.total() < 2 * static_cast<std::int64_t>(min_samples_leaf) ||
      features.empty()) {
    return std::nullopt;
  }

  const std::size_t n = rows.size();
  const std::size_t k = features.size();
  std::vector<std::uint32_t> bins(n * k);
  std::vector<Label> labels(n);
  for (std::size_t g = 0; g < k; ++g) {
    const auto column = data.column(features[g]->feature_index);
    for (std::size_t i = 0; i < n; ++i) {
      bins[i * k + g] = static_cast<std::uint32_t>(bin_of(features[g]->thresholds, column[rows[i]]));
    }
  }
  for (std::size_t i = 0; i < n; ++i) labels[i] = data.label(rows[i]);

  BucketHistogram full(features);
  for (std::size_t i = 0; i < n; ++i) full.add(&bins[i * k], labels[i], +1);

  std::optional<LookaheadBlock> best;
  BucketHistogram left(features);
  std::vector<std::size_t> order(n);
  std::vector<std::size_t> bucket_start;

  for (std::size_t g = 0; g < k; ++g) {
    const auto& thresholds = features[g]->thresholds;
    const std::size_t m = thresholds.size();
    if (m == 0) continue;

    // Counting sort of rows by their bucket on the root feature.
    bucket_start.assign(m + 2, 0);
    for (std::size_t i = 0; i < n; ++i) ++bucket_start[bins[i * k + g] + 1];
    std::partial_sum(bucket_start.begin(), bucket_start.end(), bucket_start.begin());
    {
      auto cursor = bucket_start;
      for (std::size_t i = 0; i < n; ++i) order[cursor[bins[i * k + g]]++] = i;
    }

    left.clear();
    BucketHistogram right = full;
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t p = bucket_start[j]; p < bucket_start[j + 1]; ++p) {
        const std::size_t i = order[p];
        left.add(&bins[i * k], labels[i], +1);
        right.add(&bins[i * k], labels[i], -1);
      }
      if (left.total().total() < min_samples_leaf) continue;
      if (right.total().total() < min_samples_leaf) break;

      const SideChoice l = left.best_split(min_samples_leaf);
      const SideChoice r = right.best_split(min_samples_leaf);
      const double value = l.impurity + r.impurity;
      if (!best || improves(value, best->cumulative_gini)) {
        best = LookaheadBlock{{features[g]->feature_index, thresholds[j]}, l.split, r.split, value};
      }
    }
  }
  return best;
}

std::vector<QuantileThresholds> node_thresholds(const LabeledDataset& data,
                                                std::span<const std::size_t> rows,
                                                std::span<const std::size_t> features,
                                                int buckets) {
  std::vector<QuantileThresholds> out;
  out.reserve(features.size());
  const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(buckets), rows.size());
  std::vector<double> values(rows.size());
  for (const std::size_t f : features) {
    const auto column = data.column(f);
    for (std::size_t i = 0; i < rows.size(); ++i) values[i] = column[rows[i]];
    std::sort(values.begin(), values.end());
    out.push_back({f, quantile_cut_points(values, b)});
  }
  return out;
}

std::optional<ScoredSplit> greedy_presorted_split(const LabeledDataset& data,
                                                  std::span<const std::size_t> rows,
                                                  const std::vector<std::vector<std::uint32_t>>& sorted,
                                                  std::span<const std::size_t> features, int buckets,
                                                  int min_samples_leaf) {
  if (features.empty()) return std::nullopt;
  ClassCounts total;
  for (const std::uint32_t s : sorted[features[0]]) total.add(data.label(rows[s]));
  if (total.pure() || total.total() < 2 * static_cast<std::int64_t>(min_samples_leaf)) {
    return std::nullopt;
  }
  std::vector<std::size_t> sorted_features(features.begin(), features.end());
  std::sort(sorted_features.begin(), sorted_features.end());

  const auto n = static_cast<std::size_t>(total.total());
  const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(buckets), n);
  std::vector<double> values(n);
  std::optional<ScoredSplit> best;
  double best_value = 0.0;
  for (const std::size_t f : sorted_features) {
    const auto column = data.column(f);
    const auto& order = sorted[f];
    for (std::size_t i = 0; i < n; ++i) values[i] = column[rows[order[i]]];
    const auto thresholds = quantile_cut_points(values, b);

    ClassCounts left;
    std::size_t p = 0;
    for (const double t : thresholds) {
      while (p < n && values[p] < t) left.add(data.label(rows[order[p++]]));
      if (left.total() < min_samples_leaf) continue;
      const ClassCounts right = total - left;
      if (right.total() < min_samples_leaf) break;
      const double value = node_impurity(left) + node_impurity(right);
      if (!best || improves(value, best_value)) {
        best_value = value;
        best = ScoredSplit{{f, t}, weighted_gini(left, right)};
      }
    }
  }
  return best;
}

std::optional<ScoredSplit> greedy_node_split(const LabeledDataset& data,
                                             std::span<const std::size_t> rows,
                                             std::span<const std::size_t> features, int buckets,
                                             int min_samples_leaf) {
  std::vector<std::vector<std::uint32_t>> sorted(data.n_features());
  for (const std::size_t f : features) {
    const auto column = data.column(f);
    auto& order = sorted[f];
    order.resize(rows.size());
    std::iota(order.begin(), order.end(), std::uint32_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return column[rows[a]] < column[rows[b]]; });
  }
  return greedy_presorted_split(data, rows, sorted, features, buckets, min_samples_leaf);
}

}  // namespace lrf
