#include "lrf/dataset.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>

#include "csv.hpp"
#include "lrf/random.hpp"

namespace lrf {

LabeledDataset::LabeledDataset(std::vector<std::vector<double>> columns,
                               std::vector<std::string> feature_names, std::vector<Label> labels)
    : columns_(std::move(columns)), names_(std::move(feature_names)), labels_(std::move(labels)) {
  if (labels_.empty()) throw std::invalid_argument("empty dataset");
  if (columns_.empty()) throw std::invalid_argument("dataset has no features");
  if (names_.size() != columns_.size()) {
    throw std::invalid_argument(fmt::format("{} feature names for {} feature columns", names_.size(),
                                            columns_.size()));
  }
  std::set<std::string> seen;
  for (std::size_t f = 0; f < columns_.size(); ++f) {
    if (!seen.insert(names_[f]).second) {
      throw std::invalid_argument(fmt::format("duplicate feature name '{}'", names_[f]));
    }
    if (columns_[f].size() != labels_.size()) {
      throw std::invalid_argument(fmt::format("feature '{}' has {} rows but there are {} labels",
                                              names_[f], columns_[f].size(), labels_.size()));
    }
    for (std::size_t r = 0; r < labels_.size(); ++r) {
      if (!std::isfinite(columns_[f][r])) {
        throw std::invalid_argument(
            fmt::format("non-finite value in feature '{}' at row {}", names_[f], r));
      }
    }
  }
}

std::vector<double> LabeledDataset::row(std::size_t r) const {
  std::vector<double> out(columns_.size());
  for (std::size_t f = 0; f < columns_.size(); ++f) out[f] = columns_[f][r];
  return out;
}

std::size_t LabeledDataset::feature_index(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw std::out_of_range(fmt::format("unknown feature '{}'", name));
  return static_cast<std::size_t>(it - names_.begin());
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
  std::vector<std::vector<double>> cols(columns_.size(), std::vector<double>(rows.size()));
  std::vector<Label> labels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    if (r >= n_rows()) throw std::out_of_range(fmt::format("row {} out of range", r));
    for (std::size_t f = 0; f < columns_.size(); ++f) cols[f][i] = columns_[f][r];
    labels[i] = labels_[r];
  }
  return {std::move(cols), names_, std::move(labels)};
}

LabeledDataset LabeledDataset::select_features(std::span<const std::size_t> features) const {
  std::vector<std::vector<double>> cols;
  std::vector<std::string> names;
  for (const std::size_t f : features) {
    if (f >= n_features()) throw std::out_of_range(fmt::format("feature {} out of range", f));
    cols.push_back(columns_[f]);
    names.push_back(names_[f]);
  }
  return {std::move(cols), std::move(names), labels_};
}

LabeledDataset LabeledDataset::with_labels(std::vector<Label> labels) const {
  return {columns_, names_, std::move(labels)};
}

LabeledDataset load_feature_csv(const std::filesystem::path& path, const std::string& label_column,
                                const LabelTokens& tokens) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path.string()));

  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(fmt::format("'{}': missing header row", path.string()));
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header;
  for (const auto field : detail::split_fields(line)) header.emplace_back(field);

  // An empty label column name means the file carries features only.
  const bool unlabeled = label_column.empty();
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (!unlabeled && label_it == header.end()) {
    throw std::runtime_error(
        fmt::format("'{}': missing label column '{}'", path.string(), label_column));
  }
  const std::size_t label_pos =
      unlabeled ? header.size() : static_cast<std::size_t>(label_it - header.begin());

  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_pos) names.push_back(header[c]);
  }
  std::vector<std::vector<double>> columns(names.size());
  std::vector<std::string> raw_labels;
  std::set<std::string> distinct;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error(fmt::format("'{}' line {}: expected {} fields, found {}",
                                           path.string(), line_no, header.size(), fields.size()));
    }
    std::size_t f = 0;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c == label_pos) continue;
      const auto value = detail::parse_double(fields[c]);
      if (!value) {
        throw std::runtime_error(fmt::format("'{}' line {}: non-numeric value '{}' in column '{}'",
                                             path.string(), line_no, fields[c], header[c]));
      }
      if (!std::isfinite(*value)) {
        throw std::runtime_error(fmt::format("'{}' line {}: non-finite value in column '{}'",
                                             path.string(), line_no, header[c]));
      }
      columns[f++].push_back(*value);
    }
    raw_labels.emplace_back(unlabeled ? tokens.neg : std::string(fields[label_pos]));
    distinct.insert(raw_labels.back());
  }

  if (raw_labels.empty()) throw std::runtime_error(fmt::format("'{}': empty dataset", path.string()));
  if (distinct.size() > 2) {
    throw std::runtime_error(
        fmt::format("'{}': label cardinality {} (binary labels required)", path.string(),
                    distinct.size()));
  }
  std::vector<Label> labels;
  labels.reserve(raw_labels.size());
  for (const auto& token : raw_labels) {
    if (token == tokens.pos) {
      labels.push_back(Label::Pos);
    } else if (token == tokens.neg) {
      labels.push_back(Label::Neg);
    } else {
      throw std::runtime_error(fmt::format("'{}': label token '{}' is neither '{}' nor '{}'",
                                           path.string(), token, tokens.pos, tokens.neg));
    }
  }
  return {std::move(columns), std::move(names), std::move(labels)};
}

void write_feature_csv(const LabeledDataset& data, std::ostream& out,
                       const std::string& label_column, const LabelTokens& tokens) {
  for (const auto& name : data.feature_names()) out << name << ',';
  out << label_column << '\n';
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    for (std::size_t f = 0; f < data.n_features(); ++f) out << fmt::format("{},", data.value(r, f));
    out << (data.label(r) == Label::Pos ? tokens.pos : tokens.neg) << '\n';
  }
}

std::vector<double> quantile_cut_points(std::span<const double> sorted, std::size_t buckets) {
  std::vector<double> cuts;
  const std::size_t n = sorted.size();
  if (n == 0 || buckets < 2) return cuts;
  cuts.reserve(buckets - 1);
  for (std::size_t j = 1; j < buckets; ++j) {
    const double h = static_cast<double>(n - 1) * static_cast<double>(j) / static_cast<double>(buckets);
    const std::size_t lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    double q = sorted[lo];
    if (lo + 1 < n && frac > 0.0) q = sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
    // A cut at the minimum would send every row right.
    if (q > sorted.front() && (cuts.empty() || q > cuts.back())) cuts.push_back(q);
  }
  return cuts;
}

QuantileThresholds quantile_thresholds(const LabeledDataset& data, std::size_t feature_index,
                                       std::size_t buckets) {
  if (feature_index >= data.n_features()) {
    throw std::out_of_range(fmt::format("feature {} out of range", feature_index));
  }
  if (buckets < 2 || buckets > data.n_rows()) {
    throw std::invalid_argument(
        fmt::format("bucket count {} outside [2, {}]", buckets, data.n_rows()));
  }
  const auto col = data.column(feature_index);
  std::vector<double> sorted(col.begin(), col.end());
  std::sort(sorted.begin(), sorted.end());
  return {feature_index, quantile_cut_points(sorted, buckets)};
}

std::vector<std::size_t> FoldPlan::test_rows(std::size_t fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> FoldPlan::train_rows(std::size_t fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) rows.push_back(i);
  }
  return rows;
}

FoldPlan make_folds(std::size_t n, std::size_t n_folds, std::uint64_t seed) {
  if (n_folds < 2 || n_folds > n) {
    throw std::invalid_argument(fmt::format("fold count {} outside [2, {}]", n_folds, n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  FoldPlan plan{n_folds, std::vector<std::size_t>(n)};
  for (std::size_t i = 0; i < n; ++i) plan.assignments[order[i]] = i % n_folds;
  return plan;
}

std::pair<LabeledDataset, LabeledDataset> holdout_split(const LabeledDataset& data,
                                                        double train_fraction, std::uint64_t seed,
                                                        bool chronological) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument(fmt::format("train fraction {} outside (0, 1)", train_fraction));
  }
  const std::size_t n = data.n_rows();
  const auto n_train =
      static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n) - 1e-9));
  if (n_train == 0 || n_train >= n) {
    throw std::invalid_argument(
        fmt::format("train fraction {} leaves an empty part of {} rows", train_fraction, n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (!chronological) {
    Rng rng(seed);
    rng.shuffle(order);
    std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::sort(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  }
  const std::span<const std::size_t> all(order);
  return {data.subset(all.first(n_train)), data.subset(all.subspan(n_train))};
}

}  // namespace lrf
