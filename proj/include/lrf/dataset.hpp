#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lrf {

enum class Label : std::uint8_t { Neg = 0, Pos = 1 };

inline Label flip(Label y) { return y == Label::Pos ? Label::Neg : Label::Pos; }

/// N x k matrix of finite feature values with named columns and one binary
/// label per row. Stored column-major. Immutable once constructed.
class LabeledDataset {
 public:
  /// Validates the invariants (N >= 1, k >= 1, rectangular, finite values,
  /// unique names) and throws std::invalid_argument on violation.
  LabeledDataset(std::vector<std::vector<double>> columns, std::vector<std::string> feature_names,
                 std::vector<Label> labels);

  std::size_t n_rows() const { return labels_.size(); }
  std::size_t n_features() const { return columns_.size(); }

  double value(std::size_t row, std::size_t feature) const { return columns_[feature][row]; }
  std::span<const double> column(std::size_t feature) const { return columns_[feature]; }
  std::vector<double> row(std::size_t row) const;

  Label label(std::size_t row) const { return labels_[row]; }
  std::span<const Label> labels() const { return labels_; }
  const std::vector<std::string>& feature_names() const { return names_; }

  /// Index of the feature called `name`; throws std::out_of_range if absent.
  std::size_t feature_index(const std::string& name) const;

  /// Rows in the given order (repeats allowed).
  LabeledDataset subset(std::span<const std::size_t> rows) const;
  /// Same rows restricted to the given feature columns.
  LabeledDataset select_features(std::span<const std::size_t> features) const;
  LabeledDataset with_labels(std::vector<Label> labels) const;

 private:
  std::vector<std::vector<double>> columns_;
  std::vector<std::string> names_;
  std::vector<Label> labels_;
};

struct LabelTokens {
  std::string pos = "1";
  std::string neg = "0";
};

/// Reads a comma-separated file with a header row. Every column other than
/// `label_column` becomes a feature, in header order. An empty
/// `label_column` reads a features-only file with every label Neg.
LabeledDataset load_feature_csv(const std::filesystem::path& path, const std::string& label_column,
                                const LabelTokens& tokens = {});

/// Writes the dataset in the format read by load_feature_csv, with the label
/// as the last column.
void write_feature_csv(const LabeledDataset& data, std::ostream& out,
                       const std::string& label_column = "y", const LabelTokens& tokens = {});

struct QuantileThresholds {
  std::size_t feature_index = 0;
  std::vector<double> thresholds;  // strictly increasing, all above the minimum
};

/// Distinct interpolated sample quantiles at q = j/B, j = 1..B-1, of an
/// ascending-sorted sample. Linear interpolation between closest ranks,
/// i.e. position h = (n-1)q.
std::vector<double> quantile_cut_points(std::span<const double> sorted_values, std::size_t buckets);

/// quantile_cut_points over one column; requires 2 <= B <= N.
QuantileThresholds quantile_thresholds(const LabeledDataset& data, std::size_t feature_index,
                                       std::size_t buckets);

struct FoldPlan {
  std::size_t n_folds = 0;
  std::vector<std::size_t> assignments;  // fold id per sample

  std::vector<std::size_t> test_rows(std::size_t fold) const;
  std::vector<std::size_t> train_rows(std::size_t fold) const;
};

/// Seeded random permutation dealt round-robin into n_folds near-equal folds.
FoldPlan make_folds(std::size_t n, std::size_t n_folds, std::uint64_t seed);

/// First ceil(f*N) rows vs the rest when chronological, otherwise a seeded
/// random split of the same sizes (row order within each part preserved).
std::pair<LabeledDataset, LabeledDataset> holdout_split(const LabeledDataset& data,
                                                        double train_fraction, std::uint64_t seed,
                                                        bool chronological);

}  // namespace lrf
