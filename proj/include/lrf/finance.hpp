#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lrf/dataset.hpp"

namespace lrf {

using Date = std::chrono::year_month_day;

/// Parses YYYY-MM-DD; throws std::invalid_argument.
Date parse_date(const std::string& text);
std::string format_date(Date date);

struct OhlcvBar {
  Date date;
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
  double volume = 0.0;
};

/// Positive prices, non-negative volume and low <= open, close <= high.
/// Throws std::invalid_argument naming the date.
void validate_bar(const OhlcvBar& bar);

/// Reads date,open,high,low,close,volume (header required, column order
/// free). Returns validated bars sorted by date; duplicate dates are an
/// error.
std::vector<OhlcvBar> load_ohlcv(const std::filesystem::path& path);
void write_ohlcv_csv(std::span<const OhlcvBar> bars, std::ostream& out);

// Indicator series are aligned with their input; entries without enough
// trailing history are NaN.

/// Cutler's RSI: 100 - 100 / (1 + mean gain / mean loss) over the last n
/// close-to-close moves. All gains -> 100, all losses -> 0, no moves -> 50.
std::vector<double> rsi(std::span<const double> closes, std::size_t n);

/// (v_t - mean) / sample std over the n volumes ending at t; 0 when the
/// window is constant.
std::vector<double> volume_zscore(std::span<const double> volumes, std::size_t n);

/// Pearson correlation of sign(r_s) with sign(r_{s-1}) over the n most
/// recent return pairs ending at t; 0 when either side has zero variance.
std::vector<double> sign_correlation(std::span<const double> closes, std::size_t n);

/// open_t / close_{t-1} - 1.
std::vector<double> overnight_gap(std::span<const OhlcvBar> bars);

/// ((close - low) - (high - close)) / (high - low); 0 for a zero range.
double clv(const OhlcvBar& bar);

/// Feature names in column order.
const std::vector<std::string>& indicator_names();

/// First bar index at which every indicator is defined.
inline constexpr std::size_t kIndicatorWarmup = 21;

struct IndicatorFrame {
  LabeledDataset dataset;
  std::vector<std::size_t> bar_index;  // bar behind each row
};

/// One row per bar t from the warm-up to the second-to-last bar: the eight
/// indicators at t, labelled Pos iff close_{t+1} > close_t.
IndicatorFrame build_indicator_frame(std::span<const OhlcvBar> bars);
LabeledDataset build_dataset(std::span<const OhlcvBar> bars);

/// One-sided exact binomial tail P[X >= correct], X ~ Bin(total, baseline_p).
double binomial_test(std::size_t correct, std::size_t total, double baseline_p);

/// Share of the more frequent class; a tie reports Neg at 0.5.
std::pair<double, Label> majority_baseline(std::span<const Label> labels);

}  // namespace lrf
