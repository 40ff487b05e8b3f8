#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lrf/finance.hpp"
#include "lrf/forest.hpp"
#include "lrf/tuning.hpp"

namespace lrf {

enum class Position : std::int8_t { Short = -1, Flat = 0, Long = 1 };

std::string to_string(Position p);

/// Long iff p >= 0.5 + theta, short iff p <= 0.5 - theta, flat otherwise.
Position signal_to_position(double p_plus, double theta);

/// Lengths in dataset rows (trading days).
struct WindowPlan {
  std::size_t is_len = 1000;
  std::size_t cv_len = 250;
  std::size_t os_len = 75;
  std::size_t step = 75;

  void validate() const;
};

/// Half-open row ranges [is_begin, cv_begin), [cv_begin, os_begin),
/// [os_begin, os_end).
struct Window {
  std::size_t is_begin = 0;
  std::size_t cv_begin = 0;
  std::size_t os_begin = 0;
  std::size_t os_end = 0;
};

/// Windows stepping by plan.step until the rows run out; the last
/// out-of-sample segment may be shorter than os_len. Throws when not even
/// one out-of-sample row fits.
std::vector<Window> plan_windows(std::size_t n_rows, const WindowPlan& plan);

struct EquityPoint {
  Date date;  // day on which the return is realized
  Position position = Position::Flat;
  double daily_return = 0.0;
  double equity = 1.0;
};

struct EquityCurve {
  std::vector<EquityPoint> points;

  std::vector<double> returns() const;
  std::vector<double> equity() const;
};

/// Compounds `returns` from a starting equity of 1.
EquityCurve make_curve(std::span<const Date> dates, std::span<const Position> positions,
                       std::span<const double> returns);

/// sqrt(252) mean / sample std. Empty when fewer than two observations or
/// the returns have zero variance.
std::optional<double> sharpe(std::span<const double> daily_returns);

/// Largest relative decline from a running peak, in [0, 1].
double max_drawdown(std::span<const double> equity);

/// (final / initial)^(days_per_year / n_days) - 1 where n_days is the number
/// of daily returns, i.e. equity.size() - 1.
double cagr(std::span<const double> equity, double days_per_year = 252.0);

/// Fraction of positioned days with a strictly positive strategy return.
double success_rate(const EquityCurve& curve);

struct PerfReport {
  double cagr = 0.0;
  std::optional<double> sharpe;
  std::optional<double> success_rate;
  double mdd = 0.0;
  double frac_long = 0.0;
  double frac_short = 0.0;
  double final_equity = 1.0;
  std::size_t n_days = 0;
};

/// Metrics of a curve whose equity starts at 1 before its first day.
PerfReport evaluate(const EquityCurve& curve);
nlohmann::json to_json(const PerfReport& report);

/// Bars, their indicator rows, and the realized next-day return per row.
struct MarketData {
  std::vector<OhlcvBar> bars;
  IndicatorFrame frame;
  std::vector<double> next_return;  // close_{t+1} / close_t - 1 for the row's bar t

  explicit MarketData(std::vector<OhlcvBar> bars,
                      const std::vector<std::string>& feature_subset = {});
  Date return_date(std::size_t row) const { return bars[frame.bar_index[row] + 1].date; }
};

struct WalkForwardConfig {
  WindowPlan plan;
  ParamGrid grid;  // forest candidates and theta values
  InductionMode mode = InductionMode::Lookahead;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct WindowOutcome {
  Window window;
  ForestParams chosen;
  double theta = 0.0;
  std::optional<double> cv_sharpe;
  std::vector<Position> positions;  // one per out-of-sample row
  std::vector<double> p_plus;
};

/// One walk-forward step: fit every grid candidate on the in-sample rows,
/// pick (candidate, theta) by the Sharpe of the simulated CV segment
/// (undefined Sharpe ranks last; ties go to the simpler candidate, then the
/// smaller theta), refit the winner on in-sample plus CV rows and emit
/// out-of-sample positions. Only rows before os_begin are used for fitting.
WindowOutcome run_window(const MarketData& market, const Window& window,
                         const WalkForwardConfig& config, std::size_t window_index);

struct WalkForwardResult {
  std::vector<WindowOutcome> windows;
  EquityCurve curve;
};

WalkForwardResult run_walkforward(const MarketData& market, const WalkForwardConfig& config);

/// Always long over the same out-of-sample days.
EquityCurve buy_and_hold(const MarketData& market, std::span<const Window> windows);

/// Leakage check for window `window_index`. Let t be the bar behind
/// out-of-sample row os_begin + os_offset. Every bar dated after t is
/// rescaled at random and the window is recomputed; the chosen model and
/// every position and P+ up to that row must be unchanged, since they may
/// only depend on bars up to t. Offset 0 catches training on out-of-sample
/// labels; larger offsets also cover later rows.
bool lookahead_audit(const std::vector<OhlcvBar>& bars,
                     const std::vector<std::string>& feature_subset,
                     const WalkForwardConfig& config, std::size_t window_index,
                     std::uint64_t perturb_seed, std::size_t os_offset = 0);

void write_equity_csv(const EquityCurve& curve, std::ostream& out);

struct HeatmapGrid {
  std::size_t feature_x = 0;
  std::size_t feature_y = 0;
  std::size_t resolution = 0;
  std::vector<double> x;  // cell centres
  std::vector<double> y;
  std::vector<double> p_plus;  // row-major, index iy * resolution + ix
};

/// Forest P+ over a uniform grid of cell centres spanning the training range
/// of two features; the other features are pinned to `fixed_values`
/// (indexed by feature, entries for x and y ignored) or to their training
/// medians.
HeatmapGrid heatmap_grid(const Forest& forest, std::size_t feature_x, std::size_t feature_y,
                         std::size_t resolution, std::span<const double> fixed_values = {});

void write_heatmap_csv(const HeatmapGrid& grid, std::ostream& out);

}  // namespace lrf
