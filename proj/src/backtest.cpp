#include "lrf/backtest.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "lrf/random.hpp"

namespace lrf {

std::string to_string(Position p) {
  switch (p) {
    case Position::Long: return "LONG";
    case Position::Short: return "SHORT";
    case Position::Flat: return "FLAT";
  }
  return "?";
}

Position signal_to_position(double p_plus, double theta) {
  if (!(p_plus >= 0.0 && p_plus <= 1.0)) {
    throw std::invalid_argument(fmt::format("signal {} outside [0, 1]", p_plus));
  }
  if (!(theta >= 0.0 && theta < 0.5)) throw std::invalid_argument(fmt::format("theta {} outside [0, 0.5)", theta));
  if (p_plus >= 0.5 + theta) return Position::Long;
  if (p_plus <= 0.5 - theta) return Position::Short;
  return Position::Flat;
}

void WindowPlan::validate() const {
  if (is_len == 0 || cv_len == 0 || os_len == 0 || step == 0) {
    throw std::invalid_argument("window lengths and step must be positive");
  }
}

std::vector<Window> plan_windows(std::size_t n_rows, const WindowPlan& plan) {
  plan.validate();
  const std::size_t train = plan.is_len + plan.cv_len;
  if (n_rows <= train) {
    throw std::invalid_argument(fmt::format(
        "insufficient history: {} rows, one window needs more than {}", n_rows, train));
  }
  std::vector<Window> windows;
  for (std::size_t start = 0; start + train < n_rows; start += plan.step) {
    Window w;
    w.is_begin = start;
    w.cv_begin = start + plan.is_len;
    w.os_begin = start + train;
    w.os_end = std::min(w.os_begin + plan.os_len, n_rows);
    windows.push_back(w);
  }
  return windows;
}

std::vector<double> EquityCurve::returns() const {
  std::vector<double> out;
  for (const auto& p : points) out.push_back(p.daily_return);
  return out;
}

std::vector<double> EquityCurve::equity() const {
  std::vector<double> out{1.0};
  for (const auto& p : points) out.push_back(p.equity);
  return out;
}

EquityCurve make_curve(std::span<const Date> dates, std::span<const Position> positions,
                       std::span<const double> returns) {
  if (dates.size() != positions.size() || dates.size() != returns.size()) {
    throw std::invalid_argument("curve inputs differ in length");
  }
  EquityCurve curve;
  double equity = 1.0;
  for (std::size_t i = 0; i < dates.size(); ++i) {
    equity *= 1.0 + returns[i];
    if (!(equity > 0.0)) throw std::invalid_argument("equity is no longer positive");
    curve.points.push_back({dates[i], positions[i], returns[i], equity});
  }
  return curve;
}

std::optional<double> sharpe(std::span<const double> r) {
  if (r.size() < 2) return std::nullopt;
  const double n = static_cast<double>(r.size());
  const double mean = std::accumulate(r.begin(), r.end(), 0.0) / n;
  double ss = 0.0;
  for (const double x : r) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 1e-15)) return std::nullopt;
  return std::sqrt(252.0) * mean / sd;
}

double max_drawdown(std::span<const double> equity) {
  double peak = 0.0, worst = 0.0;
  for (const double e : equity) {
    if (!(e > 0.0)) throw std::invalid_argument("equity must be positive");
    peak = std::max(peak, e);
    worst = std::max(worst, 1.0 - e / peak);
  }
  return worst;
}

double cagr(std::span<const double> equity, double days_per_year) {
  if (equity.empty()) throw std::invalid_argument("CAGR of an empty equity curve");
  if (!(equity.front() > 0.0) || !(equity.back() > 0.0)) {
    throw std::invalid_argument("CAGR needs positive equity");
  }
  const std::size_t days = equity.size() - 1;
  if (days == 0) return 0.0;
  return std::pow(equity.back() / equity.front(), days_per_year / static_cast<double>(days)) - 1.0;
}

double success_rate(const EquityCurve& curve) {
  std::size_t positioned = 0, wins = 0;
  for (const auto& p : curve.points) {
    if (p.position == Position::Flat) continue;
    ++positioned;
    if (p.daily_return > 0.0) ++wins;
  }
  if (positioned == 0) throw std::invalid_argument("success rate undefined without positioned days");
  return static_cast<double>(wins) / static_cast<double>(positioned);
}

PerfReport evaluate(const EquityCurve& curve) {
  PerfReport report;
  const auto equity = curve.equity();
  const auto returns = curve.returns();
  report.n_days = curve.points.size();
  report.cagr = cagr(equity);
  report.sharpe = sharpe(returns);
  report.mdd = max_drawdown(equity);
  report.final_equity = equity.back();
  std::size_t longs = 0, shorts = 0;
  for (const auto& p : curve.points) {
    longs += p.position == Position::Long;
    shorts += p.position == Position::Short;
  }
  if (longs + shorts > 0) report.success_rate = success_rate(curve);
  if (report.n_days > 0) {
    report.frac_long = static_cast<double>(longs) / static_cast<double>(report.n_days);
    report.frac_short = static_cast<double>(shorts) / static_cast<double>(report.n_days);
  }
  return report;
}

nlohmann::json to_json(const PerfReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"cagr", r.cagr},
          {"sharpe", opt(r.sharpe)},
          {"success_rate", opt(r.success_rate)},
          {"mdd", r.mdd},
          {"frac_long", r.frac_long},
          {"frac_short", r.frac_short},
          {"final_equity", r.final_equity},
          {"n_days", r.n_days}};
}

namespace {

IndicatorFrame restrict_frame(IndicatorFrame frame, const std::vector<std::string>& features) {
  if (features.empty()) return frame;
  std::vector<std::size_t> idx;
  for (const auto& name : features) idx.push_back(frame.dataset.feature_index(name));
  return {frame.dataset.select_features(idx), std::move(frame.bar_index)};
}

std::vector<std::size_t> iota_rows(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> rows(end - begin);
  std::iota(rows.begin(), rows.end(), begin);
  return rows;
}

struct Choice {
  std::size_t candidate = 0;
  std::size_t theta_index = 0;
  std::optional<double> score;
};

}  // namespace

MarketData::MarketData(std::vector<OhlcvBar> input, const std::vector<std::string>& feature_subset)
    : bars(std::move(input)), frame(restrict_frame(build_indicator_frame(bars), feature_subset)) {
  next_return.reserve(frame.bar_index.size());
  for (const std::size_t t : frame.bar_index) next_return.push_back(bars[t + 1].close / bars[t].close - 1.0);
}

WindowOutcome run_window(const MarketData& market, const Window& window,
                         const WalkForwardConfig& config, std::size_t window_index) {
  const auto& data = market.frame.dataset;
  if (window.os_end > data.n_rows() || window.os_begin >= window.os_end) {
    throw std::invalid_argument("window outside the available rows");
  }
  const auto is_data = data.subset(iota_rows(window.is_begin, window.cv_begin));
  const auto cv_rows = iota_rows(window.cv_begin, window.os_begin);
  const auto cv_data = data.subset(cv_rows);
  const auto candidates = config.grid.candidates(config.mode, derive_seed(config.seed, window_index, 0));
  const auto& thetas = config.grid.theta;

  std::optional<Choice> best;
  auto better = [&](const Choice& c, const Choice& b) {
    if (c.score && !b.score) return true;
    if (!c.score && b.score) return false;
    if (c.score && b.score) {
      const double tol = 1e-12 * std::max(1.0, std::abs(*b.score));
      if (*c.score > *b.score + tol) return true;
      if (*c.score < *b.score - tol) return false;
    }
    if (simpler_than(candidates[c.candidate], candidates[b.candidate])) return true;
    if (simpler_than(candidates[b.candidate], candidates[c.candidate])) return false;
    return thetas[c.theta_index] < thetas[b.theta_index];
  };

  std::vector<double> cv_returns(cv_rows.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const Forest forest = fit(is_data, candidates[c], config.jobs);
    const auto p = forest.predict_proba(cv_data);
    for (std::size_t ti = 0; ti < thetas.size(); ++ti) {
      for (std::size_t i = 0; i < cv_rows.size(); ++i) {
        const auto pos = signal_to_position(p[i], thetas[ti]);
        cv_returns[i] = static_cast<double>(static_cast<int>(pos)) * market.next_return[cv_rows[i]];
      }
      const Choice choice{c, ti, sharpe(cv_returns)};
      if (!best || better(choice, *best)) best = choice;
    }
  }

  WindowOutcome out;
  out.window = window;
  out.chosen = candidates[best->candidate];
  out.chosen.seed = derive_seed(config.seed, window_index, 1);
  out.theta = thetas[best->theta_index];
  out.cv_sharpe = best->score;
  const Forest forest = fit(data.subset(iota_rows(window.is_begin, window.os_begin)), out.chosen, config.jobs);
  const auto os_data = data.subset(iota_rows(window.os_begin, window.os_end));
  out.p_plus = forest.predict_proba(os_data);
  for (const double p : out.p_plus) out.positions.push_back(signal_to_position(p, out.theta));
  return out;
}

WalkForwardResult run_walkforward(const MarketData& market, const WalkForwardConfig& config) {
  config.grid.validate(config.mode);
  const auto windows = plan_windows(market.frame.dataset.n_rows(), config.plan);
  WalkForwardResult result;
  std::vector<Date> dates;
  std::vector<Position> positions;
  std::vector<double> returns;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    auto outcome = run_window(market, windows[w], config, w);
    for (std::size_t i = 0; i < outcome.positions.size(); ++i) {
      const std::size_t row = windows[w].os_begin + i;
      dates.push_back(market.return_date(row));
      positions.push_back(outcome.positions[i]);
      returns.push_back(static_cast<double>(static_cast<int>(outcome.positions[i])) *
                        market.next_return[row]);
    }
    result.windows.push_back(std::move(outcome));
  }
  result.curve = make_curve(dates, positions, returns);
  return result;
}

EquityCurve buy_and_hold(const MarketData& market, std::span<const Window> windows) {
  std::vector<Date> dates;
  std::vector<Position> positions;
  std::vector<double> returns;
  for (const auto& w : windows) {
    for (std::size_t row = w.os_begin; row < w.os_end; ++row) {
      dates.push_back(market.return_date(row));
      positions.push_back(Position::Long);
      returns.push_back(market.next_return[row]);
    }
  }
  return make_curve(dates, positions, returns);
}

bool lookahead_audit(const std::vector<OhlcvBar>& bars, const std::vector<std::string>& feature_subset,
                     const WalkForwardConfig& config, std::size_t window_index, std::uint64_t perturb_seed,
                     std::size_t os_offset) {
  const MarketData original(bars, feature_subset);
  const auto windows = plan_windows(original.frame.dataset.n_rows(), config.plan);
  const Window& window = windows.at(window_index);
  const std::size_t last_row = std::min(window.os_begin + os_offset, window.os_end - 1);
  const std::size_t cut = original.frame.bar_index[last_row];

  auto scrambled = bars;
  Rng rng(perturb_seed);
  for (std::size_t t = cut + 1; t < scrambled.size(); ++t) {
    auto& b = scrambled[t];
    const double scale = 0.7 + 0.6 * rng.uniform();
    b.open *= scale;
    b.high *= scale;
    b.low *= scale;
    b.close *= scale;
    b.volume *= 0.5 + rng.uniform();
  }
  const MarketData perturbed(std::move(scrambled), feature_subset);

  const auto a = run_window(original, window, config, window_index);
  const auto b = run_window(perturbed, window, config, window_index);
  const std::size_t checked = last_row - window.os_begin + 1;
  return a.chosen == b.chosen && a.theta == b.theta &&
         std::equal(a.positions.begin(), a.positions.begin() + static_cast<std::ptrdiff_t>(checked),
                    b.positions.begin()) &&
         std::equal(a.p_plus.begin(), a.p_plus.begin() + static_cast<std::ptrdiff_t>(checked),
                    b.p_plus.begin());
}

void write_equity_csv(const EquityCurve& curve, std::ostream& out) {
  out << "date,position,daily_return,equity\n";
  for (const auto& p : curve.points) {
    out << fmt::format("{},{},{},{}\n", format_date(p.date), to_string(p.position), p.daily_return,
                       p.equity);
  }
}

HeatmapGrid heatmap_grid(const Forest& forest, std::size_t fx, std::size_t fy, std::size_t resolution,
                         std::span<const double> fixed_values) {
  const std::size_t k = forest.n_features();
  if (fx >= k || fy >= k) throw std::invalid_argument("heat-map feature index out of range");
  if (fx == fy) throw std::invalid_argument("heat-map needs two distinct features");
  if (resolution < 1) throw std::invalid_argument("heat-map resolution must be positive");
  if (forest.feature_stats().size() != k) throw std::invalid_argument("model carries no feature ranges");
  if (!fixed_values.empty() && fixed_values.size() != k) {
    throw std::invalid_argument(fmt::format("{} fixed values for {} features", fixed_values.size(), k));
  }

  const auto& stats = forest.feature_stats();
  std::vector<double> sample(k);
  for (std::size_t f = 0; f < k; ++f) sample[f] = fixed_values.empty() ? stats[f].median : fixed_values[f];

  HeatmapGrid grid{fx, fy, resolution, {}, {}, {}};
  auto centres = [resolution](const FeatureStats& s) {
    std::vector<double> c(resolution);
    const double width = (s.max - s.min) / static_cast<double>(resolution);
    for (std::size_t i = 0; i < resolution; ++i) c[i] = s.min + (static_cast<double>(i) + 0.5) * width;
    return c;
  };
  grid.x = centres(stats[fx]);
  grid.y = centres(stats[fy]);
  grid.p_plus.reserve(resolution * resolution);
  for (const double yv : grid.y) {
    for (const double xv : grid.x) {
      sample[fx] = xv;
      sample[fy] = yv;
      grid.p_plus.push_back(forest.predict_proba(sample));
    }
  }
  return grid;
}

void write_heatmap_csv(const HeatmapGrid& grid, std::ostream& out) {
  out << "x,y,p_plus\n";
  for (std::size_t iy = 0; iy < grid.resolution; ++iy) {
    for (std::size_t ix = 0; ix < grid.resolution; ++ix) {
      out << fmt::format("{},{},{}\n", grid.x[ix], grid.y[iy], grid.p_plus[iy * grid.resolution + ix]);
    }
  }
}

}  // namespace lrf
