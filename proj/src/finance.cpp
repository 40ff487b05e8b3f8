#include "lrf/finance.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

#include "csv.hpp"

namespace lrf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

Date parse_date(const std::string& text) {
  int y = 0;
  unsigned m = 0, d = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  auto field = [&](auto& out, std::size_t width, bool dash) {
    const auto [ptr, ec] = std::from_chars(p, end, out);
    if (ec != std::errc{} || static_cast<std::size_t>(ptr - p) != width) return false;
    p = ptr;
    if (dash) {
      if (p == end || *p != '-') return false;
      ++p;
    }
    return true;
  };
  if (!field(y, 4, true) || !field(m, 2, true) || !field(d, 2, false) || p != end) {
    throw std::invalid_argument(fmt::format("malformed date '{}' (expected YYYY-MM-DD)", text));
  }
  const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) throw std::invalid_argument(fmt::format("invalid calendar date '{}'", text));
  return date;
}

std::string format_date(Date date) {
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(date.year()),
                     static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
}

void validate_bar(const OhlcvBar& b) {
  const auto name = format_date(b.date);
  for (const double v : {b.open, b.high, b.low, b.close, b.volume}) {
    if (!std::isfinite(v)) throw std::invalid_argument(fmt::format("{}: non-finite value", name));
  }
  if (b.open <= 0 || b.high <= 0 || b.low <= 0 || b.close <= 0) {
    throw std::invalid_argument(fmt::format("{}: prices must be positive", name));
  }
  if (b.volume < 0) throw std::invalid_argument(fmt::format("{}: negative volume", name));
  if (b.low > b.high) {
    throw std::invalid_argument(fmt::format("{}: low {} above high {}", name, b.low, b.high));
  }
  if (b.low > std::min(b.open, b.close) || std::max(b.open, b.close) > b.high) {
    throw std::invalid_argument(fmt::format("{}: open/close outside the [low, high] range", name));
  }
}

std::vector<OhlcvBar> load_ohlcv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path.string()));
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(fmt::format("'{}': missing header", path.string()));

  const auto header = detail::split_fields(line);
  std::map<std::string, std::size_t> column;
  for (std::size_t c = 0; c < header.size(); ++c) column[std::string(header[c])] = c;
  const char* required[] = {"date", "open", "high", "low", "close", "volume"};
  std::size_t pos[6];
  for (std::size_t i = 0; i < 6; ++i) {
    const auto it = column.find(required[i]);
    if (it == column.end()) {
      throw std::runtime_error(fmt::format("'{}': missing column '{}'", path.string(), required[i]));
    }
    pos[i] = it->second;
  }

  std::vector<OhlcvBar> bars;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error(fmt::format("'{}' line {}: expected {} fields, found {}",
                                           path.string(), line_no, header.size(), fields.size()));
    }
    OhlcvBar bar;
    try {
      bar.date = parse_date(std::string(fields[pos[0]]));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(fmt::format("'{}' line {}: {}", path.string(), line_no, e.what()));
    }
    double* targets[] = {&bar.open, &bar.high, &bar.low, &bar.close, &bar.volume};
    for (std::size_t i = 0; i < 5; ++i) {
      const auto v = detail::parse_double(fields[pos[i + 1]]);
      if (!v) {
        throw std::runtime_error(fmt::format("'{}' line {}: non-numeric {} '{}'", path.string(),
                                             line_no, required[i + 1], fields[pos[i + 1]]));
      }
      *targets[i] = *v;
    }
    try {
      validate_bar(bar);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(fmt::format("'{}' line {}: {}", path.string(), line_no, e.what()));
    }
    bars.push_back(bar);
  }
  std::stable_sort(bars.begin(), bars.end(),
                   [](const OhlcvBar& a, const OhlcvBar& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < bars.size(); ++i) {
    if (bars[i].date == bars[i - 1].date) {
      throw std::runtime_error(
          fmt::format("'{}': duplicate date {}", path.string(), format_date(bars[i].date)));
    }
  }
  return bars;
}

void write_ohlcv_csv(std::span<const OhlcvBar> bars, std::ostream& out) {
  out << "date,open,high,low,close,volume\n";
  for (const auto& b : bars) {
    out << fmt::format("{},{},{},{},{},{}\n", format_date(b.date), b.open, b.high, b.low, b.close,
                       b.volume);
  }
}

std::vector<double> rsi(std::span<const double> closes, std::size_t n) {
  std::vector<double> out(closes.size(), kNaN);
  if (n == 0) throw std::invalid_argument("RSI window must be positive");
  for (std::size_t t = n; t < closes.size(); ++t) {
    double gain = 0.0, loss = 0.0;
    for (std::size_t s = t - n + 1; s <= t; ++s) {
      const double d = closes[s] - closes[s - 1];
      if (d > 0) gain += d; else loss -= d;
    }
    if (gain == 0.0 && loss == 0.0) {
      out[t] = 50.0;
    } else if (loss == 0.0) {
      out[t] = 100.0;
    } else {
      out[t] = 100.0 - 100.0 / (1.0 + gain / loss);
    }
  }
  return out;
}

std::vector<double> volume_zscore(std::span<const double> volumes, std::size_t n) {
  if (n < 2) throw std::invalid_argument("volume z-score window must be at least 2");
  std::vector<double> out(volumes.size(), kNaN);
  for (std::size_t t = n - 1; t < volumes.size(); ++t) {
    const auto window = volumes.subspan(t + 1 - n, n);
    double mean = 0.0;
    for (const double v : window) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (const double v : window) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    out[t] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? (volumes[t] - mean) / sd : 0.0;
  }
  return out;
}

std::vector<double> sign_correlation(std::span<const double> closes, std::size_t n) {
  if (n < 2) throw std::invalid_argument("sign correlation window must be at least 2");
  std::vector<double> out(closes.size(), kNaN);
  std::vector<int> sign(closes.size(), 0);
  for (std::size_t t = 1; t < closes.size(); ++t) sign[t] = sign_of(closes[t] / closes[t - 1] - 1.0);
  for (std::size_t t = n + 1; t < closes.size(); ++t) {
    double mx = 0, my = 0;
    for (std::size_t s = t + 1 - n; s <= t; ++s) {
      mx += sign[s];
      my += sign[s - 1];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t s = t + 1 - n; s <= t; ++s) {
      const double dx = sign[s] - mx, dy = sign[s - 1] - my;
      sxy += dx * dy;
      sxx += dx * dx;
      syy += dy * dy;
    }
    out[t] = (sxx < 1e-12 || syy < 1e-12) ? 0.0 : std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  }
  return out;
}

std::vector<double> overnight_gap(std::span<const OhlcvBar> bars) {
  std::vector<double> out(bars.size(), kNaN);
  for (std::size_t t = 1; t < bars.size(); ++t) out[t] = bars[t].open / bars[t - 1].close - 1.0;
  return out;
}

double clv(const OhlcvBar& b) {
  const double range = b.high - b.low;
  if (range <= 0.0) return 0.0;
  return std::clamp(((b.close - b.low) - (b.high - b.close)) / range, -1.0, 1.0);
}

const std::vector<std::string>& indicator_names() {
  static const std::vector<std::string> names = {"rsi_5",       "rsi_20",       "vol_z_5",
                                                 "vol_z_20",    "sign_corr_5",  "sign_corr_20",
                                                 "overnight_gap", "clv"};
  return names;
}

IndicatorFrame build_indicator_frame(std::span<const OhlcvBar> bars) {
  if (bars.size() < kIndicatorWarmup + 2) {
    throw std::invalid_argument(fmt::format(
        "insufficient history: {} bars, need at least {}", bars.size(), kIndicatorWarmup + 2));
  }
  std::vector<double> closes, volumes;
  for (const auto& b : bars) {
    closes.push_back(b.close);
    volumes.push_back(b.volume);
  }
  const std::vector<std::vector<double>> series = {
      rsi(closes, 5),         rsi(closes, 20),
      volume_zscore(volumes, 5), volume_zscore(volumes, 20),
      sign_correlation(closes, 5), sign_correlation(closes, 20),
      overnight_gap(bars),    {}};

  std::vector<std::vector<double>> columns(series.size());
  std::vector<Label> labels;
  std::vector<std::size_t> bar_index;
  for (std::size_t t = kIndicatorWarmup; t + 1 < bars.size(); ++t) {
    for (std::size_t f = 0; f + 1 < series.size(); ++f) columns[f].push_back(series[f][t]);
    columns.back().push_back(clv(bars[t]));
    labels.push_back(bars[t + 1].close > bars[t].close ? Label::Pos : Label::Neg);
    bar_index.push_back(t);
  }
  return {LabeledDataset(std::move(columns), indicator_names(), std::move(labels)),
          std::move(bar_index)};
}

LabeledDataset build_dataset(std::span<const OhlcvBar> bars) {
  return build_indicator_frame(bars).dataset;
}

double binomial_test(std::size_t correct, std::size_t total, double p) {
  if (correct > total) throw std::invalid_argument("binomial test: correct exceeds total");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument(fmt::format("binomial test: p {} outside (0, 1)", p));
  if (correct == 0) return 1.0;
  // P[X >= k] = I_p(k, n - k + 1)
  return boost::math::ibeta(static_cast<double>(correct), static_cast<double>(total - correct + 1), p);
}

std::pair<double, Label> majority_baseline(std::span<const Label> labels) {
  if (labels.empty()) throw std::invalid_argument("majority baseline of an empty label set");
  const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::Pos));
  const std::size_t neg = labels.size() - pos;
  const double n = static_cast<double>(labels.size());
  if (pos > neg) return {static_cast<double>(pos) / n, Label::Pos};
  return {static_cast<double>(neg) / n, Label::Neg};
}

}  // namespace lrf
