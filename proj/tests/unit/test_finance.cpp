#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "lrf/finance.hpp"
#include "oracles.hpp"
#include "unit/test_helpers.hpp"

using namespace lrf;
using testing_util::temp_dir;
using testing_util::write_text;

namespace {

std::vector<OhlcvBar> bars_from_closes(const std::vector<double>& closes) {
  std::vector<OhlcvBar> bars;
  auto day = std::chrono::sys_days{std::chrono::year{2020} / 1 / 1};
  for (const double c : closes) {
    bars.push_back({Date{day}, c, c * 1.01, c * 0.99, c, 1000});
    day += std::chrono::days{1};
  }
  return bars;
}

}  // namespace

TEST(Dates, ParseAndFormat) {
  EXPECT_EQ(format_date(parse_date("2012-03-04")), "2012-03-04");
  EXPECT_THROW((void)parse_date("2012-13-04"), std::invalid_argument);
  EXPECT_THROW((void)parse_date("yesterday"), std::invalid_argument);
}

TEST(Ohlcv, LoadSortsAndValidates) {
  const auto dir = temp_dir("ohlcv");
  const auto p = write_text(dir / "a.csv",
                            "date,open,high,low,close,volume\n"
                            "2020-01-03,10,11,9,10.5,100\n"
                            "2020-01-01,10,11,9,10.5,100\n"
                            "2020-01-02,10,11,9,10.5,100\n");
  const auto bars = load_ohlcv(p);
  ASSERT_EQ(bars.size(), 3u);
  EXPECT_EQ(format_date(bars[0].date), "2020-01-01");
  EXPECT_EQ(format_date(bars[2].date), "2020-01-03");

  const auto bad = write_text(dir / "b.csv", "date,open,high,low,close,volume\n2020-01-05,10,9,11,10,1\n");
  try {
    (void)load_ohlcv(bad);
    FAIL();
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("2020-01-05"), std::string::npos);
  }
  const auto dup = write_text(dir / "c.csv",
                              "date,open,high,low,close,volume\n2020-01-01,1,1,1,1,1\n2020-01-01,1,1,1,1,1\n");
  EXPECT_THROW((void)load_ohlcv(dup), std::exception);

  std::ostringstream out;
  write_ohlcv_csv(bars, out);
  const auto back = load_ohlcv(write_text(dir / "d.csv", out.str()));
  EXPECT_EQ(back.size(), 3u);
  EXPECT_EQ(back[1].close, 10.5);
}

TEST(Indicators, Rsi) {
  std::vector<double> up, alt, down;
  for (int i = 0; i < 12; ++i) {
    up.push_back(100 + i);
    down.push_back(100 - i);
    alt.push_back(i % 2 ? 101 : 100);
  }
  EXPECT_EQ(rsi(up, 5)[11], 100.0);
  EXPECT_EQ(rsi(down, 5)[11], 0.0);
  EXPECT_DOUBLE_EQ(rsi(alt, 4)[11], 50.0);
  EXPECT_TRUE(std::isnan(rsi(up, 5)[4]));
  EXPECT_FALSE(std::isnan(rsi(up, 5)[5]));
}

TEST(Indicators, VolumeZscore) {
  const std::vector<double> v{1, 1, 1, 1, 6};
  EXPECT_NEAR(volume_zscore(v, 5)[4], 4.0 / std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(volume_zscore(v, 5)[4], 1.789, 1e-3);
  const std::vector<double> scaled{1000, 1000, 1000, 1000, 6000};
  EXPECT_NEAR(volume_zscore(scaled, 5)[4], volume_zscore(v, 5)[4], 1e-12);
  EXPECT_EQ(volume_zscore(std::vector<double>(6, 7.0), 5)[5], 0.0);
}

TEST(Indicators, SignCorrelation) {
  std::vector<double> up, alt;
  for (int i = 0; i < 15; ++i) {
    up.push_back(100 * std::pow(1.01, i));
    alt.push_back(i % 2 ? 101 : 100);
  }
  EXPECT_EQ(sign_correlation(up, 5)[14], 0.0);
  EXPECT_NEAR(sign_correlation(alt, 5)[14], -1.0, 1e-12);
  EXPECT_TRUE(std::isnan(sign_correlation(up, 5)[5]));
  EXPECT_FALSE(std::isnan(sign_correlation(up, 5)[6]));

  // Direct Pearson on a random walk.
  Rng rng(8);
  std::vector<double> walk{100};
  for (int i = 0; i < 60; ++i) walk.push_back(walk.back() * (1 + (rng.uniform() - 0.5) * 0.02));
  const auto got = sign_correlation(walk, 7);
  auto sgn = [&](std::size_t t) { return walk[t] > walk[t - 1] ? 1.0 : (walk[t] < walk[t - 1] ? -1.0 : 0.0); };
  for (std::size_t t = 8; t < walk.size(); ++t) {
    std::vector<double> x, y;
    for (std::size_t s = t - 6; s <= t; ++s) {
      x.push_back(sgn(s));
      y.push_back(sgn(s - 1));
    }
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / 7, my = std::accumulate(y.begin(), y.end(), 0.0) / 7;
    double sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < 7; ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
      syy += (y[i] - my) * (y[i] - my);
    }
    const double want = sxx == 0 || syy == 0 ? 0.0 : sxy / std::sqrt(sxx * syy);
    EXPECT_NEAR(got[t], want, 1e-12) << t;
  }
}

TEST(Indicators, GapAndClv) {
  auto bars = bars_from_closes({100, 100, 100});
  bars[1].open = 102;
  bars[1].high = 103;
  const auto gap = overnight_gap(bars);
  EXPECT_TRUE(std::isnan(gap[0]));
  EXPECT_NEAR(gap[1], 0.02, 1e-15);
  EXPECT_EQ(gap[2], 0.0);
  auto scaled = bars;
  for (auto& b : scaled) {
    b.open *= 3;
    b.high *= 3;
    b.low *= 3;
    b.close *= 3;
  }
  EXPECT_NEAR(overnight_gap(scaled)[1], gap[1], 1e-15);

  OhlcvBar b{Date{}, 10, 12, 8, 12, 1};
  EXPECT_EQ(clv(b), 1.0);
  b.close = 8;
  EXPECT_EQ(clv(b), -1.0);
  b.close = 10;
  EXPECT_EQ(clv(b), 0.0);
  b.high = b.low = b.close = b.open;
  EXPECT_EQ(clv(b), 0.0);
}

TEST(Indicators, DatasetRowsAndLabels) {
  std::vector<double> rising(25), flat(25, 50.0);
  for (int i = 0; i < 25; ++i) rising[static_cast<std::size_t>(i)] = 100 + i;
  const auto up = build_dataset(bars_from_closes(rising));
  EXPECT_EQ(up.n_rows(), 25u - kIndicatorWarmup - 1);
  EXPECT_EQ(up.feature_names(), indicator_names());
  for (std::size_t r = 0; r < up.n_rows(); ++r) EXPECT_EQ(up.label(r), Label::Pos);
  const auto level = build_dataset(bars_from_closes(flat));
  for (std::size_t r = 0; r < level.n_rows(); ++r) EXPECT_EQ(level.label(r), Label::Neg);
  const auto frame = build_indicator_frame(bars_from_closes(rising));
  EXPECT_EQ(frame.bar_index.front(), kIndicatorWarmup);
  EXPECT_EQ(frame.bar_index.back(), 23u);
  EXPECT_THROW((void)build_dataset(bars_from_closes(std::vector<double>(22, 1.0))), std::invalid_argument);
}

TEST(Significance, BinomialTest) {
  EXPECT_NEAR(binomial_test(50, 100, 0.5), 0.5398, 1e-4);
  EXPECT_NEAR(binomial_test(50, 100, 0.5), oracle::binomial_upper_tail(50, 100, 0.5), 1e-12);
  EXPECT_NEAR(binomial_test(20, 20, 0.5), std::pow(0.5, 20), 1e-18);
  EXPECT_EQ(binomial_test(0, 30, 0.3), 1.0);
  for (std::size_t k = 0; k <= 60; k += 7) {
    EXPECT_NEAR(binomial_test(k, 60, 0.37), oracle::binomial_upper_tail(k, 60, 0.37), 1e-12);
  }
  EXPECT_THROW((void)binomial_test(5, 4, 0.5), std::invalid_argument);
}

TEST(Significance, MajorityBaseline) {
  std::vector<Label> six_four(6, Label::Pos);
  six_four.insert(six_four.end(), 4, Label::Neg);
  EXPECT_EQ(majority_baseline(six_four), (std::pair<double, Label>{0.6, Label::Pos}));
  const std::vector<Label> balanced{Label::Pos, Label::Neg};
  EXPECT_EQ(majority_baseline(balanced), (std::pair<double, Label>{0.5, Label::Neg}));
  const std::vector<Label> single{Label::Pos, Label::Pos};
  EXPECT_EQ(majority_baseline(single), (std::pair<double, Label>{1.0, Label::Pos}));
}
