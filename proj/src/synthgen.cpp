#include "lrf/synthgen.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <ostream>
#include <stdexcept>

#include "lrf/random.hpp"

namespace lrf {

void SynthConfig::validate() const {
  if (n < 1) throw std::invalid_argument("synthetic sample count must be positive");
  if (!(rho >= 0.5 && rho <= 1.0)) throw std::invalid_argument(fmt::format("rho {} outside [0.5, 1]", rho));
  if (!(beta >= 0.0)) throw std::invalid_argument(fmt::format("beta {} is negative", beta));
}

LabeledDataset generate(const SynthConfig& config) {
  config.validate();
  const std::size_t k = 2 + config.n_noise + config.n_linear;
  std::vector<std::vector<double>> columns(k, std::vector<double>(config.n));
  std::vector<Label> labels(config.n);
  Rng rng(config.seed);
  for (std::size_t i = 0; i < config.n; ++i) {
    const double f0 = rng.uniform();
    const double f1 = rng.uniform();
    const bool differ = (f0 >= 0.5) != (f1 >= 0.5);
    const bool signal = rng.bernoulli(config.rho);
    columns[0][i] = f0;
    columns[1][i] = f1;
    labels[i] = (differ == signal) ? Label::Pos : Label::Neg;
    for (std::size_t j = 0; j < config.n_noise; ++j) columns[2 + j][i] = rng.uniform();
    const double shift = config.beta * (labels[i] == Label::Pos ? 1.0 : -1.0);
    for (std::size_t j = 0; j < config.n_linear; ++j) {
      columns[2 + config.n_noise + j][i] = std::clamp(rng.uniform() + shift, 0.0, 1.0);
    }
  }
  std::vector<std::string> names;
  for (std::size_t f = 0; f < k; ++f) names.push_back(fmt::format("F{}", f));
  return {std::move(columns), std::move(names), std::move(labels)};
}

double bayes_accuracy(double rho) {
  if (!(rho >= 0.5 && rho <= 1.0)) throw std::invalid_argument(fmt::format("rho {} outside [0.5, 1]", rho));
  return rho;
}

std::string to_string(Classifier c) {
  switch (c) {
    case Classifier::LRF: return "LRF";
    case Classifier::GRF: return "GRF";
    case Classifier::GDT: return "GDT";
  }
  return "?";
}

Classifier parse_classifier(const std::string& text) {
  if (text == "LRF") return Classifier::LRF;
  if (text == "GRF") return Classifier::GRF;
  if (text == "GDT") return Classifier::GDT;
  throw std::invalid_argument(fmt::format("unknown classifier '{}' (LRF, GRF, GDT)", text));
}

InductionMode induction_mode(Classifier c) {
  return c == Classifier::LRF ? InductionMode::Lookahead : InductionMode::Greedy;
}

namespace {

ParamGrid effective_grid(Classifier c, ParamGrid grid) {
  if (c == Classifier::GDT) {
    grid.n_trees = {1};
    grid.bootstrap = false;
  }
  return grid;
}

}  // namespace

void SweepSpec::validate() const {
  if (rhos.empty()) throw std::invalid_argument("sweep needs at least one rho");
  if (classifiers.empty()) throw std::invalid_argument("sweep needs at least one classifier");
  if (repeats < 1) throw std::invalid_argument("sweep needs at least one repeat");
  for (const double rho : rhos) {
    SynthConfig c = base;
    c.rho = rho;
    c.validate();
  }
  for (const auto c : classifiers) {
    const auto it = grids.find(c);
    if (it == grids.end()) throw std::invalid_argument(fmt::format("no parameter grid for {}", to_string(c)));
    effective_grid(c, it->second).validate(induction_mode(c));
  }
  if (n_folds < 2) throw std::invalid_argument("cross-validation needs at least two folds");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument(fmt::format("train fraction {} outside (0, 1)", train_fraction));
  }
}

SweepResult run_sweep(const SweepSpec& spec, int jobs) {
  spec.validate();
  SweepResult result;
  for (std::size_t ri = 0; ri < spec.rhos.size(); ++ri) {
    for (std::size_t m = 0; m < spec.repeats; ++m) {
      SynthConfig config = spec.base;
      config.rho = spec.rhos[ri];
      config.seed = derive_seed(spec.base.seed, ri, m, 0);
      const auto data = generate(config);
      if (result.feature_names.empty()) result.feature_names = data.feature_names();
      const auto [train, test] =
          holdout_split(data, spec.train_fraction, derive_seed(spec.base.seed, ri, m, 1), false);

      for (const auto c : spec.classifiers) {
        const auto cid = static_cast<std::uint64_t>(c);
        const auto grid = effective_grid(c, spec.grids.at(c));
        const auto cv = cross_validate(train, grid, spec.n_folds, induction_mode(c),
                                       derive_seed(spec.base.seed, ri, m, 2, cid), jobs);
        ForestParams params = cv.best().params;
        params.seed = derive_seed(spec.base.seed, ri, m, 3, cid);
        const Forest forest = fit(train, params, jobs);
        result.cells.push_back(SweepCell{config.rho, c, m, accuracy(forest, test),
                                         feature_importance(forest).share, params});
      }
    }
  }
  return result;
}

std::vector<SweepSummary> SweepResult::summary() const {
  std::vector<SweepSummary> out;
  for (const auto& cell : cells) {
    const bool seen = std::any_of(out.begin(), out.end(), [&](const SweepSummary& s) {
      return s.rho == cell.rho && s.classifier == cell.classifier;
    });
    if (seen) continue;
    SweepSummary s{cell.rho, cell.classifier, 0.0, 0.0, std::vector<double>(feature_names.size(), 0.0)};
    std::vector<double> acc;
    for (const auto& other : cells) {
      if (other.rho != cell.rho || other.classifier != cell.classifier) continue;
      acc.push_back(other.accuracy);
      for (std::size_t f = 0; f < s.mean_importance.size(); ++f) s.mean_importance[f] += other.importance[f];
    }
    const double n = static_cast<double>(acc.size());
    for (const double a : acc) s.mean_accuracy += a / n;
    double ss = 0.0;
    for (const double a : acc) ss += (a - s.mean_accuracy) * (a - s.mean_accuracy);
    s.std_accuracy = acc.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    for (auto& v : s.mean_importance) v /= n;
    out.push_back(std::move(s));
  }
  return out;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
  out << "rho,classifier,repeat,accuracy";
  for (const auto& name : result.feature_names) out << ",imp_" << name;
  out << '\n';
  for (const auto& cell : result.cells) {
    out << fmt::format("{},{},{},{}", cell.rho, to_string(cell.classifier), cell.repeat, cell.accuracy);
    for (const double v : cell.importance) out << fmt::format(",{}", v);
    out << '\n';
  }
}

nlohmann::json sweep_summary_json(const SweepResult& result) {
  nlohmann::json doc;
  doc["feature_names"] = result.feature_names;
  auto rows = nlohmann::json::array();
  for (const auto& s : result.summary()) {
    rows.push_back({{"rho", s.rho},
                    {"classifier", to_string(s.classifier)},
                    {"mean_accuracy", s.mean_accuracy},
                    {"std_accuracy", s.std_accuracy},
                    {"bayes_accuracy", bayes_accuracy(s.rho)},
                    {"mean_importance", s.mean_importance}});
  }
  doc["cells"] = std::move(rows);
  return doc;
}

std::vector<OhlcvBar> generate_xor_market(const XorMarketConfig& config) {
  if (config.n_days < 2) throw std::invalid_argument("synthetic market needs at least two days");
  if (!(config.rho >= 0.5 && config.rho <= 1.0)) {
    throw std::invalid_argument(fmt::format("rho {} outside [0.5, 1]", config.rho));
  }
  Rng rng(config.seed);
  std::vector<OhlcvBar> bars;
  bars.reserve(config.n_days);
  Date date{std::chrono::year{2000}, std::chrono::January, std::chrono::day{3}};
  double prev_close = 100.0;
  int direction = 1;  // sign of the move from the previous close to this one
  double magnitude = 0.0;
  for (std::size_t t = 0; t < config.n_days; ++t) {
    const double gap_driver = rng.uniform();
    const double clv_driver = rng.uniform();

    OhlcvBar bar;
    bar.date = date;
    bar.close = t == 0 ? prev_close : prev_close * (1.0 + direction * magnitude);
    bar.open = prev_close * (1.0 + (gap_driver - 0.5) * 0.01);
    double v = std::clamp(2.0 * clv_driver - 1.0, -0.95, 0.95);
    // The open must lie inside [low, high]. After a large move that forces a
    // wide range; |v| is shrunk (keeping its sign) so that low stays above
    // half the close and high below twice the close.
    if (bar.open > bar.close) {
      const double k = 0.5 * bar.close / (bar.open - bar.close);
      v = std::min(v, 0.9 * (k - 1.0) / (k + 1.0));
    } else if (bar.close > bar.open) {
      const double k = bar.close / (bar.close - bar.open);
      v = std::max(v, -0.9 * (k - 1.0) / (k + 1.0));
    }
    double range = bar.close * 0.01 * (0.5 + rng.uniform());
    if (bar.close > bar.open) range = std::max(range, 2.0 * (bar.close - bar.open) / (1.0 + v) * 1.001);
    if (bar.open > bar.close) range = std::max(range, 2.0 * (bar.open - bar.close) / (1.0 - v) * 1.001);
    bar.low = bar.close - 0.5 * (1.0 + v) * range;
    bar.high = bar.close + 0.5 * (1.0 - v) * range;
    bar.volume = std::round(1e6 * (0.5 + rng.uniform()));
    bars.push_back(bar);

    const bool differ = (gap_driver >= 0.5) != (v >= 0.0);
    const bool up = differ == rng.bernoulli(config.rho);
    direction = up ? 1 : -1;
    magnitude = config.mean_abs_return * (0.2 - 0.8 * std::log(1.0 - rng.uniform()));
    magnitude = std::min(magnitude, 0.2);
    prev_close = bar.close;

    // weekdays only
    auto next = std::chrono::sys_days{date} + std::chrono::days{1};
    while (std::chrono::weekday{next} == std::chrono::Saturday ||
           std::chrono::weekday{next} == std::chrono::Sunday) {
      next += std::chrono::days{1};
    }
    date = Date{next};
  }
  return bars;
}

}  // namespace lrf
