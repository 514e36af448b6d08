// Minimal library walkthrough: fit a heteroskedastic forest pair on a toy
// heteroskedastic regression problem, attribute the predicted log-variance of
// a few test points, and print per-feature conformal bands.

#include <cstdio>
#include <memory>
#include <vector>

#include "entshap/entshap.hpp"

using namespace entshap;

int main() {
  // y = x1 + noise whose scale is driven by x3 alone: x3 should dominate the
  // uncertainty attributions while x1 dominates the mean.
  const std::int64_t n = 1200;
  const int d = 3;
  RngStream rng(7, 1);
  Dataset data = Dataset::make(n, d);
  data.feature_names = {"x1", "x2", "x3"};
  data.target_name = "y";
  data.target = std::vector<double>(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    RngStream row = rng.derive(static_cast<std::uint64_t>(i));
    const double x1 = row.normal(), x2 = row.normal(), x3 = row.normal();
    data.set(i, 0, x1);
    data.set(i, 1, x2);
    data.set(i, 2, x3);
    (*data.target)[static_cast<std::size_t>(i)] = x1 + std::exp(x3) * row.normal();
  }

  const auto halves = split_half(data.n, 7);
  const Dataset fit_half = data.subset(halves.first);
  const Dataset cal_half = data.subset(halves.second);

  auto pair = std::make_shared<HeteroskedasticPair>(HeteroskedasticPair::fit(fit_half, {}, 7));
  auto sampler = make_sampler("marginal", std::make_shared<const Dataset>(fit_half));
  auto game = make_logvar_game(pair, sampler, 8);

  std::vector<std::int64_t> cal_rows;
  for (std::int64_t i = 0; i < cal_half.n && i < 200; ++i) cal_rows.push_back(i);
  AttributionMatrix cal = attribute_dataset(*game, cal_half, cal_rows, AttributionMode::sampling,
                                            CoalitionBudget{16, true}, 7);
  cal.convert_units(LogBase::bits());

  std::printf("log-variance game, %lld calibration rows, values in bits\n",
              static_cast<long long>(cal.n_rows));
  std::printf("%-4s %12s %12s %12s %s\n", "j", "band lo", "band hi", "p_zero", "verdict");
  for (int j = 0; j < cal.d; ++j) {
    std::vector<double> scores;
    for (std::int64_t i = 0; i < cal.n_rows; ++i) scores.push_back(cal.at(i, j));
    const FeatureSelection sel = select_feature(scores, 0.1, j, cal.meta.feature_names[static_cast<std::size_t>(j)]);
    std::printf("%-4s %12.4f %12.4f %12.3f %s\n", sel.name.c_str(), sel.band.lo, sel.band.hi,
                sel.p_zero, sel.decision == FeatureDecision::informative ? "informative" : "-");
  }
  return 0;
}
