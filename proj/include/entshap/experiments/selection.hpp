#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "entshap/conformal.hpp"
#include "entshap/dataset.hpp"
#include "entshap/error.hpp"
#include "entshap/experiments/friedman.hpp"
#include "entshap/experiments/result.hpp"
#include "entshap/forest.hpp"
#include "entshap/games.hpp"
#include "entshap/hetero.hpp"
#include "entshap/metrics.hpp"
#include "entshap/rng.hpp"
#include "entshap/samplers.hpp"
#include "entshap/shapley.hpp"

namespace entshap {

// Conformal feature audit on the heteroskedastic benchmark. Each replicate:
// generate a fresh pair of batches, split the training batch in half, fit the
// mean/log-variance pair on the first half, attribute the second half
// (calibration) and the test batch with identical estimator settings, then
// calibrate per-feature bands on the calibration attributions and score test
// coverage and informativeness decisions against them. Both heads are audited:
// the mean game should credit X6..X10, the variance game X1..X5.
struct SelectionConfig {
  FriedmanConfig data;
  int replicates = 20;
  double alpha = 0.1;
  double zero_width = 0.0;
  std::string sampler = "marginal";
  int imputations = 8;
  CoalitionBudget budget{8, true};
  ForestHyperParams forest;
  std::int64_t n_explain_cal = 0;    // 0 = every calibration row
  std::int64_t n_explain_test = 200;  // 0 = every test row
  std::uint64_t seed = 1;
  int threads = 1;

  json to_json() const {
    return json{{"data",
                 {{"n_train", data.n_train},
                  {"n_test", data.n_test},
                  {"sigma_y", data.sigma_y},
                  {"seed", data.seed}}},
                {"replicates", replicates},
                {"alpha", alpha},
                {"zero_width", zero_width},
                {"sampler", sampler},
                {"imputations", imputations},
                {"budget", {{"n_permutations", budget.n_permutations}, {"antithetic", budget.antithetic}}},
                {"forest",
                 {{"n_trees", forest.n_trees},
                  {"max_depth", forest.max_depth},
                  {"min_leaf", forest.min_leaf},
                  {"mtry", forest.mtry}}},
                {"n_explain_cal", n_explain_cal},
                {"n_explain_test", n_explain_test},
                {"seed", seed}};
  }
};

struct SelectionFeatureRecord {
  int feature = -1;
  std::string name;
  double band_lo = 0.0;
  double band_hi = 0.0;
  double p_zero = 1.0;
  bool informative = false;
  double coverage = 0.0;
  double median_abs_phi = 0.0;
};

struct SelectionRepRecord {
  int rep = 0;
  std::vector<SelectionFeatureRecord> variance_game;
  std::vector<SelectionFeatureRecord> mean_game;
  double variance_coverage = 0.0;  // mean over features
  double mean_coverage = 0.0;
  double variance_group_gap = 0.0;  // median|phi| over X1..X5 minus over X6..X10
  double mean_group_gap = 0.0;      // same, mean game
};

struct SelectionOutcome {
  ExperimentResult result;
  std::vector<SelectionRepRecord> reps;
};

namespace selection_detail {

inline std::vector<SelectionFeatureRecord> audit_game(const AttributionMatrix& cal,
                                                      const AttributionMatrix& test, double alpha,
                                                      double zero_width,
                                                      const std::vector<std::string>& names) {
  std::vector<SelectionFeatureRecord> out;
  for (int j = 0; j < cal.d; ++j) {
    std::vector<double> cal_scores(static_cast<std::size_t>(cal.n_rows));
    for (std::int64_t i = 0; i < cal.n_rows; ++i) cal_scores[static_cast<std::size_t>(i)] = cal.at(i, j);
    const FeatureSelection sel =
        select_feature(cal_scores, alpha, j, names[static_cast<std::size_t>(j)], zero_width);
    std::vector<double> test_scores(static_cast<std::size_t>(test.n_rows));
    std::vector<double> abs_scores(static_cast<std::size_t>(test.n_rows));
    for (std::int64_t i = 0; i < test.n_rows; ++i) {
      test_scores[static_cast<std::size_t>(i)] = test.at(i, j);
      abs_scores[static_cast<std::size_t>(i)] = std::fabs(test.at(i, j));
    }
    SelectionFeatureRecord rec;
    rec.feature = j;
    rec.name = names[static_cast<std::size_t>(j)];
    rec.band_lo = sel.band.lo;
    rec.band_hi = sel.band.hi;
    rec.p_zero = sel.p_zero;
    rec.informative = sel.decision == FeatureDecision::informative;
    rec.coverage = conformal_coverage(sel.band, test_scores);
    rec.median_abs_phi = median(abs_scores);
    out.push_back(std::move(rec));
  }
  return out;
}

inline double group_gap(const std::vector<SelectionFeatureRecord>& recs) {
  std::vector<double> first, second;
  for (const auto& r : recs)
    (r.feature < 5 ? first : second).push_back(r.median_abs_phi);
  return median(first) - median(second);
}

inline json feature_to_json(const SelectionFeatureRecord& r) {
  return json{{"feature", r.feature},       {"name", r.name},
              {"band_lo", r.band_lo},       {"band_hi", r.band_hi},
              {"p_zero", r.p_zero},         {"informative", r.informative},
              {"coverage", r.coverage},     {"median_abs_phi", r.median_abs_phi}};
}

}  // namespace selection_detail

inline SelectionOutcome run_selection(const SelectionConfig& cfg) {
  require_config(cfg.replicates >= 1, "selection: need at least one replicate");
  require_config(cfg.alpha > 0.0 && cfg.alpha < 1.0, "selection: alpha must lie in (0, 1)");
  SelectionOutcome out;
  out.result.name = "selection";
  out.result.config = cfg.to_json();
  out.result.finalize_hash();

  const RngStream root(cfg.seed, 0x5E1ECULL);
  double cov_var_acc = 0.0, cov_mean_acc = 0.0;
  int var_order_wins = 0, mean_order_wins = 0;

  for (int rep = 0; rep < cfg.replicates; ++rep) {
    const RngStream rep_stream = root.derive(static_cast<std::uint64_t>(rep));
    FriedmanConfig data_cfg = cfg.data;
    data_cfg.seed = rep_stream.derive(1).key();
    const FriedmanData fd = gen_friedman(data_cfg);

    const SplitHalf halves = split_half(fd.train.n, rep_stream.derive(2).key());
    const Dataset fit_set = fd.train.subset(halves.first);
    const Dataset cal_set = fd.train.subset(halves.second);

    const auto pair = std::make_shared<HeteroskedasticPair>(
        HeteroskedasticPair::fit(fit_set, cfg.forest, rep_stream.derive(3).key(), 1e-8, cfg.threads));
    for (const auto& w : pair->warnings()) out.result.warnings.push_back(w);

    auto background = std::make_shared<Dataset>(fit_set);
    background->target.reset();
    const auto sampler = make_sampler(cfg.sampler, background, 0);

    const auto variance_game = make_logvar_game(pair, sampler, cfg.imputations);
    const auto mean_game = make_mean_game(pair, sampler, cfg.imputations);

    auto take_rows = [](std::int64_t n, std::int64_t cap) {
      const std::int64_t k = cap > 0 ? std::min(cap, n) : n;
      std::vector<std::int64_t> rows(static_cast<std::size_t>(k));
      for (std::int64_t i = 0; i < k; ++i) rows[static_cast<std::size_t>(i)] = i;
      return rows;
    };
    const auto cal_rows = take_rows(cal_set.n, cfg.n_explain_cal);
    const auto test_rows = take_rows(fd.test.n, cfg.n_explain_test);

    SelectionRepRecord rec;
    rec.rep = rep;
    const std::uint64_t cal_seed = rep_stream.derive(4).key();
    const std::uint64_t test_seed = rep_stream.derive(5).key();

    const auto var_cal = attribute_dataset(*variance_game, cal_set, cal_rows, AttributionMode::sampling,
                                           cfg.budget, cal_seed, cfg.threads);
    const auto var_test = attribute_dataset(*variance_game, fd.test, test_rows, AttributionMode::sampling,
                                            cfg.budget, test_seed, cfg.threads);
    const auto mean_cal = attribute_dataset(*mean_game, cal_set, cal_rows, AttributionMode::sampling,
                                            cfg.budget, cal_seed, cfg.threads);
    const auto mean_test = attribute_dataset(*mean_game, fd.test, test_rows, AttributionMode::sampling,
                                             cfg.budget, test_seed, cfg.threads);

    rec.variance_game = selection_detail::audit_game(var_cal, var_test, cfg.alpha, cfg.zero_width,
                                                     fd.train.feature_names);
    rec.mean_game = selection_detail::audit_game(mean_cal, mean_test, cfg.alpha, cfg.zero_width,
                                                 fd.train.feature_names);

    double cv = 0.0, cm = 0.0;
    for (const auto& f : rec.variance_game) cv += f.coverage;
    for (const auto& f : rec.mean_game) cm += f.coverage;
    rec.variance_coverage = cv / static_cast<double>(rec.variance_game.size());
    rec.mean_coverage = cm / static_cast<double>(rec.mean_game.size());
    rec.variance_group_gap = selection_detail::group_gap(rec.variance_game);
    rec.mean_group_gap = selection_detail::group_gap(rec.mean_game);

    cov_var_acc += rec.variance_coverage;
    cov_mean_acc += rec.mean_coverage;
    if (rec.variance_group_gap > 0.0) ++var_order_wins;
    if (rec.mean_group_gap < 0.0) ++mean_order_wins;

    json vj = json::array(), mj = json::array();
    for (const auto& f : rec.variance_game) vj.push_back(selection_detail::feature_to_json(f));
    for (const auto& f : rec.mean_game) mj.push_back(selection_detail::feature_to_json(f));
    out.result.records.push_back(json{{"rep", rep},
                                      {"variance_game", std::move(vj)},
                                      {"mean_game", std::move(mj)},
                                      {"variance_coverage", rec.variance_coverage},
                                      {"mean_coverage", rec.mean_coverage},
                                      {"variance_group_gap", rec.variance_group_gap},
                                      {"mean_group_gap", rec.mean_group_gap}});
    out.reps.push_back(std::move(rec));
  }

  const double nr = static_cast<double>(cfg.replicates);
  out.result.metrics["variance_coverage_mean"] = cov_var_acc / nr;
  out.result.metrics["mean_coverage_mean"] = cov_mean_acc / nr;
  out.result.metrics["coverage_mean"] = 0.5 * (cov_var_acc + cov_mean_acc) / nr;
  out.result.metrics["variance_order_wins"] = static_cast<double>(var_order_wins);
  out.result.metrics["mean_order_wins"] = static_cast<double>(mean_order_wins);
  out.result.metrics["replicates"] = nr;
  return out;
}

}  // namespace entshap
