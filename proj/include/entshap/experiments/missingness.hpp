#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

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

// Robustness of variance-feature identification under training missingness.
// Per (fraction, replicate): mask that fraction of training feature cells, fit
// the pair on the masked batch, attribute the variance game on complete test
// rows, score each feature by mean |phi|, and compute the ROC AUC of those
// scores against the ground-truth variance-feature labels (X1..X5 positive).
struct MissingnessConfig {
  FriedmanConfig data{5000, 1000, 1.0, 1};
  std::vector<double> fractions = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  int replicates = 5;
  std::string sampler = "marginal";
  int imputations = 8;
  CoalitionBudget budget{16, true};
  ForestHyperParams forest;
  std::int64_t n_explain = 100;
  std::uint64_t seed = 1;
  int threads = 1;

  json to_json() const {
    return json{{"data",
                 {{"n_train", data.n_train},
                  {"n_test", data.n_test},
                  {"sigma_y", data.sigma_y},
                  {"seed", data.seed}}},
                {"fractions", fractions},
                {"replicates", replicates},
                {"sampler", sampler},
                {"imputations", imputations},
                {"budget", {{"n_permutations", budget.n_permutations}, {"antithetic", budget.antithetic}}},
                {"forest",
                 {{"n_trees", forest.n_trees},
                  {"max_depth", forest.max_depth},
                  {"min_leaf", forest.min_leaf},
                  {"mtry", forest.mtry}}},
                {"n_explain", n_explain},
                {"seed", seed}};
  }
};

struct MissingnessCell {
  double fraction = 0.0;
  std::vector<double> auc_per_rep;
  double auc_mean = 0.0;
  double auc_se = 0.0;
};

struct MissingnessOutcome {
  ExperimentResult result;
  std::vector<MissingnessCell> cells;

  const MissingnessCell& cell(double fraction) const {
    for (const auto& c : cells)
      if (c.fraction == fraction) return c;
    throw_config("missingness: no such fraction");
  }
};

inline MissingnessOutcome run_missingness(const MissingnessConfig& cfg) {
  require_config(cfg.replicates >= 1, "missingness: need at least one replicate");
  require_config(!cfg.fractions.empty(), "missingness: empty fraction grid");
  for (const auto f : cfg.fractions)
    require_config(f >= 0.0 && f <= 0.9, "missingness: fractions must lie in [0, 0.9]");

  MissingnessOutcome out;
  out.result.name = "missingness";
  out.result.config = cfg.to_json();
  out.result.finalize_hash();

  const std::vector<std::uint8_t> labels = {1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
  const RngStream root(cfg.seed, 0x3155ULL);

  for (std::size_t fi = 0; fi < cfg.fractions.size(); ++fi) {
    const double fraction = cfg.fractions[fi];
    MissingnessCell cell;
    cell.fraction = fraction;

    for (int rep = 0; rep < cfg.replicates; ++rep) {
      const RngStream rep_stream = root.derive(static_cast<std::uint64_t>(rep));
      FriedmanConfig data_cfg = cfg.data;
      data_cfg.seed = rep_stream.derive(1).key();
      const FriedmanData fd = gen_friedman(data_cfg);

      const Dataset train = mask_missing(fd.train, fraction, rep_stream.derive(2).derive(fi).key());
      const auto pair = std::make_shared<HeteroskedasticPair>(
          HeteroskedasticPair::fit(train, cfg.forest, rep_stream.derive(3).key(), 1e-8, cfg.threads));
      for (const auto& w : pair->warnings()) out.result.warnings.push_back(w);

      auto background = std::make_shared<Dataset>(train);
      background->target.reset();
      const auto sampler = make_sampler(cfg.sampler, background, 0);
      const auto game = make_logvar_game(pair, sampler, cfg.imputations);

      const std::int64_t k = std::min<std::int64_t>(cfg.n_explain, fd.test.n);
      std::vector<std::int64_t> rows(static_cast<std::size_t>(k));
      for (std::int64_t i = 0; i < k; ++i) rows[static_cast<std::size_t>(i)] = i;

      const auto attr = attribute_dataset(*game, fd.test, rows, AttributionMode::sampling, cfg.budget,
                                          rep_stream.derive(4).key(), cfg.threads);
      std::vector<double> score(10, 0.0);
      for (std::int64_t i = 0; i < attr.n_rows; ++i)
        for (int j = 0; j < 10; ++j) score[static_cast<std::size_t>(j)] += std::fabs(attr.at(i, j));
      for (auto& s : score) s /= static_cast<double>(attr.n_rows);

      const RocResult roc = roc_auc(score, labels);
      cell.auc_per_rep.push_back(roc.auc);
      out.result.records.push_back(json{{"fraction", fraction},
                                        {"rep", rep},
                                        {"auc", roc.auc},
                                        {"mean_abs_phi", score},
                                        {"n_missing_cells", train.missing_count()}});
    }

    cell.auc_mean = mean(cell.auc_per_rep);
    cell.auc_se = cell.auc_per_rep.size() >= 2 ? standard_error(cell.auc_per_rep) : 0.0;
    const std::string key = "auc_f" + detail::format_double(fraction);
    out.result.metrics[key] = cell.auc_mean;
    out.result.metrics[key + "_se"] = cell.auc_se;
    out.cells.push_back(std::move(cell));
  }
  return out;
}

}  // namespace entshap
