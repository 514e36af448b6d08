#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "entshap/dataset.hpp"
#include "entshap/error.hpp"
#include "entshap/experiments/result.hpp"
#include "entshap/forest.hpp"
#include "entshap/games.hpp"
#include "entshap/gaussian_model.hpp"
#include "entshap/hetero.hpp"
#include "entshap/metrics.hpp"
#include "entshap/rng.hpp"
#include "entshap/samplers.hpp"
#include "entshap/shapley.hpp"

namespace entshap {

// Estimator convergence against the closed-form Shapley values of the
// Gaussian-linear conditional-entropy game. Per cell (rho, n, sampler,
// replicate): draw coefficients and a training batch, fit the heteroskedastic
// pair, attribute fresh test points by exact enumeration over the estimated
// game, and score mean absolute error against the analytic oracle.
struct ConvergenceConfig {
  int d = 4;
  std::vector<double> rho_grid = {0.0, 0.5, 0.9};
  std::vector<std::int64_t> n_grid = {250, 500, 1000, 2000};
  std::vector<std::string> samplers = {"marginal", "gaussian", "knn"};
  int replicates = 20;
  int n_test = 20;
  int imputations = 64;
  ForestHyperParams forest;
  std::uint64_t seed = 1;
  int threads = 1;

  json to_json() const {
    return json{{"d", d},
                {"rho_grid", rho_grid},
                {"n_grid", n_grid},
                {"samplers", samplers},
                {"replicates", replicates},
                {"n_test", n_test},
                {"imputations", imputations},
                {"forest",
                 {{"n_trees", forest.n_trees},
                  {"max_depth", forest.max_depth},
                  {"min_leaf", forest.min_leaf},
                  {"mtry", forest.mtry}}},
                {"seed", seed}};
  }
};

struct ConvergenceCell {
  double rho = 0.0;
  std::int64_t n = 0;
  std::string sampler;
  std::vector<double> mae_per_rep;
  double mae_mean = 0.0;
  double mae_se = 0.0;
};

struct ConvergenceOutcome {
  ExperimentResult result;
  std::vector<ConvergenceCell> cells;

  const ConvergenceCell& cell(double rho, std::int64_t n, const std::string& sampler) const {
    for (const auto& c : cells)
      if (c.rho == rho && c.n == n && c.sampler == sampler) return c;
    throw_config("convergence: no such cell");
  }
};

inline ConvergenceOutcome run_gauss_convergence(const ConvergenceConfig& cfg) {
  require_config(cfg.d >= 2 && cfg.d <= kMaxEnumerationDim, "convergence: d must lie in [2, 12]");
  require_config(cfg.replicates >= 1 && cfg.n_test >= 1, "convergence: bad replicate counts");
  require_config(!cfg.rho_grid.empty() && !cfg.n_grid.empty() && !cfg.samplers.empty(),
                 "convergence: empty grid");

  ConvergenceOutcome out;
  out.result.name = "convergence";
  out.result.config = cfg.to_json();
  out.result.finalize_hash();

  const RngStream root(cfg.seed, 0xC0117ULL);
  for (std::size_t ri = 0; ri < cfg.rho_grid.size(); ++ri) {
    const double rho = cfg.rho_grid[ri];
    for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
      const std::int64_t n = cfg.n_grid[ni];
      require_config(n >= 4, "convergence: n too small");
      std::vector<std::vector<double>> mae(cfg.samplers.size());

      for (int rep = 0; rep < cfg.replicates; ++rep) {
        const RngStream rep_stream = root.derive(ri).derive(ni).derive(static_cast<std::uint64_t>(rep));
        const GaussianLinearModel model = GaussianLinearModel::random(cfg.d, rho, rep_stream.derive(1).key());
        const Dataset train = sample_gaussian_dataset(model, n, rep_stream.derive(2).key());
        const Dataset test = sample_gaussian_dataset(model, cfg.n_test, rep_stream.derive(3).key());

        const auto pair = std::make_shared<HeteroskedasticPair>(
            HeteroskedasticPair::fit(train, cfg.forest, rep_stream.derive(4).key(), 1e-8, cfg.threads));

        std::vector<std::vector<double>> oracle(static_cast<std::size_t>(cfg.n_test));
        for (std::int64_t i = 0; i < cfg.n_test; ++i)
          oracle[static_cast<std::size_t>(i)] = model.oracle_shapley_hstar(test.row(i));

        auto background = std::make_shared<Dataset>(train);
        background->target.reset();

        std::vector<std::int64_t> rows(static_cast<std::size_t>(cfg.n_test));
        for (std::int64_t i = 0; i < cfg.n_test; ++i) rows[static_cast<std::size_t>(i)] = i;

        for (std::size_t si = 0; si < cfg.samplers.size(); ++si) {
          const auto sampler = make_sampler(cfg.samplers[si], background);
          const auto game = make_hstar_total_game(pair, sampler, cfg.imputations);
          const AttributionMatrix attr =
              attribute_dataset(*game, test, rows, AttributionMode::exact, CoalitionBudget{},
                                rep_stream.derive(5).key(), cfg.threads);
          double err = 0.0;
          for (std::int64_t i = 0; i < cfg.n_test; ++i)
            for (int j = 0; j < cfg.d; ++j)
              err += std::fabs(attr.at(i, j) - oracle[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
          mae[si].push_back(err / static_cast<double>(cfg.n_test * cfg.d));
        }
      }

      for (std::size_t si = 0; si < cfg.samplers.size(); ++si) {
        ConvergenceCell cell;
        cell.rho = rho;
        cell.n = n;
        cell.sampler = cfg.samplers[si];
        cell.mae_per_rep = mae[si];
        cell.mae_mean = mean(mae[si]);
        cell.mae_se = mae[si].size() >= 2 ? standard_error(mae[si]) : 0.0;
        out.result.records.push_back(json{{"rho", cell.rho},
                                          {"n", cell.n},
                                          {"sampler", cell.sampler},
                                          {"mae_per_rep", cell.mae_per_rep},
                                          {"mae_mean", cell.mae_mean},
                                          {"mae_se", cell.mae_se}});
        const std::string key = "mae_rho" + detail::format_double(rho) + "_n" + std::to_string(n) + "_" + cell.sampler;
        out.result.metrics[key] = cell.mae_mean;
        out.result.metrics[key + "_se"] = cell.mae_se;
        out.cells.push_back(std::move(cell));
      }
    }
  }
  return out;
}

}  // namespace entshap
