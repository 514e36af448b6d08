#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "entshap/error.hpp"
#include "entshap/experiments/coverage.hpp"
#include "entshap/experiments/friedman.hpp"
#include "entshap/experiments/gauss_convergence.hpp"
#include "entshap/experiments/missingness.hpp"
#include "entshap/experiments/selection.hpp"
#include "entshap/experiments/shift.hpp"

using namespace entshap;

TEST_CASE("friedman generator matches its published signal") {
  FriedmanConfig cfg;
  cfg.n_train = 200;
  cfg.n_test = 50;
  cfg.sigma_y = 1.0;
  cfg.seed = 3;
  const auto data = gen_friedman(cfg);
  REQUIRE(data.train.n == 200);
  REQUIRE(data.test.n == 50);
  REQUIRE(data.train.d == 10);
  REQUIRE(data.train.target.has_value());
  // Targets equal signal plus the recorded scaled noise.
  for (std::int64_t i = 0; i < 20; ++i) {
    const auto x = data.train.row(i);
    const double expected = friedman_detail::signal(x, 5);
    const double resid = (*data.train.target)[static_cast<std::size_t>(i)] - expected;
    REQUIRE_THAT(resid, Catch::Matchers::WithinAbs(data.noise_train[static_cast<std::size_t>(i)], 1e-9));
  }
  // Features live in the unit cube.
  for (std::int64_t i = 0; i < data.train.n; ++i)
    for (int j = 0; j < 10; ++j) {
      REQUIRE(data.train.at(i, j) >= 0.0);
      REQUIRE(data.train.at(i, j) < 1.0);
    }
  // Deterministic in the seed.
  const auto again = gen_friedman(cfg);
  REQUIRE(content_hash(again.train) == content_hash(data.train));
  cfg.seed = 4;
  REQUIRE(content_hash(gen_friedman(cfg).train) != content_hash(data.train));
}

TEST_CASE("coverage study reproduces the conformal guarantee window") {
  CoverageConfig cfg;
  cfg.alpha = 0.1;
  cfg.n_cal = 999;
  cfg.n_test = 500;
  cfg.replicates = 20;
  cfg.seed = 7;
  const auto out = run_coverage(cfg);
  REQUIRE(out.coverage_per_rep.size() == 20);
  REQUIRE(out.guarantee_lo == 0.9);
  REQUIRE_THAT(out.guarantee_hi, Catch::Matchers::WithinAbs(0.9 + 2.0 / 2000.0, 1e-15));
  REQUIRE_THAT(out.expected_coverage, Catch::Matchers::WithinAbs(900.0 / 1000.0, 1e-15));
  REQUIRE_THAT(out.coverage_mean, Catch::Matchers::WithinAbs(out.expected_coverage, 0.02));
  REQUIRE(out.result.name == "coverage");
  REQUIRE(out.result.metrics.at("coverage_mean") == out.coverage_mean);
  REQUIRE(out.result.records.size() == 20);
  // Bit-identical rerun.
  const auto again = run_coverage(cfg);
  REQUIRE(again.coverage_per_rep == out.coverage_per_rep);
  REQUIRE(again.result.config_hash == out.result.config_hash);
  REQUIRE(out.result.tag().rfind("coverage_", 0) == 0);
}

TEST_CASE("convergence study fills every grid cell deterministically") {
  ConvergenceConfig cfg;
  cfg.d = 3;
  cfg.rho_grid = {0.5};
  cfg.n_grid = {60, 120};
  cfg.samplers = {"marginal", "gaussian"};
  cfg.replicates = 2;
  cfg.n_test = 3;
  cfg.imputations = 8;
  cfg.forest = ForestHyperParams{8, 5, 5, 0};
  cfg.seed = 11;
  const auto out = run_gauss_convergence(cfg);
  REQUIRE(out.cells.size() == 4);
  for (const auto& c : out.cells) {
    REQUIRE(c.mae_per_rep.size() == 2);
    REQUIRE(c.mae_mean > 0.0);
    for (const auto v : c.mae_per_rep) REQUIRE(std::isfinite(v));
  }
  const auto& cell = out.cell(0.5, 60, "marginal");
  REQUIRE(cell.n == 60);
  REQUIRE(cell.sampler == "marginal");
  REQUIRE_THROWS_AS(out.cell(0.9, 60, "marginal"), Error);
  const auto again = run_gauss_convergence(cfg);
  REQUIRE(again.cell(0.5, 60, "marginal").mae_per_rep == cell.mae_per_rep);
  // Metrics carry one mae entry per cell.
  REQUIRE(out.result.metrics.size() >= 8);
}

TEST_CASE("selection study produces calibrated per-feature records") {
  SelectionConfig cfg;
  cfg.data = FriedmanConfig{400, 200, 1.0, 5};
  cfg.replicates = 2;
  cfg.alpha = 0.1;
  cfg.sampler = "marginal";
  cfg.imputations = 4;
  cfg.budget = CoalitionBudget{4, true};
  cfg.forest = ForestHyperParams{10, 6, 5, 0};
  cfg.n_explain_cal = 60;
  cfg.n_explain_test = 40;
  cfg.seed = 13;
  const auto out = run_selection(cfg);
  REQUIRE(out.reps.size() == 2);
  for (const auto& rep : out.reps) {
    REQUIRE(rep.variance_game.size() == 10);
    REQUIRE(rep.mean_game.size() == 10);
    for (int j = 0; j < 10; ++j) {
      const auto& f = rep.variance_game[static_cast<std::size_t>(j)];
      REQUIRE(f.feature == j);
      REQUIRE(f.band_lo <= f.band_hi);
      REQUIRE(f.p_zero > 0.0);
      REQUIRE(f.p_zero <= 1.0);
      REQUIRE(f.coverage >= 0.0);
      REQUIRE(f.coverage <= 1.0);
      REQUIRE(f.median_abs_phi >= 0.0);
      REQUIRE((f.informative == (f.band_lo > cfg.zero_width || f.band_hi < -cfg.zero_width)));
    }
    REQUIRE(rep.variance_coverage >= 0.0);
    REQUIRE(rep.variance_coverage <= 1.0);
  }
  REQUIRE(out.result.metrics.count("variance_coverage_mean") == 1);
  const auto again = run_selection(cfg);
  REQUIRE(again.reps[0].variance_game[0].band_lo == out.reps[0].variance_game[0].band_lo);
  REQUIRE(again.result.records == out.result.records);
}

TEST_CASE("missingness study degrades gracefully and stays deterministic") {
  MissingnessConfig cfg;
  cfg.data = FriedmanConfig{500, 100, 1.0, 9};
  cfg.fractions = {0.0, 0.4};
  cfg.replicates = 2;
  cfg.imputations = 4;
  cfg.budget = CoalitionBudget{4, true};
  cfg.forest = ForestHyperParams{10, 6, 5, 0};
  cfg.n_explain = 30;
  cfg.seed = 15;
  const auto out = run_missingness(cfg);
  REQUIRE(out.cells.size() == 2);
  for (const auto& c : out.cells) {
    REQUIRE(c.auc_per_rep.size() == 2);
    for (const auto v : c.auc_per_rep) {
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
    }
  }
  // Clean training data separates signal features well even at this scale.
  REQUIRE(out.cell(0.0).auc_mean > 0.7);
  const auto again = run_missingness(cfg);
  REQUIRE(again.cell(0.4).auc_per_rep == out.cell(0.4).auc_per_rep);
  REQUIRE_THROWS_AS(out.cell(0.3), Error);
}

TEST_CASE("shift study with zero noise detects nothing") {
  ShiftConfig cfg;
  cfg.n = 240;
  cfg.d = 4;
  cfg.replicates = 2;
  cfg.noise_scale = 0.0;
  cfg.imputations = 4;
  cfg.forest = ForestHyperParams{8, 5, 5, 0};
  cfg.seed = 17;
  const auto out = run_shift(cfg);
  REQUIRE(out.reps.size() == 2);
  for (const auto& rep : out.reps) {
    // No perturbation: base and shifted attributions coincide bit for bit.
    for (const auto v : rep.shift_by_feature) REQUIRE(v == 0.0);
  }
  REQUIRE(out.result.metrics.at("hit_rate") >= 0.0);
}

TEST_CASE("shift study localizes a strong perturbation") {
  ShiftConfig cfg;
  cfg.n = 300;
  cfg.d = 4;
  cfg.replicates = 3;
  cfg.noise_scale = 3.0;
  cfg.perturb_feature = 2;
  cfg.imputations = 8;
  cfg.forest = ForestHyperParams{12, 6, 5, 0};
  cfg.seed = 19;
  const auto out = run_shift(cfg);
  for (const auto& rep : out.reps) REQUIRE(rep.perturbed == 2);
  REQUIRE(out.hits >= 2);
  const auto again = run_shift(cfg);
  REQUIRE(again.hits == out.hits);
}

TEST_CASE("experiment results serialize with a stable schema") {
  CoverageConfig cfg;
  cfg.replicates = 2;
  cfg.n_cal = 99;
  cfg.n_test = 50;
  const auto out = run_coverage(cfg);
  const json j = out.result.to_json();
  REQUIRE(j.at("schema_version") == 1);
  REQUIRE(j.at("kind") == "experiment_result");
  REQUIRE(j.at("name") == "coverage");
  REQUIRE(j.at("config_hash").get<std::string>().size() == 16);
  REQUIRE(j.at("metrics").contains("coverage_mean"));
  REQUIRE(j.at("records").is_array());
}
