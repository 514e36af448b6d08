#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "entshap/dataset.hpp"
#include "entshap/error.hpp"
#include "entshap/forest.hpp"
#include "entshap/gaussian_model.hpp"
#include "entshap/hetero.hpp"
#include "entshap/predictor.hpp"
#include "entshap/rng.hpp"

using namespace entshap;

namespace {

Dataset xor_classification(std::int64_t n, std::uint64_t seed) {
  Dataset ds = Dataset::make(n, 2);
  ds.target.emplace(static_cast<std::size_t>(n), 0.0);
  RngStream rng(seed, 0x7E57ULL);
  for (std::int64_t i = 0; i < n; ++i) {
    const double a = rng.uniform();
    const double b = rng.uniform();
    ds.set(i, 0, a);
    ds.set(i, 1, b);
    (*ds.target)[static_cast<std::size_t>(i)] = ((a > 0.5) != (b > 0.5)) ? 1.0 : 0.0;
  }
  return ds;
}

Dataset step_regression(std::int64_t n, std::uint64_t seed) {
  Dataset ds = Dataset::make(n, 2);
  ds.target.emplace(static_cast<std::size_t>(n), 0.0);
  RngStream rng(seed, 0x57E9ULL);
  for (std::int64_t i = 0; i < n; ++i) {
    const double a = rng.uniform();
    const double b = rng.uniform();
    ds.set(i, 0, a);
    ds.set(i, 1, b);
    (*ds.target)[static_cast<std::size_t>(i)] = (a > 0.5 ? 3.0 : -3.0) + 0.01 * rng.normal();
  }
  return ds;
}

}  // namespace

TEST_CASE("forest fits are deterministic in the seed") {
  const Dataset ds = xor_classification(400, 3);
  const ForestHyperParams hp{20, 6, 5, 0};
  const auto a = ForestModel::fit(ds, Task::classification, hp, 11);
  const auto b = ForestModel::fit(ds, Task::classification, hp, 11);
  const auto c = ForestModel::fit(ds, Task::classification, hp, 12);
  REQUIRE(a.to_json() == b.to_json());
  REQUIRE(a.to_json() != c.to_json());
}

TEST_CASE("forest fit is invariant to training row order") {
  const Dataset ds = xor_classification(300, 5);
  std::vector<std::int64_t> perm(static_cast<std::size_t>(ds.n));
  std::iota(perm.begin(), perm.end(), 0);
  RngStream rng(9, 0);
  shuffle_in_place(perm, rng);
  const Dataset shuffled = ds.subset(perm);
  const ForestHyperParams hp{10, 6, 5, 0};
  const auto a = ForestModel::fit(ds, Task::classification, hp, 11);
  const auto b = ForestModel::fit(shuffled, Task::classification, hp, 11);
  REQUIRE(a.to_json() == b.to_json());
}

TEST_CASE("forest learns the xor decision surface") {
  const Dataset ds = xor_classification(1500, 7);
  const auto m = ForestModel::fit(ds, Task::classification, ForestHyperParams{40, 8, 5, 0}, 1);
  REQUIRE(m.n_classes() == 2);
  const std::vector<double> q00{0.2, 0.2}, q01{0.2, 0.8}, q10{0.8, 0.2}, q11{0.8, 0.8};
  REQUIRE(m.predict_dist(q00).categorical().probs()[1] < 0.2);
  REQUIRE(m.predict_dist(q11).categorical().probs()[1] < 0.2);
  REQUIRE(m.predict_dist(q01).categorical().probs()[1] > 0.8);
  REQUIRE(m.predict_dist(q10).categorical().probs()[1] > 0.8);
  REQUIRE(m.train_score() > 0.9);
}

TEST_CASE("regression forest recovers a step function") {
  const Dataset ds = step_regression(800, 2);
  const auto m = ForestModel::fit(ds, Task::regression, ForestHyperParams{30, 6, 5, 0}, 1);
  REQUIRE(m.n_classes() == 0);
  REQUIRE_THAT(m.predict_mean(std::vector<double>{0.9, 0.5}), Catch::Matchers::WithinAbs(3.0, 0.5));
  REQUIRE_THAT(m.predict_mean(std::vector<double>{0.1, 0.5}), Catch::Matchers::WithinAbs(-3.0, 0.5));
}

TEST_CASE("missing feature values route to both children") {
  Dataset ds = step_regression(600, 8);
  const auto m = ForestModel::fit(ds, Task::regression, ForestHyperParams{20, 6, 5, 0}, 4);
  const std::vector<double> x{0.9, 0.5};
  const std::vector<std::uint8_t> none{0, 0};
  const std::vector<std::uint8_t> first_missing{1, 0};
  const double with_x = m.predict_mean(x, none);
  const double without_x = m.predict_mean(x, first_missing);
  // Blending both branches must pull the prediction toward the global mean.
  REQUIRE(std::abs(without_x) < std::abs(with_x));
  // NaN input is treated the same way as an explicit missing flag.
  const std::vector<double> x_nan{std::nan(""), 0.5};
  REQUIRE(m.predict_mean(x_nan, none) == without_x);
}

TEST_CASE("min_leaf bounds leaf sizes") {
  const Dataset ds = step_regression(200, 3);
  const auto coarse = ForestModel::fit(ds, Task::regression, ForestHyperParams{5, 12, 50, 0}, 2);
  const auto fine = ForestModel::fit(ds, Task::regression, ForestHyperParams{5, 12, 1, 0}, 2);
  const auto count_leaves = [](const json& j) {
    std::int64_t total = 0;
    for (const auto& tree : j.at("trees")) {
      std::vector<const json*> stack{&tree};
      while (!stack.empty()) {
        const json* node = stack.back();
        stack.pop_back();
        if (node->contains("left")) {
          stack.push_back(&node->at("left"));
          stack.push_back(&node->at("right"));
        } else {
          ++total;
        }
      }
    }
    return total;
  };
  REQUIRE(count_leaves(coarse.to_json()) < count_leaves(fine.to_json()));
}

TEST_CASE("constant target produces a warning and a flat model") {
  Dataset ds = Dataset::make(50, 2);
  ds.target.emplace(50, 2.5);
  RngStream rng(1, 0);
  for (std::int64_t i = 0; i < ds.n; ++i) {
    ds.set(i, 0, rng.uniform());
    ds.set(i, 1, rng.uniform());
  }
  const auto m = ForestModel::fit(ds, Task::regression, ForestHyperParams{5, 4, 2, 0}, 1);
  REQUIRE_FALSE(m.warnings().empty());
  REQUIRE_THAT(m.predict_mean(std::vector<double>{0.3, 0.3}), Catch::Matchers::WithinAbs(2.5, 1e-12));
}

TEST_CASE("forest json round trip preserves predictions") {
  const Dataset ds = xor_classification(250, 13);
  const auto m = ForestModel::fit(ds, Task::classification, ForestHyperParams{8, 5, 4, 0}, 21);
  const auto back = ForestModel::from_json(m.to_json());
  REQUIRE(back.to_json() == m.to_json());
  for (std::int64_t i = 0; i < 20; ++i) {
    const auto p = m.predict_dist(ds.row(i)).categorical().probs();
    const auto q = back.predict_dist(ds.row(i)).categorical().probs();
    REQUIRE(p == q);
  }
}

TEST_CASE("forest rejects bad inputs") {
  Dataset ds = xor_classification(20, 1);
  REQUIRE_THROWS_AS(ForestModel::fit(ds, Task::classification, ForestHyperParams{0, 4, 2, 0}, 1), Error);
  (*ds.target)[0] = 0.5;
  REQUIRE_THROWS_AS(ForestModel::fit(ds, Task::classification, ForestHyperParams{5, 4, 2, 0}, 1), Error);
  Dataset no_target = Dataset::make(10, 2);
  REQUIRE_THROWS_AS(ForestModel::fit(no_target, Task::regression, ForestHyperParams{5, 4, 2, 0}, 1), Error);
}

TEST_CASE("heteroskedastic pair recovers mean and variance structure") {
  // y = 4 x1 + exp(x2) * noise: the mean head tracks x1, the logvar head tracks x2.
  Dataset ds = Dataset::make(3000, 2);
  ds.target.emplace(3000, 0.0);
  RngStream rng(17, 0);
  for (std::int64_t i = 0; i < ds.n; ++i) {
    const double a = 2.0 * rng.uniform() - 1.0;
    const double b = 2.0 * rng.uniform() - 1.0;
    ds.set(i, 0, a);
    ds.set(i, 1, b);
    (*ds.target)[static_cast<std::size_t>(i)] = 4.0 * a + std::exp(b) * rng.normal();
  }
  const auto pair = HeteroskedasticPair::fit(ds, ForestHyperParams{40, 8, 10, 0}, 5);
  REQUIRE_THAT(pair.predict_mean(std::vector<double>{0.8, 0.0}), Catch::Matchers::WithinAbs(3.2, 0.8));
  const double lv_low = pair.predict_logvar(std::vector<double>{0.0, -0.9});
  const double lv_high = pair.predict_logvar(std::vector<double>{0.0, 0.9});
  REQUIRE(lv_high > lv_low + 1.0);
  const auto dist = pair.predict_dist(std::vector<double>{0.0, 0.9}).gaussian();
  REQUIRE(dist.variance == std::exp(lv_high));
}

TEST_CASE("heteroskedastic pair flags a perfectly fit mean model") {
  Dataset ds = Dataset::make(40, 1);
  ds.target.emplace(40, 7.25);
  for (std::int64_t i = 0; i < ds.n; ++i) ds.set(i, 0, static_cast<double>(i));
  // A constant target is reproduced exactly, so every residual is zero.
  const auto pair = HeteroskedasticPair::fit(ds, ForestHyperParams{1, 20, 1, 1}, 3);
  bool flagged = false;
  for (const auto& w : pair.warnings())
    if (w.find("degenerate variance") != std::string::npos) flagged = true;
  REQUIRE(flagged);
}

TEST_CASE("gaussian conditional mean matches the bivariate closed form") {
  const auto m = GaussianLinearModel::make({1.0, 1.0}, {0.5, -0.5}, 0.5);
  CoalitionMask s = CoalitionMask::empty(2);
  s.add(0);
  const std::vector<double> x{2.0, 0.0};
  const Eigen::VectorXd cm = m.conditional_mean(s, x);
  REQUIRE(cm.size() == 1);
  // E[X2 | X1 = 2] = rho * 2 = 1.
  REQUIRE_THAT(cm(0), Catch::Matchers::WithinAbs(1.0, 1e-12));
  REQUIRE(m.conditional_mean(CoalitionMask::full(2), x).size() == 0);
  const Eigen::VectorXd prior = m.conditional_mean(CoalitionMask::empty(2), x);
  REQUIRE(prior.size() == 2);
  REQUIRE(prior(0) == 0.0);
  REQUIRE(prior(1) == 0.0);
}

TEST_CASE("analytic game value uses the conditional mean") {
  const auto m = GaussianLinearModel::make({1.0, 1.0}, {0.6, 0.8}, 0.5);
  const std::vector<double> x{2.0, -1.0};
  CoalitionMask s = CoalitionMask::empty(2);
  s.add(0);
  // v(S) = 1/2 log(2 pi e) + 1/2 (0.6 * 2 + 0.8 * E[X2|x1]) with E[X2|x1] = 1.
  const double expected = kHalfLog2PiE + 0.5 * (0.6 * 2.0 + 0.8 * 1.0);
  REQUIRE_THAT(m.analytic_hstar_value(s, x), Catch::Matchers::WithinAbs(expected, 1e-12));
  // Full coalition: plug the point in directly.
  REQUIRE_THAT(m.analytic_hstar_value(CoalitionMask::full(2), x),
               Catch::Matchers::WithinAbs(kHalfLog2PiE + 0.5 * (1.2 - 0.8), 1e-12));
  REQUIRE_THAT(m.entropy_at(x), Catch::Matchers::WithinAbs(
                                     m.analytic_hstar_value(CoalitionMask::full(2), x), 1e-12));
}

TEST_CASE("independent features give the closed form attribution") {
  // At rho = 0 the conditional means vanish, so phi_j = 1/2 gamma_j x_j exactly.
  const auto m = GaussianLinearModel::random(5, 0.0, 77);
  RngStream rng(99, 0);
  std::vector<double> x(5);
  for (auto& v : x) v = rng.normal();
  const auto phi = m.oracle_shapley_hstar(x);
  for (int j = 0; j < 5; ++j)
    REQUIRE_THAT(phi[static_cast<std::size_t>(j)],
                 Catch::Matchers::WithinAbs(0.5 * m.gamma()(j) * x[static_cast<std::size_t>(j)], 1e-12));
}

TEST_CASE("oracle shapley is efficient") {
  const auto m = GaussianLinearModel::random(4, 0.7, 31);
  const std::vector<double> x{0.4, -1.2, 2.0, 0.3};
  const auto phi = m.oracle_shapley_hstar(x);
  const double sum = std::accumulate(phi.begin(), phi.end(), 0.0);
  const double diff = m.analytic_hstar_value(CoalitionMask::full(4), x) -
                      m.analytic_hstar_value(CoalitionMask::empty(4), x);
  REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(diff, 1e-12));
}

TEST_CASE("gaussian model json round trip and sampling") {
  const auto m = GaussianLinearModel::random(3, 0.4, 8);
  const auto back = GaussianLinearModel::from_json(m.to_json());
  REQUIRE(back.to_json() == m.to_json());
  const Dataset ds = sample_gaussian_dataset(m, 4000, 10);
  REQUIRE(ds.n == 4000);
  REQUIRE(ds.d == 3);
  REQUIRE(ds.target.has_value());
  // Column means concentrate near zero, lag-1 correlation near rho.
  double mean0 = 0.0, cross = 0.0, var0 = 0.0, var1 = 0.0;
  for (std::int64_t i = 0; i < ds.n; ++i) {
    mean0 += ds.at(i, 0);
    cross += ds.at(i, 0) * ds.at(i, 1);
    var0 += ds.at(i, 0) * ds.at(i, 0);
    var1 += ds.at(i, 1) * ds.at(i, 1);
  }
  const double n = static_cast<double>(ds.n);
  REQUIRE_THAT(mean0 / n, Catch::Matchers::WithinAbs(0.0, 0.05));
  REQUIRE_THAT(cross / std::sqrt(var0 * var1), Catch::Matchers::WithinAbs(0.4, 0.05));
  REQUIRE(content_hash(sample_gaussian_dataset(m, 100, 10)) ==
          content_hash(sample_gaussian_dataset(m, 100, 10)));
}
