#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <memory>
#include <numeric>
#include <vector>

#include "entshap/axioms.hpp"
#include "entshap/dataset.hpp"
#include "entshap/error.hpp"
#include "entshap/games.hpp"
#include "entshap/oracle.hpp"
#include "entshap/rng.hpp"
#include "entshap/samplers.hpp"
#include "entshap/shapley.hpp"

using namespace entshap;

namespace {

// Counts evaluations so memoization is observable.
class CountingGame : public Game {
public:
  CountingGame(int d, std::function<double(const CoalitionMask&)> fn)
      : d_(d), fn_(std::move(fn)) {}
  int dim() const override { return d_; }
  std::string id() const override { return "counting"; }
  double value(const CoalitionMask& s, std::span<const double>, RngStream) const override {
    ++calls;
    return fn_(s);
  }
  mutable std::atomic<std::int64_t> calls{0};

private:
  int d_;
  std::function<double(const CoalitionMask&)> fn_;
};

// Additive game: phi_j = w_j x_j regardless of estimator.
FunctionGame additive_game(int d, std::vector<double> w) {
  return FunctionGame("additive", d, [w = std::move(w)](const CoalitionMask& s, std::span<const double> x) {
    double acc = 0.0;
    for (int j = 0; j < s.dim(); ++j)
      if (s.contains(j)) acc += w[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
    return acc;
  });
}

}  // namespace

TEST_CASE("per-subset weights are the shapley kernel") {
  // d = 4: 1/(4 C(3,s)) for s = 0..3.
  REQUIRE_THAT(shapley_weight(4, 0), Catch::Matchers::WithinAbs(0.25, 1e-15));
  REQUIRE_THAT(shapley_weight(4, 1), Catch::Matchers::WithinAbs(1.0 / 12.0, 1e-15));
  REQUIRE_THAT(shapley_weight(4, 2), Catch::Matchers::WithinAbs(1.0 / 12.0, 1e-15));
  REQUIRE_THAT(shapley_weight(4, 3), Catch::Matchers::WithinAbs(0.25, 1e-15));
  REQUIRE_THAT(shapley_weight(1, 0), Catch::Matchers::WithinAbs(1.0, 1e-15));
  REQUIRE_THROWS_AS(shapley_weight(4, 4), Error);
  // Weights over all subsets containing a fixed player sum to one.
  double total = 0.0;
  for (int s = 0; s < 10; ++s) {
    double binom = 1.0;
    for (int i = 1; i <= s; ++i) binom *= static_cast<double>(10 - i) / static_cast<double>(i);
    total += binom * shapley_weight(10, s);
  }
  REQUIRE_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("extreme cardinalities dominate the weight mass") {
  // At d = 40, subsets with |S| <= 9 or |S| >= 30 carry half the weight yet are
  // roughly a tenth of a percent of all subsets.
  const auto mc = coalition_mass_coverage(40, 9, 30);
  REQUIRE_THAT(mc.weight_mass, Catch::Matchers::WithinAbs(0.5, 1e-12));
  REQUIRE_THAT(mc.subset_fraction, Catch::Matchers::WithinAbs(0.0010650196345523, 1e-10));
  // Sanity at small d: everything covered.
  const auto all = coalition_mass_coverage(3, 1, 2);
  REQUIRE_THAT(all.weight_mass, Catch::Matchers::WithinAbs(1.0, 1e-15));
  REQUIRE_THAT(all.subset_fraction, Catch::Matchers::WithinAbs(1.0, 1e-12));
  REQUIRE_THROWS_AS(coalition_mass_coverage(5, 3, 3), Error);
}

TEST_CASE("exact enumeration matches a direct permutation average") {
  RngStream rng(3, 0);
  const ProbTable t = ProbTable::random(4, 2, rng);
  const OracleGame g(t, GameId::h);
  const std::vector<double> x{1.0, 0.0, 1.0, 1.0};
  const auto r = shapley_exact(g, x, RngStream(1, 0));

  // Brute force: average marginal contribution over all 24 permutations.
  std::vector<int> perm{0, 1, 2, 3};
  std::vector<double> brute(4, 0.0);
  int n_perms = 0;
  std::sort(perm.begin(), perm.end());
  do {
    CoalitionMask s = CoalitionMask::empty(4);
    double prev = g.value(s, x, RngStream(0, 0));
    for (const auto j : perm) {
      s.add(j);
      const double cur = g.value(s, x, RngStream(0, 0));
      brute[static_cast<std::size_t>(j)] += cur - prev;
      prev = cur;
    }
    ++n_perms;
  } while (std::next_permutation(perm.begin(), perm.end()));
  REQUIRE(n_perms == 24);
  for (int j = 0; j < 4; ++j)
    REQUIRE_THAT(r.phi[static_cast<std::size_t>(j)],
                 Catch::Matchers::WithinAbs(brute[static_cast<std::size_t>(j)] / 24.0, 1e-12));
  REQUIRE(r.stderr_phi.empty());
  REQUIRE(r.evaluations == 16);
  REQUIRE(r.baseline == g.value(CoalitionMask::empty(4), x, RngStream(0, 0)));
  REQUIRE(r.full_value == g.value(CoalitionMask::full(4), x, RngStream(0, 0)));
}

TEST_CASE("exact enumeration memoizes coalition values") {
  CountingGame g(6, [](const CoalitionMask& s) { return static_cast<double>(s.cardinality()); });
  const std::vector<double> x(6, 0.0);
  shapley_exact(g, x, RngStream(1, 0));
  REQUIRE(g.calls == 64);
}

TEST_CASE("mc estimate telescopes to exact efficiency per sample") {
  RngStream rng(5, 0);
  const ProbTable t = ProbTable::random(5, 3, rng);
  const OracleGame g(t, GameId::kl);
  const std::vector<double> x{1.0, 0.0, 1.0, 1.0, 0.0};
  for (const bool anti : {false, true}) {
    const CoalitionBudget budget{anti ? 2 : 1, anti};
    const auto r = shapley_mc(g, x, budget, RngStream(7, 1));
    const double sum = std::accumulate(r.phi.begin(), r.phi.end(), 0.0);
    REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(r.full_value - r.baseline, 1e-12));
  }
}

TEST_CASE("mc converges to the exact attribution") {
  RngStream rng(8, 0);
  const ProbTable t = ProbTable::random(5, 2, rng);
  const OracleGame g(t, GameId::ig);
  const std::vector<double> x{1.0, 1.0, 0.0, 1.0, 0.0};
  const auto exact = shapley_exact(g, x, RngStream(2, 0));
  const auto est = shapley_mc(g, x, CoalitionBudget{512, true}, RngStream(2, 0));
  for (int j = 0; j < 5; ++j) {
    const double err = std::fabs(est.phi[static_cast<std::size_t>(j)] -
                                 exact.phi[static_cast<std::size_t>(j)]);
    REQUIRE(err < 5.0 * std::max(est.stderr_phi[static_cast<std::size_t>(j)], 1e-4));
  }
}

TEST_CASE("antithetic pairing collapses variance on additive games") {
  // For an additive game a permutation and its reverse have identical marginal
  // contributions, so every antithetic pair reproduces the truth exactly.
  const auto g = additive_game(6, {1.0, -2.0, 0.5, 3.0, 0.0, -1.0});
  std::vector<double> x{1.0, 1.0, 2.0, -1.0, 4.0, 1.0};
  const auto r = shapley_mc(g, x, CoalitionBudget{8, true}, RngStream(3, 0));
  const std::vector<double> w{1.0, -2.0, 0.5, 3.0, 0.0, -1.0};
  for (int j = 0; j < 6; ++j) {
    REQUIRE_THAT(r.phi[static_cast<std::size_t>(j)],
                 Catch::Matchers::WithinAbs(w[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)], 1e-12));
    REQUIRE(r.stderr_phi[static_cast<std::size_t>(j)] <= 1e-12);
  }
}

TEST_CASE("antithetic standard errors are computed over pairs") {
  RngStream rng(9, 0);
  const ProbTable t = ProbTable::random(4, 2, rng);
  const OracleGame g(t, GameId::h);
  const std::vector<double> x{1.0, 0.0, 0.0, 1.0};
  const auto r2 = shapley_mc(g, x, CoalitionBudget{2, true}, RngStream(4, 0));
  // One pair: no variance estimate possible, stderr must be zero.
  for (const auto se : r2.stderr_phi) REQUIRE(se == 0.0);
  const auto r8 = shapley_mc(g, x, CoalitionBudget{8, true}, RngStream(4, 0));
  bool any_positive = false;
  for (const auto se : r8.stderr_phi) any_positive = any_positive || se > 0.0;
  REQUIRE(any_positive);
  // Odd permutation count cannot be paired.
  REQUIRE_THROWS_AS(shapley_mc(g, x, CoalitionBudget{3, true}, RngStream(4, 0)), Error);
}

TEST_CASE("mc revisits of a coalition reuse the cached draw") {
  // A stochastic game evaluated twice at the same coalition inside one instance
  // must agree bit for bit; EvalCache guarantees it by construction.
  auto bg = std::make_shared<Dataset>(Dataset::make(40, 3));
  RngStream fill(11, 0);
  for (std::int64_t i = 0; i < bg->n; ++i)
    for (int j = 0; j < 3; ++j) bg->set(i, j, fill.normal());
  auto sampler = std::make_shared<MarginalSampler>(bg);
  const EstimatedGame g("probe", 3, [](std::span<const double> x) { return x[0] + x[1] * x[2]; },
                        sampler, 2);
  const std::vector<double> x{0.5, -0.5, 1.5};
  // Many permutations revisit the same 8 coalitions; telescoping then forces
  // the sum of phi to equal full - baseline exactly.
  const auto r = shapley_mc(g, x, CoalitionBudget{64, true}, RngStream(6, 2));
  const double sum = std::accumulate(r.phi.begin(), r.phi.end(), 0.0);
  REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(r.full_value - r.baseline, 1e-12));
  REQUIRE(r.evaluations <= 8);
}

TEST_CASE("exact enumeration rejects wide games") {
  const auto g = additive_game(13, std::vector<double>(13, 1.0));
  const std::vector<double> x(13, 1.0);
  try {
    shapley_exact(g, x, RngStream(1, 0));
    FAIL("expected capacity error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::capacity);
    REQUIRE(std::string(e.what()).find("12") != std::string::npos);
  }
  // Sampling mode handles the same width.
  const auto r = shapley_mc(g, x, CoalitionBudget{4, true}, RngStream(1, 0));
  REQUIRE(r.phi.size() == 13);
}

TEST_CASE("attribute_dataset is invariant to thread count") {
  auto bg = std::make_shared<Dataset>(Dataset::make(60, 3));
  RngStream fill(13, 0);
  for (std::int64_t i = 0; i < bg->n; ++i)
    for (int j = 0; j < 3; ++j) bg->set(i, j, fill.normal());
  auto sampler = std::make_shared<MarginalSampler>(bg);
  const EstimatedGame g("probe", 3,
                        [](std::span<const double> x) { return std::sin(x[0]) + x[1] * x[2]; },
                        sampler, 4);
  std::vector<std::int64_t> rows{0, 3, 7, 11, 19};
  const auto a = attribute_dataset(g, *bg, rows, AttributionMode::sampling, CoalitionBudget{16, true}, 42, 1);
  const auto b = attribute_dataset(g, *bg, rows, AttributionMode::sampling, CoalitionBudget{16, true}, 42, 4);
  REQUIRE(a.phi == b.phi);
  REQUIRE(a.stderr_phi == b.stderr_phi);
  REQUIRE(a.baseline == b.baseline);
  // A row's attribution does not depend on the batch around it.
  const auto solo = attribute_dataset(g, *bg, {7}, AttributionMode::sampling, CoalitionBudget{16, true}, 42, 1);
  for (int j = 0; j < 3; ++j) REQUIRE(solo.at(0, j) == a.at(2, j));
}

TEST_CASE("attribute_dataset validates rows") {
  auto bg = std::make_shared<Dataset>(Dataset::make(10, 2));
  for (std::int64_t i = 0; i < bg->n; ++i) {
    bg->set(i, 0, 1.0);
    bg->set(i, 1, 2.0);
  }
  bg->set_missing(4, 1);
  auto sampler = std::make_shared<MarginalSampler>(bg);
  const EstimatedGame g("probe", 2, [](std::span<const double> x) { return x[0]; }, sampler, 2);
  REQUIRE_THROWS_AS(
      attribute_dataset(g, *bg, {4}, AttributionMode::sampling, CoalitionBudget{4, true}, 1, 1), Error);
  REQUIRE_THROWS_AS(
      attribute_dataset(g, *bg, {10}, AttributionMode::sampling, CoalitionBudget{4, true}, 1, 1), Error);
  REQUIRE_THROWS_AS(attribute_dataset(g, *bg, {}, AttributionMode::sampling, CoalitionBudget{4, true}, 1, 1),
                    Error);
}

TEST_CASE("attribution unit conversion rescales all value fields") {
  const auto g = additive_game(2, {1.0, 1.0});
  Dataset ds = Dataset::make(2, 2);
  ds.set(0, 0, 1.0);
  ds.set(0, 1, 2.0);
  ds.set(1, 0, -1.0);
  ds.set(1, 1, 0.5);
  auto m = attribute_dataset(g, ds, {0, 1}, AttributionMode::exact, CoalitionBudget{}, 5, 1);
  const double phi00 = m.at(0, 0);
  const double base0 = m.baseline[0];
  m.convert_units(LogBase::bits());
  constexpr double ln2 = 0.693147180559945309;
  REQUIRE_THAT(m.at(0, 0), Catch::Matchers::WithinAbs(phi00 / ln2, 1e-15));
  REQUIRE_THAT(m.baseline[0], Catch::Matchers::WithinAbs(base0 / ln2, 1e-15));
  REQUIRE(m.meta.units == "bits");
}

TEST_CASE("attribution matrix round trips through json and csv") {
  const auto g = additive_game(2, {2.0, -1.0});
  Dataset ds = Dataset::make(3, 2);
  ds.feature_names = {"alpha", "beta"};
  RngStream fill(17, 0);
  for (std::int64_t i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) ds.set(i, j, fill.normal());
  const auto m = attribute_dataset(g, ds, {0, 1, 2}, AttributionMode::sampling, CoalitionBudget{4, true}, 9, 1);
  const auto back = AttributionMatrix::from_json(m.to_json());
  REQUIRE(back.phi == m.phi);
  REQUIRE(back.stderr_phi == m.stderr_phi);
  REQUIRE(back.meta.game_id == m.meta.game_id);
  REQUIRE(back.meta.feature_names == m.meta.feature_names);
  const std::string csv = m.to_csv();
  REQUIRE(csv.rfind("row,alpha,beta,se_alpha,se_beta,baseline,full_value\n", 0) == 0);
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("null feature earns zero attribution") {
  RngStream rng(19, 0);
  const ProbTable t = ProbTable::random(3, 2, rng);
  const ProbTable ext = axiom_detail::append_null_feature(t);
  const OracleGame g(ext, GameId::h);
  const std::vector<double> x{1.0, 0.0, 1.0, 1.0};
  const auto r = shapley_exact(g, x, RngStream(1, 0));
  REQUIRE_THAT(r.phi[3], Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("axiom suites pass for every discrete game") {
  for (const auto game : {GameId::v0, GameId::kl, GameId::ce, GameId::ig, GameId::h,
                          GameId::hstar, GameId::loss}) {
    const auto report = axiom_suite_discrete(game, 6, 23);
    INFO("game " << game_name(game));
    REQUIRE(report.all_pass);
    REQUIRE(report.checks.size() >= 4);
  }
  const auto gauss = axiom_suite_gaussian(6, 29);
  REQUIRE(gauss.all_pass);
}
