#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "entshap/error.hpp"
#include "entshap/info.hpp"
#include "entshap/oracle.hpp"
#include "entshap/rng.hpp"

using namespace entshap;

namespace {

constexpr double kLn2 = 0.693147180559945309;

// X ~ Bern(0.8), Y ~ Bern(0.5 + 0.25 X).
ProbTable bern_table() {
  return ProbTable::from_probs({2}, 2, {0.1, 0.1, 0.2, 0.6}, {"x", "y"});
}

ProbTable conspiratorial() {
  std::vector<double> cells;
  for (int x = 0; x < 2; ++x)
    for (int z = 0; z < 2; ++z) {
      const double p1 = 0.3 + 0.4 * x - 0.2 * z;
      cells.push_back(0.25 * (1.0 - p1));
      cells.push_back(0.25 * p1);
    }
  return ProbTable::from_probs({2, 2}, 2, cells);
}

// Y = max(X, Z) over independent fair coins.
ProbTable max_gate() {
  return ProbTable::from_probs({2, 2}, 2, {0.25, 0.0, 0.0, 0.25, 0.0, 0.25, 0.0, 0.25});
}

}  // namespace

TEST_CASE("game values pinned on the bernoulli example") {
  const ProbTable t = bern_table();
  const CoalitionMask none = CoalitionMask::empty(1);
  const CoalitionMask all = CoalitionMask::full(1);
  const std::vector<int> x0{0};

  // Entropy game: H(Y) = 0.881290899230692618 bits, H(Y|X=0) = 1 bit,
  // global H(Y|X) = 0.849022499567306291 bits.
  REQUIRE_THAT(exact_value(t, GameId::h, none, x0) / kLn2,
               Catch::Matchers::WithinAbs(0.881290899230692618, 1e-12));
  REQUIRE_THAT(exact_value(t, GameId::h, all, x0) / kLn2, Catch::Matchers::WithinAbs(1.0, 1e-12));
  REQUIRE_THAT(exact_value(t, GameId::hstar, none, x0) / kLn2,
               Catch::Matchers::WithinAbs(0.849022499567306291, 1e-12));
  REQUIRE_THAT(exact_value(t, GameId::hstar, all, x0) / kLn2, Catch::Matchers::WithinAbs(1.0, 1e-12));
  REQUIRE(exact_value(t, GameId::ig, none, x0) == -exact_value(t, GameId::h, none, x0));

  // Mean game: expected class index.
  REQUIRE_THAT(exact_value(t, GameId::v0, none, x0), Catch::Matchers::WithinAbs(0.7, 1e-15));
  REQUIRE_THAT(exact_value(t, GameId::v0, all, x0), Catch::Matchers::WithinAbs(0.5, 1e-15));

  // Divergence and cross-entropy games at x = 0.
  const double h_cross = -(0.5 * std::log(0.3) + 0.5 * std::log(0.7));
  REQUIRE_THAT(exact_value(t, GameId::ce, none, x0), Catch::Matchers::WithinAbs(-h_cross, 1e-14));
  REQUIRE_THAT(exact_value(t, GameId::kl, none, x0),
               Catch::Matchers::WithinAbs(-(h_cross - kLn2), 1e-14));
  REQUIRE(exact_value(t, GameId::kl, all, x0) == 0.0);
  REQUIRE_THAT(exact_value(t, GameId::ce, all, x0), Catch::Matchers::WithinAbs(-kLn2, 1e-14));

  // Loss game needs the realized label.
  REQUIRE_THAT(exact_value(t, GameId::loss, none, x0, 1), Catch::Matchers::WithinAbs(-std::log(0.7), 1e-14));
  REQUIRE_THAT(exact_value(t, GameId::loss, all, x0, 0), Catch::Matchers::WithinAbs(-std::log(0.5), 1e-14));
  REQUIRE_THROWS_AS(exact_value(t, GameId::loss, none, x0), Error);
}

TEST_CASE("local information gain can be negative") {
  const ProbTable t = bern_table();
  const double delta = exact_delta(t, GameId::ig, CoalitionMask::empty(1), 0, {0});
  REQUIRE_THAT(delta / kLn2, Catch::Matchers::WithinAbs(0.881290899230692618 - 1.0, 1e-12));
  REQUIRE(delta < 0.0);
  // At x = 1, learning X reduces uncertainty.
  REQUIRE(exact_delta(t, GameId::ig, CoalitionMask::empty(1), 0, {1}) > 0.0);
}

TEST_CASE("exact_delta rejects members of the coalition") {
  const ProbTable t = conspiratorial();
  CoalitionMask s = CoalitionMask::empty(2);
  s.add(0);
  REQUIRE_THROWS_AS(exact_delta(t, GameId::kl, s, 0, {0, 0}), Error);
}

TEST_CASE("exact_shapley satisfies efficiency on random tables") {
  RngStream rng(21, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const ProbTable t = ProbTable::random(3, 2, rng);
    std::vector<int> x{trial % 2, (trial / 2) % 2, 0};
    for (const auto game : {GameId::v0, GameId::kl, GameId::ce, GameId::ig, GameId::h, GameId::hstar}) {
      const auto phi = exact_shapley(t, game, x);
      const double sum = std::accumulate(phi.begin(), phi.end(), 0.0);
      const double diff = exact_value(t, game, CoalitionMask::full(3), x) -
                          exact_value(t, game, CoalitionMask::empty(3), x);
      REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(diff, 1e-12));
    }
    const auto phi_loss = exact_shapley(t, GameId::loss, x, 1);
    const double sum = std::accumulate(phi_loss.begin(), phi_loss.end(), 0.0);
    const double diff = exact_value(t, GameId::loss, CoalitionMask::full(3), x, 1) -
                        exact_value(t, GameId::loss, CoalitionMask::empty(3), x, 1);
    REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(diff, 1e-12));
  }
}

TEST_CASE("conspiratorial point: zero delta under dependence") {
  const ProbTable t = conspiratorial();
  const std::vector<int> x{1, 1};
  for (const auto game : {GameId::kl, GameId::ce, GameId::ig, GameId::h})
    REQUIRE_THAT(exact_delta(t, game, CoalitionMask::empty(2), 0, x),
                 Catch::Matchers::WithinAbs(0.0, 1e-12));
  // Yet Y depends on X marginally: p(y=1|x=1) = 0.6 vs p(y=1) = 0.4.
  REQUIRE_FALSE(t.cond_independent_y(0, CoalitionMask::empty(2)));
}

TEST_CASE("context-specific independence zeroes deltas in context only") {
  const ProbTable t = max_gate();
  CoalitionMask z_known = CoalitionMask::empty(2);
  z_known.add(1);
  for (const auto game : {GameId::kl, GameId::ce, GameId::ig, GameId::h}) {
    REQUIRE_THAT(exact_delta(t, game, z_known, 0, {0, 1}), Catch::Matchers::WithinAbs(0.0, 1e-12));
    REQUIRE_THAT(exact_delta(t, game, z_known, 0, {1, 1}), Catch::Matchers::WithinAbs(0.0, 1e-12));
  }
  // In the z = 0 context, X determines Y: the delta is the full bit.
  REQUIRE_THAT(exact_delta(t, GameId::ig, z_known, 0, {0, 0}) / kLn2,
               Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("ci equivalence is consistent in both directions") {
  // Independent: all deltas vanish and the direct test agrees.
  const ProbTable ind =
      ProbTable::from_probs({2, 2}, 2, {0.1 * 0.4, 0.1 * 0.6, 0.2 * 0.4, 0.2 * 0.6, 0.3 * 0.4,
                                        0.3 * 0.6, 0.4 * 0.4, 0.4 * 0.6});
  const auto r_ind = test_ci_equivalence(ind, 0, CoalitionMask::empty(2), 1e-10);
  REQUIRE(r_ind.conditionally_independent);
  REQUIRE(r_ind.deltas_all_zero);
  REQUIRE(r_ind.consistent);
  REQUIRE(r_ind.sup_abs_delta <= 1e-10);

  const auto r_dep = test_ci_equivalence(bern_table(), 0, CoalitionMask::empty(1), 1e-10);
  REQUIRE_FALSE(r_dep.conditionally_independent);
  REQUIRE_FALSE(r_dep.deltas_all_zero);
  REQUIRE(r_dep.consistent);
}

TEST_CASE("gap identity on random tables") {
  RngStream rng(31, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const ProbTable t = ProbTable::random(2 + trial % 3, 2 + trial % 2, rng);
    CoalitionMask s = CoalitionMask::empty(t.d());
    if (trial % 2) s.add(0);
    std::vector<int> x(static_cast<std::size_t>(t.d()), 0);
    const auto g = verify_conditional_gap(t, s, x);
    REQUIRE_THAT(g.lhs, Catch::Matchers::WithinAbs(g.rhs, 1e-12));
    REQUIRE(g.rhs >= -1e-15);
  }
}

TEST_CASE("enumeration capacity bound") {
  RngStream rng(41, 0);
  const ProbTable big = ProbTable::random(13, 2, rng);
  std::vector<int> x(13, 0);
  try {
    exact_shapley(big, GameId::h, x);
    FAIL("expected capacity error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::capacity);
  }
}
