#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "entshap/axioms.hpp"
#include "entshap/conformal.hpp"
#include "entshap/error.hpp"
#include "entshap/games.hpp"
#include "entshap/gaussian_model.hpp"
#include "entshap/info.hpp"
#include "entshap/oracle.hpp"
#include "entshap/prob_table.hpp"
#include "entshap/rng.hpp"
#include "entshap/shapley.hpp"

namespace entshap {

// Self-check suite over the exact discrete oracle and the analytic Gaussian
// game: algebraic identities between the uncertainty games, the zero-delta /
// conditional-independence equivalence, the Shapley axioms, and the conformal
// index arithmetic. Every check is an equality with an explicit tolerance.
struct VerifyItem {
  std::string name;
  double max_err = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyItem> items;
  bool all_pass = true;

  void add(VerifyItem item) {
    item.pass = item.max_err <= item.tol;
    all_pass = all_pass && item.pass;
    items.push_back(std::move(item));
  }

  void add_flag(const std::string& name, bool ok, const std::string& detail = "") {
    VerifyItem item{name, ok ? 0.0 : 1.0, 0.5, ok, detail};
    all_pass = all_pass && ok;
    items.push_back(std::move(item));
  }
};

struct VerifyOptions {
  int tables = 100;
  std::uint64_t seed = 20240601;
  double tol = 1e-10;
  // Fault injection for exercising the failure path; empty in normal runs.
  std::string inject;
};

namespace verify_detail {

inline ProbTable conspiratorial_table() {
  // X, Z independent fair coins; Y | X, Z ~ Bernoulli(0.3 + 0.4 X - 0.2 Z).
  std::vector<double> cells;
  for (int x = 0; x < 2; ++x)
    for (int z = 0; z < 2; ++z) {
      const double p1 = 0.3 + 0.4 * x - 0.2 * z;
      cells.push_back(0.25 * (1.0 - p1));
      cells.push_back(0.25 * p1);
    }
  return ProbTable::from_probs({2, 2}, 2, std::move(cells), {"x", "z", "y"});
}

inline ProbTable max_gate_table(double q = 0.5) {
  // X, Z independent Bernoulli(q); Y = max(X, Z) deterministically.
  std::vector<double> cells;
  for (int x = 0; x < 2; ++x)
    for (int z = 0; z < 2; ++z) {
      const double px = x == 1 ? q : 1.0 - q;
      const double pz = z == 1 ? q : 1.0 - q;
      const int y = x | z;
      cells.push_back(px * pz * (y == 0 ? 1.0 : 0.0));
      cells.push_back(px * pz * (y == 1 ? 1.0 : 0.0));
    }
  return ProbTable::from_probs({2, 2}, 2, std::move(cells), {"x", "z", "y"});
}

inline ProbTable ci_product_table(RngStream& rng, int d) {
  // p(x) arbitrary positive, Y independent of everything: p(y | x) = q(y).
  const ProbTable base = ProbTable::random(d, 2, rng);
  const double q1 = 0.2 + 0.6 * rng.uniform();
  std::vector<double> cells(base.cells().size(), 0.0);
  base.enumerate_assignments(CoalitionMask::full(d), [&](const std::vector<int>& x) {
    const double px = base.prob(x, 0) + base.prob(x, 1);
    cells[base.cell_index(x, 0)] = px * (1.0 - q1);
    cells[base.cell_index(x, 1)] = px * q1;
  });
  return ProbTable::from_probs(std::vector<int>(static_cast<std::size_t>(d), 2), 2, std::move(cells));
}

struct RandomCase {
  ProbTable table;
  CoalitionMask s;
  int j = 0;
  std::vector<int> x;
  int y_true = 0;
};

inline RandomCase random_case(RngStream& rng, int t) {
  RandomCase c{ProbTable::random(2 + t % 3, 2 + t % 2, rng), CoalitionMask(1), 0, {}, 0};
  const int d = c.table.d();
  c.s = CoalitionMask::empty(d);
  for (int j = 0; j < d; ++j)
    if (rng.uniform() < 0.4) c.s.add(j);
  c.j = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(d)));
  c.s.remove(c.j);
  c.x.resize(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j)
    c.x[static_cast<std::size_t>(j)] =
        static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(c.table.cardinality(j))));
  c.y_true = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(c.table.n_classes())));
  return c;
}

}  // namespace verify_detail

inline VerifyReport run_verification(const VerifyOptions& opts = {}) {
  VerifyReport rep;
  const double tol = opts.tol;

  // Identical marginal deltas for the divergence and cross-entropy games.
  {
    VerifyItem item{"delta_kl_equals_delta_ce", 0.0, tol, false, "random tables"};
    RngStream rng(opts.seed, 1);
    for (int t = 0; t < opts.tables; ++t) {
      const auto c = verify_detail::random_case(rng, t);
      const double dk = exact_delta(c.table, GameId::kl, c.s, c.j, c.x);
      const double dc = exact_delta(c.table, GameId::ce, c.s, c.j, c.x);
      item.max_err = std::max(item.max_err, std::fabs(dk - dc));
    }
    rep.add(std::move(item));
  }

  // Divergence-game attributions sum to KL(p(Y|x) || p(Y)).
  {
    VerifyItem item{"kl_shapley_sum_is_posterior_shift", 0.0, tol, false, "random tables"};
    RngStream rng(opts.seed, 2);
    for (int t = 0; t < opts.tables / 2; ++t) {
      const auto c = verify_detail::random_case(rng, t);
      const auto phi = exact_shapley(c.table, GameId::kl, c.x);
      double sum = 0.0;
      for (const auto p : phi) sum += p;
      const double expected = kl_divergence(c.table.condition(CoalitionMask::full(c.table.d()), c.x),
                                            c.table.marginal_y());
      item.max_err = std::max(item.max_err, std::fabs(sum - expected));
    }
    rep.add(std::move(item));
  }

  // Information-gain deltas: pointwise entropy drop, and in expectation the
  // conditional mutual information.
  {
    VerifyItem item{"ig_delta_is_entropy_drop", 0.0, tol, false,
                    "pointwise, conditional-expectation, and full-expectation readings"};
    RngStream rng(opts.seed, 3);
    for (int t = 0; t < opts.tables / 2; ++t) {
      const auto c = verify_detail::random_case(rng, t);
      const double delta = exact_delta(c.table, GameId::ig, c.s, c.j, c.x);
      const auto a = PartialAssignment::from_coalition(c.s, c.x);
      auto aj = PartialAssignment::from_coalition(c.s.with(c.j), c.x);
      const double drop = entropy(c.table.condition(a)) - entropy(c.table.condition(aj));
      item.max_err = std::max(item.max_err, std::fabs(delta - drop));

      // E_{x_j | x_S} of the delta equals the conditional joint's MI.
      const JointTable joint = c.table.joint_y_feature(c.j, a);
      double e_delta = 0.0;
      for (int v = 0; v < c.table.cardinality(c.j); ++v) {
        double pv = 0.0;
        for (int y = 0; y < c.table.n_classes(); ++y) pv += joint.at(y, v);
        if (pv <= 0.0) continue;
        std::vector<int> xv = c.x;
        xv[static_cast<std::size_t>(c.j)] = v;
        e_delta += pv * exact_delta(c.table, GameId::ig, c.s, c.j, xv);
      }
      item.max_err = std::max(item.max_err, std::fabs(-e_delta - (-mutual_information(joint))));

      // Full expectation over x: conditional mutual information I(Y; X_j | X_S).
      double full_e = 0.0, cmi = 0.0;
      c.table.enumerate_assignments(c.s, [&](const std::vector<int>& sx) {
        const auto base = PartialAssignment::from_coalition(c.s, sx);
        const double ps = c.table.event_prob(base);
        if (ps <= 0.0) return;
        const JointTable jt = c.table.joint_y_feature(c.j, base);
        cmi += ps * mutual_information(jt);
        for (int v = 0; v < c.table.cardinality(c.j); ++v) {
          double pv = 0.0;
          for (int y = 0; y < c.table.n_classes(); ++y) pv += jt.at(y, v);
          if (pv <= 0.0) continue;
          std::vector<int> xv = sx;
          xv[static_cast<std::size_t>(c.j)] = v;
          full_e += ps * pv * exact_delta(c.table, GameId::ig, c.s, c.j, xv);
        }
      });
      item.max_err = std::max(item.max_err, std::fabs(full_e - cmi));
    }
    rep.add(std::move(item));
  }

  // Information-gain attributions sum to the pointwise information gain.
  {
    VerifyItem item{"ig_shapley_sum_is_information_gain", 0.0, tol, false, "random tables"};
    RngStream rng(opts.seed, 4);
    const double flip = opts.inject == "ig-sign" ? -1.0 : 1.0;
    for (int t = 0; t < opts.tables / 2; ++t) {
      const auto c = verify_detail::random_case(rng, t);
      const auto phi = exact_shapley(c.table, GameId::ig, c.x);
      double sum = 0.0;
      for (const auto p : phi) sum += p;
      sum *= flip;
      const double expected = entropy(c.table.marginal_y()) -
                              entropy(c.table.condition(CoalitionMask::full(c.table.d()), c.x));
      item.max_err = std::max(item.max_err, std::fabs(sum - expected));
    }
    rep.add(std::move(item));
  }

  // Gap identity: v_h - v_hstar equals the expected divergence from the
  // pointwise posterior to the coalition posterior, and is nonnegative.
  {
    VerifyItem item{"entropy_gap_is_expected_divergence", 0.0, tol, false, "random tables"};
    RngStream rng(opts.seed, 5);
    for (int t = 0; t < opts.tables / 2; ++t) {
      const auto c = verify_detail::random_case(rng, t);
      const auto g = verify_conditional_gap(c.table, c.s, c.x);
      item.max_err = std::max(item.max_err, std::fabs(g.lhs - g.rhs));
      item.max_err = std::max(item.max_err, std::max(0.0, -g.rhs));
    }
    rep.add(std::move(item));
  }

  // Average-entropy attributions sum to H(Y|x) - H(Y|X).
  {
    VerifyItem item{"hstar_shapley_sum_is_entropy_excess", 0.0, tol, false, "random tables"};
    RngStream rng(opts.seed, 6);
    for (int t = 0; t < opts.tables / 2; ++t) {
      const auto c = verify_detail::random_case(rng, t);
      const auto phi = exact_shapley(c.table, GameId::hstar, c.x);
      double sum = 0.0;
      for (const auto p : phi) sum += p;
      double h_given_all = 0.0;
      c.table.enumerate_assignments(CoalitionMask::full(c.table.d()), [&](const std::vector<int>& z) {
        double pz = 0.0;
        for (int y = 0; y < c.table.n_classes(); ++y) pz += c.table.prob(z, y);
        if (pz <= 0.0) return;
        h_given_all += pz * entropy(c.table.condition(CoalitionMask::full(c.table.d()), z));
      });
      const double expected = entropy(c.table.condition(CoalitionMask::full(c.table.d()), c.x)) - h_given_all;
      item.max_err = std::max(item.max_err, std::fabs(sum - expected));
    }
    rep.add(std::move(item));
  }

  // Expectation bridges: v_ce = -E_{Y|x} loss, v_ig = -E_{Y|x_S} loss, and the
  // information-gain and entropy games are sign twins.
  {
    VerifyItem item{"loss_game_expectation_bridges", 0.0, tol, false, "random tables"};
    RngStream rng(opts.seed, 7);
    for (int t = 0; t < opts.tables / 2; ++t) {
      const auto c = verify_detail::random_case(rng, t);
      const Categorical p_full = c.table.condition(CoalitionMask::full(c.table.d()), c.x);
      const Categorical p_s = c.table.condition(c.s, c.x);
      double e_full = 0.0, e_s = 0.0;
      for (int y = 0; y < c.table.n_classes(); ++y) {
        const double vl = exact_value(c.table, GameId::loss, c.s, c.x, y);
        e_full += p_full[y] * vl;
        e_s += p_s[y] * vl;
      }
      item.max_err = std::max(item.max_err, std::fabs(exact_value(c.table, GameId::ce, c.s, c.x) + e_full));
      item.max_err = std::max(item.max_err, std::fabs(exact_value(c.table, GameId::ig, c.s, c.x) + e_s));
      const double dig = exact_delta(c.table, GameId::ig, c.s, c.j, c.x);
      const double dh = exact_delta(c.table, GameId::h, c.s, c.j, c.x);
      item.max_err = std::max(item.max_err, std::fabs(dig + dh));
    }
    rep.add(std::move(item));
  }

  // Zero deltas exactly when Y is conditionally independent of the feature.
  {
    VerifyItem item{"zero_delta_iff_conditional_independence", 0.0, tol, false,
                    "independent, dependent, and random tables"};
    RngStream rng(opts.seed, 8);
    bool consistent = true;
    for (int t = 0; t < opts.tables / 4; ++t) {
      const int d = 2 + t % 2;
      const ProbTable ci = verify_detail::ci_product_table(rng, d);
      const auto r_ci = test_ci_equivalence(ci, 0, CoalitionMask::empty(d), tol);
      item.max_err = std::max(item.max_err, r_ci.sup_abs_delta);
      consistent = consistent && r_ci.consistent && r_ci.conditionally_independent;

      const auto c = verify_detail::random_case(rng, t);
      const auto r = test_ci_equivalence(c.table, c.j, c.s, tol);
      consistent = consistent && r.consistent;
    }
    rep.add(std::move(item));
    rep.add_flag("ci_equivalence_consistency", consistent, "direction agreement on all tables");
  }

  // Pointwise blind spot: a dependent pair whose delta vanishes at one point.
  {
    const ProbTable t = verify_detail::conspiratorial_table();
    const std::vector<int> x{1, 1};
    double worst = 0.0;
    for (const auto g : {GameId::kl, GameId::ce, GameId::ig, GameId::h})
      worst = std::max(worst, std::fabs(exact_delta(t, g, CoalitionMask::empty(2), 0, x)));
    VerifyItem item{"pointwise_zero_delta_under_dependence", worst, 1e-12, false,
                    "delta at x=(1,1) for all four games"};
    rep.add(std::move(item));
    const double dep = std::fabs(t.condition(CoalitionMask::from_bits(2, 0b01), x)[1] -
                                 t.marginal_y()[1]);
    rep.add_flag("dependence_despite_zero_delta", std::fabs(dep - 0.2) < 1e-12,
                 "|p(y=1|x=1) - p(y=1)| = 0.2");
  }

  // Context-specific independence: knowing the gate is open zeroes the deltas.
  {
    const ProbTable t = verify_detail::max_gate_table();
    CoalitionMask s = CoalitionMask::empty(2);
    s.add(1);
    double worst = 0.0;
    for (const auto g : {GameId::kl, GameId::ce, GameId::ig, GameId::h})
      for (int xv = 0; xv < 2; ++xv)
        worst = std::max(worst, std::fabs(exact_delta(t, g, s, 0, {xv, 1})));
    VerifyItem item{"context_specific_independence_zero_delta", worst, 1e-12, false,
                    "or-gate, context z=1"};
    rep.add(std::move(item));
  }

  // Shapley axioms on the discrete oracle games and on the analytic game.
  {
    double worst = 0.0;
    bool pass = true;
    for (const auto g : {GameId::v0, GameId::kl, GameId::ce, GameId::ig, GameId::h, GameId::hstar, GameId::loss}) {
      const AxiomReport ar = axiom_suite_discrete(g, 10, opts.seed + static_cast<int>(g), tol);
      for (const auto& c : ar.checks) worst = std::max(worst, c.max_err);
      pass = pass && ar.all_pass;
    }
    VerifyItem item{"axioms_discrete_games", worst, tol, false, "efficiency, symmetry, sensitivity, linearity"};
    rep.add(std::move(item));
    const AxiomReport ag = axiom_suite_gaussian(20, opts.seed, tol);
    double worst_g = 0.0;
    for (const auto& c : ag.checks) worst_g = std::max(worst_g, c.max_err);
    VerifyItem item_g{"axioms_analytic_game", worst_g, tol, false, "efficiency, symmetry, sensitivity, linearity"};
    rep.add(std::move(item_g));
  }

  // Engine enumeration against the self-contained analytic enumeration.
  {
    VerifyItem item{"engine_matches_analytic_enumeration", 0.0, tol, false, "d=4, rho in {0, 0.5, 0.9}"};
    RngStream rng(opts.seed, 9);
    for (const double rho : {0.0, 0.5, 0.9}) {
      const GaussianLinearModel m = GaussianLinearModel::random(4, rho, rng.next_u64());
      const AnalyticEntropyGame game(m);
      for (int t = 0; t < 5; ++t) {
        std::vector<double> x(4);
        for (auto& v : x) v = rng.normal();
        const auto engine = shapley_exact(game, x, RngStream(opts.seed, 77));
        const auto oracle = m.oracle_shapley_hstar(x);
        for (int j = 0; j < 4; ++j)
          item.max_err = std::max(item.max_err,
                                  std::fabs(engine.phi[static_cast<std::size_t>(j)] - oracle[static_cast<std::size_t>(j)]));
      }
    }
    rep.add(std::move(item));
  }

  // Conformal order-statistic indices at pinned cases.
  {
    RngStream rng(opts.seed, 10);
    std::vector<double> nine(9);
    for (auto& v : nine) v = rng.normal();
    const ConformalBand b9 = conformal_band(nine, 0.2);
    std::vector<double> thousand(1000);
    for (auto& v : thousand) v = rng.normal();
    const ConformalBand b1000 = conformal_band(thousand, 0.1);
    rep.add_flag("conformal_band_indices",
                 b9.l_index == 1 && b9.u_index == 9 && b1000.l_index == 51 && b1000.u_index == 951,
                 "(n=9, alpha=0.2) -> (1,9); (n=1000, alpha=0.1) -> (51,951)");
  }

  return rep;
}

}  // namespace entshap
