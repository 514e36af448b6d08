#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "entshap/coalition.hpp"
#include "entshap/error.hpp"
#include "entshap/games.hpp"
#include "entshap/gaussian_model.hpp"
#include "entshap/oracle.hpp"
#include "entshap/prob_table.hpp"
#include "entshap/rng.hpp"
#include "entshap/shapley.hpp"

namespace entshap {

struct AxiomCheck {
  std::string name;
  double max_err = 0.0;
  double tol = 0.0;
  bool pass = false;
};

struct AxiomReport {
  std::vector<AxiomCheck> checks;
  int trials = 0;
  bool all_pass = false;

  void finalize(double tol) {
    all_pass = true;
    for (auto& c : checks) {
      c.tol = tol;
      c.pass = c.max_err <= tol;
      all_pass = all_pass && c.pass;
    }
  }
};

namespace axiom_detail {

inline std::vector<double> shapley_from_mask_values(int d, const std::vector<double>& value) {
  std::vector<double> phi(static_cast<std::size_t>(d), 0.0);
  const std::uint64_t n_masks = std::uint64_t{1} << d;
  for (std::uint64_t m = 0; m + 1 < n_masks; ++m) {  // the full mask has no addable feature
    const double w = shapley_weight(d, std::popcount(m));
    for (int j = 0; j < d; ++j) {
      if (m & (std::uint64_t{1} << j)) continue;
      phi[static_cast<std::size_t>(j)] += w * (value[m | (std::uint64_t{1} << j)] - value[m]);
    }
  }
  return phi;
}

// Averages the table with its image under swapping features 0 and 1, making the
// two features exchangeable by construction.
inline ProbTable symmetrize_first_two(const ProbTable& t) {
  const int d = t.d();
  require_config(d >= 2 && t.cardinality(0) == t.cardinality(1), "symmetrize: first two cardinalities differ");
  std::vector<int> cards(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) cards[static_cast<std::size_t>(j)] = t.cardinality(j);
  std::vector<double> acc(t.cells().size(), 0.0);
  t.enumerate_assignments(CoalitionMask::full(d), [&](const std::vector<int>& x) {
    std::vector<int> xs = x;
    std::swap(xs[0], xs[1]);
    for (int y = 0; y < t.n_classes(); ++y) {
      const std::size_t idx = t.cell_index(x, y);
      acc[idx] = 0.5 * (t.prob(x, y) + t.prob(xs, y));
    }
  });
  return ProbTable::from_probs(std::move(cards), t.n_classes(), std::move(acc));
}

// Appends an independent binary feature (the null player) with marginal q.
inline ProbTable append_null_feature(const ProbTable& t, double q1 = 0.4) {
  const int d = t.d();
  std::vector<int> cards(static_cast<std::size_t>(d) + 1);
  for (int j = 0; j < d; ++j) cards[static_cast<std::size_t>(j)] = t.cardinality(j);
  cards[static_cast<std::size_t>(d)] = 2;
  ProbTable out = ProbTable::from_probs(
      cards, t.n_classes(),
      std::vector<double>(t.cells().size() * 2, 1.0 / static_cast<double>(t.cells().size() * 2)));
  // Overwrite the uniform placeholder cell by cell.
  std::vector<double> probs(t.cells().size() * 2, 0.0);
  const double q[2] = {1.0 - q1, q1};
  t.enumerate_assignments(CoalitionMask::full(d), [&](const std::vector<int>& x) {
    std::vector<int> ext(x.begin(), x.end());
    ext.push_back(0);
    for (int v = 0; v < 2; ++v) {
      ext[static_cast<std::size_t>(d)] = v;
      for (int y = 0; y < t.n_classes(); ++y)
        probs[out.cell_index(ext, y)] = t.prob(x, y) * q[v];
    }
  });
  return ProbTable::from_probs(std::move(cards), t.n_classes(), std::move(probs));
}

inline void track(AxiomCheck& c, double err) { c.max_err = std::max(c.max_err, std::fabs(err)); }

}  // namespace axiom_detail

// Efficiency, symmetry, sensitivity, linearity for an exact discrete game,
// each verified on constructed tables where the axiom's premise holds exactly.
inline AxiomReport axiom_suite_discrete(GameId game, int trials, std::uint64_t seed, double tol = 1e-10) {
  require_config(trials >= 1, "axiom suite: need at least one trial");
  AxiomReport rep;
  rep.trials = trials;
  rep.checks = {{"efficiency", 0, 0, false},
                {"symmetry", 0, 0, false},
                {"sensitivity", 0, 0, false},
                {"linearity", 0, 0, false}};
  auto& eff = rep.checks[0];
  auto& sym = rep.checks[1];
  auto& sens = rep.checks[2];
  auto& lin = rep.checks[3];

  for (int t = 0; t < trials; ++t) {
    RngStream rng(seed, static_cast<std::uint64_t>(t) + 0xA10C0ULL);
    const int d = 2 + t % 3;
    const int classes = 2 + t % 2;
    const ProbTable table = ProbTable::random(d, classes, rng);
    std::vector<int> x(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j)
      x[static_cast<std::size_t>(j)] = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(table.cardinality(j))));
    const std::optional<int> y_true =
        game == GameId::loss ? std::optional<int>(static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(classes))))
                             : std::nullopt;

    // Efficiency: attributions sum to v(full) - v(empty).
    {
      const auto phi = exact_shapley(table, game, x, y_true);
      double sum = 0.0;
      for (const auto p : phi) sum += p;
      const double span = exact_value(table, game, CoalitionMask::full(d), x, y_true) -
                          exact_value(table, game, CoalitionMask::empty(d), x, y_true);
      axiom_detail::track(eff, sum - span);
    }

    // Symmetry: exchangeable features at an exchangeable point get equal credit.
    {
      const ProbTable st = axiom_detail::symmetrize_first_two(table);
      std::vector<int> xs = x;
      xs[1] = xs[0];
      const auto phi = exact_shapley(st, game, xs, y_true);
      axiom_detail::track(sym, phi[0] - phi[1]);
    }

    // Sensitivity: an appended independent feature gets exactly zero.
    {
      const ProbTable ext = axiom_detail::append_null_feature(table);
      std::vector<int> xe = x;
      xe.push_back(static_cast<int>(rng.uniform_below(2)));
      const auto phi = exact_shapley(ext, game, xe, y_true);
      axiom_detail::track(sens, phi[static_cast<std::size_t>(d)]);
    }

    // Linearity: phi(a v1 + b v2) = a phi(v1) + b phi(v2), second game cycled.
    {
      const GameId other = game == GameId::h ? GameId::ig : GameId::h;
      const double a = 0.7, b = -1.3;
      const std::uint64_t n_masks = std::uint64_t{1} << d;
      std::vector<double> v1(n_masks), v2(n_masks), vc(n_masks);
      const std::optional<int> y2 = std::nullopt;
      for (std::uint64_t m = 0; m < n_masks; ++m) {
        const auto s = CoalitionMask::from_bits(d, m);
        v1[m] = exact_value(table, game, s, x, y_true);
        v2[m] = exact_value(table, other, s, x, y2);
        vc[m] = a * v1[m] + b * v2[m];
      }
      const auto p1 = axiom_detail::shapley_from_mask_values(d, v1);
      const auto p2 = axiom_detail::shapley_from_mask_values(d, v2);
      const auto pc = axiom_detail::shapley_from_mask_values(d, vc);
      for (int j = 0; j < d; ++j)
        axiom_detail::track(lin, pc[static_cast<std::size_t>(j)] -
                                     (a * p1[static_cast<std::size_t>(j)] + b * p2[static_cast<std::size_t>(j)]));
    }
  }
  rep.finalize(tol);
  return rep;
}

// Same four axioms against the closed-form conditional-entropy game.
inline AxiomReport axiom_suite_gaussian(int trials, std::uint64_t seed, double tol = 1e-10) {
  require_config(trials >= 1, "axiom suite: need at least one trial");
  AxiomReport rep;
  rep.trials = trials;
  rep.checks = {{"efficiency", 0, 0, false},
                {"symmetry", 0, 0, false},
                {"sensitivity", 0, 0, false},
                {"linearity", 0, 0, false}};
  auto& eff = rep.checks[0];
  auto& sym = rep.checks[1];
  auto& sens = rep.checks[2];
  auto& lin = rep.checks[3];

  const double rhos[3] = {0.0, 0.5, -0.3};
  for (int t = 0; t < trials; ++t) {
    RngStream rng(seed, static_cast<std::uint64_t>(t) + 0xA10C1ULL);
    const int d = 2 + t % 3;
    const double rho = rhos[t % 3];
    std::vector<double> gamma(static_cast<std::size_t>(d)), beta(static_cast<std::size_t>(d), 0.0);
    for (auto& g : gamma) g = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (0.5 + rng.uniform());
    std::vector<double> x(static_cast<std::size_t>(d));
    for (auto& v : x) v = rng.normal();
    const RngStream stream(seed, 0xDEAD);

    {
      const AnalyticEntropyGame g(GaussianLinearModel::make(beta, gamma, rho));
      const auto r = shapley_exact(g, x, stream);
      double sum = 0.0;
      for (const auto p : r.phi) sum += p;
      axiom_detail::track(eff, sum - (r.full_value - r.baseline));
    }

    {
      std::vector<double> g2 = gamma;
      g2[1] = g2[0];
      std::vector<double> x2 = x;
      x2[1] = x2[0];
      const AnalyticEntropyGame g(GaussianLinearModel::make(beta, g2, 0.0));
      const auto r = shapley_exact(g, x2, stream);
      axiom_detail::track(sym, r.phi[0] - r.phi[1]);
    }

    {
      std::vector<double> g2 = gamma;
      g2[static_cast<std::size_t>(d - 1)] = 0.0;
      const AnalyticEntropyGame g(GaussianLinearModel::make(beta, g2, 0.0));
      const auto r = shapley_exact(g, x, stream);
      axiom_detail::track(sens, r.phi[static_cast<std::size_t>(d - 1)]);
    }

    {
      std::vector<double> gb(static_cast<std::size_t>(d));
      for (auto& g : gb) g = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (0.5 + rng.uniform());
      auto g1 = std::make_shared<AnalyticEntropyGame>(GaussianLinearModel::make(beta, gamma, rho));
      auto g2 = std::make_shared<AnalyticEntropyGame>(GaussianLinearModel::make(beta, gb, rho));
      const double a = 0.7, b = -1.3;
      const LinearCombinationGame gc(a, g1, b, g2);
      const auto r1 = shapley_exact(*g1, x, stream);
      const auto r2 = shapley_exact(*g2, x, stream);
      const auto rc = shapley_exact(gc, x, stream);
      for (int j = 0; j < d; ++j)
        axiom_detail::track(lin, rc.phi[static_cast<std::size_t>(j)] -
                                     (a * r1.phi[static_cast<std::size_t>(j)] + b * r2.phi[static_cast<std::size_t>(j)]));
    }
  }
  rep.finalize(tol);
  return rep;
}

}  // namespace entshap
