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
#include "entshap/info.hpp"
#include "entshap/prob_table.hpp"

namespace entshap {

// Uncertainty games with exact discrete semantics. All values in nats.
//   v0:    E[Y | x_S] with the outcome read as its class index
//   kl:    -KL(p(Y|x) || p(Y|x_S))
//   ce:    -H(p(Y|x), p(Y|x_S))
//   ig:    -H(Y | x_S)
//   h:     +H(Y | x_S)
//   hstar: E[ H(p(Y|X)) | X_S = x_S ]
//   loss:  -log p(y_true | x_S)
enum class GameId { v0, kl, ce, ig, h, hstar, loss };

inline const char* game_name(GameId g) {
  switch (g) {
    case GameId::v0: return "v0";
    case GameId::kl: return "kl";
    case GameId::ce: return "ce";
    case GameId::ig: return "ig";
    case GameId::h: return "h";
    case GameId::hstar: return "hstar";
    case GameId::loss: return "loss";
  }
  return "?";
}

inline GameId parse_game_id(const std::string& s) {
  if (s == "v0") return GameId::v0;
  if (s == "kl") return GameId::kl;
  if (s == "ce") return GameId::ce;
  if (s == "ig") return GameId::ig;
  if (s == "h") return GameId::h;
  if (s == "hstar") return GameId::hstar;
  if (s == "loss") return GameId::loss;
  throw_config("unknown game '" + s + "' (expected v0, kl, ce, ig, h, hstar, loss)");
}

inline constexpr int kMaxExactDim = 12;

inline double exact_value(const ProbTable& t, GameId game, const CoalitionMask& s,
                          const std::vector<int>& x, std::optional<int> y_true = std::nullopt) {
  require_config(s.dim() == t.d(), "oracle: coalition dimension mismatch");
  const PartialAssignment a = PartialAssignment::from_coalition(s, x);
  switch (game) {
    case GameId::v0: {
      const Categorical p = t.condition(a);
      double e = 0.0;
      for (int y = 0; y < p.n_classes(); ++y) e += static_cast<double>(y) * p[y];
      return e;
    }
    case GameId::kl: {
      const Categorical p_full = t.condition(CoalitionMask::full(t.d()), x);
      return -kl_divergence(p_full, t.condition(a));
    }
    case GameId::ce: {
      const Categorical p_full = t.condition(CoalitionMask::full(t.d()), x);
      return -cross_entropy(p_full, t.condition(a));
    }
    case GameId::ig:
      return -entropy(t.condition(a));
    case GameId::h:
      return entropy(t.condition(a));
    case GameId::hstar: {
      // E over completions z ~ p(.|x_S) of H(p(Y|z)).
      double acc = 0.0;
      double total = 0.0;
      t.for_each_completion(a, [&](const std::vector<int>& z) {
        double pz = 0.0;
        for (int y = 0; y < t.n_classes(); ++y) pz += t.prob(z, y);
        if (pz <= 0.0) return;
        const Categorical pyz = t.condition(CoalitionMask::full(t.d()), z);
        acc += pz * entropy(pyz);
        total += pz;
      });
      require_data(total > 0.0, "oracle: conditioning event has zero probability");
      return acc / total;
    }
    case GameId::loss: {
      require_config(y_true.has_value(), "oracle: loss game requires y_true");
      const Categorical p = t.condition(a);
      require_config(*y_true >= 0 && *y_true < p.n_classes(), "oracle: y_true out of range");
      require_data(p[*y_true] > 0.0, "oracle: observed outcome has zero conditional probability");
      return -std::log(p[*y_true]);
    }
  }
  throw_config("oracle: unknown game");
}

inline double exact_delta(const ProbTable& t, GameId game, const CoalitionMask& s, int j,
                          const std::vector<int>& x, std::optional<int> y_true = std::nullopt) {
  require_config(j >= 0 && j < t.d(), "oracle: feature index out of range");
  require_config(!s.contains(j), "oracle: feature already in coalition");
  return exact_value(t, game, s.with(j), x, y_true) - exact_value(t, game, s, x, y_true);
}

namespace detail {

// Per-subset weight |S|!(d-|S|-1)!/d! computed multiplicatively: safe for d <= 20ish.
inline std::vector<double> shapley_weights_by_card(int d) {
  std::vector<double> w(static_cast<std::size_t>(d), 0.0);
  for (int s = 0; s < d; ++s) {
    // 1 / (d * C(d-1, s))
    double binom = 1.0;
    for (int i = 1; i <= s; ++i) binom *= static_cast<double>(d - i) / static_cast<double>(i);
    w[static_cast<std::size_t>(s)] = 1.0 / (static_cast<double>(d) * binom);
  }
  return w;
}

}  // namespace detail

// Exact Shapley values by subset enumeration; d <= 12 (2^d game evaluations, cached).
inline std::vector<double> exact_shapley(const ProbTable& t, GameId game, const std::vector<int>& x,
                                         std::optional<int> y_true = std::nullopt) {
  const int d = t.d();
  if (d > kMaxExactDim)
    throw_capacity("oracle: exact enumeration supports at most " + std::to_string(kMaxExactDim) +
                   " features, got " + std::to_string(d));
  const std::uint64_t n_masks = std::uint64_t{1} << d;
  std::vector<double> value(n_masks, 0.0);
  for (std::uint64_t m = 0; m < n_masks; ++m)
    value[m] = exact_value(t, game, CoalitionMask::from_bits(d, m), x, y_true);
  const auto w = detail::shapley_weights_by_card(d);
  std::vector<double> phi(static_cast<std::size_t>(d), 0.0);
  for (std::uint64_t m = 0; m < n_masks; ++m) {
    const int card = std::popcount(m);
    for (int j = 0; j < d; ++j) {
      if (m & (std::uint64_t{1} << j)) continue;
      phi[static_cast<std::size_t>(j)] +=
          w[static_cast<std::size_t>(card)] * (value[m | (std::uint64_t{1} << j)] - value[m]);
    }
  }
  return phi;
}

// Both sides of the gap identity: v_h(S,x) - v_hstar(S,x) versus the expected
// KL from the pointwise posterior to the coalition posterior.
struct GapIdentity {
  double lhs = 0.0;
  double rhs = 0.0;
};

inline GapIdentity verify_conditional_gap(const ProbTable& t, const CoalitionMask& s,
                                          const std::vector<int>& x) {
  GapIdentity g;
  g.lhs = exact_value(t, GameId::h, s, x) - exact_value(t, GameId::hstar, s, x);
  const PartialAssignment a = PartialAssignment::from_coalition(s, x);
  const Categorical p_s = t.condition(a);
  double acc = 0.0;
  double total = 0.0;
  t.for_each_completion(a, [&](const std::vector<int>& z) {
    double pz = 0.0;
    for (int y = 0; y < t.n_classes(); ++y) pz += t.prob(z, y);
    if (pz <= 0.0) return;
    acc += pz * kl_divergence(t.condition(CoalitionMask::full(t.d()), z), p_s);
    total += pz;
  });
  require_data(total > 0.0, "oracle: conditioning event has zero probability");
  g.rhs = acc / total;
  return g;
}

// Zero marginal contribution versus conditional independence, checked over every
// point consistent with the coalition. sup_abs_delta is over all four
// distribution games; ci is the direct factorization test.
struct CiEquivalence {
  double sup_abs_delta = 0.0;
  bool deltas_all_zero = false;
  bool conditionally_independent = false;
  bool consistent = false;
};

inline CiEquivalence test_ci_equivalence(const ProbTable& t, int j, const CoalitionMask& s,
                                         double tol = 1e-10) {
  require_config(!s.contains(j), "oracle: feature is in the conditioning set");
  CiEquivalence r;
  const GameId games[] = {GameId::kl, GameId::ce, GameId::ig, GameId::h};
  t.enumerate_assignments(s.with(j), [&](const std::vector<int>& sx) {
    PartialAssignment ext = PartialAssignment::from_coalition(s.with(j), sx);
    if (t.event_prob(ext) <= 0.0) return;
    for (const auto g : games) {
      const double delta = exact_delta(t, g, s, j, sx);
      r.sup_abs_delta = std::max(r.sup_abs_delta, std::fabs(delta));
    }
  });
  r.deltas_all_zero = r.sup_abs_delta <= tol;
  r.conditionally_independent = t.cond_independent_y(j, s, tol);
  r.consistent = (r.deltas_all_zero == r.conditionally_independent);
  return r;
}

}  // namespace entshap
