#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "entshap/coalition.hpp"
#include "entshap/dataset.hpp"
#include "entshap/error.hpp"
#include "entshap/games.hpp"
#include "entshap/io.hpp"
#include "entshap/parallel.hpp"
#include "entshap/rng.hpp"

namespace entshap {

namespace shapley_detail {

inline constexpr std::uint64_t kTagEval = 0xE7A1ULL;
inline constexpr std::uint64_t kTagPerm = 0x9E83ULL;

// Game evaluation keyed by coalition identity: the stream a coalition sees is a
// pure function of (instance stream, mask), so revisits are bit-identical and a
// memo cache is sound.
class EvalCache {
public:
  EvalCache(const Game& game, const RngStream& instance_stream, std::span<const double> x)
      : game_(game), eval_root_(instance_stream.derive(kTagEval)), x_(x) {}

  double operator()(const CoalitionMask& s) {
    const std::uint64_t key = s.hash64();
    const auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const double v = game_.value(s, x_, eval_root_.derive(key));
    cache_.emplace(key, v);
    return v;
  }

  std::size_t size() const { return cache_.size(); }

private:
  const Game& game_;
  RngStream eval_root_;
  std::span<const double> x_;
  std::unordered_map<std::uint64_t, double> cache_;
};

}  // namespace shapley_detail

// Per-subset weight |S|!(d-|S|-1)!/d! = 1/(d * C(d-1, |S|)).
inline double shapley_weight(int d, int s) {
  require_config(d >= 1 && s >= 0 && s < d, "shapley_weight: need 0 <= |S| < d");
  double binom = 1.0;
  for (int i = 1; i <= s; ++i) binom *= static_cast<double>(d - i) / static_cast<double>(i);
  return 1.0 / (static_cast<double>(d) * binom);
}

// Fraction of total Eq.-1 weight carried by subsets with |S| <= lo or |S| >= hi.
// The weight profile is extrema-heavy: per-cardinality mass is uniform 1/d, so a
// small tail fraction of subsets carries a large share of the weight.
struct MassCoverage {
  double subset_fraction = 0.0;
  double weight_mass = 0.0;
};

inline MassCoverage coalition_mass_coverage(int d, int lo, int hi) {
  require_config(d >= 1 && lo >= 0 && hi <= d - 1 && lo < hi, "mass coverage: need 0 <= lo < hi <= d-1");
  // mass: each cardinality s in [0, d-1] carries exactly 1/d.
  MassCoverage mc;
  mc.weight_mass = static_cast<double>(lo + 1 + (d - hi)) / static_cast<double>(d);
  // subset fraction via log-binomials to stay finite at d ~ 100.
  std::vector<double> logfact(static_cast<std::size_t>(d) + 1, 0.0);
  for (int i = 1; i <= d; ++i)
    logfact[static_cast<std::size_t>(i)] = logfact[static_cast<std::size_t>(i - 1)] + std::log(static_cast<double>(i));
  auto log_binom = [&](int n, int k) {
    return logfact[static_cast<std::size_t>(n)] - logfact[static_cast<std::size_t>(k)] -
           logfact[static_cast<std::size_t>(n - k)];
  };
  const double log_total = static_cast<double>(d - 1) * std::log(2.0);
  double frac = 0.0;
  for (int s = 0; s <= d - 1; ++s)
    if (s <= lo || s >= hi) frac += std::exp(log_binom(d - 1, s) - log_total);
  mc.subset_fraction = frac;
  return mc;
}

struct ShapleyResult {
  std::vector<double> phi;
  std::vector<double> stderr_phi;  // empty in exact mode
  double baseline = 0.0;           // v(empty)
  double full_value = 0.0;         // v(full)
  std::int64_t evaluations = 0;
};

inline constexpr int kMaxEnumerationDim = 12;

// Exact Shapley attribution by full subset enumeration (2^d evaluations, d <= 12).
inline ShapleyResult shapley_exact(const Game& game, std::span<const double> x,
                                   const RngStream& instance_stream) {
  const int d = game.dim();
  require_config(static_cast<int>(x.size()) == d, "shapley: point dimension mismatch");
  if (d > kMaxEnumerationDim)
    throw_capacity("shapley: exact enumeration supports at most " + std::to_string(kMaxEnumerationDim) +
                   " features (got " + std::to_string(d) + "); use the sampling estimator");
  shapley_detail::EvalCache eval(game, instance_stream, x);
  const std::uint64_t n_masks = std::uint64_t{1} << d;
  std::vector<double> value(n_masks);
  for (std::uint64_t m = 0; m < n_masks; ++m) value[m] = eval(CoalitionMask::from_bits(d, m));
  ShapleyResult r;
  r.phi.assign(static_cast<std::size_t>(d), 0.0);
  for (std::uint64_t m = 0; m + 1 < n_masks; ++m) {  // the full mask has no addable feature
    const double w = shapley_weight(d, std::popcount(m));
    for (int j = 0; j < d; ++j) {
      if (m & (std::uint64_t{1} << j)) continue;
      r.phi[static_cast<std::size_t>(j)] += w * (value[m | (std::uint64_t{1} << j)] - value[m]);
    }
  }
  r.baseline = value[0];
  r.full_value = value[n_masks - 1];
  r.evaluations = static_cast<std::int64_t>(n_masks);
  return r;
}

struct CoalitionBudget {
  int n_permutations = 128;
  bool antithetic = true;

  void validate() const {
    require_config(n_permutations >= 1, "budget: need at least one permutation");
    if (antithetic)
      require_config(n_permutations % 2 == 0 && n_permutations >= 2,
                     "budget: antithetic pairing needs an even permutation count >= 2");
  }
};

// Permutation-sampling estimator. Each sampled permutation contributes one
// marginal delta per feature; the per-permutation deltas telescope, so the
// efficiency identity holds exactly for every sample. Antithetic mode walks
// each sampled permutation and its reverse and averages the pair. The standard
// error is the sample SE over independent permutation units (pairs when
// antithetic), reported per feature.
inline ShapleyResult shapley_mc(const Game& game, std::span<const double> x,
                                const CoalitionBudget& budget, const RngStream& instance_stream) {
  budget.validate();
  const int d = game.dim();
  require_config(static_cast<int>(x.size()) == d, "shapley: point dimension mismatch");
  shapley_detail::EvalCache eval(game, instance_stream, x);
  const RngStream perm_root = instance_stream.derive(shapley_detail::kTagPerm);

  const int unit_count = budget.antithetic ? budget.n_permutations / 2 : budget.n_permutations;
  std::vector<double> sum(static_cast<std::size_t>(d), 0.0);
  std::vector<double> sumsq(static_cast<std::size_t>(d), 0.0);
  std::vector<double> unit_phi(static_cast<std::size_t>(d), 0.0);
  std::vector<int> perm(static_cast<std::size_t>(d));

  auto walk = [&](const std::vector<int>& order, std::vector<double>& contrib) {
    CoalitionMask s = CoalitionMask::empty(d);
    double prev = eval(s);
    for (const auto j : order) {
      s.add(j);
      const double cur = eval(s);
      contrib[static_cast<std::size_t>(j)] = cur - prev;
      prev = cur;
    }
  };

  std::vector<double> contrib(static_cast<std::size_t>(d), 0.0);
  std::vector<double> contrib_rev(static_cast<std::size_t>(d), 0.0);
  for (int u = 0; u < unit_count; ++u) {
    RngStream perm_stream = perm_root.derive(static_cast<std::uint64_t>(u));
    for (int j = 0; j < d; ++j) perm[static_cast<std::size_t>(j)] = j;
    shuffle_in_place(perm, perm_stream);
    walk(perm, contrib);
    if (budget.antithetic) {
      std::vector<int> rev(perm.rbegin(), perm.rend());
      walk(rev, contrib_rev);
      for (int j = 0; j < d; ++j)
        unit_phi[static_cast<std::size_t>(j)] =
            0.5 * (contrib[static_cast<std::size_t>(j)] + contrib_rev[static_cast<std::size_t>(j)]);
    } else {
      unit_phi = contrib;
    }
    for (int j = 0; j < d; ++j) {
      sum[static_cast<std::size_t>(j)] += unit_phi[static_cast<std::size_t>(j)];
      sumsq[static_cast<std::size_t>(j)] += unit_phi[static_cast<std::size_t>(j)] * unit_phi[static_cast<std::size_t>(j)];
    }
  }

  ShapleyResult r;
  r.phi.assign(static_cast<std::size_t>(d), 0.0);
  r.stderr_phi.assign(static_cast<std::size_t>(d), 0.0);
  const double nu = static_cast<double>(unit_count);
  for (int j = 0; j < d; ++j) {
    const double mean = sum[static_cast<std::size_t>(j)] / nu;
    r.phi[static_cast<std::size_t>(j)] = mean;
    if (unit_count > 1) {
      double var = (sumsq[static_cast<std::size_t>(j)] - nu * mean * mean) / (nu - 1.0);
      if (var < 0.0) var = 0.0;
      r.stderr_phi[static_cast<std::size_t>(j)] = std::sqrt(var / nu);
    }
  }
  r.baseline = eval(CoalitionMask::empty(d));
  r.full_value = eval(CoalitionMask::full(d));
  r.evaluations = static_cast<std::int64_t>(eval.size());
  return r;
}

enum class AttributionMode { exact, sampling };

inline const char* attribution_mode_name(AttributionMode m) {
  return m == AttributionMode::exact ? "exact" : "sampling";
}

struct AttributionMeta {
  std::string game_id;
  std::string sampler_id;
  std::string mode;
  int n_permutations = 0;
  bool antithetic = true;
  int imputations = 0;
  std::uint64_t seed = 0;
  std::string units = "nats";
  std::vector<std::string> feature_names;
};

// Attribution values for a batch of instances, rows ordered as the input.
struct AttributionMatrix {
  std::int64_t n_rows = 0;
  int d = 0;
  std::vector<double> phi;          // n x d
  std::vector<double> stderr_phi;   // n x d, empty in exact mode
  std::vector<double> baseline;     // per row: v(empty)
  std::vector<double> full_value;   // per row: v(full)
  AttributionMeta meta;

  double at(std::int64_t i, int j) const {
    return phi[static_cast<std::size_t>(i) * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)];
  }

  // Converts stored nats in place to the requested unit.
  void convert_units(const LogBase& base) {
    for (auto& v : phi) v = base.from_nats(v);
    for (auto& v : stderr_phi) v = base.from_nats(v);
    for (auto& v : baseline) v = base.from_nats(v);
    for (auto& v : full_value) v = base.from_nats(v);
    meta.units = base.name();
  }

  json to_json() const {
    json j;
    j["schema_version"] = 1;
    j["kind"] = "attributions";
    j["n_rows"] = n_rows;
    j["d"] = d;
    j["meta"] = {{"game", meta.game_id},
                 {"sampler", meta.sampler_id},
                 {"mode", meta.mode},
                 {"n_permutations", meta.n_permutations},
                 {"antithetic", meta.antithetic},
                 {"imputations", meta.imputations},
                 {"seed", meta.seed},
                 {"units", meta.units},
                 {"feature_names", meta.feature_names}};
    j["phi"] = phi;
    j["stderr"] = stderr_phi;
    j["baseline"] = baseline;
    j["full_value"] = full_value;
    return j;
  }

  static AttributionMatrix from_json(const json& j) {
    try {
      require_data(j.at("kind") == "attributions", "attributions: wrong kind");
      AttributionMatrix a;
      a.n_rows = j.at("n_rows").get<std::int64_t>();
      a.d = j.at("d").get<int>();
      a.phi = j.at("phi").get<std::vector<double>>();
      a.stderr_phi = j.at("stderr").get<std::vector<double>>();
      a.baseline = j.at("baseline").get<std::vector<double>>();
      a.full_value = j.at("full_value").get<std::vector<double>>();
      const auto& m = j.at("meta");
      a.meta.game_id = m.at("game").get<std::string>();
      a.meta.sampler_id = m.at("sampler").get<std::string>();
      a.meta.mode = m.at("mode").get<std::string>();
      a.meta.n_permutations = m.at("n_permutations").get<int>();
      a.meta.antithetic = m.at("antithetic").get<bool>();
      a.meta.imputations = m.at("imputations").get<int>();
      a.meta.seed = m.at("seed").get<std::uint64_t>();
      a.meta.units = m.at("units").get<std::string>();
      a.meta.feature_names = m.at("feature_names").get<std::vector<std::string>>();
      require_data(a.phi.size() == static_cast<std::size_t>(a.n_rows) * static_cast<std::size_t>(a.d),
                   "attributions: phi size mismatch");
      return a;
    } catch (const json::exception& e) {
      throw_data(std::string("attributions: malformed JSON: ") + e.what());
    }
  }

  std::string to_csv() const {
    std::string out = "row";
    for (const auto& name : meta.feature_names) out += "," + name;
    const bool with_se = !stderr_phi.empty();
    if (with_se)
      for (const auto& name : meta.feature_names) out += ",se_" + name;
    out += ",baseline,full_value\n";
    for (std::int64_t i = 0; i < n_rows; ++i) {
      out += detail::format_double(static_cast<double>(i));
      for (int j = 0; j < d; ++j) out += "," + detail::format_double(at(i, j));
      if (with_se)
        for (int j = 0; j < d; ++j)
          out += "," + detail::format_double(
                           stderr_phi[static_cast<std::size_t>(i) * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)]);
      out += "," + detail::format_double(baseline[static_cast<std::size_t>(i)]);
      out += "," + detail::format_double(full_value[static_cast<std::size_t>(i)]);
      out.push_back('\n');
    }
    return out;
  }
};

// Attributes every requested row. Row i uses the stream derived from (seed, i):
// outputs are independent of evaluation order and thread count, and a row's
// attribution does not depend on which other rows are in the batch.
inline AttributionMatrix attribute_dataset(const Game& game, const Dataset& ds,
                                           const std::vector<std::int64_t>& rows, AttributionMode mode,
                                           const CoalitionBudget& budget, std::uint64_t seed,
                                           int threads = 1) {
  require_config(game.dim() == ds.d, "attribute: game and dataset dimension mismatch");
  require_data(!rows.empty(), "attribute: no rows selected");
  for (const auto r : rows) {
    require_data(r >= 0 && r < ds.n, "attribute: row index out of range");
    require_data(ds.row_complete(r), "attribute: explained rows must have no missing cells");
  }
  if (mode == AttributionMode::sampling) budget.validate();

  AttributionMatrix out;
  out.n_rows = static_cast<std::int64_t>(rows.size());
  out.d = ds.d;
  out.phi.assign(static_cast<std::size_t>(out.n_rows) * static_cast<std::size_t>(ds.d), 0.0);
  if (mode == AttributionMode::sampling)
    out.stderr_phi.assign(out.phi.size(), 0.0);
  out.baseline.assign(static_cast<std::size_t>(out.n_rows), 0.0);
  out.full_value.assign(static_cast<std::size_t>(out.n_rows), 0.0);
  out.meta.game_id = game.id();
  out.meta.mode = attribution_mode_name(mode);
  out.meta.n_permutations = mode == AttributionMode::sampling ? budget.n_permutations : 0;
  out.meta.antithetic = budget.antithetic;
  out.meta.seed = seed;
  out.meta.feature_names = ds.feature_names;
  if (const auto* eg = dynamic_cast<const EstimatedGame*>(&game)) {
    out.meta.sampler_id = eg->sampler().id();
    out.meta.imputations = eg->imputations();
  } else {
    out.meta.sampler_id = "none";
    out.meta.imputations = 0;
  }

  const RngStream root(seed, 0xA77BULL);
  parallel_for(static_cast<std::int64_t>(rows.size()), threads, [&](std::int64_t k) {
    const std::int64_t row = rows[static_cast<std::size_t>(k)];
    const RngStream instance_stream = root.derive(static_cast<std::uint64_t>(row));
    const auto x = ds.row(row);
    const ShapleyResult r = mode == AttributionMode::exact
                                ? shapley_exact(game, x, instance_stream)
                                : shapley_mc(game, x, budget, instance_stream);
    for (int j = 0; j < ds.d; ++j)
      out.phi[static_cast<std::size_t>(k) * static_cast<std::size_t>(ds.d) + static_cast<std::size_t>(j)] =
          r.phi[static_cast<std::size_t>(j)];
    if (mode == AttributionMode::sampling)
      for (int j = 0; j < ds.d; ++j)
        out.stderr_phi[static_cast<std::size_t>(k) * static_cast<std::size_t>(ds.d) + static_cast<std::size_t>(j)] =
            r.stderr_phi[static_cast<std::size_t>(j)];
    out.baseline[static_cast<std::size_t>(k)] = r.baseline;
    out.full_value[static_cast<std::size_t>(k)] = r.full_value;
  });
  return out;
}

}  // namespace entshap
