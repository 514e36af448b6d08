#pragma once

#include <algorithm>
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
#include "entshap/metrics.hpp"
#include "entshap/rng.hpp"
#include "entshap/samplers.hpp"
#include "entshap/shapley.hpp"

namespace entshap {

// Two balanced Gaussian blobs, every feature informative with per-feature
// separations delta_j spread over [0.8, 1.3].
inline Dataset make_blobs(std::int64_t n, int d, std::uint64_t seed) {
  require_data(n >= 2, "blobs: need at least two rows");
  require_config(d >= 1, "blobs: need at least one feature");
  Dataset ds = Dataset::make(n, d);
  ds.target.emplace(static_cast<std::size_t>(n), 0.0);
  ds.target_name = "label";
  RngStream root(seed, 0xB10B5ULL);
  for (std::int64_t i = 0; i < n; ++i) {
    RngStream rng = root.derive(static_cast<std::uint64_t>(i));
    const int cls = static_cast<int>(i % 2);
    (*ds.target)[static_cast<std::size_t>(i)] = static_cast<double>(cls);
    for (int j = 0; j < d; ++j) {
      const double delta = 0.8 + (d > 1 ? 0.5 * static_cast<double>(j) / static_cast<double>(d - 1) : 0.0);
      const double center = (cls == 1 ? 0.5 : -0.5) * delta;
      ds.set(i, j, center + rng.normal());
    }
  }
  return ds;
}

// Entropy attribution as a shift detector. Per replicate: fit a classifier on a
// train split, attribute predictive entropy on the clean test split and on a
// copy whose single perturbed feature got N(0, (noise_scale * sigma_f)^2) added,
// then rank features by the change in mean |phi|. The perturbed feature should
// rank first. noise_scale 0 must reproduce the clean attributions bit-exactly.
struct ShiftConfig {
  std::int64_t n = 600;
  int d = 6;
  int replicates = 20;
  double noise_scale = 0.5;
  int perturb_feature = -1;  // -1: drawn per replicate
  double test_fraction = 0.2;
  std::string sampler = "marginal";
  int imputations = 8;
  ForestHyperParams forest;
  std::uint64_t seed = 1;
  int threads = 1;

  json to_json() const {
    return json{{"n", n},
                {"d", d},
                {"replicates", replicates},
                {"noise_scale", noise_scale},
                {"perturb_feature", perturb_feature},
                {"test_fraction", test_fraction},
                {"sampler", sampler},
                {"imputations", imputations},
                {"forest",
                 {{"n_trees", forest.n_trees},
                  {"max_depth", forest.max_depth},
                  {"min_leaf", forest.min_leaf},
                  {"mtry", forest.mtry}}},
                {"seed", seed}};
  }
};

struct ShiftRepRecord {
  int rep = 0;
  int perturbed = -1;
  int top_shift_feature = -1;
  bool hit = false;
  std::vector<double> shift_by_feature;
};

struct ShiftOutcome {
  ExperimentResult result;
  std::vector<ShiftRepRecord> reps;
  int hits = 0;
};

inline ShiftOutcome run_shift(const ShiftConfig& cfg) {
  require_config(cfg.replicates >= 1, "shift: need at least one replicate");
  require_config(cfg.noise_scale >= 0.0, "shift: noise scale must be nonnegative");
  require_config(cfg.d >= 2 && cfg.d <= kMaxEnumerationDim,
                 "shift: d must lie in [2, 12] for exact attribution");
  require_config(cfg.perturb_feature >= -1 && cfg.perturb_feature < cfg.d,
                 "shift: perturbed feature out of range");

  ShiftOutcome out;
  out.result.name = "shift";
  out.result.config = cfg.to_json();
  out.result.finalize_hash();

  const RngStream root(cfg.seed, 0x541F7ULL);
  for (int rep = 0; rep < cfg.replicates; ++rep) {
    const RngStream rep_stream = root.derive(static_cast<std::uint64_t>(rep));
    const Dataset all = make_blobs(cfg.n, cfg.d, rep_stream.derive(1).key());
    const SplitHalf split = split_fraction(all.n, cfg.test_fraction, rep_stream.derive(2).key());
    const Dataset train = all.subset(split.first);
    Dataset test = all.subset(split.second);

    const auto forest = std::make_shared<ForestModel>(
        ForestModel::fit(train, Task::classification, cfg.forest, rep_stream.derive(3).key(), cfg.threads));

    auto background = std::make_shared<Dataset>(train);
    background->target.reset();
    const auto sampler = make_sampler(cfg.sampler, background, 0);
    const auto game = make_hstar_total_game(forest, sampler, cfg.imputations);

    ShiftRepRecord rec;
    rec.rep = rep;
    RngStream pick_stream = rep_stream.derive(4);
    rec.perturbed = cfg.perturb_feature >= 0
                        ? cfg.perturb_feature
                        : static_cast<int>(pick_stream.uniform_below(static_cast<std::uint64_t>(cfg.d)));

    double f_mean = 0.0;
    for (std::int64_t i = 0; i < train.n; ++i) f_mean += train.at(i, rec.perturbed);
    f_mean /= static_cast<double>(train.n);
    double f_var = 0.0;
    for (std::int64_t i = 0; i < train.n; ++i) {
      const double dv = train.at(i, rec.perturbed) - f_mean;
      f_var += dv * dv;
    }
    f_var /= static_cast<double>(train.n - 1);
    const double noise_sd = cfg.noise_scale * std::sqrt(f_var);

    Dataset perturbed = test;
    RngStream noise_stream = rep_stream.derive(5);
    for (std::int64_t i = 0; i < perturbed.n; ++i)
      if (noise_sd > 0.0)
        perturbed.set(i, rec.perturbed, perturbed.at(i, rec.perturbed) + noise_sd * noise_stream.normal());

    std::vector<std::int64_t> rows(static_cast<std::size_t>(test.n));
    for (std::int64_t i = 0; i < test.n; ++i) rows[static_cast<std::size_t>(i)] = i;
    const std::uint64_t attr_seed = rep_stream.derive(6).key();
    const auto base = attribute_dataset(*game, test, rows, AttributionMode::exact, CoalitionBudget{},
                                        attr_seed, cfg.threads);
    const auto shifted = attribute_dataset(*game, perturbed, rows, AttributionMode::exact,
                                           CoalitionBudget{}, attr_seed, cfg.threads);

    rec.shift_by_feature.assign(static_cast<std::size_t>(cfg.d), 0.0);
    for (int j = 0; j < cfg.d; ++j) {
      double mb = 0.0, ms = 0.0;
      for (std::int64_t i = 0; i < base.n_rows; ++i) {
        mb += std::fabs(base.at(i, j));
        ms += std::fabs(shifted.at(i, j));
      }
      rec.shift_by_feature[static_cast<std::size_t>(j)] =
          std::fabs(ms - mb) / static_cast<double>(base.n_rows);
    }
    rec.top_shift_feature = static_cast<int>(
        std::max_element(rec.shift_by_feature.begin(), rec.shift_by_feature.end()) -
        rec.shift_by_feature.begin());
    rec.hit = rec.top_shift_feature == rec.perturbed;
    if (rec.hit) ++out.hits;

    out.result.records.push_back(json{{"rep", rep},
                                      {"perturbed", rec.perturbed},
                                      {"top_shift_feature", rec.top_shift_feature},
                                      {"hit", rec.hit},
                                      {"shift_by_feature", rec.shift_by_feature}});
    out.reps.push_back(std::move(rec));
  }

  out.result.metrics["hits"] = static_cast<double>(out.hits);
  out.result.metrics["replicates"] = static_cast<double>(cfg.replicates);
  out.result.metrics["hit_rate"] = static_cast<double>(out.hits) / static_cast<double>(cfg.replicates);
  return out;
}

}  // namespace entshap
