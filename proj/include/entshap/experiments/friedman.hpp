#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "entshap/dataset.hpp"
#include "entshap/error.hpp"
#include "entshap/rng.hpp"

namespace entshap {

// Friedman-style heteroskedastic pair of batches. Features X1..X10 ~ U(0,1)
// iid. A latent signal
//   Y = 10 sin(pi X1 X2) + 20 (X3 - 0.5)^2 + 10 X4 + 5 X5 + eps_y
// is min-max scaled on the training batch to Ytilde in [0, 1] (test reuses the
// training min/max and clamps). The observed target
//   Z = 10 sin(pi X6 X7) + 20 (X8 - 0.5)^2 + 10 X9 + 5 X10 + eps_z,
//   eps_z ~ N(0, Ytilde^2)
// has its mean driven by X6..X10 and its noise level driven by X1..X5.
struct FriedmanConfig {
  std::int64_t n_train = 2000;
  std::int64_t n_test = 1000;
  double sigma_y = 1.0;
  std::uint64_t seed = 1;
};

struct FriedmanData {
  Dataset train;  // target = Z
  Dataset test;
  std::vector<double> ytilde_train;
  std::vector<double> ytilde_test;
  std::vector<double> noise_train;  // realized eps_z
  std::vector<double> noise_test;
  double y_min = 0.0;
  double y_max = 0.0;
};

namespace friedman_detail {

inline double signal(std::span<const double> x, int off) {
  const double pi = 3.1415926535897932384626433832795;
  return 10.0 * std::sin(pi * x[static_cast<std::size_t>(off)] * x[static_cast<std::size_t>(off + 1)]) +
         20.0 * (x[static_cast<std::size_t>(off + 2)] - 0.5) * (x[static_cast<std::size_t>(off + 2)] - 0.5) +
         10.0 * x[static_cast<std::size_t>(off + 3)] + 5.0 * x[static_cast<std::size_t>(off + 4)];
}

}  // namespace friedman_detail

inline FriedmanData gen_friedman(const FriedmanConfig& cfg) {
  require_data(cfg.n_train >= 2 && cfg.n_test >= 1, "friedman: need n_train >= 2 and n_test >= 1");
  require_config(cfg.sigma_y >= 0.0, "friedman: sigma_y must be nonnegative");
  const int d = 10;
  FriedmanData out;
  out.train = Dataset::make(cfg.n_train, d);
  out.test = Dataset::make(cfg.n_test, d);
  out.train.target.emplace(static_cast<std::size_t>(cfg.n_train), 0.0);
  out.test.target.emplace(static_cast<std::size_t>(cfg.n_test), 0.0);
  out.ytilde_train.resize(static_cast<std::size_t>(cfg.n_train));
  out.ytilde_test.resize(static_cast<std::size_t>(cfg.n_test));
  out.noise_train.resize(static_cast<std::size_t>(cfg.n_train));
  out.noise_test.resize(static_cast<std::size_t>(cfg.n_test));

  RngStream root(cfg.seed, 0xF41EDULL);
  std::vector<double> y_raw_train(static_cast<std::size_t>(cfg.n_train));
  std::vector<double> y_raw_test(static_cast<std::size_t>(cfg.n_test));

  auto fill_features = [&](Dataset& ds, std::vector<double>& y_raw, std::uint64_t tag) {
    for (std::int64_t i = 0; i < ds.n; ++i) {
      RngStream rng = root.derive(tag).derive(static_cast<std::uint64_t>(i));
      for (int j = 0; j < d; ++j) ds.set(i, j, rng.uniform());
      y_raw[static_cast<std::size_t>(i)] =
          friedman_detail::signal(ds.row(i), 0) + cfg.sigma_y * rng.normal();
    }
  };
  fill_features(out.train, y_raw_train, 1);
  fill_features(out.test, y_raw_test, 2);

  out.y_min = *std::min_element(y_raw_train.begin(), y_raw_train.end());
  out.y_max = *std::max_element(y_raw_train.begin(), y_raw_train.end());
  require_data(out.y_max > out.y_min, "friedman: degenerate training batch (constant latent signal)");
  const double span = out.y_max - out.y_min;

  auto scale = [&](double y) { return std::clamp((y - out.y_min) / span, 0.0, 1.0); };
  for (std::int64_t i = 0; i < cfg.n_train; ++i)
    out.ytilde_train[static_cast<std::size_t>(i)] = scale(y_raw_train[static_cast<std::size_t>(i)]);
  for (std::int64_t i = 0; i < cfg.n_test; ++i)
    out.ytilde_test[static_cast<std::size_t>(i)] = scale(y_raw_test[static_cast<std::size_t>(i)]);

  auto fill_target = [&](Dataset& ds, const std::vector<double>& ytilde, std::vector<double>& noise,
                         std::uint64_t tag) {
    for (std::int64_t i = 0; i < ds.n; ++i) {
      RngStream rng = root.derive(tag).derive(static_cast<std::uint64_t>(i));
      const double eps = ytilde[static_cast<std::size_t>(i)] * rng.normal();
      noise[static_cast<std::size_t>(i)] = eps;
      (*ds.target)[static_cast<std::size_t>(i)] = friedman_detail::signal(ds.row(i), 5) + eps;
    }
  };
  fill_target(out.train, out.ytilde_train, out.noise_train, 3);
  fill_target(out.test, out.ytilde_test, out.noise_test, 4);
  out.train.target_name = "z";
  out.test.target_name = "z";
  return out;
}

}  // namespace entshap
