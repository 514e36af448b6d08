#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "entshap/boosted.hpp"
#include "entshap/dataset.hpp"
#include "entshap/error.hpp"
#include "entshap/forest.hpp"
#include "entshap/predictor.hpp"

namespace entshap {

// Heteroskedastic regressor: a boosted mean model E[Y|x] plus a bagged-forest
// log-variance model fit on log(residual^2 + floor) of the mean model's own
// training residuals. The mean stage is the randomized-balanced boosted stack
// rather than a bagged forest because its training residuals keep the spatial
// pattern of the noise variance: a bagged forest leaves its own bias pattern
// in them and a greedy fit chases and flattens large residuals. hp governs the
// log-variance forest; the mean stage takes its own BoostParams.
class HeteroskedasticPair : public Predictor {
public:
  HeteroskedasticPair() = default;

  static HeteroskedasticPair fit(const Dataset& ds, const ForestHyperParams& hp, std::uint64_t seed,
                                 double variance_floor = 1e-8, int threads = 1,
                                 const BoostParams& mean_params = {}) {
    require_data(ds.target.has_value(), "heteroskedastic pair: dataset has no target column");
    require_config(variance_floor > 0.0, "heteroskedastic pair: variance floor must be positive");

    HeteroskedasticPair pair;
    pair.floor_ = variance_floor;
    pair.mean_ = BoostedForest::fit(ds, mean_params, seed);

    Dataset resid = ds;
    auto& z = *resid.target;
    bool any_nonzero = false;
    for (std::int64_t i = 0; i < ds.n; ++i) {
      const double e = (*ds.target)[static_cast<std::size_t>(i)] -
                       pair.mean_.predict_mean(ds.row(i), ds.row_missing(i));
      if (e != 0.0) any_nonzero = true;
      z[static_cast<std::size_t>(i)] = std::log(e * e + variance_floor);
    }
    resid.target_name = "log_sq_residual";
    if (!any_nonzero)
      pair.warnings_.push_back("degenerate variance: all training residuals are zero");
    pair.logvar_ = ForestModel::fit(resid, Task::regression, hp, seed ^ 0x9E3779B97F4A7C15ULL, threads);
    for (const auto& w : pair.mean_.warnings()) pair.warnings_.push_back("mean model: " + w);
    for (const auto& w : pair.logvar_.warnings()) pair.warnings_.push_back("logvar model: " + w);
    return pair;
  }

  int dim() const override { return mean_.dim(); }
  int n_classes() const override { return 0; }

  const BoostedForest& mean_model() const { return mean_; }
  const ForestModel& logvar_model() const { return logvar_; }
  double variance_floor() const { return floor_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  double predict_mean(std::span<const double> x, std::span<const std::uint8_t> missing = {}) const {
    return mean_.predict_mean(x, missing);
  }
  double predict_logvar(std::span<const double> x, std::span<const std::uint8_t> missing = {}) const {
    return logvar_.predict_mean(x, missing);
  }
  double predict_variance(std::span<const double> x, std::span<const std::uint8_t> missing = {}) const {
    return std::exp(predict_logvar(x, missing));
  }

  PredictiveDistribution predict_dist(std::span<const double> x,
                                      std::span<const std::uint8_t> missing = {}) const override {
    return PredictiveDistribution(GaussianDist(predict_mean(x, missing), predict_variance(x, missing)));
  }

  json to_json() const {
    json j;
    j["schema_version"] = 1;
    j["kind"] = "hetero_pair";
    j["variance_floor"] = floor_;
    j["warnings"] = warnings_;
    j["mean_model"] = mean_.to_json();
    j["logvar_model"] = logvar_.to_json();
    return j;
  }

  static HeteroskedasticPair from_json(const json& j) {
    try {
      require_data(j.at("kind") == "hetero_pair", "heteroskedastic pair: wrong kind");
      HeteroskedasticPair pair;
      pair.floor_ = j.at("variance_floor").get<double>();
      pair.warnings_ = j.at("warnings").get<std::vector<std::string>>();
      pair.mean_ = BoostedForest::from_json(j.at("mean_model"));
      pair.logvar_ = ForestModel::from_json(j.at("logvar_model"));
      return pair;
    } catch (const json::exception& e) {
      throw_data(std::string("heteroskedastic pair: malformed JSON: ") + e.what());
    }
  }

  void save(const std::string& path) const { write_json_file(path, to_json()); }
  static HeteroskedasticPair load(const std::string& path) { return from_json(read_json_file(path)); }

private:
  BoostedForest mean_;
  ForestModel logvar_;
  double floor_ = 1e-8;
  std::vector<std::string> warnings_;
};

}  // namespace entshap
