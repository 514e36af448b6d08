#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "entshap/conformal.hpp"
#include "entshap/error.hpp"
#include "entshap/experiments/result.hpp"
#include "entshap/metrics.hpp"
#include "entshap/rng.hpp"

namespace entshap {

// Finite-sample coverage check on a synthetic exchangeable stream: calibration
// and evaluation scores are iid N(0,1), so empirical coverage should match the
// split-conformal guarantee band exactly up to sampling noise.
struct CoverageConfig {
  double alpha = 0.1;
  std::int64_t n_cal = 1000;
  std::int64_t n_test = 1000;
  int replicates = 50;
  std::uint64_t seed = 1;

  json to_json() const {
    return json{{"alpha", alpha},
                {"n_cal", n_cal},
                {"n_test", n_test},
                {"replicates", replicates},
                {"seed", seed}};
  }
};

struct CoverageOutcome {
  ExperimentResult result;
  std::vector<double> coverage_per_rep;
  double coverage_mean = 0.0;
  double expected_coverage = 0.0;  // (u - l) / (n_cal + 1)
  double guarantee_lo = 0.0;       // 1 - alpha
  double guarantee_hi = 0.0;       // 1 - alpha + 2 / (n + 2), n = 2 n_cal
};

inline CoverageOutcome run_coverage(const CoverageConfig& cfg) {
  require_config(cfg.replicates >= 1, "coverage: need at least one replicate");
  require_config(cfg.n_test >= 1, "coverage: need at least one evaluation draw");

  CoverageOutcome out;
  out.result.name = "coverage";
  out.result.config = cfg.to_json();
  out.result.finalize_hash();

  const RngStream root(cfg.seed, 0xC0FE2ULL);
  for (int rep = 0; rep < cfg.replicates; ++rep) {
    RngStream rng = root.derive(static_cast<std::uint64_t>(rep));
    std::vector<double> cal(static_cast<std::size_t>(cfg.n_cal));
    for (auto& v : cal) v = rng.normal();
    const ConformalBand band = conformal_band(cal, cfg.alpha);
    std::vector<double> eval(static_cast<std::size_t>(cfg.n_test));
    for (auto& v : eval) v = rng.normal();
    const double cov = conformal_coverage(band, eval);
    out.coverage_per_rep.push_back(cov);
    out.expected_coverage = band.expected_coverage();
    out.result.records.push_back(json{{"rep", rep},
                                      {"coverage", cov},
                                      {"band_lo", band.lo},
                                      {"band_hi", band.hi},
                                      {"l_index", band.l_index},
                                      {"u_index", band.u_index}});
  }
  out.coverage_mean = mean(out.coverage_per_rep);
  out.guarantee_lo = 1.0 - cfg.alpha;
  out.guarantee_hi = 1.0 - cfg.alpha + 2.0 / (2.0 * static_cast<double>(cfg.n_cal) + 2.0);
  out.result.metrics["coverage_mean"] = out.coverage_mean;
  out.result.metrics["coverage_se"] =
      out.coverage_per_rep.size() >= 2 ? standard_error(out.coverage_per_rep) : 0.0;
  out.result.metrics["expected_coverage"] = out.expected_coverage;
  out.result.metrics["guarantee_lo"] = out.guarantee_lo;
  out.result.metrics["guarantee_hi"] = out.guarantee_hi;
  return out;
}

}  // namespace entshap
