#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "entshap/error.hpp"
#include "entshap/io.hpp"

namespace entshap {

// Split-conformal two-sided band from calibration scores: the band is
// [s_(l), s_(u)] with l = ceil((n+1) alpha/2), u = ceil((n+1)(1-alpha/2)),
// order statistics 1-indexed. Marginal coverage of an exchangeable draw is at
// least 1 - alpha, and the expected coverage is (u - l) / (n + 1).
struct ConformalBand {
  double lo = 0.0;
  double hi = 0.0;
  int l_index = 0;  // 1-indexed order statistics
  int u_index = 0;
  std::int64_t n_cal = 0;
  double alpha = 0.0;

  bool contains(double v) const { return v >= lo && v <= hi; }
  double expected_coverage() const {
    return static_cast<double>(u_index - l_index) / static_cast<double>(n_cal + 1);
  }

  json to_json() const {
    return json{{"lo", lo},       {"hi", hi},     {"l_index", l_index},
                {"u_index", u_index}, {"n_cal", n_cal}, {"alpha", alpha}};
  }
};

inline std::int64_t conformal_min_calibration(double alpha) {
  // Smallest n with ceil((n+1) alpha/2) >= 1 distinct from u: need both order
  // statistics to exist and l < u, i.e. n >= 2/alpha - 1.
  return static_cast<std::int64_t>(std::ceil(2.0 / alpha)) - 1;
}

inline ConformalBand conformal_band(std::vector<double> scores, double alpha) {
  require_config(alpha > 0.0 && alpha < 1.0, "conformal: alpha must lie in (0, 1)");
  const std::int64_t n = static_cast<std::int64_t>(scores.size());
  const std::int64_t n_min = conformal_min_calibration(alpha);
  if (n < n_min)
    throw_data("conformal: " + std::to_string(n) + " calibration scores are too few for alpha=" +
               std::to_string(alpha) + " (need at least " + std::to_string(n_min) + ")");
  for (const auto v : scores)
    require_data(std::isfinite(v), "conformal: non-finite calibration score");
  std::sort(scores.begin(), scores.end());
  const double np1 = static_cast<double>(n + 1);
  const auto l = static_cast<std::int64_t>(std::ceil(np1 * (alpha / 2.0)));
  const auto u = static_cast<std::int64_t>(std::ceil(np1 * (1.0 - alpha / 2.0)));
  require_data(l >= 1 && u <= n && l < u, "conformal: calibration set too small for the requested alpha");
  ConformalBand band;
  band.lo = scores[static_cast<std::size_t>(l - 1)];
  band.hi = scores[static_cast<std::size_t>(u - 1)];
  band.l_index = static_cast<int>(l);
  band.u_index = static_cast<int>(u);
  band.n_cal = n;
  band.alpha = alpha;
  return band;
}

// Closed-interval empirical coverage.
inline double conformal_coverage(const ConformalBand& band, const std::vector<double>& values) {
  require_data(!values.empty(), "conformal: no evaluation values");
  std::int64_t inside = 0;
  for (const auto v : values) {
    require_data(std::isfinite(v), "conformal: non-finite evaluation value");
    if (band.contains(v)) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(values.size());
}

enum class FeatureDecision { informative, uninformative };

struct FeatureSelection {
  int feature = -1;
  std::string name;
  ConformalBand band;
  FeatureDecision decision = FeatureDecision::uninformative;
  double p_zero = 1.0;  // conformal p-value for the attribution being zero

  json to_json() const {
    json j = band.to_json();
    j["feature"] = feature;
    j["name"] = name;
    j["decision"] = decision == FeatureDecision::informative ? "informative" : "uninformative";
    j["p_zero"] = p_zero;
    return j;
  }
};

// A feature is informative when zero falls outside its calibrated band, with a
// zero_width margin to absorb numerically-zero attributions: bands entirely
// inside [-zero_width, zero_width] stay uninformative.
inline FeatureSelection select_feature(std::vector<double> cal_scores, double alpha, int feature,
                                       const std::string& name, double zero_width = 0.0) {
  require_config(zero_width >= 0.0, "select: zero_width must be nonnegative");
  FeatureSelection sel;
  sel.feature = feature;
  sel.name = name;
  sel.band = conformal_band(cal_scores, alpha);
  const bool zero_outside = sel.band.lo > zero_width || sel.band.hi < -zero_width;
  sel.decision = zero_outside ? FeatureDecision::informative : FeatureDecision::uninformative;
  const double n = static_cast<double>(cal_scores.size());
  std::int64_t n_le = 0, n_ge = 0;
  for (const auto v : cal_scores) {
    if (v <= 0.0) ++n_le;
    if (v >= 0.0) ++n_ge;
  }
  const double p_lo = (static_cast<double>(n_le) + 1.0) / (n + 1.0);
  const double p_hi = (static_cast<double>(n_ge) + 1.0) / (n + 1.0);
  sel.p_zero = std::min(1.0, 2.0 * std::min(p_lo, p_hi));
  return sel;
}

}  // namespace entshap
