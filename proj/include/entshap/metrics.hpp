#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "entshap/error.hpp"

namespace entshap {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocResult {
  double auc = 0.0;
  std::vector<RocPoint> points;
};

// ROC AUC via the Mann-Whitney statistic: ties get half credit. Curve points
// are swept over distinct thresholds, descending score.
inline RocResult roc_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  require_config(scores.size() == labels.size(), "roc: scores and labels differ in length");
  require_data(!scores.empty(), "roc: empty input");
  std::int64_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require_data(labels[i] == 0 || labels[i] == 1, "roc: labels must be 0/1");
    require_data(std::isfinite(scores[i]), "roc: non-finite score");
    if (labels[i]) ++n_pos;
    else ++n_neg;
  }
  require_data(n_pos > 0 && n_neg > 0, "roc: need both classes present");

  std::vector<std::pair<double, std::uint8_t>> order(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) order[i] = {scores[i], labels[i]};
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  RocResult r;
  r.points.push_back({0.0, 0.0});
  double u = 0.0;  // sum over positives of (#negatives below + 0.5 #tied)
  std::int64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::int64_t tie_pos = 0, tie_neg = 0;
    while (j < order.size() && order[j].first == order[i].first) {
      if (order[j].second) ++tie_pos;
      else ++tie_neg;
      ++j;
    }
    // negatives strictly below this tie group:
    const std::int64_t neg_below = n_neg - fp - tie_neg;
    u += static_cast<double>(tie_pos) * (static_cast<double>(neg_below) + 0.5 * static_cast<double>(tie_neg));
    tp += tie_pos;
    fp += tie_neg;
    r.points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                        static_cast<double>(tp) / static_cast<double>(n_pos)});
    i = j;
  }
  r.auc = u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
  return r;
}

inline double median(std::vector<double> v) {
  require_data(!v.empty(), "median: empty input");
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2), v.end());
  const double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2));
  return 0.5 * (lo + hi);
}

inline double mean(const std::vector<double>& v) {
  require_data(!v.empty(), "mean: empty input");
  double acc = 0.0;
  for (const auto x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

inline double sample_stddev(const std::vector<double>& v) {
  require_data(v.size() >= 2, "stddev: need at least two values");
  const double m = mean(v);
  double acc = 0.0;
  for (const auto x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

inline double standard_error(const std::vector<double>& v) {
  return sample_stddev(v) / std::sqrt(static_cast<double>(v.size()));
}

}  // namespace entshap
