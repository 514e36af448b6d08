#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "entshap/error.hpp"
#include "entshap/info.hpp"

namespace entshap {

// Either a class pmf (classification) or a Gaussian (regression).
class PredictiveDistribution {
public:
  PredictiveDistribution(Categorical c) : v_(std::move(c)) {}
  PredictiveDistribution(GaussianDist g) : v_(g) {}

  bool is_categorical() const { return std::holds_alternative<Categorical>(v_); }
  const Categorical& categorical() const {
    require_config(is_categorical(), "predictive distribution is not categorical");
    return std::get<Categorical>(v_);
  }
  const GaussianDist& gaussian() const {
    require_config(!is_categorical(), "predictive distribution is not gaussian");
    return std::get<GaussianDist>(v_);
  }

  double entropy_nats() const {
    return is_categorical() ? entropy(categorical()) : gaussian_entropy(gaussian().variance);
  }

private:
  std::variant<Categorical, GaussianDist> v_;
};

class Predictor {
public:
  virtual ~Predictor() = default;
  virtual int dim() const = 0;
  // 0 for regression, >= 2 for classification.
  virtual int n_classes() const = 0;
  virtual PredictiveDistribution predict_dist(std::span<const double> x,
                                              std::span<const std::uint8_t> missing = {}) const = 0;

  bool is_classifier() const { return n_classes() >= 2; }
};

// Classifier made of members whose pmfs can be queried individually.
class EnsemblePredictor : public Predictor {
public:
  virtual int ensemble_size() const = 0;
  virtual Categorical member_pmf(int member, std::span<const double> x,
                                 std::span<const std::uint8_t> missing = {}) const = 0;
};

struct ClassDistribution {
  Categorical mean;
  std::vector<Categorical> members;
};

inline ClassDistribution predict_class_dist(const EnsemblePredictor& m, std::span<const double> x,
                                            std::span<const std::uint8_t> missing = {}) {
  require_config(m.is_classifier(), "ensemble distribution requires a classifier");
  const int b = m.ensemble_size();
  require_config(b >= 1, "ensemble has no members");
  ClassDistribution out;
  out.members.reserve(static_cast<std::size_t>(b));
  std::vector<double> acc(static_cast<std::size_t>(m.n_classes()), 0.0);
  for (int k = 0; k < b; ++k) {
    out.members.push_back(m.member_pmf(k, x, missing));
    const auto& p = out.members.back();
    require_data(p.n_classes() == m.n_classes(), "ensemble member class count mismatch");
    for (int c = 0; c < p.n_classes(); ++c) acc[static_cast<std::size_t>(c)] += p[c] / static_cast<double>(b);
  }
  out.mean = Categorical(std::move(acc));
  return out;
}

// Entropy of the ensemble-mean pmf.
inline double entropy_total(const EnsemblePredictor& m, std::span<const double> x,
                            const LogBase& base = LogBase::nats(),
                            std::span<const std::uint8_t> missing = {}) {
  return entropy(predict_class_dist(m, x, missing).mean, base);
}

// Mean entropy of the member pmfs.
inline double entropy_aleatoric(const EnsemblePredictor& m, std::span<const double> x,
                                const LogBase& base = LogBase::nats(),
                                std::span<const std::uint8_t> missing = {}) {
  const auto dist = predict_class_dist(m, x, missing);
  double h = 0.0;
  for (const auto& p : dist.members) h += entropy(p, base);
  return h / static_cast<double>(dist.members.size());
}

// Total minus aleatoric; nonnegative by Jensen, clamped against roundoff.
inline double entropy_epistemic(const EnsemblePredictor& m, std::span<const double> x,
                                const LogBase& base = LogBase::nats(),
                                std::span<const std::uint8_t> missing = {}) {
  const auto dist = predict_class_dist(m, x, missing);
  double ha = 0.0;
  for (const auto& p : dist.members) ha += entropy(p, base);
  ha /= static_cast<double>(dist.members.size());
  const double he = entropy(dist.mean, base) - ha;
  return he < 0.0 ? 0.0 : he;
}

}  // namespace entshap
