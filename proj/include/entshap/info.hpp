#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "entshap/error.hpp"

namespace entshap {

inline constexpr double kProbSumTol = 1e-12;
inline constexpr double kSupportEps = 1e-15;

// Unit of information. Everything internal runs in nats; from_nats converts at
// the reporting boundary.
class LogBase {
public:
  static LogBase nats() { return LogBase(1.0, "nats"); }
  static LogBase bits() { return LogBase(0.69314718055994530941723212145818, "bits"); }
  static LogBase of(double base) {
    require_config(base > 1.0, "log base must be > 1");
    return LogBase(std::log(base), "log" + std::to_string(base));
  }
  static LogBase parse(const std::string& name) {
    if (name == "nats") return nats();
    if (name == "bits") return bits();
    throw_config("unknown units '" + name + "' (expected bits or nats)");
  }

  double from_nats(double x) const { return x / ln_base_; }
  double to_nats(double x) const { return x * ln_base_; }
  const std::string& name() const { return name_; }

private:
  LogBase(double ln_base, std::string name) : ln_base_(ln_base), name_(std::move(name)) {}
  double ln_base_;
  std::string name_;
};

// Probability vector over classes. Entries >= 0, sum within kProbSumTol of 1.
class Categorical {
public:
  Categorical() = default;
  explicit Categorical(std::vector<double> p) : p_(std::move(p)) {
    require_data(!p_.empty(), "categorical: empty probability vector");
    double sum = 0.0;
    for (auto& v : p_) {
      require_data(v >= -kSupportEps && std::isfinite(v), "categorical: probability out of range");
      if (v < 0.0) v = 0.0;
      sum += v;
    }
    require_data(std::fabs(sum - 1.0) <= kProbSumTol, "categorical: probabilities do not sum to 1");
  }

  static Categorical normalized(std::vector<double> w) {
    double sum = 0.0;
    for (const auto v : w) {
      require_data(v >= 0.0 && std::isfinite(v), "categorical: negative weight");
      sum += v;
    }
    require_data(sum > 0.0, "categorical: zero total weight");
    for (auto& v : w) v /= sum;
    return Categorical(std::move(w));
  }

  int n_classes() const { return static_cast<int>(p_.size()); }
  double operator[](int c) const { return p_[static_cast<std::size_t>(c)]; }
  const std::vector<double>& probs() const { return p_; }

private:
  std::vector<double> p_;
};

struct GaussianDist {
  double mean = 0.0;
  double variance = 1.0;
  GaussianDist() = default;
  GaussianDist(double m, double v) : mean(m), variance(v) {
    require_data(std::isfinite(m) && std::isfinite(v) && v > 0.0,
                 "gaussian: variance must be finite and positive");
  }
};

// H(p); 0 log 0 = 0.
inline double entropy(const Categorical& p, const LogBase& base = LogBase::nats()) {
  double h = 0.0;
  for (const auto v : p.probs())
    if (v > 0.0) h -= v * std::log(v);
  return base.from_nats(h);
}

// H(p, q) = -sum_c p_c log q_c. Requires supp(p) subseteq supp(q).
inline double cross_entropy(const Categorical& p, const Categorical& q,
                            const LogBase& base = LogBase::nats()) {
  require_data(p.n_classes() == q.n_classes(), "cross_entropy: class count mismatch");
  double h = 0.0;
  for (int c = 0; c < p.n_classes(); ++c) {
    if (p[c] <= 0.0) continue;
    require_data(q[c] > kSupportEps, "cross_entropy: support violation (q has zero mass where p > 0)");
    h -= p[c] * std::log(q[c]);
  }
  return base.from_nats(h);
}

// KL(p || q) >= 0, equal to H(p, q) - H(p).
inline double kl_divergence(const Categorical& p, const Categorical& q,
                            const LogBase& base = LogBase::nats()) {
  require_data(p.n_classes() == q.n_classes(), "kl_divergence: class count mismatch");
  double kl = 0.0;
  for (int c = 0; c < p.n_classes(); ++c) {
    if (p[c] <= 0.0) continue;
    require_data(q[c] > kSupportEps, "kl_divergence: support violation (q has zero mass where p > 0)");
    kl += p[c] * std::log(p[c] / q[c]);
  }
  return base.from_nats(kl);
}

// Differential entropy of N(mu, variance): 1/2 log(2 pi e variance).
inline double gaussian_entropy(double variance, const LogBase& base = LogBase::nats()) {
  require_data(std::isfinite(variance) && variance > 0.0,
               "gaussian_entropy: variance must be finite and positive");
  const double two_pi_e = 17.079468445347132330414542162941;
  return base.from_nats(0.5 * std::log(two_pi_e * variance));
}

inline double gaussian_entropy(const GaussianDist& g, const LogBase& base = LogBase::nats()) {
  return gaussian_entropy(g.variance, base);
}

// Joint pmf over a pair (A, B), row-major with B fastest.
struct JointTable {
  int na = 0;
  int nb = 0;
  std::vector<double> p;

  JointTable(int a, int b) : na(a), nb(b), p(static_cast<std::size_t>(a) * static_cast<std::size_t>(b), 0.0) {
    require_data(a >= 1 && b >= 1, "joint table: dimensions must be >= 1");
  }

  double& at(int a, int b) { return p[static_cast<std::size_t>(a) * static_cast<std::size_t>(nb) + static_cast<std::size_t>(b)]; }
  double at(int a, int b) const { return p[static_cast<std::size_t>(a) * static_cast<std::size_t>(nb) + static_cast<std::size_t>(b)]; }

  void validate() const {
    double sum = 0.0;
    for (const auto v : p) {
      require_data(v >= 0.0 && std::isfinite(v), "joint table: negative mass");
      sum += v;
    }
    require_data(std::fabs(sum - 1.0) <= kProbSumTol, "joint table: mass does not sum to 1");
  }
};

// I(A; B) = KL(joint || product of marginals). Nonnegative; symmetric in A, B.
inline double mutual_information(const JointTable& t, const LogBase& base = LogBase::nats()) {
  t.validate();
  std::vector<double> pa(static_cast<std::size_t>(t.na), 0.0);
  std::vector<double> pb(static_cast<std::size_t>(t.nb), 0.0);
  for (int a = 0; a < t.na; ++a)
    for (int b = 0; b < t.nb; ++b) {
      pa[static_cast<std::size_t>(a)] += t.at(a, b);
      pb[static_cast<std::size_t>(b)] += t.at(a, b);
    }
  double mi = 0.0;
  for (int a = 0; a < t.na; ++a)
    for (int b = 0; b < t.nb; ++b) {
      const double pab = t.at(a, b);
      if (pab <= 0.0) continue;
      mi += pab * std::log(pab / (pa[static_cast<std::size_t>(a)] * pb[static_cast<std::size_t>(b)]));
    }
  if (mi < 0.0 && mi > -1e-15) mi = 0.0;
  return base.from_nats(mi);
}

}  // namespace entshap
