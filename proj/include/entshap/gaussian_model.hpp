#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "entshap/coalition.hpp"
#include "entshap/dataset.hpp"
#include "entshap/error.hpp"
#include "entshap/info.hpp"
#include "entshap/io.hpp"
#include "entshap/predictor.hpp"
#include "entshap/rng.hpp"

namespace entshap {

inline constexpr double kHalfLog2PiE = 1.4189385332046727417803297364056;

inline Eigen::MatrixXd toeplitz_corr(int d, double rho) {
  require_config(d >= 1, "toeplitz: dimension must be >= 1");
  require_config(rho > -1.0 && rho < 1.0, "toeplitz: correlation must lie in (-1, 1)");
  Eigen::MatrixXd s(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) s(i, j) = std::pow(rho, std::abs(i - j));
  return s;
}

// Y | X = x ~ N(beta' x, exp(gamma' x)) with X ~ N(0, Sigma), Sigma_ij = rho^|i-j|.
// The conditional entropy game over the variance head has a closed form, which
// makes this the reference model for estimator convergence checks.
class GaussianLinearModel : public Predictor {
public:
  GaussianLinearModel() = default;

  static GaussianLinearModel make(std::vector<double> beta, std::vector<double> gamma, double rho) {
    require_config(!beta.empty() && beta.size() == gamma.size(),
                   "gaussian model: beta and gamma must be nonempty and the same length");
    GaussianLinearModel m;
    m.d_ = static_cast<int>(beta.size());
    m.beta_ = Eigen::Map<const Eigen::VectorXd>(beta.data(), m.d_);
    m.gamma_ = Eigen::Map<const Eigen::VectorXd>(gamma.data(), m.d_);
    m.rho_ = rho;
    m.sigma_ = toeplitz_corr(m.d_, rho);
    return m;
  }

  // Coefficients drawn Rademacher (+-1), the paper-style synthetic setup.
  static GaussianLinearModel random(int d, double rho, std::uint64_t seed) {
    require_config(d >= 1, "gaussian model: dimension must be >= 1");
    RngStream rng(seed, 0x6A55ULL);
    std::vector<double> beta(static_cast<std::size_t>(d)), gamma(static_cast<std::size_t>(d));
    for (auto& b : beta) b = rng.uniform() < 0.5 ? -1.0 : 1.0;
    for (auto& g : gamma) g = rng.uniform() < 0.5 ? -1.0 : 1.0;
    return make(std::move(beta), std::move(gamma), rho);
  }

  int dim() const override { return d_; }
  int n_classes() const override { return 0; }
  double rho() const { return rho_; }
  const Eigen::VectorXd& beta() const { return beta_; }
  const Eigen::VectorXd& gamma() const { return gamma_; }
  const Eigen::MatrixXd& sigma() const { return sigma_; }

  double mean_at(std::span<const double> x) const { return dot(beta_, x); }
  double logvar_at(std::span<const double> x) const { return dot(gamma_, x); }
  double var_at(std::span<const double> x) const { return std::exp(logvar_at(x)); }

  double entropy_at(std::span<const double> x, const LogBase& base = LogBase::nats()) const {
    return base.from_nats(kHalfLog2PiE + 0.5 * logvar_at(x));
  }

  PredictiveDistribution predict_dist(std::span<const double> x,
                                      std::span<const std::uint8_t> missing = {}) const override {
    require_config(missing.empty() || std::all_of(missing.begin(), missing.end(),
                                                  [](std::uint8_t m) { return m == 0; }),
                   "gaussian model: missing features not supported");
    return PredictiveDistribution(GaussianDist(mean_at(x), var_at(x)));
  }

  // E[X_{S^c} | X_S = x_S], indexed over the complement in ascending order.
  Eigen::VectorXd conditional_mean(const CoalitionMask& s, std::span<const double> x) const {
    require_config(s.dim() == d_, "gaussian model: coalition dimension mismatch");
    require_config(static_cast<int>(x.size()) == d_, "gaussian model: point dimension mismatch");
    const auto in = s.members();
    const auto out = s.complement().members();
    if (out.empty()) return Eigen::VectorXd(0);
    if (in.empty()) return Eigen::VectorXd::Zero(static_cast<int>(out.size()));
    Eigen::MatrixXd s_ss(in.size(), in.size());
    Eigen::MatrixXd s_os(out.size(), in.size());
    Eigen::VectorXd xs(in.size());
    for (std::size_t a = 0; a < in.size(); ++a) {
      xs(static_cast<int>(a)) = x[static_cast<std::size_t>(in[a])];
      for (std::size_t b = 0; b < in.size(); ++b) s_ss(static_cast<int>(a), static_cast<int>(b)) = sigma_(in[a], in[b]);
    }
    for (std::size_t a = 0; a < out.size(); ++a)
      for (std::size_t b = 0; b < in.size(); ++b) s_os(static_cast<int>(a), static_cast<int>(b)) = sigma_(out[a], in[b]);
    Eigen::LLT<Eigen::MatrixXd> llt(s_ss);
    require_data(llt.info() == Eigen::Success, "gaussian model: singular conditioning covariance");
    return s_os * llt.solve(xs);
  }

  // Closed-form game value: E[H(Y|X) | X_S = x_S]
  //   = 1/2 log(2 pi e) + 1/2 (gamma_S' x_S + gamma_{S^c}' E[X_{S^c} | x_S]).
  double analytic_hstar_value(const CoalitionMask& s, std::span<const double> x) const {
    const auto out = s.complement().members();
    double acc = 0.0;
    for (int j = 0; j < d_; ++j)
      if (s.contains(j)) acc += gamma_(j) * x[static_cast<std::size_t>(j)];
    if (!out.empty()) {
      const Eigen::VectorXd cm = conditional_mean(s, x);
      for (std::size_t a = 0; a < out.size(); ++a) acc += gamma_(out[a]) * cm(static_cast<int>(a));
    }
    return kHalfLog2PiE + 0.5 * acc;
  }

  // Exact Shapley values of the closed-form game by direct subset enumeration.
  // Deliberately self-contained (no engine code) so it can arbitrate the engine.
  std::vector<double> oracle_shapley_hstar(std::span<const double> x) const {
    require_config(d_ <= 20, "gaussian model: oracle enumeration supports at most 20 features");
    const std::uint64_t n_masks = std::uint64_t{1} << d_;
    std::vector<double> value(n_masks);
    for (std::uint64_t m = 0; m < n_masks; ++m)
      value[m] = analytic_hstar_value(CoalitionMask::from_bits(d_, m), x);
    std::vector<double> fact(static_cast<std::size_t>(d_) + 1, 1.0);
    for (std::size_t k = 1; k < fact.size(); ++k) fact[k] = fact[k - 1] * static_cast<double>(k);
    std::vector<double> phi(static_cast<std::size_t>(d_), 0.0);
    for (std::uint64_t m = 0; m < n_masks; ++m) {
      const int card = std::popcount(m);
      const double w = fact[static_cast<std::size_t>(card)] *
                       fact[static_cast<std::size_t>(d_ - card - 1)] / fact[static_cast<std::size_t>(d_)];
      for (int j = 0; j < d_; ++j) {
        if (m & (std::uint64_t{1} << j)) continue;
        phi[static_cast<std::size_t>(j)] += w * (value[m | (std::uint64_t{1} << j)] - value[m]);
      }
    }
    return phi;
  }

  json to_json() const {
    json j;
    j["schema_version"] = 1;
    j["kind"] = "gaussian_linear";
    j["beta"] = std::vector<double>(beta_.data(), beta_.data() + d_);
    j["gamma"] = std::vector<double>(gamma_.data(), gamma_.data() + d_);
    j["rho"] = rho_;
    return j;
  }

  static GaussianLinearModel from_json(const json& j) {
    try {
      require_data(j.at("kind") == "gaussian_linear", "gaussian model: wrong kind");
      return make(j.at("beta").get<std::vector<double>>(), j.at("gamma").get<std::vector<double>>(),
                  j.at("rho").get<double>());
    } catch (const json::exception& e) {
      throw_data(std::string("gaussian model: malformed JSON: ") + e.what());
    }
  }

private:
  static double dot(const Eigen::VectorXd& w, std::span<const double> x) {
    require_config(static_cast<int>(x.size()) == static_cast<int>(w.size()),
                   "gaussian model: point dimension mismatch");
    double acc = 0.0;
    for (int j = 0; j < w.size(); ++j) acc += w(j) * x[static_cast<std::size_t>(j)];
    return acc;
  }

  int d_ = 0;
  Eigen::VectorXd beta_, gamma_;
  double rho_ = 0.0;
  Eigen::MatrixXd sigma_;
};

// n draws from N(0, Sigma) with Sigma = toeplitz(rho), plus targets from the model.
inline Dataset sample_gaussian_dataset(const GaussianLinearModel& m, std::int64_t n, std::uint64_t seed) {
  require_data(n >= 1, "gaussian sample: need at least one row");
  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(m.sigma()).matrixL();
  Dataset ds = Dataset::make(n, m.dim());
  ds.target.emplace(static_cast<std::size_t>(n), 0.0);
  RngStream root(seed, 0x6A56ULL);
  Eigen::VectorXd z(m.dim());
  for (std::int64_t i = 0; i < n; ++i) {
    RngStream rng = root.derive(static_cast<std::uint64_t>(i));
    for (int j = 0; j < m.dim(); ++j) z(j) = rng.normal();
    const Eigen::VectorXd x = chol * z;
    for (int j = 0; j < m.dim(); ++j) ds.set(i, j, x(j));
    const double mu = m.mean_at(ds.row(i));
    const double sd = std::sqrt(m.var_at(ds.row(i)));
    (*ds.target)[static_cast<std::size_t>(i)] = mu + sd * rng.normal();
  }
  return ds;
}

}  // namespace entshap
