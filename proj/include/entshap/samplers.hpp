#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "entshap/coalition.hpp"
#include "entshap/dataset.hpp"
#include "entshap/error.hpp"
#include "entshap/rng.hpp"

namespace entshap {

// Fills in out-of-coalition features: given x and a coalition S, draw() emits m
// complete points that agree with x on S exactly (bit-identical copies).
class Sampler {
public:
  virtual ~Sampler() = default;
  virtual int dim() const = 0;
  virtual std::string id() const = 0;
  // out is resized to m * dim(), row-major.
  virtual void draw(const CoalitionMask& s, std::span<const double> x, int m, RngStream stream,
                    std::vector<double>& out) const = 0;

protected:
  void check_args(const CoalitionMask& s, std::span<const double> x, int m) const {
    require_config(s.dim() == dim(), "sampler: coalition dimension mismatch");
    require_config(static_cast<int>(x.size()) == dim(), "sampler: point dimension mismatch");
    require_config(m >= 1, "sampler: need at least one draw");
    for (int j = 0; j < dim(); ++j)
      if (s.contains(j))
        require_data(std::isfinite(x[static_cast<std::size_t>(j)]),
                     "sampler: coalition coordinate is missing or non-finite");
  }

  static void paste_coalition(const CoalitionMask& s, std::span<const double> x, int m,
                              std::vector<double>& out) {
    const int d = s.dim();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < d; ++j)
        if (s.contains(j)) out[static_cast<std::size_t>(i) * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)] =
            x[static_cast<std::size_t>(j)];
  }
};

// Ignores dependence: out-of-coalition coordinates come from background rows
// drawn uniformly with replacement, one row per imputation. Background rows may
// contain missing cells; those are copied through as NaN and the model's
// missing-routing rule takes over downstream.
class MarginalSampler : public Sampler {
public:
  explicit MarginalSampler(std::shared_ptr<const Dataset> background)
      : bg_(std::move(background)) {
    require_config(bg_ != nullptr, "marginal sampler: null background");
    bg_->validate();
  }

  int dim() const override { return bg_->d; }
  std::string id() const override { return "marginal"; }

  void draw(const CoalitionMask& s, std::span<const double> x, int m, RngStream stream,
            std::vector<double>& out) const override {
    check_args(s, x, m);
    const int d = dim();
    out.resize(static_cast<std::size_t>(m) * static_cast<std::size_t>(d));
    for (int i = 0; i < m; ++i) {
      const std::int64_t r = static_cast<std::int64_t>(stream.uniform_below(static_cast<std::uint64_t>(bg_->n)));
      for (int j = 0; j < d; ++j)
        out[static_cast<std::size_t>(i) * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)] = bg_->at(r, j);
    }
    paste_coalition(s, x, m, out);
  }

  const Dataset& background() const { return *bg_; }

private:
  std::shared_ptr<const Dataset> bg_;
};

// Joint-Gaussian conditional: X ~ N(mu, Sigma) fit by moments, draws from the
// exact conditional N(mu_c, Sigma_c) given X_S = x_S.
class GaussianConditionalSampler : public Sampler {
public:
  GaussianConditionalSampler(Eigen::VectorXd mean, Eigen::MatrixXd cov)
      : mean_(std::move(mean)), cov_(std::move(cov)) {
    require_config(mean_.size() >= 1 && cov_.rows() == mean_.size() && cov_.cols() == mean_.size(),
                   "gaussian sampler: shape mismatch");
  }

  // Moment fit with a ridge on the diagonal so constant columns stay usable.
  static GaussianConditionalSampler fit(const Dataset& ds, double ridge = 1e-8) {
    ds.validate();
    require_config(ridge >= 0.0, "gaussian sampler: ridge must be nonnegative");
    require_data(ds.n >= 2, "gaussian sampler: need at least two rows");
    for (std::int64_t i = 0; i < ds.n; ++i)
      require_data(ds.row_complete(i), "gaussian sampler: rows with missing cells cannot be moment-fit");
    const int d = ds.d;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (std::int64_t i = 0; i < ds.n; ++i)
      for (int j = 0; j < d; ++j) mean(j) += ds.at(i, j);
    mean /= static_cast<double>(ds.n);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (std::int64_t i = 0; i < ds.n; ++i) {
      for (int a = 0; a < d; ++a) {
        const double da = ds.at(i, a) - mean(a);
        for (int b = a; b < d; ++b) cov(a, b) += da * (ds.at(i, b) - mean(b));
      }
    }
    cov /= static_cast<double>(ds.n - 1);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < a; ++b) cov(a, b) = cov(b, a);
    cov.diagonal().array() += ridge;
    return GaussianConditionalSampler(std::move(mean), std::move(cov));
  }

  int dim() const override { return static_cast<int>(mean_.size()); }
  std::string id() const override { return "gaussian"; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }

  void draw(const CoalitionMask& s, std::span<const double> x, int m, RngStream stream,
            std::vector<double>& out) const override {
    check_args(s, x, m);
    const int d = dim();
    out.resize(static_cast<std::size_t>(m) * static_cast<std::size_t>(d));
    const auto in = s.members();
    const auto rest = s.complement().members();

    if (rest.empty()) {
      paste_coalition(s, x, m, out);
      return;
    }

    Eigen::VectorXd cond_mean(static_cast<int>(rest.size()));
    Eigen::MatrixXd cond_cov(static_cast<int>(rest.size()), static_cast<int>(rest.size()));
    if (in.empty()) {
      for (std::size_t a = 0; a < rest.size(); ++a) cond_mean(static_cast<int>(a)) = mean_(rest[a]);
      for (std::size_t a = 0; a < rest.size(); ++a)
        for (std::size_t b = 0; b < rest.size(); ++b)
          cond_cov(static_cast<int>(a), static_cast<int>(b)) = cov_(rest[a], rest[b]);
    } else {
      Eigen::MatrixXd s_ss(in.size(), in.size());
      Eigen::MatrixXd s_rs(rest.size(), in.size());
      Eigen::VectorXd delta(static_cast<int>(in.size()));
      for (std::size_t a = 0; a < in.size(); ++a) {
        delta(static_cast<int>(a)) = x[static_cast<std::size_t>(in[a])] - mean_(in[a]);
        for (std::size_t b = 0; b < in.size(); ++b)
          s_ss(static_cast<int>(a), static_cast<int>(b)) = cov_(in[a], in[b]);
      }
      for (std::size_t a = 0; a < rest.size(); ++a)
        for (std::size_t b = 0; b < in.size(); ++b)
          s_rs(static_cast<int>(a), static_cast<int>(b)) = cov_(rest[a], in[b]);
      Eigen::LLT<Eigen::MatrixXd> llt(s_ss);
      require_data(llt.info() == Eigen::Success, "gaussian sampler: singular conditioning covariance");
      for (std::size_t a = 0; a < rest.size(); ++a) cond_mean(static_cast<int>(a)) = mean_(rest[a]);
      cond_mean += s_rs * llt.solve(delta);
      Eigen::MatrixXd s_rr(rest.size(), rest.size());
      for (std::size_t a = 0; a < rest.size(); ++a)
        for (std::size_t b = 0; b < rest.size(); ++b)
          s_rr(static_cast<int>(a), static_cast<int>(b)) = cov_(rest[a], rest[b]);
      cond_cov = s_rr - s_rs * llt.solve(s_rs.transpose());
    }

    const Eigen::MatrixXd chol = robust_cholesky(cond_cov);
    Eigen::VectorXd z(static_cast<int>(rest.size()));
    for (int i = 0; i < m; ++i) {
      for (int k = 0; k < z.size(); ++k) z(k) = stream.normal();
      const Eigen::VectorXd v = cond_mean + chol * z;
      for (std::size_t a = 0; a < rest.size(); ++a)
        out[static_cast<std::size_t>(i) * static_cast<std::size_t>(d) + static_cast<std::size_t>(rest[a])] =
            v(static_cast<int>(a));
    }
    paste_coalition(s, x, m, out);
  }

private:
  static Eigen::MatrixXd robust_cholesky(Eigen::MatrixXd a) {
    const double scale = std::max(1.0, a.diagonal().maxCoeff());
    for (const double jitter : {0.0, 1e-12, 1e-10, 1e-8}) {
      Eigen::MatrixXd trial = a;
      trial.diagonal().array() += jitter * scale;
      Eigen::LLT<Eigen::MatrixXd> llt(trial);
      if (llt.info() == Eigen::Success) return llt.matrixL();
    }
    throw_data("gaussian sampler: conditional covariance is not positive definite");
  }

  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
};

// Nonparametric conditional: find the k nearest background rows in the coalition
// coordinates (standardized Euclidean) and draw whole rows uniformly from them.
// With an empty coalition this degenerates to the marginal sampler.
class KnnConditionalSampler : public Sampler {
public:
  KnnConditionalSampler(std::shared_ptr<const Dataset> background, int k)
      : bg_(std::move(background)), k_(k) {
    require_config(bg_ != nullptr, "knn sampler: null background");
    bg_->validate();
    require_config(k_ >= 1, "knn sampler: k must be >= 1");
    require_config(static_cast<std::int64_t>(k_) <= bg_->n,
                   "knn sampler: k exceeds background size");
    for (std::int64_t i = 0; i < bg_->n; ++i)
      require_data(bg_->row_complete(i), "knn sampler: background rows must be complete");
    col_scale_.assign(static_cast<std::size_t>(bg_->d), 1.0);
    for (int j = 0; j < bg_->d; ++j) {
      double mean = 0.0;
      for (std::int64_t i = 0; i < bg_->n; ++i) mean += bg_->at(i, j);
      mean /= static_cast<double>(bg_->n);
      double var = 0.0;
      for (std::int64_t i = 0; i < bg_->n; ++i) {
        const double dv = bg_->at(i, j) - mean;
        var += dv * dv;
      }
      var /= static_cast<double>(std::max<std::int64_t>(bg_->n - 1, 1));
      col_scale_[static_cast<std::size_t>(j)] = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
    }
  }

  static int default_k(std::int64_t n) {
    return std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)))));
  }

  int dim() const override { return bg_->d; }
  std::string id() const override { return "knn"; }
  int k() const { return k_; }

  void draw(const CoalitionMask& s, std::span<const double> x, int m, RngStream stream,
            std::vector<double>& out) const override {
    check_args(s, x, m);
    const int d = dim();
    out.resize(static_cast<std::size_t>(m) * static_cast<std::size_t>(d));

    std::vector<std::int64_t> pool;
    if (s.is_empty()) {
      pool.resize(static_cast<std::size_t>(bg_->n));
      for (std::int64_t i = 0; i < bg_->n; ++i) pool[static_cast<std::size_t>(i)] = i;
    } else {
      const auto in = s.members();
      std::vector<std::pair<double, std::int64_t>> dist(static_cast<std::size_t>(bg_->n));
      for (std::int64_t i = 0; i < bg_->n; ++i) {
        double acc = 0.0;
        for (const auto j : in) {
          const double dv = (bg_->at(i, j) - x[static_cast<std::size_t>(j)]) * col_scale_[static_cast<std::size_t>(j)];
          acc += dv * dv;
        }
        dist[static_cast<std::size_t>(i)] = {acc, i};
      }
      // Ties broken by row index: fully deterministic neighbor sets.
      std::nth_element(dist.begin(), dist.begin() + (k_ - 1), dist.end());
      std::sort(dist.begin(), dist.begin() + k_);
      pool.reserve(static_cast<std::size_t>(k_));
      for (int i = 0; i < k_; ++i) pool.push_back(dist[static_cast<std::size_t>(i)].second);
    }

    for (int i = 0; i < m; ++i) {
      const auto pick = pool[static_cast<std::size_t>(stream.uniform_below(pool.size()))];
      for (int j = 0; j < d; ++j)
        out[static_cast<std::size_t>(i) * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)] = bg_->at(pick, j);
    }
    paste_coalition(s, x, m, out);
  }

private:
  std::shared_ptr<const Dataset> bg_;
  int k_;
  std::vector<double> col_scale_;
};

inline std::shared_ptr<Sampler> make_sampler(const std::string& name,
                                             std::shared_ptr<const Dataset> background, int knn_k = 0) {
  require_config(background != nullptr, "sampler: null background");
  if (name == "marginal") return std::make_shared<MarginalSampler>(std::move(background));
  if (name == "gaussian") {
    auto s = GaussianConditionalSampler::fit(*background);
    return std::make_shared<GaussianConditionalSampler>(std::move(s));
  }
  if (name == "knn") {
    const int k = knn_k > 0 ? knn_k : KnnConditionalSampler::default_k(background->n);
    return std::make_shared<KnnConditionalSampler>(std::move(background), k);
  }
  throw_config("unknown sampler '" + name + "' (expected marginal, gaussian, knn)");
}

}  // namespace entshap
