#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "entshap/coalition.hpp"
#include "entshap/error.hpp"
#include "entshap/forest.hpp"
#include "entshap/gaussian_model.hpp"
#include "entshap/hetero.hpp"
#include "entshap/info.hpp"
#include "entshap/oracle.hpp"
#include "entshap/predictor.hpp"
#include "entshap/prob_table.hpp"
#include "entshap/rng.hpp"
#include "entshap/samplers.hpp"

namespace entshap {

// Set function v(S, x) in nats. Stochastic implementations draw all randomness
// from the stream handed in, which the engine derives per (instance, coalition):
// the same coalition always sees the same draws, independent of visit order.
class Game {
public:
  virtual ~Game() = default;
  virtual int dim() const = 0;
  virtual std::string id() const = 0;
  virtual double value(const CoalitionMask& s, std::span<const double> x, RngStream stream) const = 0;
};

// Monte-Carlo game: a pointwise statistic h averaged over sampler imputations,
// v(S,x) = mean_m h(draw). The full coalition shortcuts to h(x) exactly.
class EstimatedGame : public Game {
public:
  using PointFn = std::function<double(std::span<const double>)>;

  EstimatedGame(std::string id, int dim, PointFn h, std::shared_ptr<const Sampler> sampler, int m)
      : id_(std::move(id)), d_(dim), h_(std::move(h)), sampler_(std::move(sampler)), m_(m) {
    require_config(sampler_ != nullptr, "game: null sampler");
    require_config(sampler_->dim() == d_, "game: sampler dimension mismatch");
    require_config(m_ >= 1, "game: imputation count must be >= 1");
  }

  int dim() const override { return d_; }
  std::string id() const override { return id_; }
  int imputations() const { return m_; }
  const Sampler& sampler() const { return *sampler_; }

  double value(const CoalitionMask& s, std::span<const double> x, RngStream stream) const override {
    require_config(s.dim() == d_, "game: coalition dimension mismatch");
    require_config(static_cast<int>(x.size()) == d_, "game: point dimension mismatch");
    if (s.is_full()) return h_(x);
    std::vector<double> draws;
    sampler_->draw(s, x, m_, stream, draws);
    double acc = 0.0;
    for (int i = 0; i < m_; ++i)
      acc += h_(std::span<const double>(draws.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(d_),
                                        static_cast<std::size_t>(d_)));
    return acc / static_cast<double>(m_);
  }

private:
  std::string id_;
  int d_;
  PointFn h_;
  std::shared_ptr<const Sampler> sampler_;
  int m_;
};

// h(x) = P(Y = target_class | x): the classical mean-prediction game.
inline std::shared_ptr<EstimatedGame> make_v0_game(std::shared_ptr<const Predictor> model,
                                                   std::shared_ptr<const Sampler> sampler, int m,
                                                   int target_class = 1) {
  require_config(model != nullptr, "game: null model");
  if (model->is_classifier()) {
    require_config(target_class >= 0 && target_class < model->n_classes(),
                   "game: target class out of range");
    auto h = [model, target_class](std::span<const double> x) {
      return model->predict_dist(x).categorical()[target_class];
    };
    return std::make_shared<EstimatedGame>("v0", model->dim(), h, std::move(sampler), m);
  }
  auto h = [model](std::span<const double> x) { return model->predict_dist(x).gaussian().mean; };
  return std::make_shared<EstimatedGame>("v0", model->dim(), h, std::move(sampler), m);
}

// h(x) = entropy of the predictive distribution (classification: ensemble-mean
// pmf; regression: Gaussian differential entropy).
inline std::shared_ptr<EstimatedGame> make_hstar_total_game(std::shared_ptr<const Predictor> model,
                                                            std::shared_ptr<const Sampler> sampler, int m) {
  require_config(model != nullptr, "game: null model");
  auto ens = std::dynamic_pointer_cast<const EnsemblePredictor>(model);
  if (ens && ens->is_classifier()) {
    auto h = [ens](std::span<const double> x) { return entropy_total(*ens, x); };
    return std::make_shared<EstimatedGame>("hstar_total", model->dim(), h, std::move(sampler), m);
  }
  auto h = [model](std::span<const double> x) { return model->predict_dist(x).entropy_nats(); };
  return std::make_shared<EstimatedGame>("hstar_total", model->dim(), h, std::move(sampler), m);
}

inline std::shared_ptr<EstimatedGame> make_hstar_aleatoric_game(
    std::shared_ptr<const EnsemblePredictor> model, std::shared_ptr<const Sampler> sampler, int m) {
  require_config(model != nullptr, "game: null model");
  require_config(model->is_classifier(), "game: aleatoric entropy requires a classifier ensemble");
  auto h = [model](std::span<const double> x) { return entropy_aleatoric(*model, x); };
  return std::make_shared<EstimatedGame>("hstar_aleatoric", model->dim(), h, std::move(sampler), m);
}

inline std::shared_ptr<EstimatedGame> make_hstar_epistemic_game(
    std::shared_ptr<const EnsemblePredictor> model, std::shared_ptr<const Sampler> sampler, int m) {
  require_config(model != nullptr, "game: null model");
  require_config(model->is_classifier(), "game: epistemic entropy requires a classifier ensemble");
  auto h = [model](std::span<const double> x) { return entropy_epistemic(*model, x); };
  return std::make_shared<EstimatedGame>("hstar_epistemic", model->dim(), h, std::move(sampler), m);
}

// h(x) = predicted log-variance of a heteroskedastic pair. Affine in the
// predictive entropy, so attributions differ from entropy attributions only by
// the factor 1/2 (the constant washes out of the deltas).
inline std::shared_ptr<EstimatedGame> make_logvar_game(std::shared_ptr<const HeteroskedasticPair> model,
                                                       std::shared_ptr<const Sampler> sampler, int m) {
  require_config(model != nullptr, "game: null model");
  auto h = [model](std::span<const double> x) { return model->predict_logvar(x); };
  return std::make_shared<EstimatedGame>("logvar", model->dim(), h, std::move(sampler), m);
}

inline std::shared_ptr<EstimatedGame> make_mean_game(std::shared_ptr<const HeteroskedasticPair> model,
                                                     std::shared_ptr<const Sampler> sampler, int m) {
  require_config(model != nullptr, "game: null model");
  auto h = [model](std::span<const double> x) { return model->predict_mean(x); };
  return std::make_shared<EstimatedGame>("mean", model->dim(), h, std::move(sampler), m);
}

// Exact discrete game: adapts the table oracle. Points are integer-coded doubles.
class OracleGame : public Game {
public:
  OracleGame(ProbTable table, GameId game, std::optional<int> y_true = std::nullopt)
      : table_(std::move(table)), game_(game), y_true_(y_true) {
    if (game_ == GameId::loss)
      require_config(y_true_.has_value(), "game: loss oracle requires y_true");
  }

  int dim() const override { return table_.d(); }
  std::string id() const override { return std::string("oracle_") + game_name(game_); }
  const ProbTable& table() const { return table_; }

  double value(const CoalitionMask& s, std::span<const double> x, RngStream) const override {
    std::vector<int> xi(static_cast<std::size_t>(table_.d()));
    for (int j = 0; j < table_.d(); ++j) {
      const double v = x[static_cast<std::size_t>(j)];
      const int iv = static_cast<int>(std::llround(v));
      require_config(std::fabs(v - static_cast<double>(iv)) < 1e-9,
                     "game: oracle points must be integer-coded");
      xi[static_cast<std::size_t>(j)] = iv;
    }
    return exact_value(table_, game_, s, xi, y_true_);
  }

private:
  ProbTable table_;
  GameId game_;
  std::optional<int> y_true_;
};

// Closed-form conditional-entropy game on the Gaussian-linear model.
class AnalyticEntropyGame : public Game {
public:
  explicit AnalyticEntropyGame(GaussianLinearModel model) : model_(std::move(model)) {}

  int dim() const override { return model_.dim(); }
  std::string id() const override { return "hstar_analytic"; }
  const GaussianLinearModel& model() const { return model_; }

  double value(const CoalitionMask& s, std::span<const double> x, RngStream) const override {
    return model_.analytic_hstar_value(s, x);
  }

private:
  GaussianLinearModel model_;
};

// a * g1 + b * g2 over the same feature space; independent substreams per term.
class LinearCombinationGame : public Game {
public:
  LinearCombinationGame(double a, std::shared_ptr<const Game> g1, double b, std::shared_ptr<const Game> g2)
      : a_(a), b_(b), g1_(std::move(g1)), g2_(std::move(g2)) {
    require_config(g1_ != nullptr && g2_ != nullptr, "game: null component");
    require_config(g1_->dim() == g2_->dim(), "game: component dimension mismatch");
  }

  int dim() const override { return g1_->dim(); }
  std::string id() const override { return "lincomb(" + g1_->id() + "," + g2_->id() + ")"; }

  double value(const CoalitionMask& s, std::span<const double> x, RngStream stream) const override {
    return a_ * g1_->value(s, x, stream.derive(1)) + b_ * g2_->value(s, x, stream.derive(2));
  }

private:
  double a_, b_;
  std::shared_ptr<const Game> g1_, g2_;
};

// Deterministic game from a plain function; test scaffolding.
class FunctionGame : public Game {
public:
  using Fn = std::function<double(const CoalitionMask&, std::span<const double>)>;
  FunctionGame(std::string id, int dim, Fn fn) : id_(std::move(id)), d_(dim), fn_(std::move(fn)) {}
  int dim() const override { return d_; }
  std::string id() const override { return id_; }
  double value(const CoalitionMask& s, std::span<const double> x, RngStream) const override {
    return fn_(s, x);
  }

private:
  std::string id_;
  int d_;
  Fn fn_;
};

}  // namespace entshap
