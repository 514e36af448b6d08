#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "entshap/coalition.hpp"
#include "entshap/error.hpp"
#include "entshap/info.hpp"
#include "entshap/io.hpp"
#include "entshap/rng.hpp"

namespace entshap {

// Assignment of values to a subset of discrete features; -1 marks "free".
struct PartialAssignment {
  std::vector<int> vals;

  static PartialAssignment free_all(int d) {
    PartialAssignment a;
    a.vals.assign(static_cast<std::size_t>(d), -1);
    return a;
  }

  static PartialAssignment from_coalition(const CoalitionMask& s, const std::vector<int>& x) {
    require_config(static_cast<int>(x.size()) == s.dim(), "assignment: point dimension mismatch");
    PartialAssignment a = free_all(s.dim());
    for (int j = 0; j < s.dim(); ++j)
      if (s.contains(j)) a.vals[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(j)];
    return a;
  }

  int d() const { return static_cast<int>(vals.size()); }
  bool assigned(int j) const { return vals[static_cast<std::size_t>(j)] >= 0; }
};

// Exact joint pmf p(X_1..X_d, Y) over finite supports. Storage is row-major with
// the outcome as the last, fastest-varying axis.
class ProbTable {
public:
  ProbTable() = default;

  static ProbTable from_probs(std::vector<int> cards, int n_classes, std::vector<double> probs,
                              std::vector<std::string> labels = {}) {
    ProbTable t;
    t.cards_ = std::move(cards);
    t.n_classes_ = n_classes;
    require_data(!t.cards_.empty(), "prob table: need at least one feature");
    require_data(t.n_classes_ >= 2, "prob table: need at least two outcome classes");
    std::size_t cells = static_cast<std::size_t>(t.n_classes_);
    for (const auto c : t.cards_) {
      require_data(c >= 2, "prob table: feature cardinality must be >= 2");
      cells *= static_cast<std::size_t>(c);
    }
    require_data(probs.size() == cells, "prob table: cell count mismatch");
    double sum = 0.0;
    for (auto& v : probs) {
      require_data(std::isfinite(v) && v >= -kSupportEps, "prob table: negative cell probability");
      if (v < 0.0) v = 0.0;
      sum += v;
    }
    require_data(std::fabs(sum - 1.0) <= kProbSumTol, "prob table: cells do not sum to 1");
    t.p_ = std::move(probs);
    if (labels.empty()) {
      for (std::size_t j = 0; j < t.cards_.size(); ++j) labels.push_back("x" + std::to_string(j + 1));
      labels.push_back("y");
    }
    require_data(labels.size() == t.cards_.size() + 1, "prob table: label count mismatch");
    t.labels_ = std::move(labels);
    return t;
  }

  // Strictly positive random table: Dirichlet(1) (normalized exponentials)
  // mixed with the uniform table so every cell has mass >= eps/cells.
  static ProbTable random(int d, int n_classes, RngStream& rng, int cardinality = 2, double eps = 0.01) {
    require_config(d >= 1 && n_classes >= 2 && cardinality >= 2, "prob table: bad random shape");
    std::size_t cells = static_cast<std::size_t>(n_classes);
    for (int j = 0; j < d; ++j) cells *= static_cast<std::size_t>(cardinality);
    std::vector<double> probs(cells);
    double sum = 0.0;
    for (auto& v : probs) {
      v = -std::log(rng.uniform_pos());
      sum += v;
    }
    const double u = 1.0 / static_cast<double>(cells);
    for (auto& v : probs) v = (1.0 - eps) * (v / sum) + eps * u;
    return from_probs(std::vector<int>(static_cast<std::size_t>(d), cardinality), n_classes, std::move(probs));
  }

  int d() const { return static_cast<int>(cards_.size()); }
  int n_classes() const { return n_classes_; }
  int cardinality(int j) const { return cards_[static_cast<std::size_t>(j)]; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<double>& cells() const { return p_; }

  std::size_t cell_index(const std::vector<int>& x, int y) const {
    require_config(static_cast<int>(x.size()) == d(), "prob table: point dimension mismatch");
    require_config(y >= 0 && y < n_classes_, "prob table: outcome out of range");
    std::size_t idx = 0;
    for (int j = 0; j < d(); ++j) {
      const int v = x[static_cast<std::size_t>(j)];
      require_config(v >= 0 && v < cards_[static_cast<std::size_t>(j)], "prob table: feature value out of range");
      idx = idx * static_cast<std::size_t>(cards_[static_cast<std::size_t>(j)]) + static_cast<std::size_t>(v);
    }
    return idx * static_cast<std::size_t>(n_classes_) + static_cast<std::size_t>(y);
  }

  double prob(const std::vector<int>& x, int y) const { return p_[cell_index(x, y)]; }

  double& prob_ref(const std::vector<int>& x, int y) { return p_[cell_index(x, y)]; }

  // Marginal probability of the event X_A = a.
  double event_prob(const PartialAssignment& a) const {
    check_assignment(a);
    double total = 0.0;
    for_each_completion(a, [&](const std::vector<int>& z) {
      for (int y = 0; y < n_classes_; ++y) total += prob(z, y);
    });
    return total;
  }

  // p(Y | X_A = a). Errors if the conditioning event has zero probability.
  Categorical condition(const PartialAssignment& a) const {
    check_assignment(a);
    std::vector<double> w(static_cast<std::size_t>(n_classes_), 0.0);
    double total = 0.0;
    for_each_completion(a, [&](const std::vector<int>& z) {
      for (int y = 0; y < n_classes_; ++y) {
        const double p = prob(z, y);
        w[static_cast<std::size_t>(y)] += p;
        total += p;
      }
    });
    require_data(total > 0.0, "prob table: conditioning event has zero probability");
    for (auto& v : w) v /= total;
    return Categorical(std::move(w));
  }

  Categorical condition(const CoalitionMask& s, const std::vector<int>& x) const {
    return condition(PartialAssignment::from_coalition(s, x));
  }

  Categorical marginal_y() const { return condition(PartialAssignment::free_all(d())); }

  // Joint pmf of (Y, X_j) given X_A = a; feature j must be free in a.
  JointTable joint_y_feature(int j, const PartialAssignment& a) const {
    check_assignment(a);
    require_config(j >= 0 && j < d(), "prob table: feature index out of range");
    require_config(!a.assigned(j), "prob table: feature already assigned");
    JointTable t(n_classes_, cards_[static_cast<std::size_t>(j)]);
    double total = 0.0;
    for_each_completion(a, [&](const std::vector<int>& z) {
      const int xj = z[static_cast<std::size_t>(j)];
      for (int y = 0; y < n_classes_; ++y) {
        const double p = prob(z, y);
        t.at(y, xj) += p;
        total += p;
      }
    });
    require_data(total > 0.0, "prob table: conditioning event has zero probability");
    for (auto& v : t.p) v /= total;
    return t;
  }

  // Direct conditional-independence check: Y independent of X_j given X_S,
  // tested as max_{s-assignment, xj, y} |p(y | x_S, x_j) - p(y | x_S)|.
  bool cond_independent_y(int j, const CoalitionMask& s, double tol = 1e-12) const {
    return max_cond_dependence(j, s) <= tol;
  }

  double max_cond_dependence(int j, const CoalitionMask& s) const {
    require_config(j >= 0 && j < d(), "prob table: feature index out of range");
    require_config(s.dim() == d(), "prob table: coalition dimension mismatch");
    require_config(!s.contains(j), "prob table: feature is in the conditioning set");
    double worst = 0.0;
    enumerate_assignments(s, [&](const std::vector<int>& sx) {
      PartialAssignment base = PartialAssignment::from_coalition(s, sx);
      if (event_prob(base) <= 0.0) return;
      const Categorical p_s = condition(base);
      for (int v = 0; v < cards_[static_cast<std::size_t>(j)]; ++v) {
        PartialAssignment ext = base;
        ext.vals[static_cast<std::size_t>(j)] = v;
        if (event_prob(ext) <= 0.0) continue;
        const Categorical p_sj = condition(ext);
        for (int y = 0; y < n_classes_; ++y)
          worst = std::max(worst, std::fabs(p_sj[y] - p_s[y]));
      }
    });
    return worst;
  }

  // Iterates every full completion z of partial assignment a.
  template <typename Fn>
  void for_each_completion(const PartialAssignment& a, Fn&& fn) const {
    std::vector<int> z(a.vals.begin(), a.vals.end());
    std::vector<int> free_idx;
    for (int j = 0; j < d(); ++j)
      if (!a.assigned(j)) {
        free_idx.push_back(j);
        z[static_cast<std::size_t>(j)] = 0;
      }
    if (free_idx.empty()) {
      fn(static_cast<const std::vector<int>&>(z));
      return;
    }
    for (;;) {
      fn(static_cast<const std::vector<int>&>(z));
      int k = static_cast<int>(free_idx.size()) - 1;
      while (k >= 0) {
        const int j = free_idx[static_cast<std::size_t>(k)];
        if (++z[static_cast<std::size_t>(j)] < cards_[static_cast<std::size_t>(j)]) break;
        z[static_cast<std::size_t>(j)] = 0;
        --k;
      }
      if (k < 0) return;
    }
  }

  // Iterates every assignment of values to the features in s.
  template <typename Fn>
  void enumerate_assignments(const CoalitionMask& s, Fn&& fn) const {
    const auto members = s.members();
    std::vector<int> sx(static_cast<std::size_t>(d()), 0);
    if (members.empty()) {
      fn(static_cast<const std::vector<int>&>(sx));
      return;
    }
    for (;;) {
      fn(static_cast<const std::vector<int>&>(sx));
      int k = static_cast<int>(members.size()) - 1;
      while (k >= 0) {
        const int j = members[static_cast<std::size_t>(k)];
        if (++sx[static_cast<std::size_t>(j)] < cards_[static_cast<std::size_t>(j)]) break;
        sx[static_cast<std::size_t>(j)] = 0;
        --k;
      }
      if (k < 0) return;
    }
  }

  json to_json() const {
    json j;
    j["schema_version"] = 1;
    j["kind"] = "prob_table";
    j["cardinalities"] = cards_;
    j["n_classes"] = n_classes_;
    j["labels"] = labels_;
    j["cells"] = p_;
    return j;
  }

  static ProbTable from_json(const json& j) {
    try {
      require_data(j.at("kind") == "prob_table", "prob table: wrong kind");
      return from_probs(j.at("cardinalities").get<std::vector<int>>(), j.at("n_classes").get<int>(),
                        j.at("cells").get<std::vector<double>>(),
                        j.at("labels").get<std::vector<std::string>>());
    } catch (const json::exception& e) {
      throw_data(std::string("prob table: malformed JSON: ") + e.what());
    }
  }

private:
  void check_assignment(const PartialAssignment& a) const {
    require_config(a.d() == d(), "prob table: assignment dimension mismatch");
    for (int j = 0; j < d(); ++j)
      if (a.assigned(j))
        require_config(a.vals[static_cast<std::size_t>(j)] < cards_[static_cast<std::size_t>(j)],
                       "prob table: assigned value out of range");
  }

  std::vector<int> cards_;
  int n_classes_ = 0;
  std::vector<std::string> labels_;
  std::vector<double> p_;
};

}  // namespace entshap
