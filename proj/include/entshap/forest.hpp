#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "entshap/dataset.hpp"
#include "entshap/error.hpp"
#include "entshap/io.hpp"
#include "entshap/parallel.hpp"
#include "entshap/predictor.hpp"
#include "entshap/rng.hpp"

namespace entshap {

enum class Task { classification, regression };

struct ForestHyperParams {
  int n_trees = 50;
  int max_depth = 8;
  int min_leaf = 5;
  // 0 means the task default: ceil(sqrt(d)) for classification, ceil(d/3) for regression.
  int mtry = 0;

  void validate(int d) const {
    require_config(n_trees >= 1, "forest: n_trees must be >= 1");
    require_config(max_depth >= 1, "forest: max_depth must be >= 1");
    require_config(min_leaf >= 1, "forest: min_leaf must be >= 1");
    require_config(mtry >= 0 && mtry <= d, "forest: mtry must lie in [0, d]");
  }

  int resolved_mtry(int d, Task task) const {
    if (mtry > 0) return mtry;
    const double raw = task == Task::classification ? std::sqrt(static_cast<double>(d))
                                                    : static_cast<double>(d) / 3.0;
    return std::min(d, std::max(1, static_cast<int>(std::ceil(raw))));
  }
};

namespace detail {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  bool missing_goes_left = false;
  int left = -1;
  int right = -1;
  std::int64_t n_rows = 0;
  double leaf_mean = 0.0;                // regression payload
  std::vector<double> class_counts;      // classification payload
};

struct Tree {
  std::vector<TreeNode> nodes;

  int walk(std::span<const double> x, std::span<const std::uint8_t> missing) const {
    int id = 0;
    for (;;) {
      const TreeNode& node = nodes[static_cast<std::size_t>(id)];
      if (node.feature < 0) return id;
      const std::size_t f = static_cast<std::size_t>(node.feature);
      const bool is_missing = (!missing.empty() && missing[f] != 0) || std::isnan(x[f]);
      if (is_missing) {
        id = node.missing_goes_left ? node.left : node.right;
      } else {
        id = x[f] <= node.threshold ? node.left : node.right;
      }
    }
  }
};

// Lexicographic order over (per-column missing flag then value, target last).
// Identical datasets in any row order produce the same ordering of row values,
// which makes tree fits row-order invariant.
inline std::vector<std::int64_t> canonical_order(const Dataset& ds) {
  std::vector<std::int64_t> order(static_cast<std::size_t>(ds.n));
  for (std::int64_t i = 0; i < ds.n; ++i) order[static_cast<std::size_t>(i)] = i;
  const auto& y = *ds.target;
  std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    for (int j = 0; j < ds.d; ++j) {
      const bool ma = ds.is_missing(a, j);
      const bool mb = ds.is_missing(b, j);
      if (ma != mb) return ma;  // missing sorts first
      if (!ma) {
        const double va = ds.at(a, j);
        const double vb = ds.at(b, j);
        if (va != vb) return va < vb;
      }
    }
    return y[static_cast<std::size_t>(a)] < y[static_cast<std::size_t>(b)];
  });
  return order;
}

}  // namespace detail

// CART-style random forest. Fits are invariant to input row order: rows are
// first placed in a canonical lexicographic order, and all randomness flows
// from (seed, tree index) derived streams.
class ForestModel : public EnsemblePredictor {
public:
  ForestModel() = default;

  static ForestModel fit(const Dataset& ds, Task task, const ForestHyperParams& hp, std::uint64_t seed,
                         int threads = 1) {
    ds.validate();
    require_data(ds.target.has_value(), "forest: dataset has no target column");
    hp.validate(ds.d);
    require_data(ds.n >= 2, "forest: need at least two rows");

    ForestModel m;
    m.task_ = task;
    m.d_ = ds.d;
    m.hp_ = hp;
    m.seed_ = seed;
    m.feature_names_ = ds.feature_names;

    const auto& y = *ds.target;
    if (task == Task::classification) {
      int max_label = 0;
      for (const auto v : y) {
        require_data(std::floor(v) == v && v >= 0.0, "forest: class labels must be nonnegative integers");
        max_label = std::max(max_label, static_cast<int>(v));
      }
      require_data(max_label >= 1, "forest: classification needs at least two observed classes");
      require_data(max_label < 1000, "forest: implausible class count");
      m.n_classes_ = max_label + 1;
    } else {
      m.n_classes_ = 0;
    }

    bool constant_target = true;
    for (std::size_t i = 1; i < y.size(); ++i)
      if (y[i] != y[0]) {
        constant_target = false;
        break;
      }
    if (constant_target) m.warnings_.push_back("degenerate fit: constant target, trees are single leaves");

    const auto order = detail::canonical_order(ds);

    m.trees_.resize(static_cast<std::size_t>(hp.n_trees));
    const RngStream root(seed, 0xF03E57ULL);
    parallel_for(hp.n_trees, threads, [&](std::int64_t b) {
      RngStream rng = root.derive(static_cast<std::uint64_t>(b));
      m.trees_[static_cast<std::size_t>(b)] = m.build_tree(ds, order, rng);
    });

    m.train_score_ = m.training_score(ds);
    return m;
  }

  int dim() const override { return d_; }
  int n_classes() const override { return n_classes_; }
  int ensemble_size() const override { return static_cast<int>(trees_.size()); }
  Task task() const { return task_; }
  const ForestHyperParams& params() const { return hp_; }
  std::uint64_t seed() const { return seed_; }
  double train_score() const { return train_score_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  Categorical member_pmf(int member, std::span<const double> x,
                         std::span<const std::uint8_t> missing = {}) const override {
    require_config(task_ == Task::classification, "forest: member pmf requires a classifier");
    require_config(member >= 0 && member < ensemble_size(), "forest: member index out of range");
    check_point(x, missing);
    const auto& tree = trees_[static_cast<std::size_t>(member)];
    const auto& node = tree.nodes[static_cast<std::size_t>(tree.walk(x, missing))];
    return Categorical::normalized(node.class_counts);
  }

  double predict_mean(std::span<const double> x, std::span<const std::uint8_t> missing = {}) const {
    check_point(x, missing);
    double acc = 0.0;
    for (const auto& tree : trees_) {
      const auto& node = tree.nodes[static_cast<std::size_t>(tree.walk(x, missing))];
      acc += task_ == Task::classification ? pmf_mean(node) : node.leaf_mean;
    }
    return acc / static_cast<double>(trees_.size());
  }

  PredictiveDistribution predict_dist(std::span<const double> x,
                                      std::span<const std::uint8_t> missing = {}) const override {
    check_point(x, missing);
    if (task_ == Task::classification) {
      std::vector<double> acc(static_cast<std::size_t>(n_classes_), 0.0);
      for (const auto& tree : trees_) {
        const auto& node = tree.nodes[static_cast<std::size_t>(tree.walk(x, missing))];
        double total = 0.0;
        for (const auto c : node.class_counts) total += c;
        for (int c = 0; c < n_classes_; ++c)
          acc[static_cast<std::size_t>(c)] += node.class_counts[static_cast<std::size_t>(c)] / total;
      }
      for (auto& v : acc) v /= static_cast<double>(trees_.size());
      return PredictiveDistribution(Categorical(std::move(acc)));
    }
    // Between-tree spread of member means, floored. This is ensemble spread,
    // not a calibrated predictive variance (the heteroskedastic pair owns that).
    double mean = 0.0;
    std::vector<double> member_means;
    member_means.reserve(trees_.size());
    for (const auto& tree : trees_) {
      const auto& node = tree.nodes[static_cast<std::size_t>(tree.walk(x, missing))];
      member_means.push_back(node.leaf_mean);
      mean += node.leaf_mean;
    }
    mean /= static_cast<double>(trees_.size());
    double var = 0.0;
    for (const auto v : member_means) var += (v - mean) * (v - mean);
    var /= static_cast<double>(trees_.size());
    return PredictiveDistribution(GaussianDist(mean, std::max(var, 1e-12)));
  }

  json to_json() const {
    json j;
    j["schema_version"] = 1;
    j["kind"] = "forest";
    j["task"] = task_ == Task::classification ? "classification" : "regression";
    j["d"] = d_;
    j["n_classes"] = n_classes_;
    j["seed"] = seed_;
    j["feature_names"] = feature_names_;
    j["train_score"] = train_score_;
    j["warnings"] = warnings_;
    j["params"] = {{"n_trees", hp_.n_trees}, {"max_depth", hp_.max_depth}, {"min_leaf", hp_.min_leaf}, {"mtry", hp_.mtry}};
    json trees = json::array();
    for (const auto& tree : trees_) trees.push_back(tree_to_json(tree, 0));
    j["trees"] = std::move(trees);
    return j;
  }

  static ForestModel from_json(const json& j) {
    try {
      require_data(j.at("kind") == "forest", "forest: wrong kind");
      ForestModel m;
      m.task_ = j.at("task") == "classification" ? Task::classification : Task::regression;
      m.d_ = j.at("d").get<int>();
      m.n_classes_ = j.at("n_classes").get<int>();
      m.seed_ = j.at("seed").get<std::uint64_t>();
      m.feature_names_ = j.at("feature_names").get<std::vector<std::string>>();
      m.train_score_ = j.at("train_score").get<double>();
      m.warnings_ = j.at("warnings").get<std::vector<std::string>>();
      const auto& p = j.at("params");
      m.hp_.n_trees = p.at("n_trees").get<int>();
      m.hp_.max_depth = p.at("max_depth").get<int>();
      m.hp_.min_leaf = p.at("min_leaf").get<int>();
      m.hp_.mtry = p.at("mtry").get<int>();
      for (const auto& tj : j.at("trees")) {
        detail::Tree tree;
        tree_from_json(tj, tree);
        m.trees_.push_back(std::move(tree));
      }
      require_data(!m.trees_.empty(), "forest: no trees");
      return m;
    } catch (const json::exception& e) {
      throw_data(std::string("forest: malformed JSON: ") + e.what());
    }
  }

  void save(const std::string& path) const { write_json_file(path, to_json()); }
  static ForestModel load(const std::string& path) { return from_json(read_json_file(path)); }

private:
  struct SplitCandidate {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;  // lower is better
    bool missing_left = false;
  };

  void check_point(std::span<const double> x, std::span<const std::uint8_t> missing) const {
    require_config(static_cast<int>(x.size()) == d_, "forest: point dimension mismatch");
    require_config(missing.empty() || missing.size() == x.size(), "forest: missing mask size mismatch");
  }

  static double pmf_mean(const detail::TreeNode& node) {
    double total = 0.0;
    double acc = 0.0;
    for (std::size_t c = 0; c < node.class_counts.size(); ++c) {
      total += node.class_counts[c];
      acc += static_cast<double>(c) * node.class_counts[c];
    }
    return acc / total;
  }

  detail::Tree build_tree(const Dataset& ds, const std::vector<std::int64_t>& order, RngStream& rng) const {
    const std::int64_t n = ds.n;
    std::vector<std::int64_t> rows(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
      rows[static_cast<std::size_t>(i)] =
          order[static_cast<std::size_t>(rng.uniform_below(static_cast<std::uint64_t>(n)))];

    detail::Tree tree;
    grow(ds, tree, std::move(rows), 0, rng);
    return tree;
  }

  int grow(const Dataset& ds, detail::Tree& tree, std::vector<std::int64_t> rows, int depth,
           RngStream& rng) const {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[static_cast<std::size_t>(id)].n_rows = static_cast<std::int64_t>(rows.size());

    const auto& y = *ds.target;
    bool pure = true;
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (y[static_cast<std::size_t>(rows[i])] != y[static_cast<std::size_t>(rows[0])]) {
        pure = false;
        break;
      }

    SplitCandidate best;
    if (!pure && depth < hp_.max_depth && static_cast<int>(rows.size()) >= 2 * hp_.min_leaf)
      best = find_split(ds, rows, rng);

    if (!best.found) {
      make_leaf(ds, tree.nodes[static_cast<std::size_t>(id)], rows);
      return id;
    }

    std::vector<std::int64_t> left_rows, right_rows;
    left_rows.reserve(rows.size());
    right_rows.reserve(rows.size());
    for (const auto r : rows) {
      const bool go_left = ds.is_missing(r, best.feature)
                               ? best.missing_left
                               : ds.at(r, best.feature) <= best.threshold;
      (go_left ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    if (static_cast<int>(left_rows.size()) < hp_.min_leaf ||
        static_cast<int>(right_rows.size()) < hp_.min_leaf) {
      // Split passed the present-rows check but missing routing starved a child.
      std::vector<std::int64_t> all = std::move(left_rows);
      all.insert(all.end(), right_rows.begin(), right_rows.end());
      make_leaf(ds, tree.nodes[static_cast<std::size_t>(id)], all);
      return id;
    }

    tree.nodes[static_cast<std::size_t>(id)].feature = best.feature;
    tree.nodes[static_cast<std::size_t>(id)].threshold = best.threshold;
    tree.nodes[static_cast<std::size_t>(id)].missing_goes_left = best.missing_left;
    const int left_id = grow(ds, tree, std::move(left_rows), depth + 1, rng);
    tree.nodes[static_cast<std::size_t>(id)].left = left_id;
    const int right_id = grow(ds, tree, std::move(right_rows), depth + 1, rng);
    tree.nodes[static_cast<std::size_t>(id)].right = right_id;
    return id;
  }

  void make_leaf(const Dataset& ds, detail::TreeNode& node, const std::vector<std::int64_t>& rows) const {
    const auto& y = *ds.target;
    node.feature = -1;
    node.n_rows = static_cast<std::int64_t>(rows.size());
    if (task_ == Task::classification) {
      node.class_counts.assign(static_cast<std::size_t>(n_classes_), 0.0);
      for (const auto r : rows) node.class_counts[static_cast<std::size_t>(y[static_cast<std::size_t>(r)])] += 1.0;
    } else {
      double acc = 0.0;
      for (const auto r : rows) acc += y[static_cast<std::size_t>(r)];
      node.leaf_mean = acc / static_cast<double>(rows.size());
    }
  }

  // Best (feature, threshold) over an mtry-subset of features. Candidate splits
  // are scored on rows where the feature is present (weighted Gini for
  // classification, total SSE for regression); rows with the feature missing
  // are routed to the child holding more present rows.
  SplitCandidate find_split(const Dataset& ds, const std::vector<std::int64_t>& rows, RngStream& rng) const {
    SplitCandidate best;
    const int mtry = hp_.resolved_mtry(d_, task_);
    std::vector<int> scratch, features;
    rng.sample_without_replacement<int>(d_, mtry, scratch, features);
    std::sort(features.begin(), features.end());

    const auto& y = *ds.target;
    std::vector<std::pair<double, std::int64_t>> present;
    present.reserve(rows.size());

    for (const auto f : features) {
      present.clear();
      std::int64_t n_missing = 0;
      for (const auto r : rows) {
        if (ds.is_missing(r, f)) ++n_missing;
        else present.emplace_back(ds.at(r, f), r);
      }
      const std::int64_t n_present = static_cast<std::int64_t>(present.size());
      if (n_present < 2) continue;
      std::sort(present.begin(), present.end());
      if (present.front().first == present.back().first) continue;

      if (task_ == Task::classification) {
        std::vector<double> left_counts(static_cast<std::size_t>(n_classes_), 0.0);
        std::vector<double> right_counts(static_cast<std::size_t>(n_classes_), 0.0);
        for (const auto& [v, r] : present) right_counts[static_cast<std::size_t>(y[static_cast<std::size_t>(r)])] += 1.0;
        double left_sq = 0.0, right_sq = 0.0;
        for (const auto c : right_counts) right_sq += c * c;
        std::int64_t n_left = 0;
        for (std::int64_t i = 0; i + 1 < n_present; ++i) {
          const auto& [v, r] = present[static_cast<std::size_t>(i)];
          const auto cls = static_cast<std::size_t>(y[static_cast<std::size_t>(r)]);
          left_sq += 2.0 * left_counts[cls] + 1.0;
          right_sq += -2.0 * right_counts[cls] + 1.0;
          left_counts[cls] += 1.0;
          right_counts[cls] -= 1.0;
          ++n_left;
          const double next = present[static_cast<std::size_t>(i + 1)].first;
          if (v == next) continue;
          const std::int64_t n_right = n_present - n_left;
          // weighted Gini = n_left (1 - left_sq/n_left^2) + n_right (1 - ...)
          const double score = static_cast<double>(n_present) - left_sq / static_cast<double>(n_left) -
                               right_sq / static_cast<double>(n_right);
          consider(best, ds, rows, f, v, next, score, n_left, n_right, n_missing);
        }
      } else {
        double right_sum = 0.0, right_sumsq = 0.0;
        for (const auto& [v, r] : present) {
          const double t = y[static_cast<std::size_t>(r)];
          right_sum += t;
          right_sumsq += t * t;
        }
        double left_sum = 0.0, left_sumsq = 0.0;
        std::int64_t n_left = 0;
        for (std::int64_t i = 0; i + 1 < n_present; ++i) {
          const auto& [v, r] = present[static_cast<std::size_t>(i)];
          const double t = y[static_cast<std::size_t>(r)];
          left_sum += t;
          left_sumsq += t * t;
          right_sum -= t;
          right_sumsq -= t * t;
          ++n_left;
          const double next = present[static_cast<std::size_t>(i + 1)].first;
          if (v == next) continue;
          const std::int64_t n_right = n_present - n_left;
          const double sse_left = left_sumsq - left_sum * left_sum / static_cast<double>(n_left);
          const double sse_right = right_sumsq - right_sum * right_sum / static_cast<double>(n_right);
          consider(best, ds, rows, f, v, next, sse_left + sse_right, n_left, n_right, n_missing);
        }
      }
    }
    return best;
  }

  void consider(SplitCandidate& best, const Dataset&, const std::vector<std::int64_t>&, int feature,
                double v, double next, double score, std::int64_t n_left, std::int64_t n_right,
                std::int64_t n_missing) const {
    const bool missing_left = n_left >= n_right;
    const std::int64_t total_left = n_left + (missing_left ? n_missing : 0);
    const std::int64_t total_right = n_right + (missing_left ? 0 : n_missing);
    if (total_left < hp_.min_leaf || total_right < hp_.min_leaf) return;
    if (best.found && score >= best.score) return;
    best.found = true;
    best.feature = feature;
    best.threshold = v + 0.5 * (next - v);
    best.score = score;
    best.missing_left = missing_left;
  }

  double training_score(const Dataset& ds) const {
    const auto& y = *ds.target;
    if (task_ == Task::classification) {
      std::int64_t correct = 0;
      for (std::int64_t i = 0; i < ds.n; ++i) {
        const auto pmf = predict_dist(ds.row(i), ds.row_missing(i)).categorical();
        int arg = 0;
        for (int c = 1; c < pmf.n_classes(); ++c)
          if (pmf[c] > pmf[arg]) arg = c;
        if (arg == static_cast<int>(y[static_cast<std::size_t>(i)])) ++correct;
      }
      return static_cast<double>(correct) / static_cast<double>(ds.n);
    }
    double mean = 0.0;
    for (const auto v : y) mean += v;
    mean /= static_cast<double>(ds.n);
    double sse = 0.0, sst = 0.0;
    for (std::int64_t i = 0; i < ds.n; ++i) {
      const double pred = predict_mean(ds.row(i), ds.row_missing(i));
      const double t = y[static_cast<std::size_t>(i)];
      sse += (t - pred) * (t - pred);
      sst += (t - mean) * (t - mean);
    }
    return sst > 0.0 ? 1.0 - sse / sst : 0.0;
  }

  json tree_to_json(const detail::Tree& tree, int id) const {
    const auto& node = tree.nodes[static_cast<std::size_t>(id)];
    json j;
    j["n"] = node.n_rows;
    if (node.feature < 0) {
      if (task_ == Task::classification) j["counts"] = node.class_counts;
      else j["mean"] = node.leaf_mean;
      return j;
    }
    j["feature"] = node.feature;
    j["threshold"] = node.threshold;
    j["missing_left"] = node.missing_goes_left;
    j["left"] = tree_to_json(tree, node.left);
    j["right"] = tree_to_json(tree, node.right);
    return j;
  }

  static int tree_from_json(const json& j, detail::Tree& tree) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[static_cast<std::size_t>(id)].n_rows = j.at("n").get<std::int64_t>();
    if (!j.contains("feature")) {
      if (j.contains("counts"))
        tree.nodes[static_cast<std::size_t>(id)].class_counts = j.at("counts").get<std::vector<double>>();
      else
        tree.nodes[static_cast<std::size_t>(id)].leaf_mean = j.at("mean").get<double>();
      return id;
    }
    tree.nodes[static_cast<std::size_t>(id)].feature = j.at("feature").get<int>();
    tree.nodes[static_cast<std::size_t>(id)].threshold = j.at("threshold").get<double>();
    tree.nodes[static_cast<std::size_t>(id)].missing_goes_left = j.at("missing_left").get<bool>();
    const int left_id = tree_from_json(j.at("left"), tree);
    tree.nodes[static_cast<std::size_t>(id)].left = left_id;
    const int right_id = tree_from_json(j.at("right"), tree);
    tree.nodes[static_cast<std::size_t>(id)].right = right_id;
    return id;
  }

  Task task_ = Task::classification;
  int d_ = 0;
  int n_classes_ = 0;
  ForestHyperParams hp_;
  std::uint64_t seed_ = 0;
  double train_score_ = 0.0;
  std::vector<std::string> feature_names_;
  std::vector<std::string> warnings_;
  std::vector<detail::Tree> trees_;
};

}  // namespace entshap
