#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "entshap/dataset.hpp"
#include "entshap/error.hpp"
#include "entshap/forest.hpp"
#include "entshap/io.hpp"
#include "entshap/predictor.hpp"
#include "entshap/rng.hpp"

namespace entshap {

// How stage trees pick their splits: greedy picks the best ridge-gain
// (feature, threshold) over all features; balanced_random draws a uniform
// feature and a uniform threshold rank inside the balanced window, so the
// structure never sees the residuals.
enum class SplitMode { greedy, balanced_random };

struct BoostParams {
  int n_rounds = 400;
  int max_depth = 6;
  int min_leaf = 5;
  double learning_rate = 0.1;
  double l2 = 1.0;
  // Each child of a split keeps at least this fraction of the node's present
  // rows, so stage trees stay balanced and every row is smoothed at a similar
  // rate across rounds.
  double min_child_frac = 0.3;
  SplitMode split_mode = SplitMode::balanced_random;

  void validate() const {
    require_config(n_rounds >= 1, "boosted forest: n_rounds must be >= 1");
    require_config(max_depth >= 1, "boosted forest: max_depth must be >= 1");
    require_config(min_leaf >= 1, "boosted forest: min_leaf must be >= 1");
    require_config(learning_rate > 0.0 && learning_rate <= 1.0,
                   "boosted forest: learning_rate must lie in (0, 1]");
    require_config(l2 >= 0.0, "boosted forest: l2 must be nonnegative");
    require_config(min_child_frac > 0.0 && min_child_frac < 0.5,
                   "boosted forest: min_child_frac must lie in (0, 0.5)");
  }
};

// L2 boosting over randomized balanced trees. Stage structure (feature and
// threshold per node) is drawn from the seed stream alone: a uniform feature
// and a uniform threshold rank inside the balanced window, never the
// residuals. Only the ridge leaf values sum(residual) / (count + l2) adapt, so
// the fit is a linear smoother in the targets whose self-influence is nearly
// uniform across rows. Smooth structure in the target is absorbed quickly over
// rounds while pointwise noise is absorbed slowly and evenly, which keeps the
// spatial pattern of squared training residuals intact. That makes the stack
// suited to mean modeling whose residuals feed a variance model; a greedy
// boosted fit or a bagged forest would either chase and flatten large
// residuals or leave its own bias pattern in them.
class BoostedForest : public Predictor {
public:
  BoostedForest() = default;

  static BoostedForest fit(const Dataset& ds, const BoostParams& p, std::uint64_t seed) {
    ds.validate();
    require_data(ds.target.has_value(), "boosted forest: dataset has no target column");
    require_data(ds.n >= 2, "boosted forest: need at least two rows");
    p.validate();

    BoostedForest m;
    m.d_ = ds.d;
    m.params_ = p;
    m.seed_ = seed;
    m.feature_names_ = ds.feature_names;

    const auto& y = *ds.target;
    double sum = 0.0;
    for (const auto v : y) sum += v;
    m.base_ = sum / static_cast<double>(ds.n);

    const auto order = detail::canonical_order(ds);
    const auto n = static_cast<std::size_t>(ds.n);
    std::vector<double> resid(n);
    std::vector<double> cur(n, m.base_);
    const RngStream root(seed, 0xB0057ULL);

    for (int k = 0; k < p.n_rounds; ++k) {
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - cur[i];
        resid[i] = r;
        ss += r * r;
      }
      if (ss == 0.0) break;
      RngStream rng = root.derive(static_cast<std::uint64_t>(k));
      detail::Tree tree;
      grow(ds, resid, tree, order, 0, p, rng);
      // A lone-leaf stage holds the mean residual, which the base already
      // removed: no progress is possible, stop.
      if (tree.nodes.size() == 1) break;
      for (std::int64_t i = 0; i < ds.n; ++i) {
        const auto& node = tree.nodes[static_cast<std::size_t>(tree.walk(ds.row(i), ds.row_missing(i)))];
        cur[static_cast<std::size_t>(i)] += p.learning_rate * node.leaf_mean;
      }
      m.stages_.push_back(std::move(tree));
    }
    if (m.stages_.empty())
      m.warnings_.push_back("degenerate fit: no stage improved on the target mean");

    double sse = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sse += (y[i] - cur[i]) * (y[i] - cur[i]);
      sst += (y[i] - m.base_) * (y[i] - m.base_);
    }
    m.train_score_ = sst > 0.0 ? 1.0 - sse / sst : 0.0;
    return m;
  }

  int dim() const override { return d_; }
  int n_classes() const override { return 0; }
  int n_stages() const { return static_cast<int>(stages_.size()); }
  double base() const { return base_; }
  const BoostParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }
  double train_score() const { return train_score_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  double predict_mean(std::span<const double> x, std::span<const std::uint8_t> missing = {}) const {
    check_point(x, missing);
    double acc = base_;
    for (const auto& tree : stages_) {
      const auto& node = tree.nodes[static_cast<std::size_t>(tree.walk(x, missing))];
      acc += params_.learning_rate * node.leaf_mean;
    }
    return acc;
  }

  // Point predictor: the stack models no spread of its own, so the Gaussian
  // variance is a floor. Pair it with a variance model for calibrated spread.
  PredictiveDistribution predict_dist(std::span<const double> x,
                                      std::span<const std::uint8_t> missing = {}) const override {
    return PredictiveDistribution(GaussianDist(predict_mean(x, missing), 1e-12));
  }

  json to_json() const {
    json j;
    j["schema_version"] = 1;
    j["kind"] = "boosted_forest";
    j["d"] = d_;
    j["base"] = base_;
    j["seed"] = seed_;
    j["feature_names"] = feature_names_;
    j["train_score"] = train_score_;
    j["warnings"] = warnings_;
    j["params"] = {{"n_rounds", params_.n_rounds},
                   {"max_depth", params_.max_depth},
                   {"min_leaf", params_.min_leaf},
                   {"learning_rate", params_.learning_rate},
                   {"l2", params_.l2},
                   {"min_child_frac", params_.min_child_frac}};
    json stages = json::array();
    for (const auto& tree : stages_) stages.push_back(tree_to_json(tree, 0));
    j["stages"] = std::move(stages);
    return j;
  }

  static BoostedForest from_json(const json& j) {
    try {
      require_data(j.at("kind") == "boosted_forest", "boosted forest: wrong kind");
      BoostedForest m;
      m.d_ = j.at("d").get<int>();
      m.base_ = j.at("base").get<double>();
      m.seed_ = j.at("seed").get<std::uint64_t>();
      m.feature_names_ = j.at("feature_names").get<std::vector<std::string>>();
      m.train_score_ = j.at("train_score").get<double>();
      m.warnings_ = j.at("warnings").get<std::vector<std::string>>();
      const auto& p = j.at("params");
      m.params_.n_rounds = p.at("n_rounds").get<int>();
      m.params_.max_depth = p.at("max_depth").get<int>();
      m.params_.min_leaf = p.at("min_leaf").get<int>();
      m.params_.learning_rate = p.at("learning_rate").get<double>();
      m.params_.l2 = p.at("l2").get<double>();
      m.params_.min_child_frac = p.at("min_child_frac").get<double>();
      for (const auto& tj : j.at("stages")) {
        detail::Tree tree;
        tree_from_json(tj, tree);
        m.stages_.push_back(std::move(tree));
      }
      return m;
    } catch (const json::exception& e) {
      throw_data(std::string("boosted forest: malformed JSON: ") + e.what());
    }
  }

  void save(const std::string& path) const { write_json_file(path, to_json()); }
  static BoostedForest load(const std::string& path) { return from_json(read_json_file(path)); }

private:
  struct Split {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    bool missing_left = false;
  };

  void check_point(std::span<const double> x, std::span<const std::uint8_t> missing) const {
    require_config(static_cast<int>(x.size()) == d_, "boosted forest: point dimension mismatch");
    require_config(missing.empty() || missing.size() == x.size(),
                   "boosted forest: missing mask size mismatch");
  }

  static int grow(const Dataset& ds, const std::vector<double>& resid, detail::Tree& tree,
                  std::vector<std::int64_t> rows, int depth, const BoostParams& p, RngStream& rng) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[static_cast<std::size_t>(id)].n_rows = static_cast<std::int64_t>(rows.size());

    Split best;
    if (depth < p.max_depth && static_cast<int>(rows.size()) >= 2 * p.min_leaf)
      best = sample_split(ds, rows, p, rng);

    if (best.found) {
      std::vector<std::int64_t> left_rows, right_rows;
      left_rows.reserve(rows.size());
      right_rows.reserve(rows.size());
      for (const auto r : rows) {
        const bool go_left = ds.is_missing(r, best.feature) ? best.missing_left
                                                            : ds.at(r, best.feature) <= best.threshold;
        (go_left ? left_rows : right_rows).push_back(r);
      }
      if (static_cast<int>(left_rows.size()) >= p.min_leaf &&
          static_cast<int>(right_rows.size()) >= p.min_leaf) {
        rows.clear();
        rows.shrink_to_fit();
        tree.nodes[static_cast<std::size_t>(id)].feature = best.feature;
        tree.nodes[static_cast<std::size_t>(id)].threshold = best.threshold;
        tree.nodes[static_cast<std::size_t>(id)].missing_goes_left = best.missing_left;
        const int left_id = grow(ds, resid, tree, std::move(left_rows), depth + 1, p, rng);
        tree.nodes[static_cast<std::size_t>(id)].left = left_id;
        const int right_id = grow(ds, resid, tree, std::move(right_rows), depth + 1, p, rng);
        tree.nodes[static_cast<std::size_t>(id)].right = right_id;
        return id;
      }
      // Missing routing starved a child: fall through to a leaf.
    }

    double g = 0.0;
    for (const auto r : rows) g += resid[static_cast<std::size_t>(r)];
    tree.nodes[static_cast<std::size_t>(id)].feature = -1;
    tree.nodes[static_cast<std::size_t>(id)].leaf_mean =
        g / (static_cast<double>(rows.size()) + p.l2);
    return id;
  }

  // Draw (feature, threshold): feature uniform, threshold the midpoint at a
  // uniform rank inside the balanced window of the feature's present values.
  // Rows with the feature missing follow the child holding more present rows.
  static Split sample_split(const Dataset& ds, const std::vector<std::int64_t>& rows,
                            const BoostParams& p, RngStream& rng) {
    Split best;
    std::vector<double> vals;
    vals.reserve(rows.size());
    const int attempts = 2 * ds.d;
    for (int a = 0; a < attempts && !best.found; ++a) {
      const int f = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(ds.d)));
      vals.clear();
      std::int64_t n_missing = 0;
      for (const auto r : rows) {
        if (ds.is_missing(r, f)) ++n_missing;
        else vals.push_back(ds.at(r, f));
      }
      const auto n_present = static_cast<std::int64_t>(vals.size());
      if (n_present < 2 * p.min_leaf) continue;
      std::sort(vals.begin(), vals.end());
      if (vals.front() == vals.back()) continue;

      const auto lo = std::max<std::int64_t>(
          p.min_leaf,
          static_cast<std::int64_t>(std::ceil(p.min_child_frac * static_cast<double>(n_present))));
      const std::int64_t hi = n_present - lo;  // cut index c splits into [0,c) | [c,n)
      if (lo > hi) continue;
      const std::int64_t c =
          lo + static_cast<std::int64_t>(rng.uniform_below(static_cast<std::uint64_t>(hi - lo + 1)));

      // Walk outward from c to the nearest distinct-value boundary in window.
      std::int64_t cut = -1;
      for (std::int64_t off = 0; off <= hi - lo; ++off) {
        const std::int64_t cand_dn = c - off;
        if (cand_dn >= lo && vals[static_cast<std::size_t>(cand_dn - 1)] != vals[static_cast<std::size_t>(cand_dn)]) {
          cut = cand_dn;
          break;
        }
        const std::int64_t cand_up = c + off;
        if (off > 0 && cand_up <= hi &&
            vals[static_cast<std::size_t>(cand_up - 1)] != vals[static_cast<std::size_t>(cand_up)]) {
          cut = cand_up;
          break;
        }
      }
      if (cut < 0) continue;

      const std::int64_t n_left = cut;
      const std::int64_t n_right = n_present - cut;
      const bool missing_left = n_left >= n_right;
      const std::int64_t total_left = n_left + (missing_left ? n_missing : 0);
      const std::int64_t total_right = n_right + (missing_left ? 0 : n_missing);
      if (total_left < p.min_leaf || total_right < p.min_leaf) continue;
      best.found = true;
      best.feature = f;
      best.threshold = vals[static_cast<std::size_t>(cut - 1)] +
                       0.5 * (vals[static_cast<std::size_t>(cut)] - vals[static_cast<std::size_t>(cut - 1)]);
      best.missing_left = missing_left;
    }
    return best;
  }

  json tree_to_json(const detail::Tree& tree, int id) const {
    const auto& node = tree.nodes[static_cast<std::size_t>(id)];
    json j;
    j["n"] = node.n_rows;
    if (node.feature < 0) {
      j["value"] = node.leaf_mean;
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
      tree.nodes[static_cast<std::size_t>(id)].leaf_mean = j.at("value").get<double>();
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

  int d_ = 0;
  double base_ = 0.0;
  BoostParams params_;
  std::uint64_t seed_ = 0;
  double train_score_ = 0.0;
  std::vector<std::string> feature_names_;
  std::vector<std::string> warnings_;
  std::vector<detail::Tree> stages_;
};

}  // namespace entshap
