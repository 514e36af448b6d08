// Command-line front end: explain CSV data with a chosen uncertainty game and
// sampler, run the built-in experiment harnesses, or self-verify the exact
// oracles. Exit codes: 0 ok, 1 verification failure, 2 config error, 3 data
// error, 4 capacity error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "entshap/entshap.hpp"

namespace fs = std::filesystem;
using entshap::json;

namespace {

struct CommonOpts {
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  int threads = 1;
  std::string units = "bits";
  bool svg = false;
  std::string config_path;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--out", c.out_dir, "Output directory for artifacts")
      ->envname("ENTSHAP_OUT_DIR")
      ->capture_default_str();
  cmd->add_option("--seed", c.seed, "Root seed; fully determines all outputs")->capture_default_str();
  cmd->add_option("--threads", c.threads, "Worker cap; results are independent of it")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--units", c.units, "Log base for reported values")
      ->check(CLI::IsMember({"bits", "nats"}))
      ->capture_default_str();
  cmd->add_flag("--svg", c.svg, "Also write static SVG charts");
  cmd->add_option("--config", c.config_path, "JSON config file; explicit flags override its values")
      ->check(CLI::ExistingFile);
}

// defaults < config file < explicit flags. The file may set any subset of keys.
void deep_merge(json& base, const json& overlay) {
  if (!overlay.is_object() || !base.is_object()) {
    base = overlay;
    return;
  }
  for (const auto& [k, v] : overlay.items()) {
    if (base.contains(k))
      deep_merge(base[k], v);
    else
      base[k] = v;
  }
}

void apply_config_file(json& cfg, const std::string& path) {
  if (path.empty()) return;
  const json overlay = entshap::read_json_file(path);
  entshap::require_config(overlay.is_object(), "config file must hold a JSON object: " + path);
  deep_merge(cfg, overlay);
}

fs::path prepare_out_dir(const std::string& out_dir) {
  const fs::path p(out_dir);
  fs::create_directories(p);
  return p;
}

std::string write_artifact(const fs::path& dir, const std::string& name, const std::string& content) {
  entshap::write_text_file((dir / name).string(), content);
  return name;
}

std::string metrics_csv(const std::map<std::string, double>& metrics) {
  std::string out = "metric,value\n";
  for (const auto& [k, v] : metrics) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += k;
    out += ',';
    out += buf;
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// explain

struct ExplainOpts {
  CommonOpts common;
  std::string train_path;
  std::string explain_path;
  std::string target;
  std::string missing_token = "NA";
  std::string model = "auto";  // auto, forest-class, forest-reg, hetero
  std::string game = "hstar-total";
  std::string sampler = "marginal";
  int knn_k = 0;
  int imputations = 16;
  std::string mode = "sampling";
  bool exact = false;
  int budget = 128;
  bool antithetic = true;
  double alpha = 0.0;  // 0 = no bands
  int target_class = 1;
  entshap::ForestHyperParams forest;
};

void add_forest_flags(CLI::App* cmd, entshap::ForestHyperParams& hp) {
  cmd->add_option("--trees", hp.n_trees, "Trees per forest")->capture_default_str();
  cmd->add_option("--depth", hp.max_depth, "Maximum tree depth")->capture_default_str();
  cmd->add_option("--min-leaf", hp.min_leaf, "Minimum rows per leaf")->capture_default_str();
  cmd->add_option("--mtry", hp.mtry, "Features tried per split; 0 = task default")->capture_default_str();
}

json explain_config(const ExplainOpts& o) {
  json cfg;
  cfg["command"] = "explain";
  cfg["train"] = o.train_path;
  cfg["explain"] = o.explain_path;
  cfg["target"] = o.target;
  cfg["missing_token"] = o.missing_token;
  cfg["model"] = o.model;
  cfg["game"] = o.game;
  cfg["sampler"] = json{{"type", o.sampler}, {"k", o.knn_k}, {"m", o.imputations}};
  cfg["mode"] = o.exact ? "exact" : o.mode;
  cfg["budget"] = json{{"n_permutations", o.budget}, {"antithetic", o.antithetic}};
  if (o.alpha > 0.0)
    cfg["alpha"] = o.alpha;
  else
    cfg["alpha"] = nullptr;
  cfg["target_class"] = o.target_class;
  cfg["forest"] = json{{"n_trees", o.forest.n_trees},
                       {"max_depth", o.forest.max_depth},
                       {"min_leaf", o.forest.min_leaf},
                       {"mtry", o.forest.mtry}};
  cfg["seed"] = o.common.seed;
  cfg["units"] = o.common.units;
  return cfg;
}

void override_from_cli(json& cfg, const CLI::App* cmd, const ExplainOpts& o) {
  if (cmd->count("--train")) cfg["train"] = o.train_path;
  if (cmd->count("--explain")) cfg["explain"] = o.explain_path;
  if (cmd->count("--target")) cfg["target"] = o.target;
  if (cmd->count("--missing-token")) cfg["missing_token"] = o.missing_token;
  if (cmd->count("--model")) cfg["model"] = o.model;
  if (cmd->count("--game")) cfg["game"] = o.game;
  if (cmd->count("--sampler")) cfg["sampler"]["type"] = o.sampler;
  if (cmd->count("--knn-k")) cfg["sampler"]["k"] = o.knn_k;
  if (cmd->count("--imputations")) cfg["sampler"]["m"] = o.imputations;
  if (cmd->count("--mode")) cfg["mode"] = o.mode;
  if (cmd->count("--exact")) cfg["mode"] = "exact";
  if (cmd->count("--budget")) cfg["budget"]["n_permutations"] = o.budget;
  if (cmd->count("--antithetic") || cmd->count("--no-antithetic"))
    cfg["budget"]["antithetic"] = o.antithetic;
  if (cmd->count("--alpha")) cfg["alpha"] = o.alpha;
  if (cmd->count("--target-class")) cfg["target_class"] = o.target_class;
  if (cmd->count("--trees")) cfg["forest"]["n_trees"] = o.forest.n_trees;
  if (cmd->count("--depth")) cfg["forest"]["max_depth"] = o.forest.max_depth;
  if (cmd->count("--min-leaf")) cfg["forest"]["min_leaf"] = o.forest.min_leaf;
  if (cmd->count("--mtry")) cfg["forest"]["mtry"] = o.forest.mtry;
  if (cmd->count("--seed")) cfg["seed"] = o.common.seed;
  if (cmd->count("--units")) cfg["units"] = o.common.units;
}

bool target_is_categorical(const entshap::Dataset& ds, int max_classes = 32) {
  for (const auto v : *ds.target) {
    if (!(v >= 0.0 && v < static_cast<double>(max_classes))) return false;
    if (v != std::floor(v)) return false;
  }
  return true;
}

int run_explain(const ExplainOpts& opts, const CLI::App* cmd) {
  json cfg = explain_config(opts);
  apply_config_file(cfg, opts.common.config_path);
  override_from_cli(cfg, cmd, opts);

  const std::string train_path = cfg.at("train").get<std::string>();
  const std::string explain_path = cfg.at("explain").get<std::string>();
  const std::string target = cfg.at("target").get<std::string>();
  entshap::require_config(!train_path.empty(), "explain: --train is required");
  entshap::require_config(!explain_path.empty(), "explain: --explain is required");
  entshap::require_config(!target.empty(), "explain: --target is required");
  const std::string missing_token = cfg.at("missing_token").get<std::string>();
  const std::string game_name = cfg.at("game").get<std::string>();
  const std::string mode_name = cfg.at("mode").get<std::string>();
  entshap::require_config(mode_name == "exact" || mode_name == "sampling",
                          "explain: mode must be exact or sampling");
  const std::string sampler_name = cfg.at("sampler").at("type").get<std::string>();
  const int knn_k = cfg.at("sampler").at("k").get<int>();
  const int imputations = cfg.at("sampler").at("m").get<int>();
  const double alpha = cfg.at("alpha").is_null() ? 0.0 : cfg.at("alpha").get<double>();
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
  const entshap::LogBase base = entshap::LogBase::parse(cfg.at("units").get<std::string>());
  entshap::ForestHyperParams hp;
  hp.n_trees = cfg.at("forest").at("n_trees").get<int>();
  hp.max_depth = cfg.at("forest").at("max_depth").get<int>();
  hp.min_leaf = cfg.at("forest").at("min_leaf").get<int>();
  hp.mtry = cfg.at("forest").at("mtry").get<int>();
  entshap::CoalitionBudget budget{cfg.at("budget").at("n_permutations").get<int>(),
                                  cfg.at("budget").at("antithetic").get<bool>()};

  const std::uint64_t config_hash = entshap::hash_json(cfg);
  const fs::path out = prepare_out_dir(opts.common.out_dir);
  std::vector<std::string> warnings;

  const entshap::Dataset full_train = entshap::load_csv(train_path, target, missing_token);
  entshap::Dataset explain_ds = entshap::load_csv(
      explain_path,
      [&] {
        // The explain file may or may not carry the target column.
        const entshap::Dataset probe = entshap::load_csv(explain_path, std::nullopt, missing_token);
        for (const auto& name : probe.feature_names)
          if (name == target) return std::optional<std::string>(target);
        return std::optional<std::string>();
      }(),
      missing_token);
  entshap::require_data(explain_ds.feature_names == full_train.feature_names,
                        "explain: feature columns must match the training file");

  // With --alpha the training file is half-split: one half fits the model, the
  // other is attributed to calibrate per-feature conformal bands.
  entshap::Dataset fit_ds = full_train;
  entshap::Dataset cal_ds;
  const bool with_bands = alpha > 0.0;
  if (with_bands) {
    const auto halves = entshap::split_half(full_train.n, seed);
    fit_ds = full_train.subset(halves.first);
    cal_ds = full_train.subset(halves.second);
    entshap::require_data(cal_ds.n >= entshap::conformal_min_calibration(alpha),
                          "explain: calibration half too small for alpha");
  }

  // Resolve the model kind.
  std::string model_kind = cfg.at("model").get<std::string>();
  if (model_kind == "auto") {
    if (game_name == "logvar" || game_name == "mean")
      model_kind = "hetero";
    else if (game_name == "hstar-total" && !target_is_categorical(fit_ds))
      model_kind = "hetero";
    else
      model_kind = "forest-class";
  }

  std::shared_ptr<const entshap::Predictor> predictor;
  std::shared_ptr<const entshap::EnsemblePredictor> ensemble;
  std::shared_ptr<const entshap::HeteroskedasticPair> pair;
  if (model_kind == "forest-class") {
    entshap::require_data(target_is_categorical(fit_ds),
                          "explain: forest-class needs small nonnegative integer class labels");
    auto m = std::make_shared<entshap::ForestModel>(entshap::ForestModel::fit(
        fit_ds, entshap::Task::classification, hp, seed, opts.common.threads));
    for (const auto& w : m->warnings()) warnings.push_back(w);
    ensemble = m;
    predictor = m;
  } else if (model_kind == "forest-reg") {
    auto m = std::make_shared<entshap::ForestModel>(entshap::ForestModel::fit(
        fit_ds, entshap::Task::regression, hp, seed, opts.common.threads));
    for (const auto& w : m->warnings()) warnings.push_back(w);
    ensemble = m;
    predictor = m;
  } else if (model_kind == "hetero") {
    auto m = std::make_shared<entshap::HeteroskedasticPair>(
        entshap::HeteroskedasticPair::fit(fit_ds, hp, seed, 1e-8, opts.common.threads));
    for (const auto& w : m->warnings()) warnings.push_back(w);
    pair = m;
    predictor = m;
  } else {
    entshap::throw_config("explain: unknown model '" + model_kind +
                          "' (expected auto, forest-class, forest-reg, hetero)");
  }

  const auto background = std::make_shared<const entshap::Dataset>(fit_ds);
  const auto sampler = entshap::make_sampler(sampler_name, background, knn_k);

  std::shared_ptr<const entshap::Game> game;
  if (game_name == "v0") {
    game = entshap::make_v0_game(predictor, sampler, imputations, cfg.at("target_class").get<int>());
  } else if (game_name == "hstar-total") {
    game = entshap::make_hstar_total_game(predictor, sampler, imputations);
  } else if (game_name == "hstar-aleatoric") {
    entshap::require_config(ensemble != nullptr, "explain: game needs a classifier forest");
    game = entshap::make_hstar_aleatoric_game(ensemble, sampler, imputations);
  } else if (game_name == "hstar-epistemic") {
    entshap::require_config(ensemble != nullptr, "explain: game needs a classifier forest");
    game = entshap::make_hstar_epistemic_game(ensemble, sampler, imputations);
  } else if (game_name == "logvar") {
    entshap::require_config(pair != nullptr, "explain: logvar game needs --model hetero");
    game = entshap::make_logvar_game(pair, sampler, imputations);
  } else if (game_name == "mean") {
    entshap::require_config(pair != nullptr, "explain: mean game needs --model hetero");
    game = entshap::make_mean_game(pair, sampler, imputations);
  } else {
    entshap::throw_config("explain: unknown game '" + game_name +
                          "' (expected v0, hstar-total, hstar-aleatoric, hstar-epistemic, logvar, mean)");
  }

  const entshap::AttributionMode mode = mode_name == "exact" ? entshap::AttributionMode::exact
                                                             : entshap::AttributionMode::sampling;
  std::vector<std::int64_t> rows(static_cast<std::size_t>(explain_ds.n));
  for (std::int64_t i = 0; i < explain_ds.n; ++i) rows[static_cast<std::size_t>(i)] = i;
  entshap::AttributionMatrix attr =
      entshap::attribute_dataset(*game, explain_ds, rows, mode, budget, seed, opts.common.threads);
  attr.convert_units(base);

  std::vector<std::string> artifacts;
  json attr_json = attr.to_json();
  attr_json["config_hash"] = entshap::hex64(config_hash);
  artifacts.push_back(write_artifact(out, "attributions.json", attr_json.dump(2) + "\n"));
  artifacts.push_back(write_artifact(out, "attributions.csv", attr.to_csv()));

  if (with_bands) {
    std::vector<std::int64_t> cal_rows;
    for (std::int64_t i = 0; i < cal_ds.n; ++i)
      if (cal_ds.row_complete(i)) cal_rows.push_back(i);
    entshap::require_data(!cal_rows.empty(), "explain: calibration half has no complete rows");
    entshap::AttributionMatrix cal =
        entshap::attribute_dataset(*game, cal_ds, cal_rows, mode, budget, seed, opts.common.threads);
    cal.convert_units(base);
    json bands;
    bands["schema_version"] = 1;
    bands["kind"] = "conformal_bands";
    bands["alpha"] = alpha;
    bands["n_cal"] = static_cast<std::int64_t>(cal_rows.size());
    bands["units"] = base.name();
    bands["config_hash"] = entshap::hex64(config_hash);
    bands["features"] = json::array();
    double expected = 0.0;
    for (int j = 0; j < cal.d; ++j) {
      std::vector<double> scores(static_cast<std::size_t>(cal.n_rows));
      for (std::int64_t i = 0; i < cal.n_rows; ++i) scores[static_cast<std::size_t>(i)] = cal.at(i, j);
      const entshap::FeatureSelection sel =
          entshap::select_feature(std::move(scores), alpha, j, cal.meta.feature_names[static_cast<std::size_t>(j)]);
      expected = sel.band.expected_coverage();
      bands["features"].push_back(sel.to_json());
    }
    bands["expected_coverage"] = expected;
    artifacts.push_back(write_artifact(out, "bands.json", bands.dump(2) + "\n"));
  }

  if (opts.common.svg) {
    std::vector<double> mean_abs(static_cast<std::size_t>(attr.d), 0.0);
    for (std::int64_t i = 0; i < attr.n_rows; ++i)
      for (int j = 0; j < attr.d; ++j)
        mean_abs[static_cast<std::size_t>(j)] += std::fabs(attr.at(i, j)) / static_cast<double>(attr.n_rows);
    artifacts.push_back(write_artifact(
        out, "attributions.svg",
        entshap::svg::bar_chart(attr.meta.feature_names, mean_abs,
                           "mean |phi| per feature (" + base.name() + ")")));
  }

  json manifest;
  manifest["schema_version"] = 1;
  manifest["kind"] = "run_manifest";
  manifest["command"] = "explain";
  manifest["config"] = cfg;
  manifest["config_hash"] = entshap::hex64(config_hash);
  manifest["artifacts"] = artifacts;
  manifest["warnings"] = warnings;
  write_artifact(out, "manifest.json", manifest.dump(2) + "\n");

  std::cout << "explain: wrote " << artifacts.size() + 1 << " artifacts to " << out.string()
            << " (config " << entshap::hex64(config_hash) << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// experiment

struct ExperimentOpts {
  CommonOpts common;
  std::string name;
  // shared
  int replicates = -1;
  std::string sampler;
  int imputations = -1;
  int budget = -1;
  bool antithetic = true;
  bool antithetic_set = false;
  double alpha = -1.0;
  entshap::ForestHyperParams forest;
  // convergence
  int d = -1;
  std::vector<double> rho;
  std::vector<std::int64_t> n_grid;
  std::vector<std::string> samplers;
  int n_test = -1;
  // friedman
  std::int64_t n_train = -1;
  double sigma_y = -1.0;
  double zero_width = -1.0;
  std::int64_t n_explain_cal = -1;
  std::int64_t n_explain_test = -1;
  std::vector<double> fractions;
  std::int64_t n_explain = -1;
  // shift
  double noise_scale = -1.0;
  int perturb_feature = -2;
  double test_fraction = -1.0;
  // coverage
  std::int64_t n_cal = -1;
};

void finish_experiment(const CommonOpts& common, entshap::ExperimentResult& result,
                       std::vector<std::pair<std::string, std::string>> extra_artifacts) {
  const fs::path out = prepare_out_dir(common.out_dir);
  const std::string tag = result.tag();
  result.artifacts.push_back(tag + ".json");
  result.artifacts.push_back(tag + "_metrics.csv");
  for (const auto& [suffix, _] : extra_artifacts) result.artifacts.push_back(tag + suffix);
  write_artifact(out, tag + "_metrics.csv", metrics_csv(result.metrics));
  for (const auto& [suffix, content] : extra_artifacts) write_artifact(out, tag + suffix, content);
  write_artifact(out, tag + ".json", result.to_json().dump(2) + "\n");
  std::cout << "experiment " << result.name << ": wrote " << result.artifacts.size()
            << " artifacts to " << out.string() << " (config " << entshap::hex64(result.config_hash)
            << ")\n";
  for (const auto& w : result.warnings) std::cout << "warning: " << w << "\n";
}

int run_experiment(const ExperimentOpts& o) {
  const auto& name = o.name;
  if (name == "gauss-convergence") {
    entshap::ConvergenceConfig cfg;
    cfg.seed = o.common.seed;
    cfg.threads = o.common.threads;
    if (o.d > 0) cfg.d = o.d;
    if (!o.rho.empty()) cfg.rho_grid = o.rho;
    if (!o.n_grid.empty()) cfg.n_grid = o.n_grid;
    if (!o.samplers.empty()) cfg.samplers = o.samplers;
    if (o.replicates > 0) cfg.replicates = o.replicates;
    if (o.n_test > 0) cfg.n_test = o.n_test;
    if (o.imputations > 0) cfg.imputations = o.imputations;
    cfg.forest = o.forest;
    auto outcome = entshap::run_gauss_convergence(cfg);
    std::vector<std::pair<std::string, std::string>> extra;
    if (o.common.svg) {
      std::vector<entshap::svg::Series> series;
      for (const auto rho : cfg.rho_grid)
        for (const auto& s : cfg.samplers) {
          entshap::svg::Series ser;
          ser.name = s + " rho=" + entshap::svg::num(rho);
          for (const auto n : cfg.n_grid) {
            const auto& cell = outcome.cell(rho, n, s);
            ser.xs.push_back(static_cast<double>(n));
            ser.ys.push_back(cell.mae_mean);
          }
          series.push_back(std::move(ser));
        }
      extra.emplace_back(".svg", entshap::svg::line_chart(series, "MAE vs training size", true));
    }
    finish_experiment(o.common, outcome.result, std::move(extra));
    return 0;
  }
  if (name == "friedman-selection") {
    entshap::SelectionConfig cfg;
    cfg.seed = o.common.seed;
    cfg.threads = o.common.threads;
    cfg.data.seed = o.common.seed;
    if (o.n_train > 0) cfg.data.n_train = o.n_train;
    if (o.n_test > 0) cfg.data.n_test = o.n_test;
    if (o.sigma_y >= 0.0) cfg.data.sigma_y = o.sigma_y;
    if (o.replicates > 0) cfg.replicates = o.replicates;
    if (o.alpha > 0.0) cfg.alpha = o.alpha;
    if (o.zero_width >= 0.0) cfg.zero_width = o.zero_width;
    if (!o.sampler.empty()) cfg.sampler = o.sampler;
    if (o.imputations > 0) cfg.imputations = o.imputations;
    if (o.budget > 0) cfg.budget.n_permutations = o.budget;
    if (o.antithetic_set) cfg.budget.antithetic = o.antithetic;
    if (o.n_explain_cal >= 0) cfg.n_explain_cal = o.n_explain_cal;
    if (o.n_explain_test >= 0) cfg.n_explain_test = o.n_explain_test;
    cfg.forest = o.forest;
    auto outcome = entshap::run_selection(cfg);
    std::vector<std::pair<std::string, std::string>> extra;
    if (o.common.svg && !outcome.reps.empty()) {
      std::vector<std::string> labels;
      std::vector<double> values;
      for (const auto& f : outcome.reps.front().variance_game) {
        labels.push_back(f.name);
        double med = 0.0;
        for (const auto& rep : outcome.reps)
          med += rep.variance_game[static_cast<std::size_t>(f.feature)].median_abs_phi /
                 static_cast<double>(outcome.reps.size());
        values.push_back(med);
      }
      extra.emplace_back(".svg", entshap::svg::bar_chart(labels, values, "variance game: median |phi|"));
    }
    finish_experiment(o.common, outcome.result, std::move(extra));
    return 0;
  }
  if (name == "friedman-missingness") {
    entshap::MissingnessConfig cfg;
    cfg.seed = o.common.seed;
    cfg.threads = o.common.threads;
    cfg.data.seed = o.common.seed;
    if (o.n_train > 0) cfg.data.n_train = o.n_train;
    if (o.n_test > 0) cfg.data.n_test = o.n_test;
    if (o.sigma_y >= 0.0) cfg.data.sigma_y = o.sigma_y;
    if (!o.fractions.empty()) cfg.fractions = o.fractions;
    if (o.replicates > 0) cfg.replicates = o.replicates;
    if (!o.sampler.empty()) cfg.sampler = o.sampler;
    if (o.imputations > 0) cfg.imputations = o.imputations;
    if (o.budget > 0) cfg.budget.n_permutations = o.budget;
    if (o.antithetic_set) cfg.budget.antithetic = o.antithetic;
    if (o.n_explain > 0) cfg.n_explain = o.n_explain;
    cfg.forest = o.forest;
    auto outcome = entshap::run_missingness(cfg);
    std::vector<std::pair<std::string, std::string>> extra;
    if (o.common.svg) {
      entshap::svg::Series ser;
      ser.name = "AUC";
      for (const auto& cell : outcome.cells) {
        ser.xs.push_back(cell.fraction);
        ser.ys.push_back(cell.auc_mean);
      }
      extra.emplace_back(".svg", entshap::svg::line_chart({ser}, "informative-feature AUC vs missingness"));
    }
    finish_experiment(o.common, outcome.result, std::move(extra));
    return 0;
  }
  if (name == "shift") {
    entshap::ShiftConfig cfg;
    cfg.seed = o.common.seed;
    cfg.threads = o.common.threads;
    if (!o.n_grid.empty()) cfg.n = o.n_grid.front();
    if (o.d > 0) cfg.d = o.d;
    if (o.replicates > 0) cfg.replicates = o.replicates;
    if (o.noise_scale >= 0.0) cfg.noise_scale = o.noise_scale;
    if (o.perturb_feature >= -1) cfg.perturb_feature = o.perturb_feature;
    if (o.test_fraction > 0.0) cfg.test_fraction = o.test_fraction;
    if (!o.sampler.empty()) cfg.sampler = o.sampler;
    if (o.imputations > 0) cfg.imputations = o.imputations;
    cfg.forest = o.forest;
    auto outcome = entshap::run_shift(cfg);
    std::vector<std::pair<std::string, std::string>> extra;
    if (o.common.svg && !outcome.reps.empty()) {
      std::vector<std::string> labels;
      std::vector<double> values(outcome.reps.front().shift_by_feature.size(), 0.0);
      for (std::size_t j = 0; j < values.size(); ++j) {
        labels.push_back("x" + std::to_string(j + 1));
        for (const auto& rep : outcome.reps)
          values[j] += rep.shift_by_feature[j] / static_cast<double>(outcome.reps.size());
      }
      extra.emplace_back(".svg", entshap::svg::bar_chart(labels, values, "mean |phi| shift by feature"));
    }
    finish_experiment(o.common, outcome.result, std::move(extra));
    return 0;
  }
  if (name == "coverage") {
    entshap::CoverageConfig cfg;
    cfg.seed = o.common.seed;
    if (o.alpha > 0.0) cfg.alpha = o.alpha;
    if (o.n_cal > 0) cfg.n_cal = o.n_cal;
    if (o.n_test > 0) cfg.n_test = o.n_test;
    if (o.replicates > 0) cfg.replicates = o.replicates;
    auto outcome = entshap::run_coverage(cfg);
    std::vector<std::pair<std::string, std::string>> extra;
    if (o.common.svg) {
      entshap::svg::Series ser;
      ser.name = "coverage";
      for (std::size_t i = 0; i < outcome.coverage_per_rep.size(); ++i) {
        ser.xs.push_back(static_cast<double>(i));
        ser.ys.push_back(outcome.coverage_per_rep[i]);
      }
      extra.emplace_back(".svg", entshap::svg::line_chart({ser}, "coverage per replicate"));
    }
    finish_experiment(o.common, outcome.result, std::move(extra));
    return 0;
  }
  entshap::throw_config("unknown experiment '" + name +
                        "' (valid: gauss-convergence, friedman-selection, friedman-missingness, "
                        "shift, coverage)");
}

// ---------------------------------------------------------------------------
// verify

struct VerifyCliOpts {
  entshap::VerifyOptions opts;
};

int run_verify(const VerifyCliOpts& v) {
  const entshap::VerifyReport rep = entshap::run_verification(v.opts);
  int failed = 0;
  for (const auto& item : rep.items) {
    char line[256];
    std::snprintf(line, sizeof(line), "[%s] %-45s max|err| %.3e  (tol %.1e)", item.pass ? "PASS" : "FAIL",
                  item.name.c_str(), item.max_err, item.tol);
    std::cout << line;
    if (!item.detail.empty()) std::cout << "  " << item.detail;
    std::cout << "\n";
    if (!item.pass) ++failed;
  }
  std::cout << "verification: " << rep.items.size() << " checks, " << rep.items.size() - failed
            << " passed";
  if (failed > 0) std::cout << ", " << failed << " FAILED";
  std::cout << "\n";
  return rep.all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "entshap: Shapley attribution of predictive uncertainty with conformal calibration.\n"
      "Values are reported in bits by default (--units nats for natural log)."};
  app.require_subcommand(1);
  int code = 0;

  ExplainOpts eo;
  CLI::App* explain = app.add_subcommand(
      "explain", "Attribute a model's predictive uncertainty over a CSV of instances");
  add_common(explain, eo.common);
  explain->add_option("--train", eo.train_path, "Training CSV (features + target column)");
  explain->add_option("--explain", eo.explain_path, "CSV of instances to attribute (complete rows)");
  explain->add_option("--target", eo.target, "Name of the target column in the training CSV");
  explain->add_option("--missing-token", eo.missing_token, "Token marking missing cells")
      ->capture_default_str();
  explain->add_option("--model", eo.model, "Model kind: auto, forest-class, forest-reg, hetero")
      ->check(CLI::IsMember({"auto", "forest-class", "forest-reg", "hetero"}))
      ->capture_default_str();
  explain
      ->add_option("--game", eo.game,
                   "Uncertainty game: hstar-total, hstar-aleatoric, hstar-epistemic, logvar, mean, v0")
      ->check(CLI::IsMember({"hstar-total", "hstar-aleatoric", "hstar-epistemic", "logvar", "mean", "v0"}))
      ->capture_default_str();
  explain->add_option("--sampler", eo.sampler, "Imputation sampler: marginal, gaussian, knn")
      ->check(CLI::IsMember({"marginal", "gaussian", "knn"}))
      ->capture_default_str();
  explain->add_option("--knn-k", eo.knn_k, "Neighbors for the knn sampler; 0 = sqrt(n)")
      ->capture_default_str();
  explain->add_option("--imputations", eo.imputations, "Imputation draws per coalition evaluation")
      ->capture_default_str();
  explain->add_option("--mode", eo.mode, "Attribution mode: sampling (permutation MC) or exact (d <= 12)")
      ->check(CLI::IsMember({"exact", "sampling"}))
      ->capture_default_str();
  explain->add_flag("--exact", eo.exact, "Shorthand for --mode exact");
  explain->add_option("--budget", eo.budget, "Permutations per instance in sampling mode")
      ->capture_default_str();
  explain->add_flag("--antithetic,!--no-antithetic", eo.antithetic,
                    "Pair each permutation with its reverse (variance reduction)");
  explain->add_option("--alpha", eo.alpha,
                      "Miscoverage level; half-splits the training file and writes bands.json");
  explain->add_option("--target-class", eo.target_class, "Class index for the v0 game")
      ->capture_default_str();
  add_forest_flags(explain, eo.forest);
  explain->callback([&] { code = run_explain(eo, explain); });

  ExperimentOpts xo;
  CLI::App* exp = app.add_subcommand(
      "experiment",
      "Run a built-in harness: gauss-convergence, friedman-selection, friedman-missingness, shift, coverage");
  add_common(exp, xo.common);
  exp->add_option("name", xo.name, "Experiment name")->required();
  exp->add_option("--replicates", xo.replicates, "Seeded replicates");
  exp->add_option("--sampler", xo.sampler, "Imputation sampler (selection, missingness, shift)");
  exp->add_option("--imputations", xo.imputations, "Imputation draws per coalition evaluation");
  exp->add_option("--budget", xo.budget, "Permutations per instance in sampling mode");
  exp->add_flag("--antithetic,!--no-antithetic", xo.antithetic, "Antithetic permutation pairing")
      ->each([&](const std::string&) { xo.antithetic_set = true; });
  exp->add_option("--alpha", xo.alpha, "Miscoverage level (selection, coverage)");
  exp->add_option("--d", xo.d, "Feature count (gauss-convergence, shift)");
  exp->add_option("--rho", xo.rho, "Equicorrelation grid (gauss-convergence)")->delimiter(',');
  exp->add_option("--n", xo.n_grid, "Training sizes (gauss-convergence) or dataset size (shift)")
      ->delimiter(',');
  exp->add_option("--samplers", xo.samplers, "Sampler list (gauss-convergence)")->delimiter(',');
  exp->add_option("--n-test", xo.n_test, "Held-out rows or evaluation draws");
  exp->add_option("--n-train", xo.n_train, "Training rows (friedman harnesses)");
  exp->add_option("--sigma-y", xo.sigma_y, "Primary-response noise scale (friedman harnesses)");
  exp->add_option("--zero-width", xo.zero_width, "Zero margin for informativeness (friedman-selection)");
  exp->add_option("--n-explain-cal", xo.n_explain_cal,
                  "Calibration rows attributed (friedman-selection; 0 = all)");
  exp->add_option("--n-explain-test", xo.n_explain_test,
                  "Test rows attributed (friedman-selection; 0 = all)");
  exp->add_option("--fractions", xo.fractions, "Missingness fractions (friedman-missingness)")
      ->delimiter(',');
  exp->add_option("--n-explain", xo.n_explain, "Explained rows (friedman-missingness)");
  exp->add_option("--noise-scale", xo.noise_scale, "Perturbation scale in feature-std units (shift)");
  exp->add_option("--perturb-feature", xo.perturb_feature, "Feature to perturb; -1 = random (shift)");
  exp->add_option("--test-fraction", xo.test_fraction, "Held-out fraction (shift)");
  exp->add_option("--n-cal", xo.n_cal, "Calibration draws (coverage)");
  add_forest_flags(exp, xo.forest);
  exp->callback([&] { code = run_experiment(xo); });

  VerifyCliOpts vo;
  CLI::App* verify = app.add_subcommand(
      "verify", "Run the oracle self-checks (game identities, independence equivalence, axioms)");
  verify->add_option("--tables", vo.opts.tables, "Random tables per identity check")
      ->capture_default_str();
  verify->add_option("--seed", vo.opts.seed, "Seed for the random tables")->capture_default_str();
  verify->add_option("--tol", vo.opts.tol, "Tolerance for the identity checks")->capture_default_str();
  verify->add_option("--inject", vo.opts.inject, "")->group("");  // test-only fault hook
  verify->callback([&] { code = run_verify(vo); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const entshap::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return code;
}
