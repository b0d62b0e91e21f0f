#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "seedrej/daer.hpp"
#include "seedrej/scorers.hpp"
#include "seedrej/synthetic.hpp"

namespace seedrej {

inline constexpr const char* kToolVersion = "0.1.0";

inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Declarative run configuration, parsed from a single JSON document.
struct RunConfig {
  std::uint64_t seed = 0;
  std::optional<std::string> records_path;
  std::optional<SyntheticTaskConfig> synthetic;
  std::size_t folds = 5;  // 1 disables folding: the whole set is one fold
  std::vector<ScorerSpec> scorers;
  std::optional<TrainConfig> daer;
  bool daer_ae_max_from_data = false;  // bins.ae_max omitted: infer from training AEs
  std::vector<double> targets = {1.0, 2.5, 5.0};
  std::size_t val_fold = 0;  // train-daer: fold held out for validation

  nlohmann::json canonical;  // the parsed document with the effective seed applied

  std::string config_hash() const { return fnv1a_hex(canonical.dump()); }
};

namespace cfgdetail {

[[noreturn]] inline void fail(const std::string& field, const std::string& why) {
  throw std::invalid_argument("config field '" + field + "': " + why);
}

inline void check_keys(const nlohmann::json& j, const std::string& where,
                       const std::set<std::string>& allowed) {
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k))
      throw std::invalid_argument("config: unknown field '" +
                                  (where.empty() ? k : where + "." + k) + "'");
}

inline double get_number(const nlohmann::json& j, const std::string& field, double fallback) {
  if (!j.contains(field)) return fallback;
  if (!j[field].is_number()) fail(field, "must be a number");
  return j[field].get<double>();
}

inline std::size_t get_size(const nlohmann::json& j, const std::string& field,
                            std::size_t fallback) {
  if (!j.contains(field)) return fallback;
  if (!j[field].is_number_integer() || j[field].get<long long>() < 0)
    fail(field, "must be a nonnegative integer");
  return static_cast<std::size_t>(j[field].get<long long>());
}

inline std::string get_string(const nlohmann::json& j, const std::string& field,
                              const std::string& fallback) {
  if (!j.contains(field)) return fallback;
  if (!j[field].is_string()) fail(field, "must be a string");
  return j[field].get<std::string>();
}

inline std::vector<std::size_t> get_size_array(const nlohmann::json& j, const std::string& field,
                                               std::vector<std::size_t> fallback) {
  if (!j.contains(field)) return fallback;
  if (!j[field].is_array()) fail(field, "must be an array of positive integers");
  std::vector<std::size_t> out;
  for (const auto& v : j[field]) {
    if (!v.is_number_integer() || v.get<long long>() <= 0)
      fail(field, "must be an array of positive integers");
    out.push_back(static_cast<std::size_t>(v.get<long long>()));
  }
  return out;
}

inline std::vector<std::string> get_string_array(const nlohmann::json& j,
                                                 const std::string& field,
                                                 std::vector<std::string> fallback) {
  if (!j.contains(field)) return fallback;
  if (!j[field].is_array()) fail(field, "must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : j[field]) {
    if (!v.is_string()) fail(field, "must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

inline nn::Optimizer parse_optimizer(const nlohmann::json& j, const std::string& field,
                                     nn::Optimizer fallback) {
  std::string name =
      get_string(j, "optimizer", fallback == nn::Optimizer::sgd ? "sgd" : "adam");
  if (name == "sgd") return nn::Optimizer::sgd;
  if (name == "adam") return nn::Optimizer::adam;
  fail(field + ".optimizer", "must be 'sgd' or 'adam'");
}

inline TaskModelConfig parse_task_model(const nlohmann::json& j) {
  check_keys(j, "synthetic.task_model",
             {"hidden", "learning_rate", "batch_size", "epochs", "optimizer", "holdout_fraction",
              "label_smoothing"});
  TaskModelConfig tm;
  tm.hidden = get_size_array(j, "hidden", tm.hidden);
  tm.learning_rate = get_number(j, "learning_rate", tm.learning_rate);
  tm.batch_size = get_size(j, "batch_size", tm.batch_size);
  tm.epochs = get_size(j, "epochs", tm.epochs);
  tm.optimizer = parse_optimizer(j, "synthetic.task_model", tm.optimizer);
  tm.holdout_fraction = get_number(j, "holdout_fraction", tm.holdout_fraction);
  tm.label_smoothing = get_number(j, "label_smoothing", tm.label_smoothing);
  if (!(tm.learning_rate > 0)) fail("synthetic.task_model.learning_rate", "must be > 0");
  if (tm.batch_size == 0) fail("synthetic.task_model.batch_size", "must be > 0");
  if (tm.epochs == 0) fail("synthetic.task_model.epochs", "must be > 0");
  if (!(tm.label_smoothing >= 0 && tm.label_smoothing < 1))
    fail("synthetic.task_model.label_smoothing", "must be in [0, 1)");
  return tm;
}

inline SyntheticTaskConfig parse_synthetic(const nlohmann::json& j) {
  check_keys(j, "synthetic",
             {"kind", "n_samples", "feature_dim", "n_coarse", "n_fine", "grid_size",
              "n_angle_bins", "p_noise", "slot_scale", "coarse_leak", "noise_sigma", "trig_noise",
              "task_model"});
  SyntheticTaskConfig cfg;
  cfg.kind = task_kind_from_name(get_string(j, "kind", "coarse_fine"));
  cfg.n_samples = get_size(j, "n_samples", cfg.n_samples);
  cfg.feature_dim = get_size(j, "feature_dim", cfg.feature_dim);
  cfg.n_coarse = get_size(j, "n_coarse", cfg.n_coarse);
  cfg.n_fine = get_size(j, "n_fine", cfg.n_fine);
  cfg.grid_size = get_size(j, "grid_size", cfg.grid_size);
  cfg.n_angle_bins = get_size(j, "n_angle_bins", cfg.n_angle_bins);
  cfg.p_noise = get_number(j, "p_noise", cfg.p_noise);
  cfg.slot_scale = get_number(j, "slot_scale", cfg.slot_scale);
  cfg.coarse_leak = get_number(j, "coarse_leak", cfg.coarse_leak);
  cfg.noise_sigma = get_number(j, "noise_sigma", cfg.noise_sigma);
  cfg.trig_noise = get_number(j, "trig_noise", cfg.trig_noise);
  if (j.contains("task_model")) {
    if (!j["task_model"].is_object()) fail("synthetic.task_model", "must be an object");
    cfg.task_model = parse_task_model(j["task_model"]);
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return cfg;
}

inline CorrectnessRule parse_correctness(const nlohmann::json& j) {
  check_keys(j, "daer.correctness", {"rule", "tolerance"});
  std::string rule = get_string(j, "rule", "zero_ae");
  if (rule == "zero_ae") {
    ZeroAeRule r;
    r.tolerance = get_number(j, "tolerance", r.tolerance);
    if (!(r.tolerance >= 0)) fail("daer.correctness.tolerance", "must be >= 0");
    return r;
  }
  if (rule == "seed_match") {
    if (j.contains("tolerance")) fail("daer.correctness.tolerance", "not valid for seed_match");
    return SeedMatchRule{};
  }
  fail("daer.correctness.rule", "must be 'zero_ae' or 'seed_match'");
}

inline std::pair<TrainConfig, bool> parse_daer(const nlohmann::json& j) {
  check_keys(j, "daer",
             {"hidden", "learning_rate", "batch_size", "max_epochs", "patience", "optimizer",
              "bins", "correctness", "smoothing_sigma", "ablation", "primary_features",
              "seed_features"});
  TrainConfig cfg;
  bool ae_max_from_data = true;
  cfg.hidden = get_size_array(j, "hidden", cfg.hidden);
  cfg.learning_rate = get_number(j, "learning_rate", cfg.learning_rate);
  cfg.batch_size = get_size(j, "batch_size", cfg.batch_size);
  cfg.max_epochs = get_size(j, "max_epochs", cfg.max_epochs);
  cfg.patience = get_size(j, "patience", cfg.patience);
  cfg.optimizer = parse_optimizer(j, "daer", cfg.optimizer);
  if (j.contains("bins")) {
    if (!j["bins"].is_object()) fail("daer.bins", "must be an object");
    check_keys(j["bins"], "daer.bins", {"count", "ae_max"});
    cfg.bins.count = get_size(j["bins"], "count", cfg.bins.count);
    if (j["bins"].contains("ae_max")) {
      cfg.bins.ae_max = get_number(j["bins"], "ae_max", cfg.bins.ae_max);
      if (!(cfg.bins.ae_max > 0)) fail("daer.bins.ae_max", "must be > 0");
      ae_max_from_data = false;
    }
  }
  if (j.contains("correctness")) {
    if (!j["correctness"].is_object()) fail("daer.correctness", "must be an object");
    cfg.correctness = parse_correctness(j["correctness"]);
  }
  cfg.smoothing_sigma = get_number(j, "smoothing_sigma", cfg.smoothing_sigma);
  cfg.ablation = ablation_from_name(get_string(j, "ablation", "full"));
  cfg.primary_features = get_string_array(j, "primary_features", cfg.primary_features);
  cfg.seed_features = get_string_array(j, "seed_features", cfg.seed_features);
  if (cfg.primary_features.empty() && cfg.seed_features.empty())
    fail("daer.primary_features", "at least one feature key required");
  // ae_max is validated later once inferred from data; use a placeholder now.
  TrainConfig check = cfg;
  if (ae_max_from_data) check.bins.ae_max = 1.0;
  try {
    check.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("config: daer: ") + e.what());
  }
  return {cfg, ae_max_from_data};
}

inline ScorerSpec parse_scorer(const nlohmann::json& j, std::size_t index) {
  std::string where = "scorers[" + std::to_string(index) + "]";
  if (!j.is_object()) throw std::invalid_argument("config: " + where + " must be an object");
  check_keys(j, where,
             {"name", "label", "probs_feature", "n_samples", "percentile", "rng_seed",
              "values_period", "value", "checkpoint", "ablation"});
  if (!j.contains("name")) fail(where + ".name", "required");
  ScorerSpec spec;
  spec.kind = scorer_kind_from_name(get_string(j, "name", ""));
  spec.label = get_string(j, "label", "");
  spec.probs_feature = get_string(j, "probs_feature", spec.probs_feature);
  spec.n_samples = get_size(j, "n_samples", spec.n_samples);
  spec.percentile = get_number(j, "percentile", spec.percentile);
  spec.rng_seed = get_size(j, "rng_seed", 0);
  spec.values_period = get_number(j, "values_period", 0.0);
  spec.value = get_number(j, "value", 0.0);
  spec.checkpoint = get_string(j, "checkpoint", "");
  spec.ablation = get_string(j, "ablation", "");
  if (spec.kind == ScorerKind::mc_percentile) {
    if (spec.n_samples == 0) fail(where + ".n_samples", "must be >= 1");
    if (!(spec.percentile > 0 && spec.percentile < 100))
      fail(where + ".percentile", "must be in (0, 100)");
    if (spec.values_period < 0) fail(where + ".values_period", "must be >= 0");
  }
  if (!spec.ablation.empty()) ablation_from_name(spec.ablation);  // validate the name
  return spec;
}

}  // namespace cfgdetail

// Parses and validates the whole run configuration. `seed_override`, when
// set, replaces the config's rng seed before hashing, so reports embed the
// effective seed.
inline RunConfig parse_run_config(nlohmann::json doc,
                                  std::optional<std::uint64_t> seed_override = std::nullopt) {
  using namespace cfgdetail;
  if (!doc.is_object()) throw std::invalid_argument("config: document must be a JSON object");
  check_keys(doc, "",
             {"seed", "records", "synthetic", "folds", "scorers", "daer", "targets", "val_fold"});

  if (seed_override) doc["seed"] = *seed_override;

  RunConfig cfg;
  cfg.seed = get_size(doc, "seed", 0);
  if (doc.contains("records")) {
    if (!doc["records"].is_string()) fail("records", "must be a path string");
    cfg.records_path = doc["records"].get<std::string>();
  }
  if (doc.contains("synthetic")) {
    if (!doc["synthetic"].is_object()) fail("synthetic", "must be an object");
    cfg.synthetic = parse_synthetic(doc["synthetic"]);
    cfg.synthetic->rng_seed = cfg.seed;
  }
  if (cfg.records_path && cfg.synthetic)
    throw std::invalid_argument("config: 'records' and 'synthetic' are mutually exclusive");

  cfg.folds = get_size(doc, "folds", cfg.folds);
  if (cfg.folds == 0) fail("folds", "must be >= 1 (1 disables folding)");
  cfg.val_fold = get_size(doc, "val_fold", cfg.val_fold);

  if (doc.contains("scorers")) {
    if (!doc["scorers"].is_array()) fail("scorers", "must be an array");
    std::set<std::string> labels;
    for (std::size_t i = 0; i < doc["scorers"].size(); ++i) {
      cfg.scorers.push_back(parse_scorer(doc["scorers"][i], i));
      if (!labels.insert(cfg.scorers.back().report_label()).second)
        fail("scorers[" + std::to_string(i) + "].label",
             "duplicate report label '" + cfg.scorers.back().report_label() + "'");
    }
  }

  if (doc.contains("targets")) {
    if (!doc["targets"].is_array()) fail("targets", "must be an array of numbers >= 0");
    cfg.targets.clear();
    for (const auto& t : doc["targets"]) {
      if (!t.is_number() || t.get<double>() < 0)
        fail("targets", "must be an array of numbers >= 0");
      cfg.targets.push_back(t.get<double>());
    }
  }

  if (doc.contains("daer")) {
    if (!doc["daer"].is_object()) fail("daer", "must be an object");
    auto [tc, infer] = parse_daer(doc["daer"]);
    cfg.daer = tc;
    cfg.daer_ae_max_from_data = infer;
  }

  cfg.canonical = std::move(doc);
  return cfg;
}

}  // namespace seedrej
