#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "seedrej/config.hpp"
#include "seedrej/daer.hpp"
#include "seedrej/folds.hpp"
#include "seedrej/metrics.hpp"
#include "seedrej/records.hpp"
#include "seedrej/scorers.hpp"
#include "seedrej/synthetic.hpp"

namespace seedrej {

// RNG stream ids, fixed so every run stage draws from an independent,
// reproducible stream of the master seed.
namespace streams {
inline constexpr std::uint64_t task_model = 101;
inline constexpr std::uint64_t folds = 202;
inline constexpr std::uint64_t train_daer = 400;
inline constexpr std::uint64_t eval_daer_base = 1000;  // + scorer_index * 64 + fold
}  // namespace streams

namespace rundetail {

inline std::string sanitize_label(const std::string& label) {
  std::string out;
  for (char c : label)
    out.push_back((std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_');
  return out;
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << content;
  out.close();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct LoadedInput {
  Dataset dataset;
  std::optional<TaskModel> task_model;  // present for synthetic inputs
  std::string description;
};

inline LoadedInput load_input(const RunConfig& cfg) {
  LoadedInput in;
  if (cfg.records_path) {
    std::ifstream file(*cfg.records_path);
    if (!file) throw std::runtime_error("cannot open records file '" + *cfg.records_path + "'");
    in.dataset = parse_records(file);
    in.description = "records:" + *cfg.records_path;
  } else if (cfg.synthetic) {
    SyntheticCorpus corpus = generate_corpus(*cfg.synthetic);
    in.task_model =
        train_task_model(corpus, cfg.synthetic->task_model, mix_seed(cfg.seed, streams::task_model));
    in.dataset = corpus_to_dataset(corpus, *in.task_model);
    in.description = std::string("synthetic:") + task_kind_name(cfg.synthetic->kind);
  } else {
    throw std::invalid_argument("config: either 'records' or 'synthetic' input is required");
  }
  if (in.dataset.empty()) throw std::runtime_error("input dataset is empty");
  return in;
}

inline void require_gold(const Dataset& ds) {
  for (const auto& s : ds.samples)
    if (!s.has_gold_losses())
      throw std::runtime_error("sample '" + s.sample_id +
                               "' has no gold-standard loss; evaluation needs gold-standard "
                               "losses for every sample");
}

// Fold assignment; folds == 1 puts the whole dataset in fold 0.
inline std::vector<std::vector<std::size_t>> fold_indices(const Dataset& ds, const RunConfig& cfg) {
  std::vector<std::vector<std::size_t>> folds;
  if (cfg.folds <= 1) {
    folds.emplace_back(ds.size());
    std::iota(folds[0].begin(), folds[0].end(), std::size_t{0});
    return folds;
  }
  FoldSplit split = split_folds(ds, cfg.folds, mix_seed(cfg.seed, streams::folds));
  folds.resize(cfg.folds);
  for (std::size_t f = 0; f < cfg.folds; ++f) folds[f] = fold_sample_indices(ds, split, f);
  return folds;
}

inline Dataset subset(const Dataset& ds, const std::vector<std::size_t>& idx) {
  Dataset out;
  out.schema = ds.schema;
  out.samples.reserve(idx.size());
  for (std::size_t i : idx) out.samples.push_back(ds.samples[i]);
  return out;
}

inline double infer_ae_max(const Dataset& ds) {
  double mx = 0.0;
  for (const auto& s : ds.samples) mx = std::max(mx, sample_additional_error(s));
  return mx > 0.0 ? mx : 1.0;
}

// Plain sample standard error of the mean; 0 for fewer than two values.
inline double standard_error(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v / static_cast<double>(n);
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean) / static_cast<double>(n - 1);
  return std::sqrt(var / static_cast<double>(n));
}

inline TrainConfig resolve_train_config(const RunConfig& cfg, const ScorerSpec* spec,
                                        const Dataset& train_ds, std::uint64_t rng_seed) {
  if (!cfg.daer)
    throw std::invalid_argument(
        "config: a 'daer' training section is required to train a daer scorer in-run");
  TrainConfig tc = *cfg.daer;
  if (spec && !spec->ablation.empty()) tc.ablation = ablation_from_name(spec->ablation);
  if (cfg.daer_ae_max_from_data) tc.bins.ae_max = infer_ae_max(train_ds);
  tc.rng_seed = rng_seed;
  tc.validate();
  return tc;
}

}  // namespace rundetail

struct SynthResult {
  std::filesystem::path corpus_path;
  std::filesystem::path task_model_path;
  std::size_t n_records = 0;
  double holdout_accuracy = 0.0;
};

// synth: generate a corpus, train and freeze the task model, evaluate both
// seeds per sample, and write the JSON-lines dataset plus the task-model
// checkpoint. Byte-identical for identical configs.
inline SynthResult run_synth(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  if (!cfg.synthetic) throw std::invalid_argument("config: synth requires a 'synthetic' section");
  std::filesystem::create_directories(out_dir);

  rundetail::LoadedInput in = rundetail::load_input(cfg);

  SynthResult res;
  res.corpus_path = out_dir / "corpus.jsonl";
  res.task_model_path = out_dir / "task_model.json";
  res.n_records = in.dataset.size();
  res.holdout_accuracy = in.task_model->holdout_accuracy;

  rundetail::write_file(res.corpus_path, serialize_records(in.dataset));
  nlohmann::json tm = task_model_to_json(*in.task_model);
  tm["config_hash"] = cfg.config_hash();
  rundetail::write_file(res.task_model_path, tm.dump() + "\n");

  // Output validation: the emitted corpus must parse back to the same size.
  Dataset reread = parse_records(rundetail::read_file(res.corpus_path));
  if (reread.size() != in.dataset.size())
    throw std::runtime_error("synth: written corpus failed validation");
  return res;
}

struct EvalResult {
  std::filesystem::path report_path;
  std::vector<std::filesystem::path> curve_paths;
  nlohmann::json report;
};

// eval: per fold and scorer, score -> rank -> curve -> AMAE; aggregate the
// fold-mean AMAE and the coverage at each target MAE; write report.json and
// one curve CSV per (scorer, fold).
inline EvalResult run_eval(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  if (cfg.scorers.empty()) throw std::invalid_argument("config: eval requires at least one scorer");
  std::filesystem::create_directories(out_dir);

  rundetail::LoadedInput in = rundetail::load_input(cfg);
  rundetail::require_gold(in.dataset);
  auto folds = rundetail::fold_indices(in.dataset, cfg);
  const std::size_t k = folds.size();

  EvalResult res;
  res.report_path = out_dir / "report.json";
  nlohmann::json scorers_json = nlohmann::json::object();

  for (std::size_t si = 0; si < cfg.scorers.size(); ++si) {
    const ScorerSpec& spec = cfg.scorers[si];
    const std::string label = spec.report_label();

    std::optional<DaerScorer> pinned;  // checkpoint-backed daer scorer
    if (spec.kind == ScorerKind::daer && !spec.checkpoint.empty()) {
      pinned = scorer_from_checkpoint(
          nlohmann::json::parse(rundetail::read_file(spec.checkpoint)));
    }

    std::vector<double> per_fold_amae;
    std::vector<RejectionCurve> per_fold_curves;
    for (std::size_t f = 0; f < k; ++f) {
      Dataset test = rundetail::subset(in.dataset, folds[f]);
      std::vector<double> scores;
      if (spec.kind != ScorerKind::daer) {
        scores = score_dataset(test, spec);
      } else if (pinned) {
        scores = score_dataset(test, *pinned);
      } else {
        if (k < 2)
          throw std::invalid_argument(
              "config: training a daer scorer in-run requires folds >= 2");
        std::vector<std::size_t> train_folds, val_folds = {(f + 1) % k};
        for (std::size_t other = 0; other < k; ++other)
          if (other != f && other != val_folds[0]) train_folds.push_back(other);
        if (train_folds.empty()) train_folds = val_folds;  // k == 2: validate on the train fold
        std::vector<std::size_t> train_idx;
        for (std::size_t tf : train_folds)
          train_idx.insert(train_idx.end(), folds[tf].begin(), folds[tf].end());
        Dataset train_ds = rundetail::subset(in.dataset, train_idx);
        Dataset val_ds = rundetail::subset(in.dataset, folds[val_folds[0]]);
        TrainConfig tc = rundetail::resolve_train_config(
            cfg, &spec, train_ds,
            mix_seed(cfg.seed, streams::eval_daer_base + si * 64 + f));
        RejectionModel model = train(train_ds, val_ds, tc);
        scores = score_dataset(test, make_daer_scorer(std::move(model), tc));
      }

      auto order = rank_by_score(test, scores);
      RejectionCurve curve = rejection_curve(test, order);
      per_fold_amae.push_back(curve.amae);

      std::ostringstream csv;
      write_curve_csv(curve, csv);
      std::filesystem::path curve_path =
          out_dir / ("curve_" + rundetail::sanitize_label(label) + "_" + std::to_string(f) + ".csv");
      rundetail::write_file(curve_path, csv.str());
      res.curve_paths.push_back(curve_path);
      per_fold_curves.push_back(std::move(curve));
    }

    nlohmann::json entry;
    entry["per_fold_amae"] = per_fold_amae;
    entry["fold_mean_amae"] = fold_mean_amae(per_fold_amae);
    entry["fold_amae_stderr"] = rundetail::standard_error(per_fold_amae);
    nlohmann::json cov = nlohmann::json::object();
    for (double target : cfg.targets) {
      std::vector<double> per_fold_cov;
      for (const auto& curve : per_fold_curves)
        per_fold_cov.push_back(coverage_at_target_mae(curve, target));
      double mean_cov = fold_mean_amae(per_fold_cov);  // plain mean of coverages
      cov[rundetail::format_number(target)] = {{"per_fold", per_fold_cov},
                                               {"mean_coverage", mean_cov},
                                               {"mean_rejected", 1.0 - mean_cov}};
    }
    entry["coverage_at_target_mae"] = std::move(cov);
    scorers_json[label] = std::move(entry);
  }

  nlohmann::json report;
  report["metadata"] = {{"config_hash", cfg.config_hash()},
                        {"tool_version", kToolVersion},
                        {"seed", cfg.seed},
                        {"folds", k},
                        {"n_samples", in.dataset.size()},
                        {"input", in.description},
                        {"targets", cfg.targets}};
  if (in.task_model)
    report["metadata"]["task_model_holdout_accuracy"] = in.task_model->holdout_accuracy;
  report["scorers"] = std::move(scorers_json);
  rundetail::write_file(res.report_path, report.dump(2) + "\n");
  res.report = std::move(report);

  // Output validation: AMAE values in the report must match a recomputation
  // from the emitted CSVs.
  std::size_t curve_i = 0;
  for (std::size_t si = 0; si < cfg.scorers.size(); ++si) {
    const std::string label = cfg.scorers[si].report_label();
    for (std::size_t f = 0; f < k; ++f, ++curve_i) {
      std::istringstream csv(rundetail::read_file(res.curve_paths[curve_i]));
      std::string line;
      std::getline(csv, line);  // header
      double mae_sum = 0.0;
      std::size_t n = 0;
      while (std::getline(csv, line)) {
        auto comma = line.find(',');
        mae_sum += std::stod(line.substr(comma + 1));
        ++n;
      }
      double amae_from_csv = mae_sum / static_cast<double>(n);
      double amae_reported = res.report["scorers"][label]["per_fold_amae"][f].get<double>();
      if (std::abs(amae_from_csv - amae_reported) > 1e-9)
        throw std::runtime_error("eval: report AMAE does not match emitted curve for '" + label +
                                 "' fold " + std::to_string(f));
    }
  }
  return res;
}

struct TrainDaerResult {
  std::filesystem::path checkpoint_path;
  std::filesystem::path log_path;
  double best_val_amae = 0.0;
  std::size_t best_epoch = 0;
};

// train-daer: hold one fold out for validation, train on the rest, keep the
// best-validation-AMAE snapshot, and write the checkpoint plus per-epoch log.
inline TrainDaerResult run_train_daer(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  if (!cfg.daer) throw std::invalid_argument("config: train-daer requires a 'daer' section");
  if (cfg.folds < 2) throw std::invalid_argument("config: train-daer requires folds >= 2");
  if (cfg.val_fold >= cfg.folds)
    throw std::invalid_argument("config: val_fold must be < folds");
  std::filesystem::create_directories(out_dir);

  rundetail::LoadedInput in = rundetail::load_input(cfg);
  rundetail::require_gold(in.dataset);
  auto folds = rundetail::fold_indices(in.dataset, cfg);

  std::vector<std::size_t> train_idx;
  for (std::size_t f = 0; f < folds.size(); ++f)
    if (f != cfg.val_fold) train_idx.insert(train_idx.end(), folds[f].begin(), folds[f].end());
  Dataset train_ds = rundetail::subset(in.dataset, train_idx);
  Dataset val_ds = rundetail::subset(in.dataset, folds[cfg.val_fold]);

  TrainConfig tc = rundetail::resolve_train_config(cfg, nullptr, train_ds,
                                                   mix_seed(cfg.seed, streams::train_daer));
  TrainLog log;
  RejectionModel model = train(train_ds, val_ds, tc, &log);

  TrainDaerResult res;
  std::string suffix = ablation_name(tc.ablation);
  res.checkpoint_path = out_dir / ("daer_" + suffix + ".json");
  res.log_path = out_dir / ("train_log_" + suffix + ".json");
  res.best_val_amae = log.best_val_amae;
  res.best_epoch = log.best_epoch;

  nlohmann::json ckpt = checkpoint_to_json(model, tc, cfg.config_hash());
  rundetail::write_file(res.checkpoint_path, ckpt.dump() + "\n");

  nlohmann::json jlog;
  jlog["config_hash"] = cfg.config_hash();
  jlog["best_epoch"] = log.best_epoch;
  jlog["best_val_amae"] = log.best_val_amae;
  jlog["epochs"] = nlohmann::json::array();
  for (const auto& e : log.epochs)
    jlog["epochs"].push_back({{"epoch", e.epoch},
                              {"correctness_loss", e.correctness_loss},
                              {"regression_loss", e.regression_loss},
                              {"val_amae", e.val_amae}});
  rundetail::write_file(res.log_path, jlog.dump(2) + "\n");

  // Output validation (snapshot contract): re-evaluating the checkpointed
  // model on the validation fold must reproduce the logged best AMAE.
  DaerScorer reloaded = scorer_from_checkpoint(
      nlohmann::json::parse(rundetail::read_file(res.checkpoint_path)));
  auto scores = score_dataset(val_ds, reloaded);
  auto order = rank_by_score(val_ds, scores);
  double amae = rejection_curve(val_ds, order).amae;
  if (std::abs(amae - log.best_val_amae) > 1e-12)
    throw std::runtime_error("train-daer: checkpoint does not reproduce the best validation AMAE");
  return res;
}

}  // namespace seedrej
