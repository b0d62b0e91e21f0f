#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "seedrej/metrics.hpp"
#include "seedrej/nn.hpp"
#include "seedrej/records.hpp"
#include "seedrej/rng.hpp"
#include "seedrej/scorers.hpp"

namespace seedrej {

// Equally spaced regression bins over [0, ae_max]. Targets above ae_max clamp
// into the last bin.
struct BinScheme {
  std::size_t count = 64;
  double ae_max = 1.0;

  void validate() const {
    if (count < 2) throw std::invalid_argument("BinScheme: count must be >= 2");
    if (!(ae_max > 0.0) || !std::isfinite(ae_max))
      throw std::invalid_argument("BinScheme: ae_max must be positive and finite");
  }

  double step() const { return ae_max / static_cast<double>(count - 1); }
  double center(std::size_t i) const { return step() * static_cast<double>(i); }

  std::vector<double> centers() const {
    std::vector<double> c(count);
    for (std::size_t i = 0; i < count; ++i) c[i] = center(i);
    return c;
  }

  std::size_t bin_of(double ae) const {
    if (!(ae >= 0.0) || !std::isfinite(ae))
      throw std::invalid_argument("BinScheme::bin_of: AE must be finite and nonnegative");
    if (ae >= ae_max) return count - 1;
    auto idx = static_cast<std::size_t>(std::llround(ae / step()));
    return std::min(idx, count - 1);
  }
};

// What counts as a correct seed: zero additional error (within tolerance), or
// exact agreement with the gold-standard seed.
struct ZeroAeRule {
  double tolerance = 1e-9;
};
struct SeedMatchRule {};
using CorrectnessRule = std::variant<ZeroAeRule, SeedMatchRule>;

inline bool seed_is_incorrect(const SeedSample& s, const CorrectnessRule& rule) {
  if (const auto* zr = std::get_if<ZeroAeRule>(&rule)) {
    if (!std::isfinite(zr->tolerance) || zr->tolerance < 0.0)
      throw std::invalid_argument("ZeroAeRule: tolerance must be finite and >= 0");
    return sample_additional_error(s) > zr->tolerance;
  }
  if (!s.gold_seed)
    throw std::invalid_argument("seed_is_incorrect: sample '" + s.sample_id +
                                "' has no gold-standard seed for the seed-match rule");
  return !(s.candidate_seed == *s.gold_seed);
}

enum class Ablation { full, correctness_only, regression_only, no_seed };

inline const char* ablation_name(Ablation a) {
  switch (a) {
    case Ablation::full: return "full";
    case Ablation::correctness_only: return "correctness_only";
    case Ablation::regression_only: return "regression_only";
    case Ablation::no_seed: return "no_seed";
  }
  return "?";
}

inline Ablation ablation_from_name(const std::string& name) {
  for (Ablation a : {Ablation::full, Ablation::correctness_only, Ablation::regression_only,
                     Ablation::no_seed})
    if (name == ablation_name(a)) return a;
  throw std::invalid_argument("unknown ablation '" + name + "'");
}

struct TrainConfig {
  std::vector<std::size_t> hidden = {32, 32};
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 60;
  std::size_t patience = 10;
  std::uint64_t rng_seed = 0;
  BinScheme bins;
  CorrectnessRule correctness = ZeroAeRule{};
  double smoothing_sigma = 3.0;  // in bins
  Ablation ablation = Ablation::full;
  nn::Optimizer optimizer = nn::Optimizer::sgd;
  std::vector<std::string> primary_features = {"probs"};
  std::vector<std::string> seed_features = {"seed"};

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be > 0");
    if (max_epochs == 0) throw std::invalid_argument("TrainConfig: max_epochs must be > 0");
    if (!(smoothing_sigma >= 0.0) || !std::isfinite(smoothing_sigma))
      throw std::invalid_argument("TrainConfig: smoothing_sigma must be finite and >= 0");
    if (hidden.empty()) throw std::invalid_argument("TrainConfig: at least one hidden layer");
    for (std::size_t h : hidden)
      if (h == 0) throw std::invalid_argument("TrainConfig: hidden widths must be > 0");
    bins.validate();
  }
};

// One-hot regression target softened by a discrete Gaussian of the given
// standard deviation (in bins), truncated to [0, B) and renormalized.
inline std::vector<double> smooth_target(std::size_t hot_bin, double sigma, std::size_t bin_count) {
  if (hot_bin >= bin_count) throw std::invalid_argument("smooth_target: bin index out of range");
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("smooth_target: sigma must be finite and >= 0");
  std::vector<double> t(bin_count, 0.0);
  if (sigma == 0.0) {
    t[hot_bin] = 1.0;
    return t;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < bin_count; ++i) {
    double d = static_cast<double>(i) - static_cast<double>(hot_bin);
    t[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += t[i];
  }
  for (double& v : t) v /= sum;
  return t;
}

// Feed-forward rejection model: a shared ReLU trunk feeding a scalar
// correctness head (logit of p_incorrect) and a binned regression head.
// The input is primary features with the seed encoding appended, shifted and
// scaled by per-dimension training statistics (task-model outputs are often
// near-saturated, so the informative variation needs rescaling).
struct RejectionModel {
  std::size_t input_width = 0;
  std::size_t seed_width = 0;  // trailing entries of the input
  std::vector<double> input_mean;  // empty = no standardization
  std::vector<double> input_std;
  std::vector<nn::Layer> trunk;
  nn::Layer correctness_head;
  nn::Layer regression_head;

  std::size_t bin_count() const { return regression_head.out; }

  std::vector<double> standardize(std::span<const double> input) const {
    std::vector<double> v(input.begin(), input.end());
    if (!input_mean.empty()) {
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = (v[i] - input_mean[i]) / input_std[i];
    }
    return v;
  }
};

// Per-dimension mean and deviation of the training inputs; constant
// dimensions keep scale 1.
inline void fit_input_stats(RejectionModel& m, const std::vector<std::vector<double>>& inputs) {
  if (inputs.empty()) throw std::invalid_argument("fit_input_stats: no inputs");
  const std::size_t w = m.input_width;
  const double n = static_cast<double>(inputs.size());
  m.input_mean.assign(w, 0.0);
  m.input_std.assign(w, 0.0);
  for (const auto& x : inputs)
    for (std::size_t i = 0; i < w; ++i) m.input_mean[i] += x[i] / n;
  for (const auto& x : inputs)
    for (std::size_t i = 0; i < w; ++i) {
      double d = x[i] - m.input_mean[i];
      m.input_std[i] += d * d / n;
    }
  for (std::size_t i = 0; i < w; ++i) {
    m.input_std[i] = std::sqrt(m.input_std[i]);
    if (m.input_std[i] < 1e-12) m.input_std[i] = 1.0;
  }
}

inline RejectionModel make_rejection_model(std::size_t primary_width, std::size_t seed_width,
                                           const std::vector<std::size_t>& hidden,
                                           std::size_t bin_count, Rng& rng) {
  if (primary_width + seed_width == 0)
    throw std::invalid_argument("make_rejection_model: zero input width");
  RejectionModel m;
  m.input_width = primary_width + seed_width;
  m.seed_width = seed_width;
  std::size_t prev = m.input_width;
  for (std::size_t h : hidden) {
    m.trunk.emplace_back(prev, h);
    nn::init_glorot(m.trunk.back(), rng);
    prev = h;
  }
  m.correctness_head = nn::Layer(prev, 1);
  nn::init_glorot(m.correctness_head, rng);
  m.regression_head = nn::Layer(prev, bin_count);
  nn::init_glorot(m.regression_head, rng);
  return m;
}

struct ModelOutput {
  double p_incorrect = 0.0;
  std::vector<double> bin_probs;
};

inline ModelOutput forward(const RejectionModel& m, std::span<const double> primary,
                           std::span<const double> seed_encoding) {
  if (primary.size() + seed_encoding.size() != m.input_width ||
      seed_encoding.size() != m.seed_width)
    throw std::invalid_argument("forward: input widths do not match the model");
  std::vector<double> input(primary.begin(), primary.end());
  input.insert(input.end(), seed_encoding.begin(), seed_encoding.end());
  input = m.standardize(input);
  nn::TrunkCache cache;
  nn::trunk_forward(m.trunk, input, cache);
  std::vector<double> z, r;
  nn::affine_forward(m.correctness_head, cache.output, z);
  nn::affine_forward(m.regression_head, cache.output, r);
  return {nn::sigmoid(z[0]), nn::softmax(r)};
}

// Inference-time score: the expected additional error, decomposed as
// p(incorrect) times the conditional expectation under the binned regressor.
inline double expected_additional_error(double p_incorrect, std::span<const double> bin_probs,
                                        const BinScheme& bins) {
  bins.validate();
  if (!std::isfinite(p_incorrect) || p_incorrect < 0.0 || p_incorrect > 1.0)
    throw std::invalid_argument("expected_additional_error: p_incorrect must be in [0, 1]");
  if (bin_probs.size() != bins.count)
    throw std::invalid_argument("expected_additional_error: bin_probs length mismatch");
  double cond = 0.0;
  for (std::size_t b = 0; b < bins.count; ++b) {
    if (!std::isfinite(bin_probs[b]) || bin_probs[b] < 0.0)
      throw std::invalid_argument("expected_additional_error: invalid bin probability");
    cond += bin_probs[b] * bins.center(b);
  }
  return p_incorrect * cond;
}

inline std::vector<double> concat_features(const SeedSample& s,
                                           const std::vector<std::string>& keys, const char* what) {
  std::vector<double> v;
  for (const auto& k : keys) {
    const auto& f = require_feature(s, k, what);
    v.insert(v.end(), f.begin(), f.end());
  }
  return v;
}

// Concatenated model input for one record. The seed block is zeroed under the
// no_seed ablation.
inline std::vector<double> build_model_input(const SeedSample& s, const TrainConfig& cfg) {
  std::vector<double> input = concat_features(s, cfg.primary_features, "daer");
  std::vector<double> seed = concat_features(s, cfg.seed_features, "daer");
  if (cfg.ablation == Ablation::no_seed) std::fill(seed.begin(), seed.end(), 0.0);
  input.insert(input.end(), seed.begin(), seed.end());
  return input;
}

struct ModelGrads {
  std::vector<nn::LayerGrads> trunk;
  nn::LayerGrads correctness;
  nn::LayerGrads regression;

  explicit ModelGrads(const RejectionModel& m)
      : correctness(m.correctness_head), regression(m.regression_head) {
    trunk.reserve(m.trunk.size());
    for (const auto& l : m.trunk) trunk.emplace_back(l);
  }
  void zero() {
    for (auto& g : trunk) g.zero();
    correctness.zero();
    regression.zero();
  }
};

struct StepLosses {
  double correctness_loss = 0.0;
  double regression_loss = 0.0;
  double total() const { return correctness_loss + regression_loss; }
};

namespace detail {

struct PreparedSamples {
  std::vector<std::vector<double>> inputs;
  std::vector<char> incorrect;
  std::vector<std::size_t> ae_bin;
  std::vector<std::vector<double>> target_table;  // smoothed target per hot bin
};

inline PreparedSamples prepare_samples(const Dataset& ds, std::span<const std::size_t> indices,
                                       const TrainConfig& cfg) {
  PreparedSamples p;
  p.inputs.reserve(indices.size());
  p.incorrect.reserve(indices.size());
  p.ae_bin.reserve(indices.size());
  for (std::size_t i : indices) {
    const SeedSample& s = ds.samples.at(i);
    p.inputs.push_back(build_model_input(s, cfg));
    p.incorrect.push_back(seed_is_incorrect(s, cfg.correctness) ? 1 : 0);
    double ae = std::min(sample_additional_error(s), cfg.bins.ae_max);
    p.ae_bin.push_back(cfg.bins.bin_of(ae));
  }
  p.target_table.resize(cfg.bins.count);
  for (std::size_t b = 0; b < cfg.bins.count; ++b)
    p.target_table[b] = smooth_target(b, cfg.smoothing_sigma, cfg.bins.count);
  return p;
}

// Dual-loss gradients over a batch given precomputed labels. Correctness uses
// binary cross-entropy on every sample; regression uses cross-entropy against
// the smoothed bin target, restricted to incorrect-seed samples (all samples
// in the regression_only ablation).
inline StepLosses grads_on_prepared(const RejectionModel& m, const PreparedSamples& p,
                                    std::span<const std::size_t> batch, const TrainConfig& cfg,
                                    ModelGrads& grads) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  grads.zero();

  const bool use_corr = cfg.ablation != Ablation::regression_only;
  const bool use_reg = cfg.ablation != Ablation::correctness_only;
  const bool reg_all = cfg.ablation == Ablation::regression_only;

  const double n = static_cast<double>(batch.size());
  std::size_t n_reg = 0;
  if (use_reg) {
    for (std::size_t i : batch)
      if (reg_all || p.incorrect[i]) ++n_reg;
  }

  StepLosses losses;
  nn::TrunkCache cache;
  std::vector<double> z, r;
  for (std::size_t i : batch) {
    nn::trunk_forward(m.trunk, m.standardize(p.inputs[i]), cache);
    std::vector<double> d_hidden(cache.output.size(), 0.0);

    if (use_corr) {
      nn::affine_forward(m.correctness_head, cache.output, z);
      double label = p.incorrect[i] ? 1.0 : 0.0;
      losses.correctness_loss += nn::bce_with_logit(z[0], label) / n;
      double dz = (nn::sigmoid(z[0]) - label) / n;
      grads.correctness.db[0] += dz;
      for (std::size_t h = 0; h < cache.output.size(); ++h) {
        grads.correctness.dw[h] += dz * cache.output[h];
        d_hidden[h] += m.correctness_head.w[h] * dz;
      }
    }

    const bool in_reg = use_reg && (reg_all || p.incorrect[i]);
    if (in_reg) {
      nn::affine_forward(m.regression_head, cache.output, r);
      const auto& target = p.target_table[p.ae_bin[i]];
      double lse = nn::log_sum_exp(r);
      double dot = 0.0;
      for (std::size_t b = 0; b < r.size(); ++b) dot += target[b] * r[b];
      losses.regression_loss += (lse - dot) / static_cast<double>(n_reg);
      auto q = nn::softmax(r);
      for (std::size_t b = 0; b < r.size(); ++b) {
        double dr = (q[b] - target[b]) / static_cast<double>(n_reg);
        grads.regression.db[b] += dr;
        const double* wr = m.regression_head.w.data() + b * cache.output.size();
        double* dwr = grads.regression.dw.data() + b * cache.output.size();
        for (std::size_t h = 0; h < cache.output.size(); ++h) {
          dwr[h] += dr * cache.output[h];
          d_hidden[h] += wr[h] * dr;
        }
      }
    }

    nn::trunk_backward(m.trunk, cache, std::move(d_hidden), grads.trunk);
  }
  return losses;
}

}  // namespace detail

// Dual-loss gradients for a batch of dataset samples; exposed so tests can
// compare against finite differences.
inline StepLosses compute_gradients(const RejectionModel& m, const Dataset& ds,
                                    std::span<const std::size_t> batch_indices,
                                    const TrainConfig& cfg, ModelGrads& grads) {
  auto prepared = detail::prepare_samples(ds, batch_indices, cfg);
  std::vector<std::size_t> local(batch_indices.size());
  std::iota(local.begin(), local.end(), std::size_t{0});
  return detail::grads_on_prepared(m, prepared, local, cfg, grads);
}

// Loss value only, for finite-difference oracles.
inline StepLosses compute_losses(const RejectionModel& m, const Dataset& ds,
                                 std::span<const std::size_t> batch_indices,
                                 const TrainConfig& cfg) {
  ModelGrads scratch(m);
  return compute_gradients(m, ds, batch_indices, cfg, scratch);
}

struct OptimizerState {
  std::vector<nn::AdamLayerState> trunk;
  std::optional<nn::AdamLayerState> correctness, regression;
  std::size_t t = 0;

  explicit OptimizerState(const RejectionModel& m)
      : correctness(nn::AdamLayerState(m.correctness_head)),
        regression(nn::AdamLayerState(m.regression_head)) {
    trunk.reserve(m.trunk.size());
    for (const auto& l : m.trunk) trunk.emplace_back(l);
  }
};

namespace detail {

inline void apply_update(RejectionModel& m, const ModelGrads& grads, const TrainConfig& cfg,
                         OptimizerState& opt) {
  const bool touch_corr = cfg.ablation != Ablation::regression_only;
  const bool touch_reg = cfg.ablation != Ablation::correctness_only;
  if (cfg.optimizer == nn::Optimizer::sgd) {
    for (std::size_t i = 0; i < m.trunk.size(); ++i) nn::sgd_step(m.trunk[i], grads.trunk[i], cfg.learning_rate);
    if (touch_corr) nn::sgd_step(m.correctness_head, grads.correctness, cfg.learning_rate);
    if (touch_reg) nn::sgd_step(m.regression_head, grads.regression, cfg.learning_rate);
    return;
  }
  ++opt.t;
  for (std::size_t i = 0; i < m.trunk.size(); ++i)
    nn::adam_step(m.trunk[i], grads.trunk[i], opt.trunk[i], cfg.learning_rate, opt.t);
  if (touch_corr)
    nn::adam_step(m.correctness_head, grads.correctness, *opt.correctness, cfg.learning_rate, opt.t);
  if (touch_reg)
    nn::adam_step(m.regression_head, grads.regression, *opt.regression, cfg.learning_rate, opt.t);
}

}  // namespace detail

// One gradient step on a batch. Returns the batch losses measured before the
// update.
inline StepLosses train_step(RejectionModel& m, const Dataset& ds,
                             std::span<const std::size_t> batch_indices, const TrainConfig& cfg,
                             OptimizerState& opt) {
  ModelGrads grads(m);
  StepLosses losses = compute_gradients(m, ds, batch_indices, cfg, grads);
  detail::apply_update(m, grads, cfg, opt);
  return losses;
}

// A trained model packaged as a rejection scorer.
struct DaerScorer {
  RejectionModel model;
  BinScheme bins;
  std::vector<std::string> primary_features = {"probs"};
  std::vector<std::string> seed_features = {"seed"};
  bool zero_seed = false;

  double score(const SeedSample& s) const {
    std::vector<double> primary = concat_features(s, primary_features, "daer");
    std::vector<double> seed = concat_features(s, seed_features, "daer");
    if (zero_seed) std::fill(seed.begin(), seed.end(), 0.0);
    ModelOutput out = forward(model, primary, seed);
    return expected_additional_error(out.p_incorrect, out.bin_probs, bins);
  }
};

inline DaerScorer make_daer_scorer(RejectionModel model, const TrainConfig& cfg) {
  DaerScorer sc;
  sc.model = std::move(model);
  sc.bins = cfg.bins;
  sc.primary_features = cfg.primary_features;
  sc.seed_features = cfg.seed_features;
  sc.zero_seed = cfg.ablation == Ablation::no_seed;
  return sc;
}

inline std::vector<double> score_dataset(const Dataset& ds, const DaerScorer& scorer) {
  std::vector<double> scores;
  scores.reserve(ds.samples.size());
  for (const auto& s : ds.samples) scores.push_back(scorer.score(s));
  return scores;
}

struct EpochLog {
  std::size_t epoch = 0;
  double correctness_loss = 0.0;
  double regression_loss = 0.0;
  double val_amae = 0.0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  std::size_t best_epoch = 0;
  double best_val_amae = 0.0;
};

// Full training loop: shuffled mini-batches per epoch, validation AMAE after
// each epoch, best-validation snapshot, early stop after `patience` epochs
// without improvement. Deterministic for a fixed rng_seed.
inline RejectionModel train(const Dataset& train_ds, const Dataset& val_ds,
                            const TrainConfig& cfg, TrainLog* log = nullptr) {
  cfg.validate();
  if (train_ds.empty() || val_ds.empty())
    throw std::invalid_argument("train: training and validation datasets must be nonempty");

  std::vector<std::size_t> all_train(train_ds.size());
  std::iota(all_train.begin(), all_train.end(), std::size_t{0});
  auto prepared = detail::prepare_samples(train_ds, all_train, cfg);

  std::size_t primary_width = concat_features(train_ds.samples[0], cfg.primary_features, "daer").size();
  std::size_t seed_width = concat_features(train_ds.samples[0], cfg.seed_features, "daer").size();
  for (const auto& input : prepared.inputs)
    if (input.size() != primary_width + seed_width)
      throw std::invalid_argument("train: inconsistent feature widths across samples");

  Rng rng(cfg.rng_seed);
  RejectionModel model = make_rejection_model(primary_width, seed_width, cfg.hidden,
                                              cfg.bins.count, rng);
  fit_input_stats(model, prepared.inputs);
  OptimizerState opt(model);

  // Validation scoring reuses the inference path on the live parameters.
  auto validation_amae = [&](const RejectionModel& m) {
    DaerScorer sc = make_daer_scorer(m, cfg);
    auto scores = score_dataset(val_ds, sc);
    auto order = rank_by_score(val_ds, scores);
    return rejection_curve(val_ds, order).amae;
  };

  RejectionModel best = model;
  double best_amae = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::size_t since_improve = 0;

  std::vector<std::size_t> order(train_ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    double corr_sum = 0.0, reg_sum = 0.0;
    std::size_t n_batches = 0;
    ModelGrads grads(model);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t end = std::min(start + cfg.batch_size, order.size());
      std::span<const std::size_t> batch(order.data() + start, end - start);
      StepLosses losses = detail::grads_on_prepared(model, prepared, batch, cfg, grads);
      if (!std::isfinite(losses.total()))
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(n_batches));
      detail::apply_update(model, grads, cfg, opt);
      corr_sum += losses.correctness_loss;
      reg_sum += losses.regression_loss;
      ++n_batches;
    }

    double val_amae = validation_amae(model);
    if (log)
      log->epochs.push_back({epoch, corr_sum / static_cast<double>(n_batches),
                             reg_sum / static_cast<double>(n_batches), val_amae});

    if (val_amae < best_amae) {
      best_amae = val_amae;
      best = model;
      best_epoch = epoch;
      since_improve = 0;
    } else {
      ++since_improve;
    }
    if (since_improve >= cfg.patience) break;
  }

  if (log) {
    log->best_epoch = best_epoch;
    log->best_val_amae = best_amae;
  }
  return best;
}

// Checkpoint: self-describing JSON with layer shapes, flat weight arrays
// (binary64 round-trips through the decimal encoding), bin scheme,
// correctness rule, and the run's config hash.
namespace detail {

inline nlohmann::json layer_to_json(const nn::Layer& l) {
  return {{"in", l.in}, {"out", l.out}, {"w", l.w}, {"b", l.b}};
}

inline nn::Layer layer_from_json(const nlohmann::json& j) {
  nn::Layer l(j.at("in").get<std::size_t>(), j.at("out").get<std::size_t>());
  l.w = j.at("w").get<std::vector<double>>();
  l.b = j.at("b").get<std::vector<double>>();
  if (l.w.size() != l.in * l.out || l.b.size() != l.out)
    throw std::runtime_error("checkpoint: layer shape does not match weight array");
  return l;
}

}  // namespace detail

inline nlohmann::json checkpoint_to_json(const RejectionModel& m, const TrainConfig& cfg,
                                         const std::string& config_hash) {
  nlohmann::json j;
  j["kind"] = "rejection_model";
  j["config_hash"] = config_hash;
  j["input_width"] = m.input_width;
  j["seed_width"] = m.seed_width;
  j["input_mean"] = m.input_mean;
  j["input_std"] = m.input_std;
  j["trunk"] = nlohmann::json::array();
  for (const auto& l : m.trunk) j["trunk"].push_back(detail::layer_to_json(l));
  j["correctness_head"] = detail::layer_to_json(m.correctness_head);
  j["regression_head"] = detail::layer_to_json(m.regression_head);
  j["bins"] = {{"count", cfg.bins.count}, {"ae_max", cfg.bins.ae_max}};
  if (const auto* zr = std::get_if<ZeroAeRule>(&cfg.correctness))
    j["correctness"] = {{"rule", "zero_ae"}, {"tolerance", zr->tolerance}};
  else
    j["correctness"] = {{"rule", "seed_match"}};
  j["ablation"] = ablation_name(cfg.ablation);
  j["primary_features"] = cfg.primary_features;
  j["seed_features"] = cfg.seed_features;
  return j;
}

inline DaerScorer scorer_from_checkpoint(const nlohmann::json& j) {
  if (!j.is_object() || j.value("kind", "") != "rejection_model")
    throw std::runtime_error("checkpoint: not a rejection_model document");
  DaerScorer sc;
  sc.model.input_width = j.at("input_width").get<std::size_t>();
  sc.model.seed_width = j.at("seed_width").get<std::size_t>();
  sc.model.input_mean = j.at("input_mean").get<std::vector<double>>();
  sc.model.input_std = j.at("input_std").get<std::vector<double>>();
  for (const auto& lj : j.at("trunk")) sc.model.trunk.push_back(detail::layer_from_json(lj));
  sc.model.correctness_head = detail::layer_from_json(j.at("correctness_head"));
  sc.model.regression_head = detail::layer_from_json(j.at("regression_head"));
  sc.bins.count = j.at("bins").at("count").get<std::size_t>();
  sc.bins.ae_max = j.at("bins").at("ae_max").get<double>();
  sc.bins.validate();
  sc.primary_features = j.at("primary_features").get<std::vector<std::string>>();
  sc.seed_features = j.at("seed_features").get<std::vector<std::string>>();
  sc.zero_seed = j.at("ablation").get<std::string>() == ablation_name(Ablation::no_seed);
  return sc;
}

}  // namespace seedrej
