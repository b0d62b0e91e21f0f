#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "seedrej/metrics.hpp"
#include "seedrej/nn.hpp"
#include "seedrej/records.hpp"
#include "seedrej/rng.hpp"

namespace seedrej {

enum class TaskKind { coarse_fine, grid_angle };

inline const char* task_kind_name(TaskKind k) {
  return k == TaskKind::coarse_fine ? "coarse_fine" : "grid_angle";
}

inline TaskKind task_kind_from_name(const std::string& name) {
  if (name == "coarse_fine") return TaskKind::coarse_fine;
  if (name == "grid_angle") return TaskKind::grid_angle;
  throw std::invalid_argument("unknown task kind '" + name + "'");
}

struct TaskModelConfig {
  std::vector<std::size_t> hidden = {64, 64};
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t epochs = 40;
  nn::Optimizer optimizer = nn::Optimizer::adam;
  double holdout_fraction = 0.1;
  double label_smoothing = 0.02;  // keeps the output distribution calibrated
};

struct SyntheticTaskConfig {
  TaskKind kind = TaskKind::coarse_fine;
  std::size_t n_samples = 5000;
  std::size_t feature_dim = 16;
  std::size_t n_coarse = 3;       // CoarseFine
  std::size_t n_fine = 12;        // CoarseFine
  std::size_t grid_size = 8;      // GridAngle
  std::size_t n_angle_bins = 36;  // GridAngle
  double p_noise = 0.3;
  std::uint64_t rng_seed = 1;

  // Generator shape. CoarseFine features carry a within-coarse "slot" signal
  // plus a coarse-class signal. The coarse seed disambiguates fine classes
  // that share a slot; the in-feature coarse signal makes the task model
  // visibly split or override on conflicting seeds, which is what gives
  // output-based rejection scorers something to read.
  double slot_scale = 2.6;
  double coarse_leak = 2.5;
  double noise_sigma = 1.0;
  double trig_noise = 0.3;  // GridAngle: noise on the angle encoding

  TaskModelConfig task_model;

  void validate() const {
    if (n_samples == 0) throw std::invalid_argument("synthetic: n_samples must be > 0");
    if (feature_dim < 1) throw std::invalid_argument("synthetic: feature_dim must be >= 1");
    if (!(p_noise >= 0.0 && p_noise <= 1.0))
      throw std::invalid_argument("synthetic: p_noise must be in [0, 1]");
    if (kind == TaskKind::coarse_fine) {
      if (n_coarse < 2) throw std::invalid_argument("synthetic: n_coarse must be >= 2");
      if (n_fine < 2) throw std::invalid_argument("synthetic: n_fine must be >= 2");
      if (n_fine % n_coarse != 0)
        throw std::invalid_argument("synthetic: n_fine must be divisible by n_coarse");
    } else {
      if (grid_size < 2) throw std::invalid_argument("synthetic: grid_size must be >= 2");
      if (n_angle_bins < 2) throw std::invalid_argument("synthetic: n_angle_bins must be >= 2");
      if (feature_dim < 2)
        throw std::invalid_argument("synthetic: grid_angle needs feature_dim >= 2");
    }
  }

  std::size_t n_targets() const {
    return kind == TaskKind::coarse_fine ? n_fine : n_angle_bins;
  }

  SeedSchema seed_schema() const {
    SeedSchema s;
    if (kind == TaskKind::coarse_fine) {
      s.kind = SeedKind::categorical;
      s.cardinality = n_coarse;
    } else {
      s.kind = SeedKind::grid;
      s.grid_rows = grid_size;
      s.grid_cols = grid_size;
    }
    return s;
  }
};

struct CorpusItem {
  std::vector<double> x;
  SeedValue gold_seed;
  SeedValue candidate_seed;
  std::size_t target = 0;
};

struct SyntheticCorpus {
  SyntheticTaskConfig config;
  SeedSchema schema;
  std::size_t n_targets = 0;
  std::vector<CorpusItem> items;
};

// Task performance measure. CoarseFine uses the 0/100 misclassification rule,
// so MAE reads as percentage points of accuracy lost to candidate seeds.
// GridAngle uses circular distance between angle bins.
inline double task_loss(TaskKind kind, std::size_t predicted, std::size_t target,
                        std::size_t n_targets) {
  if (kind == TaskKind::coarse_fine) return predicted == target ? 0.0 : 100.0;
  double d = std::abs(static_cast<double>(predicted) - static_cast<double>(target));
  return std::min(d, static_cast<double>(n_targets) - d);
}

inline double task_ae_max(const SyntheticTaskConfig& cfg) {
  return cfg.kind == TaskKind::coarse_fine ? 100.0
                                           : static_cast<double>(cfg.n_angle_bins) / 2.0;
}

namespace detail {

inline std::vector<std::vector<double>> random_directions(std::size_t n, std::size_t dim,
                                                          double scale, Rng& rng) {
  std::vector<std::vector<double>> m(n, std::vector<double>(dim));
  for (auto& v : m) {
    double norm = 0.0;
    for (double& c : v) {
      c = rng.normal();
      norm += c * c;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) norm = 1.0;
    for (double& c : v) c = c / norm * scale;
  }
  return m;
}

}  // namespace detail

// CoarseFine: fine class f has within-coarse slot w = f mod (n_fine/n_coarse)
// and owner coarse class c = f div (n_fine/n_coarse). Features mix a strong
// slot direction with a weaker coarse direction, so fine classes sharing a
// slot collide in feature space unless the coarse seed resolves them.
inline SyntheticCorpus gen_coarse_fine(const SyntheticTaskConfig& cfg, Rng& rng) {
  if (cfg.kind != TaskKind::coarse_fine)
    throw std::invalid_argument("gen_coarse_fine: config kind is not coarse_fine");
  cfg.validate();
  const std::size_t per_coarse = cfg.n_fine / cfg.n_coarse;

  auto slot_dirs = detail::random_directions(per_coarse, cfg.feature_dim, cfg.slot_scale, rng);
  auto coarse_dirs = detail::random_directions(cfg.n_coarse, cfg.feature_dim, cfg.coarse_leak, rng);

  SyntheticCorpus corpus;
  corpus.config = cfg;
  corpus.schema = cfg.seed_schema();
  corpus.n_targets = cfg.n_fine;
  corpus.items.reserve(cfg.n_samples);
  for (std::size_t i = 0; i < cfg.n_samples; ++i) {
    std::size_t fine = rng.uniform_index(cfg.n_fine);
    std::size_t slot = fine % per_coarse;
    std::size_t coarse = fine / per_coarse;
    CorpusItem item;
    item.x.resize(cfg.feature_dim);
    for (std::size_t d = 0; d < cfg.feature_dim; ++d)
      item.x[d] = slot_dirs[slot][d] + coarse_dirs[coarse][d] + cfg.noise_sigma * rng.normal();
    item.target = fine;
    item.gold_seed = CategoricalSeed{coarse};
    std::size_t cand = coarse;
    if (rng.uniform() < cfg.p_noise) {
      std::size_t shift = 1 + rng.uniform_index(cfg.n_coarse - 1);
      cand = (coarse + shift) % cfg.n_coarse;
    }
    item.candidate_seed = CategoricalSeed{cand};
    corpus.items.push_back(std::move(item));
  }
  return corpus;
}

// Discretized 2D Gaussian displacement used for candidate grid cells.
inline std::pair<long long, long long> sample_grid_jitter(Rng& rng, double sigma) {
  long long dr = std::llround(rng.normal(0.0, sigma));
  long long dc = std::llround(rng.normal(0.0, sigma));
  return {dr, dc};
}

// GridAngle: a latent angle is observed through a noisy trig encoding plus
// distractor dimensions; the seed is the grid cell the angle points at, and
// the target is the angle bin. Candidate cells are jittered by a discretized
// Gaussian of scale p_noise * grid_size, clamped into the grid.
inline SyntheticCorpus gen_grid_angle(const SyntheticTaskConfig& cfg, Rng& rng) {
  if (cfg.kind != TaskKind::grid_angle)
    throw std::invalid_argument("gen_grid_angle: config kind is not grid_angle");
  cfg.validate();
  const double two_pi = 2.0 * 3.14159265358979323846;
  const std::size_t g = cfg.grid_size;
  const double jitter_sigma = cfg.p_noise * static_cast<double>(g);

  auto cell_of = [&](double c) {
    auto idx = static_cast<long long>(std::floor((c + 1.0) / 2.0 * static_cast<double>(g)));
    return static_cast<std::size_t>(std::clamp<long long>(idx, 0, static_cast<long long>(g) - 1));
  };

  SyntheticCorpus corpus;
  corpus.config = cfg;
  corpus.schema = cfg.seed_schema();
  corpus.n_targets = cfg.n_angle_bins;
  corpus.items.reserve(cfg.n_samples);
  for (std::size_t i = 0; i < cfg.n_samples; ++i) {
    double theta = rng.uniform() * two_pi;
    CorpusItem item;
    item.x.resize(cfg.feature_dim);
    item.x[0] = std::cos(theta) + cfg.trig_noise * rng.normal();
    item.x[1] = std::sin(theta) + cfg.trig_noise * rng.normal();
    for (std::size_t d = 2; d < cfg.feature_dim; ++d) item.x[d] = rng.normal();

    auto bin = static_cast<std::size_t>(theta / two_pi * static_cast<double>(cfg.n_angle_bins));
    item.target = std::min(bin, cfg.n_angle_bins - 1);

    std::size_t gold_row = cell_of(std::sin(theta));
    std::size_t gold_col = cell_of(std::cos(theta));
    item.gold_seed = GridSeed{gold_row, gold_col};

    auto [dr, dc] = sample_grid_jitter(rng, jitter_sigma);
    auto clamp_cell = [&](long long v) {
      return static_cast<std::size_t>(std::clamp<long long>(v, 0, static_cast<long long>(g) - 1));
    };
    item.candidate_seed = GridSeed{clamp_cell(static_cast<long long>(gold_row) + dr),
                                   clamp_cell(static_cast<long long>(gold_col) + dc)};
    corpus.items.push_back(std::move(item));
  }
  return corpus;
}

inline SyntheticCorpus generate_corpus(const SyntheticTaskConfig& cfg) {
  Rng rng(cfg.rng_seed);
  return cfg.kind == TaskKind::coarse_fine ? gen_coarse_fine(cfg, rng) : gen_grid_angle(cfg, rng);
}

// The fixed task model f: a feed-forward classifier over (x, seed encoding),
// frozen once trained. All rejection experiments treat it as a black box.
struct TaskModel {
  TaskKind kind = TaskKind::coarse_fine;
  SeedSchema schema;
  std::size_t n_targets = 0;
  std::size_t feature_dim = 0;
  std::vector<nn::Layer> trunk;
  nn::Layer output;
  double holdout_accuracy = 0.0;

  std::vector<double> predict_probs(std::span<const double> x, const SeedValue& seed) const {
    if (x.size() != feature_dim)
      throw std::invalid_argument("TaskModel: primary input width mismatch");
    std::vector<double> input(x.begin(), x.end());
    auto enc = encode_seed(seed, schema);
    input.insert(input.end(), enc.begin(), enc.end());
    nn::TrunkCache cache;
    nn::trunk_forward(trunk, input, cache);
    std::vector<double> logits;
    nn::affine_forward(output, cache.output, logits);
    return nn::softmax(logits);
  }

  std::size_t predict(std::span<const double> x, const SeedValue& seed) const {
    auto probs = predict_probs(x, seed);
    return static_cast<std::size_t>(
        std::max_element(probs.begin(), probs.end()) - probs.begin());
  }
};

// Trains f on (x, gold seed) -> target with cross-entropy, then freezes it.
// A holdout slice measures gold-seed accuracy. Deterministic per rng_seed.
inline TaskModel train_task_model(const SyntheticCorpus& corpus, const TaskModelConfig& tm,
                                  std::uint64_t rng_seed) {
  if (corpus.items.empty()) throw std::invalid_argument("train_task_model: empty corpus");
  if (tm.hidden.empty()) throw std::invalid_argument("train_task_model: at least one hidden layer");
  if (!(tm.holdout_fraction >= 0.0 && tm.holdout_fraction < 1.0))
    throw std::invalid_argument("train_task_model: holdout_fraction must be in [0, 1)");

  TaskModel f;
  f.kind = corpus.config.kind;
  f.schema = corpus.schema;
  f.n_targets = corpus.n_targets;
  f.feature_dim = corpus.config.feature_dim;

  const std::size_t seed_width = seed_encoding_width(corpus.schema);
  const std::size_t input_width = f.feature_dim + seed_width;

  Rng rng(rng_seed);
  std::size_t prev = input_width;
  for (std::size_t h : tm.hidden) {
    f.trunk.emplace_back(prev, h);
    nn::init_glorot(f.trunk.back(), rng);
    prev = h;
  }
  f.output = nn::Layer(prev, f.n_targets);
  nn::init_glorot(f.output, rng);

  std::vector<std::vector<double>> inputs;
  inputs.reserve(corpus.items.size());
  for (const auto& item : corpus.items) {
    std::vector<double> in = item.x;
    auto enc = encode_seed(item.gold_seed, corpus.schema);
    in.insert(in.end(), enc.begin(), enc.end());
    inputs.push_back(std::move(in));
  }

  std::vector<std::size_t> order(corpus.items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  auto n_holdout = static_cast<std::size_t>(
      std::floor(tm.holdout_fraction * static_cast<double>(order.size())));
  std::vector<std::size_t> holdout(order.begin(), order.begin() + n_holdout);
  std::vector<std::size_t> train_idx(order.begin() + n_holdout, order.end());
  if (train_idx.empty()) throw std::invalid_argument("train_task_model: no training samples left");

  std::vector<nn::LayerGrads> trunk_grads;
  for (const auto& l : f.trunk) trunk_grads.emplace_back(l);
  nn::LayerGrads out_grads(f.output);
  std::vector<nn::AdamLayerState> trunk_adam;
  for (const auto& l : f.trunk) trunk_adam.emplace_back(l);
  nn::AdamLayerState out_adam(f.output);
  std::size_t t = 0;

  nn::TrunkCache cache;
  std::vector<double> logits, d_hidden, dx;
  for (std::size_t epoch = 0; epoch < tm.epochs; ++epoch) {
    rng.shuffle(train_idx);
    for (std::size_t start = 0; start < train_idx.size(); start += tm.batch_size) {
      std::size_t end = std::min(start + tm.batch_size, train_idx.size());
      double bn = static_cast<double>(end - start);
      for (auto& gll : trunk_grads) gll.zero();
      out_grads.zero();
      double batch_loss = 0.0;
      for (std::size_t bi = start; bi < end; ++bi) {
        std::size_t i = train_idx[bi];
        nn::trunk_forward(f.trunk, inputs[i], cache);
        nn::affine_forward(f.output, cache.output, logits);
        // cross-entropy against the smoothed one-hot target
        const double eps = tm.label_smoothing;
        const double off = eps / static_cast<double>(f.n_targets);
        double target_dot = 0.0;
        for (std::size_t o = 0; o < logits.size(); ++o)
          target_dot += (o == corpus.items[i].target ? 1.0 - eps + off : off) * logits[o];
        batch_loss += (nn::log_sum_exp(logits) - target_dot) / bn;
        auto q = nn::softmax(logits);
        for (std::size_t o = 0; o < q.size(); ++o)
          q[o] -= (o == corpus.items[i].target ? 1.0 - eps + off : off);
        for (double& v : q) v /= bn;
        d_hidden.assign(cache.output.size(), 0.0);
        for (std::size_t o = 0; o < q.size(); ++o) {
          out_grads.db[o] += q[o];
          const double* wr = f.output.w.data() + o * cache.output.size();
          double* dwr = out_grads.dw.data() + o * cache.output.size();
          for (std::size_t h = 0; h < cache.output.size(); ++h) {
            dwr[h] += q[o] * cache.output[h];
            d_hidden[h] += wr[h] * q[o];
          }
        }
        nn::trunk_backward(f.trunk, cache, d_hidden, trunk_grads);
      }
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("train_task_model: non-finite loss at epoch " +
                                 std::to_string(epoch));
      if (tm.optimizer == nn::Optimizer::adam) {
        ++t;
        for (std::size_t li = 0; li < f.trunk.size(); ++li)
          nn::adam_step(f.trunk[li], trunk_grads[li], trunk_adam[li], tm.learning_rate, t);
        nn::adam_step(f.output, out_grads, out_adam, tm.learning_rate, t);
      } else {
        for (std::size_t li = 0; li < f.trunk.size(); ++li)
          nn::sgd_step(f.trunk[li], trunk_grads[li], tm.learning_rate);
        nn::sgd_step(f.output, out_grads, tm.learning_rate);
      }
    }
  }

  if (!holdout.empty()) {
    std::size_t correct = 0;
    for (std::size_t i : holdout)
      if (f.predict(corpus.items[i].x, corpus.items[i].gold_seed) == corpus.items[i].target)
        ++correct;
    f.holdout_accuracy = static_cast<double>(correct) / static_cast<double>(holdout.size());
  } else {
    f.holdout_accuracy = 0.0;
  }
  return f;
}

struct PairEval {
  double loss_candidate = 0.0;
  double loss_gold = 0.0;
  double ae = 0.0;
};

// Exact AE oracle: evaluates f under both seeds and applies the task's
// performance measure.
inline PairEval evaluate_pair(const TaskModel& f, const CorpusItem& item) {
  std::size_t pred_c = f.predict(item.x, item.candidate_seed);
  std::size_t pred_g = f.predict(item.x, item.gold_seed);
  PairEval e;
  e.loss_candidate = task_loss(f.kind, pred_c, item.target, f.n_targets);
  e.loss_gold = task_loss(f.kind, pred_g, item.target, f.n_targets);
  e.ae = additional_error(e.loss_candidate, e.loss_gold);
  return e;
}

// One SeedSample per corpus item, with losses from the AE oracle and features
// holding f's candidate-seed output distribution plus the seed encoding, so
// every scorer and the rejection model run on the same records.
inline Dataset corpus_to_dataset(const SyntheticCorpus& corpus, const TaskModel& f) {
  Dataset ds;
  ds.schema = corpus.schema;
  ds.samples.reserve(corpus.items.size());
  char idbuf[16];
  for (std::size_t i = 0; i < corpus.items.size(); ++i) {
    const auto& item = corpus.items[i];
    PairEval e = evaluate_pair(f, item);
    SeedSample s;
    std::snprintf(idbuf, sizeof(idbuf), "%06zu", i);
    s.sample_id = idbuf;
    s.group_id = s.sample_id;
    s.candidate_seed = item.candidate_seed;
    s.gold_seed = item.gold_seed;
    s.loss_candidate = e.loss_candidate;
    s.loss_gold = e.loss_gold;
    s.features["probs"] = f.predict_probs(item.x, item.candidate_seed);
    s.features["seed"] = encode_seed(item.candidate_seed, corpus.schema);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

// Task-model checkpoint, same encoding rules as the rejection model.
inline nlohmann::json task_model_to_json(const TaskModel& f) {
  nlohmann::json j;
  j["kind"] = "task_model";
  j["task"] = task_kind_name(f.kind);
  j["n_targets"] = f.n_targets;
  j["feature_dim"] = f.feature_dim;
  j["holdout_accuracy"] = f.holdout_accuracy;
  j["schema"] = {{"kind", kind_name(f.schema.kind)},
                 {"cardinality", f.schema.cardinality},
                 {"grid_rows", f.schema.grid_rows},
                 {"grid_cols", f.schema.grid_cols}};
  auto layer = [](const nn::Layer& l) {
    return nlohmann::json{{"in", l.in}, {"out", l.out}, {"w", l.w}, {"b", l.b}};
  };
  j["trunk"] = nlohmann::json::array();
  for (const auto& l : f.trunk) j["trunk"].push_back(layer(l));
  j["output"] = layer(f.output);
  return j;
}

}  // namespace seedrej
