#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "seedrej/metrics.hpp"
#include "seedrej/records.hpp"
#include "seedrej/rng.hpp"

namespace seedrej {

// Rejection scores share one polarity: higher means reject earlier.
// Confidence-style baselines are complemented so rankings compose.

inline void check_distribution(std::span<const double> probs, const char* what) {
  if (probs.empty()) throw std::invalid_argument(std::string(what) + ": empty distribution");
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0)
      throw std::invalid_argument(std::string(what) + ": probabilities must be finite and >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw std::invalid_argument(std::string(what) + ": probabilities must sum to 1");
}

// 1 - max(probs): complement of the softmax-response confidence.
inline double softmax_response_score(std::span<const double> probs) {
  check_distribution(probs, "softmax_response");
  return 1.0 - *std::max_element(probs.begin(), probs.end());
}

// Shannon entropy, natural log, with 0*ln(0) = 0.
inline double entropy_score(std::span<const double> probs) {
  check_distribution(probs, "entropy");
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value, 1-indexed.
inline double nearest_rank_percentile(std::vector<double>& values, double percentile) {
  if (values.empty()) throw std::invalid_argument("nearest_rank_percentile: empty sample");
  if (!(percentile > 0.0) || !(percentile < 100.0))
    throw std::invalid_argument("nearest_rank_percentile: percentile must be in (0, 100)");
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(percentile / 100.0 * static_cast<double>(values.size())));
  if (rank == 0) rank = 1;
  if (rank > values.size()) rank = values.size();
  std::nth_element(values.begin(), values.begin() + (rank - 1), values.end());
  return values[rank - 1];
}

// Sampling-based spread of the task model's output: draws n values from the
// categorical distribution over bin_values and reports the given percentile of
// |sample - sample mean|. `period` > 0 switches to circular differences for
// periodic value spaces (0 = aperiodic). Deterministic per rng_seed.
inline double mc_percentile_score(std::span<const double> probs, std::span<const double> bin_values,
                                  std::size_t n_samples, double percentile,
                                  std::uint64_t rng_seed, double period = 0.0) {
  check_distribution(probs, "mc_percentile");
  if (bin_values.size() != probs.size())
    throw std::invalid_argument("mc_percentile: bin_values length must match probs length");
  if (n_samples < 1) throw std::invalid_argument("mc_percentile: n_samples must be >= 1");

  Rng rng(rng_seed);
  std::vector<double> draws(n_samples);
  double sum = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    draws[i] = bin_values[rng.categorical(probs)];
    sum += draws[i];
  }
  double mean = sum / static_cast<double>(n_samples);

  std::vector<double> diffs(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    double d = std::abs(draws[i] - mean);
    if (period > 0.0) {
      d = std::fmod(d, period);
      d = std::min(d, period - d);
    }
    diffs[i] = d;
  }
  return nearest_rank_percentile(diffs, percentile);
}

// Oracle input-space distance between candidate and gold seed: Euclidean for
// planar and grid seeds, 0/1 for categorical.
inline double known_distance_score(const SeedValue& candidate, const SeedValue& gold) {
  if (kind_of(candidate) != kind_of(gold))
    throw std::invalid_argument("known_distance: candidate and gold seed kinds differ");
  if (const auto* c = std::get_if<CategoricalSeed>(&candidate)) {
    return c->index == std::get<CategoricalSeed>(gold).index ? 0.0 : 1.0;
  }
  if (const auto* p = std::get_if<PlanarSeed>(&candidate)) {
    const auto& q = std::get<PlanarSeed>(gold);
    return std::hypot(p->x - q.x, p->y - q.y);
  }
  const auto& g = std::get<GridSeed>(candidate);
  const auto& h = std::get<GridSeed>(gold);
  double dr = static_cast<double>(g.row) - static_cast<double>(h.row);
  double dc = static_cast<double>(g.col) - static_cast<double>(h.col);
  return std::hypot(dr, dc);
}

// Oracle additional error: the reference ranking every other scorer is
// measured against.
inline double oracle_ae_score(double loss_candidate, double loss_gold) {
  return additional_error(loss_candidate, loss_gold);
}

// Acceptance order: ascending score (lowest rejection score accepted first),
// ties broken by ascending sample_id. Returns indices into ds.samples.
inline std::vector<std::size_t> rank_by_score(const Dataset& ds, std::span<const double> scores) {
  if (scores.size() != ds.samples.size())
    throw std::invalid_argument("rank_by_score: one score per sample required");
  for (double s : scores)
    if (!std::isfinite(s)) throw std::invalid_argument("rank_by_score: scores must be finite");
  std::vector<std::size_t> order(ds.samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] < scores[b];
    return ds.samples[a].sample_id < ds.samples[b].sample_id;
  });
  return order;
}

inline std::vector<std::size_t> rank_by_score(const Dataset& ds,
                                              const std::map<std::string, double>& scores) {
  std::vector<double> aligned;
  aligned.reserve(ds.samples.size());
  for (const auto& s : ds.samples) {
    auto it = scores.find(s.sample_id);
    if (it == scores.end())
      throw std::invalid_argument("rank_by_score: missing score for sample '" + s.sample_id + "'");
    aligned.push_back(it->second);
  }
  return rank_by_score(ds, aligned);
}

// Declarative scorer selection, mirrored by the CLI config.
enum class ScorerKind {
  softmax_response,
  entropy,
  mc_percentile,
  known_distance,
  oracle_ae,
  daer,
  constant,
};

inline const char* scorer_kind_name(ScorerKind k) {
  switch (k) {
    case ScorerKind::softmax_response: return "softmax_response";
    case ScorerKind::entropy: return "entropy";
    case ScorerKind::mc_percentile: return "mc_percentile";
    case ScorerKind::known_distance: return "known_distance";
    case ScorerKind::oracle_ae: return "oracle_ae";
    case ScorerKind::daer: return "daer";
    case ScorerKind::constant: return "constant";
  }
  return "?";
}

inline ScorerKind scorer_kind_from_name(const std::string& name) {
  for (ScorerKind k :
       {ScorerKind::softmax_response, ScorerKind::entropy, ScorerKind::mc_percentile,
        ScorerKind::known_distance, ScorerKind::oracle_ae, ScorerKind::daer, ScorerKind::constant})
    if (name == scorer_kind_name(k)) return k;
  throw std::invalid_argument("unknown scorer name '" + name + "'");
}

struct ScorerSpec {
  ScorerKind kind = ScorerKind::constant;
  std::string label;                  // report key; defaults to the kind name
  std::string probs_feature = "probs";  // feature holding the output distribution

  // mc_percentile parameters
  std::size_t n_samples = 10000;
  double percentile = 80.0;
  std::uint64_t rng_seed = 0;
  double values_period = 0.0;  // 0 = aperiodic bin-value space

  // constant parameter
  double value = 0.0;

  // daer parameters (resolved by the runner)
  std::string checkpoint;  // path; empty = train in-run
  std::string ablation;    // optional override of the training config

  std::string report_label() const { return label.empty() ? scorer_kind_name(kind) : label; }
};

inline const std::vector<double>& require_feature(const SeedSample& s, const std::string& key,
                                                  const char* what) {
  auto it = s.features.find(key);
  if (it == s.features.end())
    throw std::invalid_argument(std::string(what) + ": sample '" + s.sample_id +
                                "' has no feature '" + key + "'");
  return it->second;
}

// Scores every sample under the spec. daer specs are resolved upstream (the
// model lives in the daer module); passing one here is a usage error.
inline std::vector<double> score_dataset(const Dataset& ds, const ScorerSpec& spec) {
  std::vector<double> scores;
  scores.reserve(ds.samples.size());
  for (const auto& s : ds.samples) {
    switch (spec.kind) {
      case ScorerKind::softmax_response:
        scores.push_back(softmax_response_score(require_feature(s, spec.probs_feature, "softmax_response")));
        break;
      case ScorerKind::entropy:
        scores.push_back(entropy_score(require_feature(s, spec.probs_feature, "entropy")));
        break;
      case ScorerKind::mc_percentile: {
        const auto& probs = require_feature(s, spec.probs_feature, "mc_percentile");
        std::vector<double> values(probs.size());
        std::iota(values.begin(), values.end(), 0.0);
        scores.push_back(mc_percentile_score(probs, values, spec.n_samples, spec.percentile,
                                             spec.rng_seed, spec.values_period));
        break;
      }
      case ScorerKind::known_distance: {
        if (!s.gold_seed)
          throw std::invalid_argument("known_distance: sample '" + s.sample_id +
                                      "' has no gold-standard seed");
        scores.push_back(known_distance_score(s.candidate_seed, *s.gold_seed));
        break;
      }
      case ScorerKind::oracle_ae:
        scores.push_back(sample_additional_error(s));
        break;
      case ScorerKind::constant:
        scores.push_back(spec.value);
        break;
      case ScorerKind::daer:
        throw std::logic_error("score_dataset: daer scorer must be resolved to a model first");
    }
  }
  return scores;
}

}  // namespace seedrej
