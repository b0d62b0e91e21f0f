#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "seedrej/records.hpp"

namespace seedrej {

// Additional error: the clamped penalty of using the candidate seed in place
// of the gold-standard seed. Never negative; a candidate cannot be credited
// for beating the gold standard.
inline double additional_error(double loss_candidate, double loss_gold) {
  if (!(loss_candidate >= 0.0) || !(loss_gold >= 0.0) || !std::isfinite(loss_candidate) ||
      !std::isfinite(loss_gold))
    throw std::invalid_argument("additional_error: losses must be finite and nonnegative");
  double d = loss_candidate - loss_gold;
  return d > 0.0 ? d : 0.0;
}

inline double sample_additional_error(const SeedSample& s) {
  if (!s.loss_gold)
    throw std::invalid_argument("sample '" + s.sample_id +
                                "' has no gold-standard loss; evaluation needs gold-standard losses");
  return additional_error(s.loss_candidate, *s.loss_gold);
}

// Mean additional error over an accepted set. Empty set is defined as 0 so
// curves stay total down to coverage 0.
inline double mean_additional_error(std::span<const double> accepted_ae) {
  double sum = 0.0;
  for (double ae : accepted_ae) {
    if (!(ae >= 0.0) || !std::isfinite(ae))
      throw std::invalid_argument("mean_additional_error: AE values must be finite and nonnegative");
    sum += ae;
  }
  return accepted_ae.empty() ? 0.0 : sum / static_cast<double>(accepted_ae.size());
}

struct CurvePoint {
  double coverage = 0.0;  // fraction of samples accepted, in (0, 1]
  double mae = 0.0;       // mean additional error over that accepted prefix
};

struct RejectionCurve {
  std::vector<CurvePoint> points;  // one per prefix, coverage strictly increasing
  double amae = 0.0;               // mean of the prefix MAEs
};

// MAE-vs-coverage curve for samples listed in acceptance order (first element
// is accepted at the lowest coverage). AMAE is the unweighted mean over all
// prefix MAEs.
inline RejectionCurve rejection_curve(std::span<const double> ae_in_rank_order) {
  if (ae_in_rank_order.empty())
    throw std::invalid_argument("rejection_curve: empty dataset");
  const std::size_t n = ae_in_rank_order.size();
  RejectionCurve curve;
  curve.points.reserve(n);
  double ae_sum = 0.0;
  double mae_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double ae = ae_in_rank_order[i];
    if (!(ae >= 0.0) || !std::isfinite(ae))
      throw std::invalid_argument("rejection_curve: AE values must be finite and nonnegative");
    ae_sum += ae;
    double mae = ae_sum / static_cast<double>(i + 1);
    mae_sum += mae;
    curve.points.push_back({static_cast<double>(i + 1) / static_cast<double>(n), mae});
  }
  curve.amae = mae_sum / static_cast<double>(n);
  return curve;
}

inline std::vector<double> gather_additional_errors(const Dataset& ds,
                                                    std::span<const std::size_t> order) {
  std::vector<double> ae;
  ae.reserve(order.size());
  for (std::size_t i : order) ae.push_back(sample_additional_error(ds.samples.at(i)));
  return ae;
}

inline RejectionCurve rejection_curve(const Dataset& ds, std::span<const std::size_t> order) {
  auto ae = gather_additional_errors(ds, order);
  return rejection_curve(ae);
}

// Largest coverage whose MAE is at or below the target; 0 when no prefix
// qualifies. The fraction that must be rejected is 1 minus the result.
inline double coverage_at_target_mae(const RejectionCurve& curve, double target) {
  if (!(target >= 0.0)) throw std::invalid_argument("coverage_at_target_mae: target must be >= 0");
  for (std::size_t i = curve.points.size(); i > 0; --i) {
    if (curve.points[i - 1].mae <= target) return curve.points[i - 1].coverage;
  }
  return 0.0;
}

inline double fold_mean_amae(std::span<const double> per_fold_amae) {
  if (per_fold_amae.empty()) throw std::invalid_argument("fold_mean_amae: empty sequence");
  double sum = 0.0;
  for (double v : per_fold_amae) sum += v;
  return sum / static_cast<double>(per_fold_amae.size());
}

// CSV export: header `coverage,mae`, one row per prefix, 12 significant digits.
inline void write_curve_csv(const RejectionCurve& curve, std::ostream& out) {
  out << "coverage,mae\n";
  char buf[64];
  for (const auto& p : curve.points) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g\n", p.coverage, p.mae);
    out << buf;
  }
}

}  // namespace seedrej
