#pragma once

// Evaluation measures: binary-classification ratios, biometric error rates,
// threshold sweeps, EER, rate conversions and EN-50133 limits.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "keydyn/error.hpp"

namespace keydyn {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + tn + fp + fn; }
};

inline double accuracy(const ConfusionCounts& c) {
  if (c.total() == 0) throw Error(ErrorCode::ZeroTotal, "no predictions");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

inline double precision(const ConfusionCounts& c) {
  if (c.tp + c.fp == 0) throw Error(ErrorCode::ZeroDenominator, "precision: tp + fp = 0");
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

inline double recall(const ConfusionCounts& c) {
  if (c.tp + c.fn == 0) throw Error(ErrorCode::ZeroDenominator, "recall: tp + fn = 0");
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

/// Harmonic mean of precision and recall.
inline double f1(const ConfusionCounts& c) {
  const double p = precision(c);
  const double r = recall(c);
  if (p + r == 0.0) throw Error(ErrorCode::ZeroDenominator, "f1: precision + recall = 0");
  return 2.0 * p * r / (p + r);
}

namespace detail {

inline double ratio(std::uint64_t num, std::uint64_t den, ErrorCode zero_code, const char* what) {
  if (den == 0) throw Error(zero_code, std::string(what) + ": zero denominator");
  if (num > den) throw Error(ErrorCode::OutOfRange, std::string(what) + ": count exceeds total");
  return static_cast<double>(num) / static_cast<double>(den);
}

inline void require_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::OutOfRange, std::string(what) + " must lie in [0, 1]");
}

}  // namespace detail

inline double far_rate(std::uint64_t incorrectly_accepted, std::uint64_t impostor_attempts) {
  return detail::ratio(incorrectly_accepted, impostor_attempts, ErrorCode::ZeroAttempts, "FAR");
}

inline double frr_rate(std::uint64_t incorrectly_rejected, std::uint64_t genuine_attempts) {
  return detail::ratio(incorrectly_rejected, genuine_attempts, ErrorCode::ZeroAttempts, "FRR");
}

inline double fer_rate(std::uint64_t failed_enrollments, std::uint64_t potential_users) {
  return detail::ratio(failed_enrollments, potential_users, ErrorCode::ZeroUsers, "FER");
}

inline double fta_rate(std::uint64_t failed_acquisitions, std::uint64_t potential_users) {
  return detail::ratio(failed_acquisitions, potential_users, ErrorCode::ZeroUsers, "FTA");
}

// ---------------------------------------------------------------------------
// Score-based rates

struct ScoreSet {
  std::vector<double> genuine;
  std::vector<double> impostor;
};

struct DetPoint {
  double threshold = 0.0;
  double far = 0.0;
  double frr = 0.0;

  bool operator==(const DetPoint&) const = default;
};

namespace detail {

inline void require_scores(const ScoreSet& s) {
  if (s.genuine.empty() || s.impostor.empty()) throw Error(ErrorCode::EmptyScores, "genuine and impostor required");
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(s.genuine) || !finite(s.impostor)) throw Error(ErrorCode::InvalidArgument, "scores must be finite");
}

inline double below(double x) {
  const double t = x - std::max(1.0, std::abs(x));
  return t < x ? t : std::nextafter(x, -std::numeric_limits<double>::infinity());
}

inline double above(double x) {
  const double t = x + std::max(1.0, std::abs(x));
  return t > x ? t : std::nextafter(x, std::numeric_limits<double>::infinity());
}

}  // namespace detail

/// DET curve over every distinct operating point. Thresholds are a sentinel
/// below the lowest score, midpoints between adjacent distinct pooled scores, and
/// a sentinel above the highest. A probe is accepted iff score <= threshold.
inline std::vector<DetPoint> sweep_rates(const ScoreSet& scores) {
  detail::require_scores(scores);
  std::vector<double> gen = scores.genuine;
  std::vector<double> imp = scores.impostor;
  std::sort(gen.begin(), gen.end());
  std::sort(imp.begin(), imp.end());

  std::vector<double> pooled;
  pooled.reserve(gen.size() + imp.size());
  std::merge(gen.begin(), gen.end(), imp.begin(), imp.end(), std::back_inserter(pooled));
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

  std::vector<double> thresholds;
  thresholds.reserve(pooled.size() + 1);
  thresholds.push_back(detail::below(pooled.front()));
  for (std::size_t k = 0; k + 1 < pooled.size(); ++k) {
    thresholds.push_back(pooled[k] + (pooled[k + 1] - pooled[k]) / 2.0);
  }
  thresholds.push_back(detail::above(pooled.back()));

  const double n_gen = static_cast<double>(gen.size());
  const double n_imp = static_cast<double>(imp.size());
  std::vector<DetPoint> curve;
  curve.reserve(thresholds.size());
  std::size_t gi = 0;
  std::size_t ii = 0;
  for (double t : thresholds) {
    while (gi < gen.size() && gen[gi] <= t) ++gi;
    while (ii < imp.size() && imp[ii] <= t) ++ii;
    curve.push_back({t, static_cast<double>(ii) / n_imp, static_cast<double>(gen.size() - gi) / n_gen});
  }
  return curve;
}

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
  double far = 0.0;
  double frr = 0.0;
};

/// Operating point minimizing |FAR - FRR| (smallest threshold on ties);
/// EER is the mean of FAR and FRR there.
inline EerResult eer_from_curve(const std::vector<DetPoint>& curve) {
  if (curve.empty()) throw Error(ErrorCode::EmptyScores, "empty curve");
  const DetPoint* best = &curve.front();
  double best_gap = std::abs(best->far - best->frr);
  for (const auto& p : curve) {
    const double gap = std::abs(p.far - p.frr);
    if (gap < best_gap) {
      best_gap = gap;
      best = &p;
    }
  }
  return {0.5 * (best->far + best->frr), best->threshold, best->far, best->frr};
}

inline EerResult eer_intersection(const ScoreSet& scores) { return eer_from_curve(sweep_rates(scores)); }

/// FAR and FRR at a fixed threshold.
inline DetPoint rates_at(const ScoreSet& scores, double threshold) {
  detail::require_scores(scores);
  const auto accepted = std::count_if(scores.impostor.begin(), scores.impostor.end(),
                                      [&](double s) { return s <= threshold; });
  const auto rejected = std::count_if(scores.genuine.begin(), scores.genuine.end(),
                                      [&](double s) { return s > threshold; });
  return {threshold, far_rate(static_cast<std::uint64_t>(accepted), scores.impostor.size()),
          frr_rate(static_cast<std::uint64_t>(rejected), scores.genuine.size())};
}

inline double eer_average(double far, double frr) {
  detail::require_unit(far, "FAR");
  detail::require_unit(frr, "FRR");
  return 0.5 * (far + frr);
}

inline double accuracy_from_eer(double eer) {
  detail::require_unit(eer, "EER");
  return 1.0 - eer;
}

/// Chance that an impostor succeeds within n attempts, each with success p.
/// Accumulated as FAR_k = FAR_{k-1} + (1 - FAR_{k-1}) p.
inline double multi_attempt_far(double p, std::uint64_t n) {
  detail::require_unit(p, "p");
  if (n == 0) throw Error(ErrorCode::OutOfRange, "attempt count must be at least 1");
  double far = p;
  for (std::uint64_t k = 1; k < n; ++k) far = far + (1.0 - far) * p;
  return far;
}

/// Chance that a genuine user is rejected on all n attempts: q^n.
inline double multi_attempt_frr(double q, std::uint64_t n) {
  detail::require_unit(q, "q");
  if (n == 0) throw Error(ErrorCode::OutOfRange, "attempt count must be at least 1");
  double frr = q;
  for (std::uint64_t k = 1; k < n; ++k) frr *= q;
  return frr;
}

inline constexpr double kEn50133MaxFar = 0.00001;  // 0.001 %
inline constexpr double kEn50133MaxFrr = 0.01;     // 1 %

struct En50133Result {
  bool far_ok = false;
  bool frr_ok = false;

  bool operator==(const En50133Result&) const = default;
};

inline En50133Result en50133_check(double far, double frr) {
  detail::require_unit(far, "FAR");
  detail::require_unit(frr, "FRR");
  return {far <= kEn50133MaxFar, frr <= kEn50133MaxFrr};
}

struct RateReport {
  double far = 0.0;
  double frr = 0.0;
  double eer = 0.0;
  double threshold_at_eer = 0.0;
  bool en50133_far_ok = false;
  bool en50133_frr_ok = false;
  std::vector<DetPoint> det_curve;
};

/// FAR/FRR are reported at the EER operating point.
inline RateReport rate_report(const ScoreSet& scores) {
  RateReport r;
  r.det_curve = sweep_rates(scores);
  const auto e = eer_from_curve(r.det_curve);
  r.far = e.far;
  r.frr = e.frr;
  r.eer = e.eer;
  r.threshold_at_eer = e.threshold;
  const auto ok = en50133_check(r.far, r.frr);
  r.en50133_far_ok = ok.far_ok;
  r.en50133_frr_ok = ok.frr_ok;
  return r;
}

/// Three whitespace-separated columns per line: threshold far frr.
inline void write_det_curve(std::ostream& os, const std::vector<DetPoint>& curve) {
  const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& p : curve) os << p.threshold << ' ' << p.far << ' ' << p.frr << '\n';
  os.precision(old_precision);
}

}  // namespace keydyn
