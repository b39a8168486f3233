#pragma once

// Dataset cleaning, feature scaling and the distance functions used by the
// distance-based classifiers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "keydyn/core.hpp"
#include "keydyn/error.hpp"
#include "keydyn/features.hpp"

namespace keydyn {

inline constexpr double kDefaultMaxHoldMs = 1000.0;
inline constexpr double kDefaultMaxGapMs = 3000.0;

/// Keeps the first occurrence of each (user_id, sample_id) and collapses samples
/// of the same user whose event lists are identical.
inline Dataset remove_duplicates(const Dataset& dataset) {
  Dataset out;
  out.expected_text = dataset.expected_text;
  std::set<std::pair<std::string, std::string>> ids;
  std::map<std::string, std::vector<const KeystrokeSample*>> kept_by_user;
  for (const auto& s : dataset.samples) {
    if (ids.count({s.user_id, s.sample_id}) != 0) continue;
    auto& kept = kept_by_user[s.user_id];
    const bool same_events = std::any_of(kept.begin(), kept.end(),
                                         [&](const KeystrokeSample* k) { return k->events == s.events; });
    if (same_events) continue;
    ids.emplace(s.user_id, s.sample_id);
    kept.push_back(&s);
    out.samples.push_back(s);
  }
  return out;
}

/// Drops samples with any hold longer than `max_du1_ms` or any press-to-press
/// gap longer than `max_gap_ms`.
inline Dataset filter_by_threshold(const Dataset& dataset, double max_du1_ms = kDefaultMaxHoldMs,
                                   double max_gap_ms = kDefaultMaxGapMs) {
  if (!(max_du1_ms > 0.0) || !(max_gap_ms > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "filter thresholds must be positive");
  }
  Dataset out;
  out.expected_text = dataset.expected_text;
  for (const auto& s : dataset.samples) {
    const auto t = timing_features(s);
    const bool long_hold = std::any_of(t.du1.begin(), t.du1.end(), [&](double v) { return v > max_du1_ms; });
    const bool long_gap = std::any_of(t.dd.begin(), t.dd.end(), [&](double v) { return v > max_gap_ms; });
    if (!long_hold && !long_gap) out.samples.push_back(s);
  }
  return out;
}

enum class ScalerKind { NONE, MINMAX, STANDARD };

constexpr std::string_view to_string(ScalerKind k) {
  switch (k) {
    case ScalerKind::NONE: return "none";
    case ScalerKind::MINMAX: return "minmax";
    case ScalerKind::STANDARD: return "standard";
  }
  return "?";
}

inline ScalerKind scaler_kind_from_string(std::string_view s) {
  if (s == "none") return ScalerKind::NONE;
  if (s == "minmax") return ScalerKind::MINMAX;
  if (s == "standard") return ScalerKind::STANDARD;
  throw Error(ErrorCode::ConfigError, "unknown scaler '" + std::string(s) + "'");
}

/// Per-feature statistics. MINMAX uses min/max, STANDARD uses mean/stddev
/// (population). A feature with no data or zero spread is degenerate.
struct FeatureStat {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  bool degenerate = true;

  bool operator==(const FeatureStat&) const = default;
};

struct ScalerParams {
  ScalerKind kind = ScalerKind::NONE;
  std::string layout_id;
  std::vector<FeatureStat> stats;

  bool operator==(const ScalerParams&) const = default;
};

namespace detail {

inline void require_same_layout(const FeatureVector& a, const FeatureVector& b) {
  if (a.layout_id != b.layout_id || a.size() != b.size()) {
    throw Error(ErrorCode::LayoutMismatch, "'" + a.layout_id + "' vs '" + b.layout_id + "'");
  }
}

inline void require_shared_layout(std::span<const FeatureVector> vectors) {
  if (vectors.empty()) throw Error(ErrorCode::EmptyInput, "no vectors");
  for (const auto& v : vectors) require_same_layout(vectors.front(), v);
}

}  // namespace detail

inline ScalerParams fit_scaler(std::span<const FeatureVector> vectors, ScalerKind kind) {
  detail::require_shared_layout(vectors);
  const std::size_t dim = vectors.front().size();
  ScalerParams p{kind, vectors.front().layout_id, std::vector<FeatureStat>(dim)};

  for (std::size_t f = 0; f < dim; ++f) {
    auto& st = p.stats[f];
    std::size_t n = 0;
    double sum = 0.0;
    for (const auto& v : vectors) {
      if (!v.available[f]) continue;
      const double x = v.values[f];
      st.min = n == 0 ? x : std::min(st.min, x);
      st.max = n == 0 ? x : std::max(st.max, x);
      sum += x;
      ++n;
    }
    if (n == 0) continue;
    st.mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& v : vectors) {
      if (!v.available[f]) continue;
      const double d = v.values[f] - st.mean;
      ss += d * d;
    }
    st.stddev = std::sqrt(ss / static_cast<double>(n));
    switch (kind) {
      case ScalerKind::MINMAX: st.degenerate = !(st.max > st.min); break;
      case ScalerKind::STANDARD: st.degenerate = !(st.stddev > 0.0); break;
      case ScalerKind::NONE: st.degenerate = false; break;
    }
  }
  return p;
}

/// Degenerate features map to 0; MINMAX output is clamped to [0, 1].
/// Unavailable entries stay unavailable.
inline FeatureVector apply_scaler(const FeatureVector& vector, const ScalerParams& params) {
  if (vector.layout_id != params.layout_id || vector.size() != params.stats.size()) {
    throw Error(ErrorCode::LayoutMismatch, "'" + vector.layout_id + "' vs scaler '" + params.layout_id + "'");
  }
  FeatureVector out = vector;
  if (params.kind == ScalerKind::NONE) return out;
  for (std::size_t f = 0; f < out.size(); ++f) {
    if (!out.available[f]) continue;
    const auto& st = params.stats[f];
    double& v = out.values[f];
    if (st.degenerate) {
      v = 0.0;
    } else if (params.kind == ScalerKind::MINMAX) {
      v = std::clamp((v - st.min) / (st.max - st.min), 0.0, 1.0);
    } else {
      v = (v - st.mean) / st.stddev;
    }
  }
  return out;
}

inline std::vector<FeatureVector> apply_scaler(std::span<const FeatureVector> vectors, const ScalerParams& params) {
  std::vector<FeatureVector> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) out.push_back(apply_scaler(v, params));
  return out;
}

namespace detail {

template <typename Accumulate>
double shared_reduce(const FeatureVector& a, const FeatureVector& b, Accumulate acc) {
  require_same_layout(a, b);
  double total = 0.0;
  std::size_t shared = 0;
  for (std::size_t f = 0; f < a.size(); ++f) {
    if (!a.available[f] || !b.available[f]) continue;
    total += acc(a.values[f] - b.values[f]);
    ++shared;
  }
  if (shared == 0) throw Error(ErrorCode::NoSharedFeatures, "vectors share no available entries");
  return total;
}

}  // namespace detail

/// L1 distance over entries available in both vectors.
inline double manhattan_distance(const FeatureVector& a, const FeatureVector& b) {
  return detail::shared_reduce(a, b, [](double d) { return std::abs(d); });
}

inline double squared_euclidean_distance(const FeatureVector& a, const FeatureVector& b) {
  return detail::shared_reduce(a, b, [](double d) { return d * d; });
}

inline double euclidean_distance(const FeatureVector& a, const FeatureVector& b) {
  return std::sqrt(squared_euclidean_distance(a, b));
}

}  // namespace keydyn
