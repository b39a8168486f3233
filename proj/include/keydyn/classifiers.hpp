#pragma once

// Verification classifiers. Every scorer follows one polarity: lower score means
// more likely genuine, and `decide` accepts iff score <= threshold.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "keydyn/error.hpp"
#include "keydyn/features.hpp"
#include "keydyn/preprocess.hpp"

namespace keydyn {

enum class Decision { ACCEPT, REJECT };

constexpr std::string_view to_string(Decision d) { return d == Decision::ACCEPT ? "ACCEPT" : "REJECT"; }

inline Decision decide(double score, double threshold) {
  if (!std::isfinite(score) || !std::isfinite(threshold)) {
    throw Error(ErrorCode::InvalidArgument, "score and threshold must be finite");
  }
  return score <= threshold ? Decision::ACCEPT : Decision::REJECT;
}

enum class ClassifierKind { MVP, DVC, SVM };

constexpr std::string_view to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::MVP: return "mvp";
    case ClassifierKind::DVC: return "dvc";
    case ClassifierKind::SVM: return "svm";
  }
  return "?";
}

inline ClassifierKind classifier_kind_from_string(std::string_view s) {
  if (s == "mvp") return ClassifierKind::MVP;
  if (s == "dvc") return ClassifierKind::DVC;
  if (s == "svm") return ClassifierKind::SVM;
  throw Error(ErrorCode::ConfigError, "unknown classifier '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Median vector proximity

inline constexpr double kDefaultMvpBand = 1.5;
inline constexpr double kMvpEpsilon = 1e-6;

struct MedianProximityModel {
  std::string layout_id;
  std::vector<double> median;
  std::vector<double> spread;   // median absolute deviation
  std::vector<bool> available;  // feature had at least one training value
  double band = kDefaultMvpBand;
  bool degenerate = false;      // trained from a single vector; spread is 0

  bool operator==(const MedianProximityModel&) const = default;
};

namespace detail {

inline double median_inplace(std::vector<double>& v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return lower + (upper - lower) / 2.0;
}

}  // namespace detail

inline MedianProximityModel train_mvp(std::span<const FeatureVector> vectors, double band = kDefaultMvpBand) {
  detail::require_shared_layout(vectors);
  const std::size_t dim = vectors.front().size();
  MedianProximityModel m;
  m.layout_id = vectors.front().layout_id;
  m.median.assign(dim, 0.0);
  m.spread.assign(dim, 0.0);
  m.available.assign(dim, false);
  m.band = band;
  m.degenerate = vectors.size() < 2;

  std::vector<double> column;
  for (std::size_t f = 0; f < dim; ++f) {
    column.clear();
    for (const auto& v : vectors) {
      if (v.available[f]) column.push_back(v.values[f]);
    }
    if (column.empty()) continue;
    m.available[f] = true;
    const double med = detail::median_inplace(column);
    for (double& x : column) x = std::abs(x - med);
    m.median[f] = med;
    m.spread[f] = detail::median_inplace(column);
  }
  return m;
}

/// Fraction of shared features whose deviation from the median exceeds
/// band * (MAD + epsilon).
inline double score_mvp(const MedianProximityModel& model, const FeatureVector& probe) {
  if (probe.layout_id != model.layout_id || probe.size() != model.median.size()) {
    throw Error(ErrorCode::LayoutMismatch, "'" + probe.layout_id + "' vs model '" + model.layout_id + "'");
  }
  std::size_t shared = 0;
  std::size_t outside = 0;
  for (std::size_t f = 0; f < probe.size(); ++f) {
    if (!probe.available[f] || !model.available[f]) continue;
    ++shared;
    if (std::abs(probe.values[f] - model.median[f]) > model.band * (model.spread[f] + kMvpEpsilon)) ++outside;
  }
  if (shared == 0) throw Error(ErrorCode::NoSharedFeatures, "probe shares no features with the model");
  return static_cast<double>(outside) / static_cast<double>(shared);
}

// ---------------------------------------------------------------------------
// Distance vector classification

struct DistanceVectorModel {
  std::string layout_id;
  std::vector<double> centroid;
  std::vector<bool> available;

  bool operator==(const DistanceVectorModel&) const = default;

  FeatureVector as_vector() const { return {layout_id, centroid, available}; }
};

/// Centroid of already-standardized training vectors.
inline DistanceVectorModel train_dvc(std::span<const FeatureVector> vectors) {
  detail::require_shared_layout(vectors);
  const std::size_t dim = vectors.front().size();
  DistanceVectorModel m{vectors.front().layout_id, std::vector<double>(dim, 0.0), std::vector<bool>(dim, false)};
  for (std::size_t f = 0; f < dim; ++f) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& v : vectors) {
      if (!v.available[f]) continue;
      sum += v.values[f];
      ++n;
    }
    if (n == 0) continue;
    m.centroid[f] = sum / static_cast<double>(n);
    m.available[f] = true;
  }
  return m;
}

/// Manhattan distance from the centroid.
inline double score_dvc(const DistanceVectorModel& model, const FeatureVector& probe) {
  return manhattan_distance(model.as_vector(), probe);
}

// ---------------------------------------------------------------------------
// RBF-kernel SVM

inline constexpr double kDefaultSvmC = 10.0;
inline constexpr double kDefaultSvmTolerance = 1e-3;
inline constexpr std::size_t kDefaultSvmMaxIterations = 100000;

/// exp(-gamma * ||a - b||^2) over entries available in both vectors.
inline double rbf_kernel(const FeatureVector& a, const FeatureVector& b, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error(ErrorCode::InvalidArgument, "gamma must be positive");
  return std::exp(-gamma * squared_euclidean_distance(a, b));
}

struct RbfSvmModel {
  std::string layout_id;
  std::vector<FeatureVector> support_vectors;
  std::vector<double> dual_coefficients;  // alpha_i * y_i
  double bias = 0.0;
  double gamma = 1.0;
  double c = kDefaultSvmC;
  std::size_t iterations = 0;
  double kkt_residual = 0.0;

  bool operator==(const RbfSvmModel&) const = default;

  /// f(x) = sum_i coef_i K(sv_i, x) + bias; positive on the genuine side.
  double decision_value(const FeatureVector& x) const {
    if (x.layout_id != layout_id) {
      throw Error(ErrorCode::LayoutMismatch, "'" + x.layout_id + "' vs model '" + layout_id + "'");
    }
    double f = bias;
    for (std::size_t i = 0; i < support_vectors.size(); ++i) {
      f += dual_coefficients[i] * rbf_kernel(support_vectors[i], x, gamma);
    }
    return f;
  }
};

struct SvmOptions {
  double c = kDefaultSvmC;
  std::optional<double> gamma;  // default: 1 / number of available features
  double tolerance = kDefaultSvmTolerance;
  std::size_t max_iterations = kDefaultSvmMaxIterations;
  /// Called after every pair update with (iteration, dual objective).
  std::function<void(std::size_t, double)> on_iteration;
};

/// Number of feature columns with at least one available value.
inline std::size_t count_available_features(std::span<const FeatureVector> vectors) {
  if (vectors.empty()) return 0;
  std::size_t n = 0;
  for (std::size_t f = 0; f < vectors.front().size(); ++f) {
    if (std::any_of(vectors.begin(), vectors.end(), [&](const FeatureVector& v) { return v.available[f]; })) ++n;
  }
  return n;
}

/// Result of the dual solve on a fixed training set, kept separate from the
/// compact model so tests can inspect the full multiplier vector.
struct SvmSolution {
  std::vector<double> alpha;
  std::vector<double> labels;  // +1 genuine, -1 other
  double bias = 0.0;
  double gamma = 1.0;
  std::size_t iterations = 0;
  double kkt_residual = 0.0;
  double objective = 0.0;  // dual objective sum(alpha) - 1/2 a'Qa
};

/// Solves the soft-margin dual with sequential pairwise updates (maximal
/// violating pair, second-order selection). Stops when the KKT gap m - M falls
/// below `tolerance`.
inline SvmSolution solve_svm_dual(std::span<const FeatureVector> points, std::span<const double> labels,
                                  const SvmOptions& options) {
  const std::size_t n = points.size();
  if (!(options.c > 0.0)) throw Error(ErrorCode::InvalidArgument, "C must be positive");
  detail::require_shared_layout(points);

  SvmSolution sol;
  sol.labels.assign(labels.begin(), labels.end());
  sol.gamma = options.gamma.value_or(0.0);
  if (!options.gamma) {
    const std::size_t nf = count_available_features(points);
    sol.gamma = 1.0 / static_cast<double>(std::max<std::size_t>(nf, 1));
  }
  if (!(sol.gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be positive");

  const auto& y = sol.labels;
  std::vector<double> q(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double k = rbf_kernel(points[i], points[j], sol.gamma);
      q[i * n + j] = q[j * n + i] = y[i] * y[j] * k;
    }
  }
  auto Q = [&](std::size_t i, std::size_t j) { return q[i * n + j]; };

  const double c = options.c;
  constexpr double kTau = 1e-12;
  auto& alpha = sol.alpha;
  alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);  // gradient of 1/2 a'Qa - e'a

  auto objective = [&] {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) f += alpha[i] * (grad[i] - 1.0);
    return -0.5 * f;
  };
  auto upper_bound = [&](std::size_t t) { return alpha[t] >= c; };
  auto lower_bound = [&](std::size_t t) { return alpha[t] <= 0.0; };

  std::size_t iter = 0;
  double gap = 0.0;
  while (true) {
    // i: maximal violator in I_up.
    double gmax = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t ii = -1;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] > 0) {
        if (!upper_bound(t) && -grad[t] >= gmax) {
          gmax = -grad[t];
          ii = static_cast<std::ptrdiff_t>(t);
        }
      } else if (!lower_bound(t) && grad[t] >= gmax) {
        gmax = grad[t];
        ii = static_cast<std::ptrdiff_t>(t);
      }
    }
    // j: second-order choice in I_low.
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    std::ptrdiff_t jj = -1;
    for (std::size_t t = 0; t < n; ++t) {
      const bool in_low = y[t] > 0 ? !lower_bound(t) : !upper_bound(t);
      if (!in_low) continue;
      const double viol = y[t] > 0 ? grad[t] : -grad[t];
      gmax2 = std::max(gmax2, viol);
      if (ii < 0) continue;
      const auto i = static_cast<std::size_t>(ii);
      const double grad_diff = gmax + viol;
      if (grad_diff <= 0.0) continue;
      // y_i y_t Q(i,t) = K_it
      double quad = Q(i, i) + Q(t, t) - 2.0 * y[i] * y[t] * Q(i, t);
      if (quad <= 0.0) quad = kTau;
      const double obj_diff = -(grad_diff * grad_diff) / quad;
      if (obj_diff <= best) {
        best = obj_diff;
        jj = static_cast<std::ptrdiff_t>(t);
      }
    }
    gap = gmax + gmax2;
    if (ii < 0 || jj < 0 || gap < options.tolerance) break;
    if (iter >= options.max_iterations) {
      throw Error(ErrorCode::NonConvergence,
                  "no convergence after " + std::to_string(iter) + " iterations (gap " + std::to_string(gap) + ")");
    }

    const auto i = static_cast<std::size_t>(ii);
    const auto j = static_cast<std::size_t>(jj);
    const double old_ai = alpha[i];
    const double old_aj = alpha[j];
    if (y[i] != y[j]) {
      double quad = Q(i, i) + Q(j, j) + 2.0 * Q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = Q(i, i) + Q(j, j) - 2.0 * Q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) grad[t] += Q(i, t) * dai + Q(j, t) * daj;
    ++iter;
    if (options.on_iteration) options.on_iteration(iter, objective());
  }

  // Bias from free multipliers, else midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (upper_bound(t)) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (lower_bound(t)) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  sol.bias = -rho;
  sol.iterations = iter;
  sol.kkt_residual = std::max(gap, 0.0);
  sol.objective = objective();
  return sol;
}

/// One-vs-rest training: positives are the genuine user, negatives everyone else.
inline RbfSvmModel train_svm(std::span<const FeatureVector> positives, std::span<const FeatureVector> negatives,
                             const SvmOptions& options = {}) {
  if (positives.empty() || negatives.empty()) throw Error(ErrorCode::EmptyClass, "both classes must be non-empty");
  std::vector<FeatureVector> points(positives.begin(), positives.end());
  points.insert(points.end(), negatives.begin(), negatives.end());
  std::vector<double> labels(positives.size(), 1.0);
  labels.resize(points.size(), -1.0);

  const auto sol = solve_svm_dual(points, labels, options);

  RbfSvmModel m;
  m.layout_id = points.front().layout_id;
  m.bias = sol.bias;
  m.gamma = sol.gamma;
  m.c = options.c;
  m.iterations = sol.iterations;
  m.kkt_residual = sol.kkt_residual;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (sol.alpha[i] > 0.0) {
      m.support_vectors.push_back(points[i]);
      m.dual_coefficients.push_back(sol.alpha[i] * labels[i]);
    }
  }
  return m;
}

/// Returns -f(probe) so that lower means genuine.
inline double score_svm(const RbfSvmModel& model, const FeatureVector& probe) {
  return -model.decision_value(probe);
}

}  // namespace keydyn
