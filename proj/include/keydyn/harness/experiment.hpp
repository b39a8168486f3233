#pragma once

// Per-user verification experiments: preprocess, extract, train, score the
// genuine and impostor test sets, sweep thresholds and aggregate.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "keydyn/classifiers.hpp"
#include "keydyn/core.hpp"
#include "keydyn/error.hpp"
#include "keydyn/features.hpp"
#include "keydyn/metrics.hpp"
#include "keydyn/preprocess.hpp"
#include "keydyn/template.hpp"

namespace keydyn::harness {

enum class ThresholdPolicy { GLOBAL, PER_USER };

constexpr std::string_view to_string(ThresholdPolicy p) { return p == ThresholdPolicy::GLOBAL ? "global" : "per_user"; }

inline ThresholdPolicy threshold_policy_from_string(std::string_view s) {
  if (s == "global") return ThresholdPolicy::GLOBAL;
  if (s == "per_user") return ThresholdPolicy::PER_USER;
  throw Error(ErrorCode::ConfigError, "unknown threshold policy '" + std::string(s) + "'");
}

struct ExperimentConfig {
  ClassifierKind classifier = ClassifierKind::DVC;
  std::string layout = "concept3";     // concept1 | concept2 | concept3
  std::optional<ScalerKind> scaler;    // default depends on classifier
  ThresholdPolicy threshold_policy = ThresholdPolicy::PER_USER;
  double split_ratio = 0.7;
  std::uint64_t seed = 42;
  bool dedup = true;
  double max_hold_ms = kDefaultMaxHoldMs;
  double max_gap_ms = kDefaultMaxGapMs;
  double mvp_band = kDefaultMvpBand;
  double svm_c = kDefaultSvmC;
  std::optional<double> svm_gamma;

  ScalerKind effective_scaler() const {
    if (scaler) return *scaler;
    return classifier == ClassifierKind::MVP ? ScalerKind::MINMAX : ScalerKind::STANDARD;
  }

  void validate() const {
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw Error(ErrorCode::ConfigError, "split_ratio must lie in (0, 1)");
    if (layout != "concept1" && layout != "concept2" && layout != "concept3") {
      throw Error(ErrorCode::ConfigError, "unknown layout '" + layout + "'");
    }
    if (!(max_hold_ms > 0.0) || !(max_gap_ms > 0.0)) throw Error(ErrorCode::ConfigError, "caps must be positive");
    if (!(mvp_band > 0.0)) throw Error(ErrorCode::ConfigError, "mvp_band must be positive");
    if (!(svm_c > 0.0)) throw Error(ErrorCode::ConfigError, "svm_c must be positive");
    if (svm_gamma && !(*svm_gamma > 0.0)) throw Error(ErrorCode::ConfigError, "svm_gamma must be positive");
  }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j{{"classifier", to_string(c.classifier)},
                   {"layout", c.layout},
                   {"scaler", to_string(c.effective_scaler())},
                   {"threshold_policy", to_string(c.threshold_policy)},
                   {"split_ratio", c.split_ratio},
                   {"seed", c.seed},
                   {"dedup", c.dedup},
                   {"max_hold_ms", c.max_hold_ms},
                   {"max_gap_ms", c.max_gap_ms},
                   {"mvp_band", c.mvp_band},
                   {"svm_c", c.svm_c}};
  j["svm_gamma"] = c.svm_gamma ? nlohmann::json(*c.svm_gamma) : nlohmann::json(nullptr);
  return j;
}

/// Reads an ExperimentConfig from a JSON object. Unknown keys are rejected;
/// missing keys keep their defaults.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
  static const std::set<std::string> known = {"classifier", "layout",     "scaler",     "threshold_policy",
                                              "split_ratio", "seed",      "dedup",      "max_hold_ms",
                                              "max_gap_ms",  "mvp_band",  "svm_c",      "svm_gamma"};
  for (const auto& [key, _] : j.items()) {
    if (known.count(key) == 0) throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
  }
  ExperimentConfig c;
  try {
    if (j.contains("classifier")) c.classifier = classifier_kind_from_string(j.at("classifier").get<std::string>());
    if (j.contains("layout")) c.layout = j.at("layout").get<std::string>();
    if (j.contains("scaler")) c.scaler = scaler_kind_from_string(j.at("scaler").get<std::string>());
    if (j.contains("threshold_policy")) {
      c.threshold_policy = threshold_policy_from_string(j.at("threshold_policy").get<std::string>());
    }
    if (j.contains("split_ratio")) c.split_ratio = j.at("split_ratio").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("dedup")) c.dedup = j.at("dedup").get<bool>();
    if (j.contains("max_hold_ms")) c.max_hold_ms = j.at("max_hold_ms").get<double>();
    if (j.contains("max_gap_ms")) c.max_gap_ms = j.at("max_gap_ms").get<double>();
    if (j.contains("mvp_band")) c.mvp_band = j.at("mvp_band").get<double>();
    if (j.contains("svm_c")) c.svm_c = j.at("svm_c").get<double>();
    if (j.contains("svm_gamma") && !j.at("svm_gamma").is_null()) c.svm_gamma = j.at("svm_gamma").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  c.validate();
  return c;
}

/// Key sequence long enough for the named layout.
inline std::vector<std::string> default_text(std::string_view layout) {
  if (layout == "concept1") {
    return {".", "t", "i", "e", "5", "shift", "R", "o", "a", "n", "l", "enter", "7", "6", "6", "4"};
  }
  if (layout == "concept3") return {"7", "6", "6", "4", "2", "0", "enter"};
  return {".", "t", "i", "e", "5", "shift", "R", "o", "a", "n", "l"};
}

/// Resolves a layout name against a dataset. concept2 is sized to the shortest
/// sample so every sample can populate it.
inline FeatureLayout resolve_layout(std::string_view name, const Dataset& dataset) {
  if (name == "concept1") return concept1_layout();
  if (name == "concept3") return concept3_layout();
  if (name == "concept2") {
    std::size_t x = 0;
    for (const auto& s : dataset.samples) x = x == 0 ? s.size() : std::min(x, s.size());
    if (x == 0) throw Error(ErrorCode::EmptyInput, "cannot size concept2 layout on an empty dataset");
    return concept2_layout(x);
  }
  throw Error(ErrorCode::ConfigError, "unknown layout '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Partitioning

/// Compares identifiers so that embedded digit runs order numerically
/// ("s2" < "s10").
inline bool natural_less(std::string_view a, std::string_view b) {
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i])) != 0;
    const bool db = std::isdigit(static_cast<unsigned char>(b[j])) != 0;
    if (da && db) {
      std::size_t ie = i;
      std::size_t je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      auto na = a.substr(i, ie - i);
      auto nb = b.substr(j, je - j);
      while (na.size() > 1 && na.front() == '0') na.remove_prefix(1);
      while (nb.size() > 1 && nb.front() == '0') nb.remove_prefix(1);
      if (na.size() != nb.size()) return na.size() < nb.size();
      if (na != nb) return na < nb;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  if ((a.size() - i) != (b.size() - j)) return (a.size() - i) < (b.size() - j);
  return a < b;
}

/// Indices of one user's samples in chronological (sample_id) order.
inline std::vector<std::size_t> user_sample_indices(const Dataset& dataset, std::string_view user) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    if (dataset.samples[i].user_id == user) idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t l, std::size_t r) {
    return natural_less(dataset.samples[l].sample_id, dataset.samples[r].sample_id);
  });
  return idx;
}

/// Users in order of first appearance.
inline std::vector<std::string> users_of(const Dataset& dataset) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& s : dataset.samples) {
    if (seen.insert(s.user_id).second) out.push_back(s.user_id);
  }
  return out;
}

/// Number of enrollment samples for n samples: floor(ratio * n), kept within
/// [1, n - 1] so both partitions are non-empty.
inline std::size_t train_count(std::size_t n, double ratio) {
  auto k = static_cast<std::size_t>(ratio * static_cast<double>(n) + 1e-9);
  return std::clamp<std::size_t>(k, 1, n - 1);
}

struct IndexSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

inline IndexSplit chronological_split(const Dataset& dataset, std::string_view user, double ratio) {
  const auto idx = user_sample_indices(dataset, user);
  if (idx.size() < 2) {
    throw Error(ErrorCode::InsufficientSamples, "user '" + std::string(user) + "' has fewer than 2 samples");
  }
  const auto k = static_cast<std::ptrdiff_t>(train_count(idx.size(), ratio));
  return {{idx.begin(), idx.begin() + k}, {idx.begin() + k, idx.end()}};
}

struct SampleSplit {
  std::vector<KeystrokeSample> train;
  std::vector<KeystrokeSample> genuine_test;
  std::vector<KeystrokeSample> impostor_test;
  bool no_impostors = false;
};

/// Target user's samples split chronologically into enrollment and genuine
/// test; every other user's sample is an impostor probe.
inline SampleSplit split_genuine_impostor(const Dataset& dataset, std::string_view target_user,
                                          const ExperimentConfig& config) {
  const auto split = chronological_split(dataset, target_user, config.split_ratio);
  SampleSplit out;
  for (auto i : split.train) out.train.push_back(dataset.samples[i]);
  for (auto i : split.test) out.genuine_test.push_back(dataset.samples[i]);
  for (const auto& s : dataset.samples) {
    if (s.user_id != target_user) out.impostor_test.push_back(s);
  }
  out.no_impostors = out.impostor_test.empty();
  return out;
}

// ---------------------------------------------------------------------------
// Experiment

enum class UserStatus { EVALUATED, FAILED_ENROLLMENT, NO_IMPOSTORS, NO_GENUINE_TEST };

constexpr std::string_view to_string(UserStatus s) {
  switch (s) {
    case UserStatus::EVALUATED: return "evaluated";
    case UserStatus::FAILED_ENROLLMENT: return "failed_enrollment";
    case UserStatus::NO_IMPOSTORS: return "no_impostors";
    case UserStatus::NO_GENUINE_TEST: return "no_genuine_test";
  }
  return "?";
}

struct UserResult {
  std::string user_id;
  UserStatus status = UserStatus::EVALUATED;
  std::string note;
  std::size_t train_count = 0;
  std::size_t genuine_count = 0;
  std::size_t impostor_count = 0;
  std::size_t failed_acquisitions = 0;
  ScoreSet scores;
  std::optional<RateReport> rates;
  // FAR/FRR at the threshold selected by the configured policy.
  double threshold = 0.0;
  double far = 0.0;
  double frr = 0.0;
};

struct AggregateResult {
  std::size_t potential_users = 0;
  std::size_t enrolled_users = 0;
  std::size_t evaluated_users = 0;
  std::size_t failed_enrollments = 0;
  std::size_t users_with_failed_acquisition = 0;
  double fer = 0.0;
  double enrolled_fraction = 0.0;
  double fta = 0.0;
  std::optional<double> mean_eer;
  std::optional<double> accuracy;
  std::optional<double> mean_far;
  std::optional<double> mean_frr;
  bool en50133_far_ok = false;
  bool en50133_frr_ok = false;
  std::optional<double> pooled_eer;
  std::optional<double> pooled_threshold;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::string layout_id;
  std::size_t feature_count = 0;
  std::size_t rejected_samples = 0;  // removed by dedup / threshold filtering
  std::vector<UserResult> users;
  AggregateResult aggregate;
};

namespace detail {

inline std::vector<FeatureVector> collect(const std::vector<std::optional<FeatureVector>>& cache,
                                          const std::vector<std::size_t>& idx, std::size_t* failures = nullptr) {
  std::vector<FeatureVector> out;
  for (auto i : idx) {
    if (cache[i]) out.push_back(*cache[i]);
    else if (failures) ++*failures;
  }
  return out;
}

inline TemplateModel train_model(const ExperimentConfig& cfg, const std::vector<FeatureVector>& positives,
                                 const std::vector<FeatureVector>& negatives) {
  switch (cfg.classifier) {
    case ClassifierKind::MVP: return train_mvp(positives, cfg.mvp_band);
    case ClassifierKind::DVC: return train_dvc(positives);
    case ClassifierKind::SVM: {
      SvmOptions opt;
      opt.c = cfg.svm_c;
      opt.gamma = cfg.svm_gamma;
      return train_svm(positives, negatives, opt);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown classifier");
}

inline std::vector<double> score_all(const TemplateModel& model, const ScalerParams& scaler,
                                     const std::vector<FeatureVector>& probes) {
  std::vector<double> out;
  out.reserve(probes.size());
  for (const auto& p : probes) out.push_back(score_model(model, apply_scaler(p, scaler)));
  return out;
}

}  // namespace detail

/// Runs one experiment over every user in the dataset. Per-user failures are
/// recorded (FER / FTA) rather than aborting the run.
inline ExperimentReport run_experiment(const Dataset& input, const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;
  report.config = config;

  Dataset data = config.dedup ? remove_duplicates(input) : input;
  data = filter_by_threshold(data, config.max_hold_ms, config.max_gap_ms);
  report.rejected_samples = input.samples.size() - data.samples.size();
  if (data.samples.empty()) throw Error(ErrorCode::EmptyInput, "no samples left after preprocessing");

  const auto layout = resolve_layout(config.layout, data);
  report.layout_id = layout.id();
  report.feature_count = layout.size();
  const auto scaler_kind = config.effective_scaler();

  std::vector<std::optional<FeatureVector>> cache(data.samples.size());
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    try {
      cache[i] = build_vector(data.samples[i], layout);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SampleTooShort) throw;
    }
  }

  const auto users = users_of(data);
  std::map<std::string, IndexSplit> splits;
  for (const auto& u : users) {
    auto idx = user_sample_indices(data, u);
    if (idx.size() < 2) continue;
    splits[u] = chronological_split(data, u, config.split_ratio);
  }

  ScoreSet pooled;
  for (const auto& user : users) {
    UserResult r;
    r.user_id = user;
    const auto split_it = splits.find(user);
    if (split_it == splits.end()) {
      r.status = UserStatus::FAILED_ENROLLMENT;
      r.note = "fewer than 2 samples";
      report.users.push_back(std::move(r));
      continue;
    }
    const auto& own = split_it->second;

    std::vector<std::size_t> negative_idx;
    std::vector<std::size_t> impostor_idx;
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
      if (data.samples[i].user_id != user) impostor_idx.push_back(i);
    }
    if (config.classifier == ClassifierKind::SVM) {
      // Other users' enrollment partitions train the negative class, so only
      // their held-out partitions may be used as impostor probes.
      impostor_idx.clear();
      for (const auto& [other, split] : splits) {
        if (other == user) continue;
        negative_idx.insert(negative_idx.end(), split.train.begin(), split.train.end());
        impostor_idx.insert(impostor_idx.end(), split.test.begin(), split.test.end());
      }
      std::sort(negative_idx.begin(), negative_idx.end());
      std::sort(impostor_idx.begin(), impostor_idx.end());
    }

    const auto train = detail::collect(cache, own.train);
    const auto negatives = detail::collect(cache, negative_idx);
    const auto genuine = detail::collect(cache, own.test, &r.failed_acquisitions);
    const auto impostor = detail::collect(cache, impostor_idx);
    r.train_count = train.size();
    r.genuine_count = genuine.size();
    r.impostor_count = impostor.size();

    if (train.empty() || (config.classifier == ClassifierKind::SVM && negatives.empty())) {
      r.status = UserStatus::FAILED_ENROLLMENT;
      r.note = train.empty() ? "no enrollment sample fits layout " + layout.id() : "no negative samples";
      report.users.push_back(std::move(r));
      continue;
    }

    TemplateModel model;
    ScalerParams scaler;
    try {
      std::vector<FeatureVector> fit_set = train;
      fit_set.insert(fit_set.end(), negatives.begin(), negatives.end());
      scaler = fit_scaler(fit_set, scaler_kind);
      model = detail::train_model(config, apply_scaler(train, scaler), apply_scaler(negatives, scaler));
    } catch (const Error& e) {
      r.status = UserStatus::FAILED_ENROLLMENT;
      r.note = e.what();
      report.users.push_back(std::move(r));
      continue;
    }

    r.scores.genuine = detail::score_all(model, scaler, genuine);
    r.scores.impostor = detail::score_all(model, scaler, impostor);
    if (genuine.empty()) {
      r.status = UserStatus::NO_GENUINE_TEST;
      r.note = "no genuine probe fits layout";
    } else if (impostor.empty()) {
      r.status = UserStatus::NO_IMPOSTORS;
      r.note = "no impostor probes";
    } else {
      r.rates = rate_report(r.scores);
      r.threshold = r.rates->threshold_at_eer;
      r.far = r.rates->far;
      r.frr = r.rates->frr;
      pooled.genuine.insert(pooled.genuine.end(), r.scores.genuine.begin(), r.scores.genuine.end());
      pooled.impostor.insert(pooled.impostor.end(), r.scores.impostor.begin(), r.scores.impostor.end());
    }
    report.users.push_back(std::move(r));
  }

  auto& agg = report.aggregate;
  agg.potential_users = report.users.size();
  for (const auto& r : report.users) {
    if (r.status == UserStatus::FAILED_ENROLLMENT) ++agg.failed_enrollments;
    else ++agg.enrolled_users;
    if (r.failed_acquisitions > 0) ++agg.users_with_failed_acquisition;
  }
  agg.fer = fer_rate(agg.failed_enrollments, agg.potential_users);
  agg.enrolled_fraction = static_cast<double>(agg.enrolled_users) / static_cast<double>(agg.potential_users);
  agg.fta = fta_rate(agg.users_with_failed_acquisition, agg.potential_users);

  if (!pooled.genuine.empty() && !pooled.impostor.empty()) {
    const auto e = eer_intersection(pooled);
    agg.pooled_eer = e.eer;
    agg.pooled_threshold = e.threshold;
    if (config.threshold_policy == ThresholdPolicy::GLOBAL) {
      for (auto& r : report.users) {
        if (!r.rates) continue;
        const auto p = rates_at(r.scores, e.threshold);
        r.threshold = p.threshold;
        r.far = p.far;
        r.frr = p.frr;
      }
    }
  }

  double eer_sum = 0.0;
  double far_sum = 0.0;
  double frr_sum = 0.0;
  for (const auto& r : report.users) {
    if (!r.rates) continue;
    ++agg.evaluated_users;
    eer_sum += r.rates->eer;
    far_sum += r.far;
    frr_sum += r.frr;
  }
  if (agg.evaluated_users > 0) {
    const double n = static_cast<double>(agg.evaluated_users);
    agg.mean_eer = eer_sum / n;
    agg.accuracy = accuracy_from_eer(*agg.mean_eer);
    agg.mean_far = far_sum / n;
    agg.mean_frr = frr_sum / n;
    const auto ok = en50133_check(*agg.mean_far, *agg.mean_frr);
    agg.en50133_far_ok = ok.far_ok;
    agg.en50133_frr_ok = ok.frr_ok;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentReport& report, bool include_curves = true) {
  nlohmann::json users = nlohmann::json::array();
  for (const auto& r : report.users) {
    nlohmann::json u{{"user_id", r.user_id},
                     {"status", to_string(r.status)},
                     {"train_count", r.train_count},
                     {"genuine_count", r.genuine_count},
                     {"impostor_count", r.impostor_count},
                     {"failed_acquisitions", r.failed_acquisitions}};
    if (!r.note.empty()) u["note"] = r.note;
    if (r.rates) {
      u["eer"] = r.rates->eer;
      u["threshold_at_eer"] = r.rates->threshold_at_eer;
      u["threshold"] = r.threshold;
      u["far"] = r.far;
      u["frr"] = r.frr;
      if (include_curves) {
        nlohmann::json curve = nlohmann::json::array();
        for (const auto& p : r.rates->det_curve) curve.push_back({p.threshold, p.far, p.frr});
        u["det_curve"] = std::move(curve);
      }
    }
    users.push_back(std::move(u));
  }
  const auto& a = report.aggregate;
  nlohmann::json aggregate{{"potential_users", a.potential_users},
                           {"enrolled_users", a.enrolled_users},
                           {"evaluated_users", a.evaluated_users},
                           {"failed_enrollments", a.failed_enrollments},
                           {"users_with_failed_acquisition", a.users_with_failed_acquisition},
                           {"fer", a.fer},
                           {"enrolled_fraction", a.enrolled_fraction},
                           {"fta", a.fta},
                           {"mean_eer", detail::optional_json(a.mean_eer)},
                           {"accuracy_from_eer", detail::optional_json(a.accuracy)},
                           {"mean_far", detail::optional_json(a.mean_far)},
                           {"mean_frr", detail::optional_json(a.mean_frr)},
                           {"en50133_far_ok", a.en50133_far_ok},
                           {"en50133_frr_ok", a.en50133_frr_ok},
                           {"pooled_eer", detail::optional_json(a.pooled_eer)},
                           {"pooled_threshold", detail::optional_json(a.pooled_threshold)}};
  return {{"format", "keydyn-experiment/1"},
          {"config", to_json(report.config)},
          {"seed", report.config.seed},
          {"layout_id", report.layout_id},
          {"feature_count", report.feature_count},
          {"rejected_samples", report.rejected_samples},
          {"users", std::move(users)},
          {"aggregate", std::move(aggregate)}};
}

}  // namespace keydyn::harness
