#pragma once

// Enroll / verify logic behind the HTTP API.
//
// Records are immutable snapshots (shared_ptr<const>); a mutation copies the
// record, edits the copy and swaps it in. Writers serialize per user_id, and
// readers only hold the map lock long enough to copy a pointer.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "keydyn/classifiers.hpp"
#include "keydyn/core.hpp"
#include "keydyn/error.hpp"
#include "keydyn/features.hpp"
#include "keydyn/harness/synthetic.hpp"
#include "keydyn/metrics.hpp"
#include "keydyn/preprocess.hpp"
#include "keydyn/service/store.hpp"
#include "keydyn/template.hpp"

namespace keydyn::service {

struct ServiceConfig {
  ClassifierKind classifier = ClassifierKind::DVC;
  std::string layout = "concept2";  // concept1 | concept2 | concept3
  std::size_t min_samples = kDefaultMinSamples;
  double mvp_band = kDefaultMvpBand;
  double svm_c = kDefaultSvmC;
  std::optional<double> svm_gamma;
  std::size_t impostor_pool_size = 60;
  std::uint64_t impostor_seed = 20240601;
  std::filesystem::path store_path;  // empty: in-memory
};

struct EnrollStatus {
  std::string user_id;
  std::size_t samples = 0;
  std::size_t min_samples = 0;
  bool trained = false;
};

struct VerifyResult {
  Decision decision = Decision::REJECT;
  double score = 0.0;
};

struct UserSummary {
  std::string user_id;
  bool trained = false;
  std::size_t samples = 0;
};

/// Typists the threshold sweep uses as impostors. Spread over the plausible
/// range of hold and flight times.
inline std::vector<harness::SyntheticProfile> impostor_population(const std::vector<std::string>& text) {
  std::vector<harness::SyntheticProfile> out;
  std::size_t n = 0;
  for (double hold : {60.0, 90.0, 120.0, 160.0, 220.0}) {
    for (double flight : {40.0, 110.0, 200.0, 320.0}) {
      harness::SyntheticProfile p;
      p.user_id = "impostor" + std::to_string(n++);
      p.hold_mean = hold;
      p.hold_std = 0.15 * hold;
      p.flight_mean = flight;
      p.flight_std = 0.25 * flight;
      p.text = text;
      out.push_back(std::move(p));
    }
  }
  return out;
}

namespace detail {

inline FeatureLayout service_layout(const ServiceConfig& cfg, const std::vector<KeystrokeSample>& samples) {
  if (cfg.layout == "concept1") return concept1_layout();
  if (cfg.layout == "concept3") return concept3_layout();
  if (cfg.layout == "concept2") {
    std::size_t x = samples.front().size();
    for (const auto& s : samples) x = std::min(x, s.size());
    return concept2_layout(x);
  }
  throw Error(ErrorCode::ConfigError, "unknown layout '" + cfg.layout + "'");
}

/// Synthetic impostor samples typed on the same keys, with sensor readings
/// stripped where the enrolled samples lack them.
inline std::vector<KeystrokeSample> impostor_pool(const KeystrokeSample& like, std::size_t count, std::uint64_t seed) {
  std::vector<std::string> text;
  for (const auto& e : like.events) text.push_back(e.key_label);
  const auto profiles = impostor_population(text);
  const std::size_t per_profile = std::max<std::size_t>(1, (count + profiles.size() - 1) / profiles.size());
  auto data = harness::generate_synthetic(profiles, per_profile, seed);
  const auto& ref = like.events.front();
  for (auto& s : data.samples) {
    for (auto& e : s.events) {
      if (!ref.pressure) e.pressure.reset();
      if (!ref.size) e.size.reset();
      if (!ref.x) e.x.reset();
      if (!ref.y) e.y.reset();
    }
  }
  if (data.samples.size() > count) data.samples.resize(count);
  return std::move(data.samples);
}

inline std::vector<FeatureVector> vectors_of(const std::vector<KeystrokeSample>& samples, const FeatureLayout& layout) {
  std::vector<FeatureVector> out;
  for (const auto& s : samples) {
    try {
      out.push_back(build_vector(s, layout));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SampleTooShort) throw;
    }
  }
  return out;
}

struct Fitted {
  TemplateModel model;
  ScalerParams scaler;
};

inline Fitted fit(const ServiceConfig& cfg, const std::vector<FeatureVector>& genuine,
                  const std::vector<FeatureVector>& negatives) {
  std::vector<FeatureVector> fit_set = genuine;
  if (cfg.classifier == ClassifierKind::SVM) fit_set.insert(fit_set.end(), negatives.begin(), negatives.end());
  const auto kind = cfg.classifier == ClassifierKind::MVP ? ScalerKind::MINMAX : ScalerKind::STANDARD;
  Fitted f{{}, fit_scaler(fit_set, kind)};
  const auto scaled = apply_scaler(genuine, f.scaler);
  switch (cfg.classifier) {
    case ClassifierKind::MVP: f.model = train_mvp(scaled, cfg.mvp_band); break;
    case ClassifierKind::DVC: f.model = train_dvc(scaled); break;
    case ClassifierKind::SVM: {
      SvmOptions opt;
      opt.c = cfg.svm_c;
      opt.gamma = cfg.svm_gamma;
      f.model = train_svm(scaled, apply_scaler(negatives, f.scaler), opt);
      break;
    }
  }
  return f;
}

}  // namespace detail

/// Builds a template from enrollment samples. The threshold is the EER
/// operating point of leave-one-out genuine scores against a synthetic
/// impostor pool.
inline UserTemplate train_template(const std::string& user_id, const std::vector<KeystrokeSample>& samples,
                                   const ServiceConfig& cfg) {
  if (samples.empty()) throw Error(ErrorCode::TrainingFailed, "no samples");
  const auto layout = detail::service_layout(cfg, samples);
  const auto genuine = detail::vectors_of(samples, layout);
  if (genuine.size() < 2) {
    throw Error(ErrorCode::TrainingFailed,
                "fewer than 2 samples fit layout " + layout.id() + " (needs " + std::to_string(layout.min_events()) +
                    " keys)");
  }
  const auto& shortest = *std::min_element(samples.begin(), samples.end(), [](const auto& a, const auto& b) {
    return a.size() < b.size();
  });
  const auto negatives =
      cfg.classifier == ClassifierKind::SVM
          ? detail::vectors_of(detail::impostor_pool(shortest, cfg.impostor_pool_size, cfg.impostor_seed), layout)
          : std::vector<FeatureVector>{};
  const auto probes =
      detail::vectors_of(detail::impostor_pool(shortest, cfg.impostor_pool_size, cfg.impostor_seed + 1), layout);

  try {
    const auto full = detail::fit(cfg, genuine, negatives);
    ScoreSet scores;
    for (std::size_t i = 0; i < genuine.size(); ++i) {
      std::vector<FeatureVector> rest;
      for (std::size_t k = 0; k < genuine.size(); ++k) {
        if (k != i) rest.push_back(genuine[k]);
      }
      const auto loo = detail::fit(cfg, rest, negatives);
      scores.genuine.push_back(score_model(loo.model, apply_scaler(genuine[i], loo.scaler)));
    }
    for (const auto& p : probes) scores.impostor.push_back(score_model(full.model, apply_scaler(p, full.scaler)));
    const auto eer = eer_intersection(scores);
    return {user_id, layout.id(), full.model, full.scaler, eer.threshold};
  } catch (const Error& e) {
    if (e.code() == ErrorCode::TrainingFailed) throw;
    throw Error(ErrorCode::TrainingFailed, e.what());
  }
}

class VerificationService {
 public:
  using Clock = std::function<std::int64_t()>;

  explicit VerificationService(ServiceConfig config, Clock clock = system_clock_ms)
      : config_(std::move(config)), file_(config_.store_path), clock_(std::move(clock)) {
    records_ = file_.load();
  }

  const ServiceConfig& config() const noexcept { return config_; }

  static std::int64_t system_clock_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
  }

  /// Appends a sample; trains once the minimum is reached. Re-sending a known
  /// sample_id is a no-op.
  EnrollStatus enroll(const std::string& user_id, KeystrokeSample sample) {
    sample.user_id = user_id;
    check_sample(sample);
    sample = rebase(std::move(sample));

    std::lock_guard user_lock(user_mutex(user_id));
    const auto current = snapshot(user_id);
    auto next = current ? std::make_shared<EnrollmentRecord>(*current) : std::make_shared<EnrollmentRecord>();
    const auto now = clock_();
    if (!current) {
      next->user_id = user_id;
      next->created_ms = now;
      next->min_samples = config_.min_samples;
    }
    const bool known = std::any_of(next->samples.begin(), next->samples.end(),
                                   [&](const KeystrokeSample& s) { return s.sample_id == sample.sample_id; });
    if (known) return status_of(*next);

    next->samples.push_back(std::move(sample));
    next->updated_ms = now;
    std::optional<Error> failure;
    if (next->samples.size() >= next->min_samples) {
      try {
        next->tmpl = train_template(user_id, next->samples, config_);
      } catch (const Error& e) {
        ++next->failed_trainings;
        next->tmpl.reset();
        failure = Error(ErrorCode::TrainingFailed, e.message());
      }
    }
    commit(user_id, next);
    if (failure) throw *failure;
    return status_of(*next);
  }

  /// Scores a probe against the stored template and logs the attempt.
  VerifyResult verify(const std::string& user_id, KeystrokeSample sample) {
    sample.user_id = user_id;
    std::lock_guard user_lock(user_mutex(user_id));
    const auto current = snapshot(user_id);
    if (!current) throw Error(ErrorCode::UnknownUser, "unknown user '" + user_id + "'");
    if (!current->tmpl) {
      throw Error(ErrorCode::NotTrained, "user '" + user_id + "' has " + std::to_string(current->samples.size()) +
                                             " of " + std::to_string(current->min_samples) + " samples");
    }
    check_sample(sample);
    sample = rebase(std::move(sample));

    VerifyResult result;
    try {
      result.score = score_sample(*current->tmpl, sample);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SampleTooShort && e.code() != ErrorCode::NoSharedFeatures) throw;
      throw Error(ErrorCode::InvalidSample, e.message(), std::vector<std::string>{e.message()});
    }
    result.decision = decide(result.score, current->tmpl->threshold);

    auto next = std::make_shared<EnrollmentRecord>(*current);
    std::int64_t ts = clock_();
    if (!next->audit.empty()) ts = std::max(ts, next->audit.back().timestamp_ms);
    next->audit.push_back({ts, sample.sample_id, result.score, result.decision});
    commit(user_id, next);
    return result;
  }

  std::vector<UserSummary> list_users() const {
    std::vector<UserSummary> out;
    std::shared_lock lock(records_mutex_);
    for (const auto& [id, r] : records_) out.push_back({id, r->trained(), r->samples.size()});
    return out;
  }

  /// Removes samples, template and audit log of a user.
  void reset(const std::string& user_id) {
    std::lock_guard user_lock(user_mutex(user_id));
    std::lock_guard file_lock(file_mutex_);
    {
      std::unique_lock lock(records_mutex_);
      if (records_.erase(user_id) == 0) throw Error(ErrorCode::UnknownUser, "unknown user '" + user_id + "'");
    }
    file_.save(copy_records());
  }

  std::shared_ptr<const EnrollmentRecord> snapshot(const std::string& user_id) const {
    std::shared_lock lock(records_mutex_);
    const auto it = records_.find(user_id);
    return it == records_.end() ? nullptr : it->second;
  }

 private:
  static EnrollStatus status_of(const EnrollmentRecord& r) {
    return {r.user_id, r.samples.size(), r.min_samples, r.trained()};
  }

  static void check_sample(const KeystrokeSample& sample) {
    auto violations = validate_sample(sample);
    if (!violations.empty()) {
      throw Error(ErrorCode::InvalidSample, "sample '" + sample.sample_id + "' failed validation",
                  std::move(violations));
    }
  }

  std::mutex& user_mutex(const std::string& user_id) {
    std::lock_guard lock(user_mutexes_guard_);
    auto& m = user_mutexes_[user_id];
    if (!m) m = std::make_unique<std::mutex>();
    return *m;
  }

  RecordMap copy_records() const {
    std::shared_lock lock(records_mutex_);
    return records_;
  }

  void commit(const std::string& user_id, std::shared_ptr<const EnrollmentRecord> record) {
    std::lock_guard file_lock(file_mutex_);
    {
      std::unique_lock lock(records_mutex_);
      records_[user_id] = std::move(record);
    }
    file_.save(copy_records());
  }

  ServiceConfig config_;
  StoreFile file_;
  Clock clock_;

  mutable std::shared_mutex records_mutex_;
  RecordMap records_;
  std::mutex file_mutex_;
  std::mutex user_mutexes_guard_;
  std::map<std::string, std::unique_ptr<std::mutex>> user_mutexes_;
};

}  // namespace keydyn::service
