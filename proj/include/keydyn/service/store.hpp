#pragma once

// Enrollment records and their on-disk store: one versioned JSON document,
// rewritten atomically (temp file + rename) on every mutation.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "keydyn/classifiers.hpp"
#include "keydyn/core.hpp"
#include "keydyn/error.hpp"
#include "keydyn/service/serialization.hpp"
#include "keydyn/template.hpp"

namespace keydyn::service {

inline constexpr std::size_t kDefaultMinSamples = 5;
inline constexpr std::string_view kStoreFormat = "keydyn-store/1";

struct AuditEntry {
  std::int64_t timestamp_ms = 0;
  std::string sample_id;
  double score = 0.0;
  Decision decision = Decision::REJECT;

  bool operator==(const AuditEntry&) const = default;
};

struct EnrollmentRecord {
  std::string user_id;
  std::vector<KeystrokeSample> samples;  // raw samples are kept to allow retraining
  std::optional<UserTemplate> tmpl;
  std::int64_t created_ms = 0;
  std::int64_t updated_ms = 0;
  std::size_t min_samples = kDefaultMinSamples;
  std::size_t failed_trainings = 0;
  std::vector<AuditEntry> audit;

  bool trained() const noexcept { return tmpl.has_value(); }
};

using RecordMap = std::map<std::string, std::shared_ptr<const EnrollmentRecord>>;

inline json record_to_json(const EnrollmentRecord& r) {
  json samples = json::array();
  for (const auto& s : r.samples) samples.push_back(sample_to_json(s));
  json audit = json::array();
  for (const auto& a : r.audit) {
    audit.push_back({{"timestamp_ms", a.timestamp_ms},
                     {"sample_id", a.sample_id},
                     {"score", a.score},
                     {"decision", to_string(a.decision)}});
  }
  return {{"user_id", r.user_id},
          {"samples", std::move(samples)},
          {"template", r.tmpl ? template_to_json(*r.tmpl) : json(nullptr)},
          {"created_ms", r.created_ms},
          {"updated_ms", r.updated_ms},
          {"min_samples", r.min_samples},
          {"failed_trainings", r.failed_trainings},
          {"audit", std::move(audit)}};
}

inline EnrollmentRecord record_from_json(const json& j) {
  EnrollmentRecord r;
  r.user_id = j.at("user_id").get<std::string>();
  for (const auto& s : j.at("samples")) r.samples.push_back(sample_from_json(s));
  if (!j.at("template").is_null()) r.tmpl = template_from_json(j.at("template"));
  r.created_ms = j.at("created_ms").get<std::int64_t>();
  r.updated_ms = j.at("updated_ms").get<std::int64_t>();
  r.min_samples = j.at("min_samples").get<std::size_t>();
  r.failed_trainings = j.at("failed_trainings").get<std::size_t>();
  for (const auto& a : j.at("audit")) {
    r.audit.push_back({a.at("timestamp_ms").get<std::int64_t>(), a.at("sample_id").get<std::string>(),
                       a.at("score").get<double>(),
                       a.at("decision").get<std::string>() == "ACCEPT" ? Decision::ACCEPT : Decision::REJECT});
  }
  return r;
}

/// Persists the full record map. An empty path means in-memory only.
class StoreFile {
 public:
  explicit StoreFile(std::filesystem::path path = {}) : path_(std::move(path)) {}

  const std::filesystem::path& path() const noexcept { return path_; }

  RecordMap load() const {
    RecordMap out;
    if (path_.empty() || !std::filesystem::exists(path_)) return out;
    try {
      std::ifstream in(path_);
      const json doc = json::parse(in);
      if (doc.value("format", "") != kStoreFormat) {
        throw Error(ErrorCode::StoreError, "unsupported store format in " + path_.string());
      }
      for (const auto& r : doc.at("users")) {
        auto rec = std::make_shared<EnrollmentRecord>(record_from_json(r));
        out.emplace(rec->user_id, std::move(rec));
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::StoreError, "corrupt store " + path_.string() + ": " + e.what());
    }
    return out;
  }

  void save(const RecordMap& records) const {
    if (path_.empty()) return;
    json users = json::array();
    for (const auto& [_, r] : records) users.push_back(record_to_json(*r));
    const json doc{{"format", kStoreFormat}, {"users", std::move(users)}};

    auto tmp = path_;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw Error(ErrorCode::StoreError, "cannot write " + tmp.string());
      out << doc.dump(1) << '\n';
      if (!out) throw Error(ErrorCode::StoreError, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path_, ec);
    if (ec) throw Error(ErrorCode::StoreError, "cannot replace " + path_.string() + ": " + ec.message());
  }

 private:
  std::filesystem::path path_;
};

}  // namespace keydyn::service
