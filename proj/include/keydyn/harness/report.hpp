#pragma once

// Human- and machine-readable reports: a single experiment, and the comparison
// table that lines experiments up next to the qualitative evaluation criteria.

#include <cstdio>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "keydyn/error.hpp"
#include "keydyn/harness/experiment.hpp"
#include "keydyn/metrics.hpp"

namespace keydyn::harness {

inline std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline std::string render_human(const ExperimentReport& report) {
  std::ostringstream os;
  const auto& c = report.config;
  os << "classifier " << to_string(c.classifier) << ", layout " << report.layout_id << " (" << report.feature_count
     << " features), scaler " << to_string(c.effective_scaler()) << ", threshold policy "
     << to_string(c.threshold_policy) << ", seed " << c.seed << "\n";
  if (report.rejected_samples > 0) os << report.rejected_samples << " samples removed by preprocessing\n";
  os << "\nuser        status              train  genuine  impostor  EER     FAR     FRR\n";
  for (const auto& r : report.users) {
    char line[256];
    if (r.rates) {
      std::snprintf(line, sizeof line, "%-11s %-19s %5zu  %7zu  %8zu  %.4f  %.4f  %.4f\n", r.user_id.c_str(),
                    std::string(to_string(r.status)).c_str(), r.train_count, r.genuine_count, r.impostor_count,
                    r.rates->eer, r.far, r.frr);
    } else {
      std::snprintf(line, sizeof line, "%-11s %-19s %5zu  %7zu  %8zu  -       -       -       %s\n",
                    r.user_id.c_str(), std::string(to_string(r.status)).c_str(), r.train_count, r.genuine_count,
                    r.impostor_count, r.note.c_str());
    }
    os << line;
  }
  const auto& a = report.aggregate;
  os << "\nmean EER = " << (a.mean_eer ? fixed4(*a.mean_eer) : "n/a")
     << ", accuracy = " << (a.accuracy ? fixed4(*a.accuracy) : "n/a")
     << ", pooled EER = " << (a.pooled_eer ? fixed4(*a.pooled_eer) : "n/a") << "\n";
  os << "FER = " << fixed4(a.fer) << ", FTA = " << fixed4(a.fta) << "\n";
  if (a.mean_far) {
    os << "EN-50133: FAR " << fixed4(*a.mean_far) << (a.en50133_far_ok ? " ok" : " exceeds 0.001%") << ", FRR "
       << fixed4(*a.mean_frr) << (a.en50133_frr_ok ? " ok" : " exceeds 1%") << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Qualitative scheme

enum class Rating { LOW, MEDIUM, HIGH };
enum class ImitationCategory { OPEN, SLIGHTLY_HIDDEN, COVERT, SEVERELY_HIDDEN };
enum class AttackEffort { LOW, MEDIUM, HIGH };

constexpr std::string_view to_string(Rating r) {
  switch (r) {
    case Rating::LOW: return "low";
    case Rating::MEDIUM: return "medium";
    case Rating::HIGH: return "high";
  }
  return "?";
}

constexpr std::string_view to_string(ImitationCategory c) {
  switch (c) {
    case ImitationCategory::OPEN: return "open";
    case ImitationCategory::SLIGHTLY_HIDDEN: return "slightly_hidden";
    case ImitationCategory::COVERT: return "covert";
    case ImitationCategory::SEVERELY_HIDDEN: return "severely_hidden";
  }
  return "?";
}

constexpr std::string_view to_string(AttackEffort e) {
  switch (e) {
    case AttackEffort::LOW: return "low";
    case AttackEffort::MEDIUM: return "medium";
    case AttackEffort::HIGH: return "high";
  }
  return "?";
}

/// User-supplied judgments; nothing here is computed.
struct QualitativeScheme {
  std::optional<Rating> comfort;
  std::optional<Rating> accuracy_rating;
  std::optional<Rating> availability;
  std::optional<Rating> cost;
  std::optional<ImitationCategory> imitation_category;
  std::optional<AttackEffort> attack_effort;

  bool empty() const {
    return !comfort && !accuracy_rating && !availability && !cost && !imitation_category && !attack_effort;
  }
};

namespace detail {

template <typename E, std::size_t N>
E enum_from(std::string_view s, const E (&values)[N], std::string_view field) {
  for (E v : values) {
    if (to_string(v) == s) return v;
  }
  throw Error(ErrorCode::ConfigError, "invalid value '" + std::string(s) + "' for " + std::string(field));
}

}  // namespace detail

inline QualitativeScheme scheme_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "qualitative scheme must be a JSON object");
  static const std::set<std::string> known = {"comfort", "accuracy_rating",    "availability",
                                              "cost",    "imitation_category", "attack_effort"};
  for (const auto& [key, _] : j.items()) {
    if (known.count(key) == 0) throw Error(ErrorCode::ConfigError, "unknown scheme key '" + key + "'");
  }
  constexpr Rating ratings[] = {Rating::LOW, Rating::MEDIUM, Rating::HIGH};
  constexpr ImitationCategory imitations[] = {ImitationCategory::OPEN, ImitationCategory::SLIGHTLY_HIDDEN,
                                              ImitationCategory::COVERT, ImitationCategory::SEVERELY_HIDDEN};
  constexpr AttackEffort efforts[] = {AttackEffort::LOW, AttackEffort::MEDIUM, AttackEffort::HIGH};
  QualitativeScheme s;
  auto text = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    if (!j.at(key).is_string()) throw Error(ErrorCode::ConfigError, std::string(key) + " must be a string");
    return j.at(key).get<std::string>();
  };
  if (auto v = text("comfort")) s.comfort = detail::enum_from(*v, ratings, "comfort");
  if (auto v = text("accuracy_rating")) s.accuracy_rating = detail::enum_from(*v, ratings, "accuracy_rating");
  if (auto v = text("availability")) s.availability = detail::enum_from(*v, ratings, "availability");
  if (auto v = text("cost")) s.cost = detail::enum_from(*v, ratings, "cost");
  if (auto v = text("imitation_category")) s.imitation_category = detail::enum_from(*v, imitations, "imitation_category");
  if (auto v = text("attack_effort")) s.attack_effort = detail::enum_from(*v, efforts, "attack_effort");
  return s;
}

// ---------------------------------------------------------------------------
// Comparison document

struct ComparisonRow {
  std::string label;
  std::string classifier;
  std::size_t feature_count = 0;
  std::optional<double> eer;
  std::optional<double> pooled_eer;
  bool en50133_far_ok = false;
  bool en50133_frr_ok = false;
  std::uint64_t seed = 0;

  std::optional<double> accuracy() const {
    if (!eer) return std::nullopt;
    return accuracy_from_eer(*eer);
  }
};

inline ComparisonRow comparison_row(const ExperimentReport& r) {
  ComparisonRow row;
  row.classifier = std::string(to_string(r.config.classifier));
  row.label = row.classifier + "/" + r.layout_id;
  row.feature_count = r.feature_count;
  row.eer = r.aggregate.mean_eer;
  row.pooled_eer = r.aggregate.pooled_eer;
  row.en50133_far_ok = r.aggregate.en50133_far_ok;
  row.en50133_frr_ok = r.aggregate.en50133_frr_ok;
  row.seed = r.config.seed;
  return row;
}

/// Reads a row back from a machine-readable experiment report.
inline ComparisonRow comparison_row_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "keydyn-experiment/1") {
      throw Error(ErrorCode::ConfigError, "not a keydyn experiment report");
    }
    ComparisonRow row;
    row.classifier = j.at("config").at("classifier").get<std::string>();
    row.label = row.classifier + "/" + j.at("layout_id").get<std::string>();
    row.feature_count = j.at("feature_count").get<std::size_t>();
    const auto& a = j.at("aggregate");
    if (!a.at("mean_eer").is_null()) row.eer = a.at("mean_eer").get<double>();
    if (!a.at("pooled_eer").is_null()) row.pooled_eer = a.at("pooled_eer").get<double>();
    row.en50133_far_ok = a.at("en50133_far_ok").get<bool>();
    row.en50133_frr_ok = a.at("en50133_frr_ok").get<bool>();
    row.seed = j.at("seed").get<std::uint64_t>();
    return row;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("malformed report: ") + e.what());
  }
}

struct ComparisonDocument {
  std::vector<ComparisonRow> rows;
  QualitativeScheme scheme;
};

inline ComparisonDocument comparison_report(std::vector<ComparisonRow> rows, QualitativeScheme scheme) {
  if (rows.empty()) throw Error(ErrorCode::EmptyInput, "comparison needs at least one report");
  return {std::move(rows), scheme};
}

inline std::string render_human(const ComparisonDocument& doc) {
  std::ostringstream os;
  os << "Comparison by evaluation criteria\n\n";
  for (const auto& r : doc.rows) {
    os << r.label << " | features " << r.feature_count << " | ";
    if (r.eer) {
      os << "EER = " << fixed4(*r.eer) << " | accuracy = " << fixed4(*r.accuracy());
    } else {
      os << "EER = n/a";
    }
    if (r.pooled_eer) os << " | pooled EER = " << fixed4(*r.pooled_eer);
    os << " | EN-50133 FAR " << (r.en50133_far_ok ? "ok" : "fail") << ", FRR " << (r.en50133_frr_ok ? "ok" : "fail")
       << " | seed " << r.seed << "\n";
  }
  os << "\n";
  const auto& s = doc.scheme;
  if (s.empty()) {
    os << "Qualitative criteria: not provided\n";
    return os.str();
  }
  auto line = [&](const char* name, auto v) {
    if (v) os << "  " << name << ": " << to_string(*v) << "\n";
  };
  os << "Qualitative criteria\n";
  line("comfort", s.comfort);
  line("accuracy", s.accuracy_rating);
  line("availability", s.availability);
  line("cost", s.cost);
  line("imitation", s.imitation_category);
  line("attack effort", s.attack_effort);
  return os.str();
}

inline nlohmann::json to_json(const ComparisonDocument& doc) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : doc.rows) {
    rows.push_back({{"label", r.label},
                    {"classifier", r.classifier},
                    {"feature_count", r.feature_count},
                    {"eer", detail::optional_json(r.eer)},
                    {"accuracy_from_eer", detail::optional_json(r.accuracy())},
                    {"pooled_eer", detail::optional_json(r.pooled_eer)},
                    {"en50133_far_ok", r.en50133_far_ok},
                    {"en50133_frr_ok", r.en50133_frr_ok},
                    {"seed", r.seed}});
  }
  nlohmann::json out{{"format", "keydyn-comparison/1"}, {"rows", std::move(rows)}};
  const auto& s = doc.scheme;
  if (s.empty()) {
    out["qualitative"] = nullptr;
    out["notice"] = "qualitative criteria not provided";
  } else {
    nlohmann::json q = nlohmann::json::object();
    auto put = [&](const char* name, auto v) {
      if (v) q[name] = to_string(*v);
    };
    put("comfort", s.comfort);
    put("accuracy_rating", s.accuracy_rating);
    put("availability", s.availability);
    put("cost", s.cost);
    put("imitation_category", s.imitation_category);
    put("attack_effort", s.attack_effort);
    out["qualitative"] = std::move(q);
  }
  return out;
}

}  // namespace keydyn::harness
