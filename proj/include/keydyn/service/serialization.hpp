#pragma once

// JSON encodings of samples, scalers, models and templates. Doubles are written
// in shortest round-trip form, so a template read back scores bit-identically.

#include <string>
#include <vector>

#include "json.hpp"
#include "keydyn/classifiers.hpp"
#include "keydyn/core.hpp"
#include "keydyn/error.hpp"
#include "keydyn/features.hpp"
#include "keydyn/preprocess.hpp"
#include "keydyn/template.hpp"

namespace keydyn::service {

using nlohmann::json;

namespace detail {

inline void put_optional(json& j, const char* key, const std::optional<double>& v) {
  if (v) j[key] = *v;
}

inline std::optional<double> get_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

inline std::vector<bool> bools(const json& j) {
  std::vector<bool> out;
  for (const auto& b : j) out.push_back(b.get<bool>());
  return out;
}

}  // namespace detail

// --- events and samples ----------------------------------------------------

inline json event_to_json(const KeystrokeEvent& e) {
  json j{{"key_label", e.key_label}, {"down_ms", e.down_ms}, {"up_ms", e.up_ms}};
  detail::put_optional(j, "pressure", e.pressure);
  detail::put_optional(j, "size", e.size);
  detail::put_optional(j, "x", e.x);
  detail::put_optional(j, "y", e.y);
  return j;
}

/// key_index is positional in the wire format.
inline KeystrokeEvent event_from_json(const json& j, std::size_t index) {
  KeystrokeEvent e;
  e.key_index = index;
  e.key_label = j.at("key_label").get<std::string>();
  e.down_ms = j.at("down_ms").get<double>();
  e.up_ms = j.at("up_ms").get<double>();
  e.pressure = detail::get_optional(j, "pressure");
  e.size = detail::get_optional(j, "size");
  e.x = detail::get_optional(j, "x");
  e.y = detail::get_optional(j, "y");
  return e;
}

inline json sample_to_json(const KeystrokeSample& s) {
  json events = json::array();
  for (const auto& e : s.events) events.push_back(event_to_json(e));
  return {{"user_id", s.user_id}, {"sample_id", s.sample_id}, {"events", std::move(events)}};
}

/// Parses {user_id, sample_id, events:[...]}; shape errors raise BadRequest.
inline KeystrokeSample sample_from_json(const json& j) {
  try {
    if (!j.is_object()) throw Error(ErrorCode::BadRequest, "body must be a JSON object");
    KeystrokeSample s;
    s.user_id = j.at("user_id").get<std::string>();
    s.sample_id = j.at("sample_id").get<std::string>();
    const auto& events = j.at("events");
    if (!events.is_array()) throw Error(ErrorCode::BadRequest, "events must be an array");
    for (std::size_t i = 0; i < events.size(); ++i) s.events.push_back(event_from_json(events[i], i));
    if (s.user_id.empty()) throw Error(ErrorCode::BadRequest, "user_id must be non-empty");
    if (s.sample_id.empty()) throw Error(ErrorCode::BadRequest, "sample_id must be non-empty");
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadRequest, e.what());
  }
}

// --- vectors, scalers, models ------------------------------------------------

inline json vector_to_json(const FeatureVector& v) {
  return {{"layout_id", v.layout_id}, {"values", v.values}, {"available", v.available}};
}

inline FeatureVector vector_from_json(const json& j) {
  return {j.at("layout_id").get<std::string>(), j.at("values").get<std::vector<double>>(),
          detail::bools(j.at("available"))};
}

inline json scaler_to_json(const ScalerParams& p) {
  json stats = json::array();
  for (const auto& s : p.stats) {
    stats.push_back({{"min", s.min}, {"max", s.max}, {"mean", s.mean}, {"stddev", s.stddev}, {"degenerate", s.degenerate}});
  }
  return {{"kind", to_string(p.kind)}, {"layout_id", p.layout_id}, {"stats", std::move(stats)}};
}

inline ScalerParams scaler_from_json(const json& j) {
  ScalerParams p;
  p.kind = scaler_kind_from_string(j.at("kind").get<std::string>());
  p.layout_id = j.at("layout_id").get<std::string>();
  for (const auto& s : j.at("stats")) {
    p.stats.push_back({s.at("min").get<double>(), s.at("max").get<double>(), s.at("mean").get<double>(),
                       s.at("stddev").get<double>(), s.at("degenerate").get<bool>()});
  }
  return p;
}

inline json model_to_json(const TemplateModel& model) {
  return std::visit(
      [](const auto& m) -> json {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, MedianProximityModel>) {
          return {{"type", "mvp"},         {"layout_id", m.layout_id}, {"median", m.median},
                  {"spread", m.spread},    {"available", m.available}, {"band", m.band},
                  {"degenerate", m.degenerate}};
        } else if constexpr (std::is_same_v<M, DistanceVectorModel>) {
          return {{"type", "dvc"}, {"layout_id", m.layout_id}, {"centroid", m.centroid}, {"available", m.available}};
        } else {
          json svs = json::array();
          for (const auto& v : m.support_vectors) svs.push_back(vector_to_json(v));
          return {{"type", "svm"},
                  {"layout_id", m.layout_id},
                  {"support_vectors", std::move(svs)},
                  {"dual_coefficients", m.dual_coefficients},
                  {"bias", m.bias},
                  {"gamma", m.gamma},
                  {"c", m.c},
                  {"iterations", m.iterations},
                  {"kkt_residual", m.kkt_residual}};
        }
      },
      model);
}

inline TemplateModel model_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "mvp") {
    MedianProximityModel m;
    m.layout_id = j.at("layout_id").get<std::string>();
    m.median = j.at("median").get<std::vector<double>>();
    m.spread = j.at("spread").get<std::vector<double>>();
    m.available = detail::bools(j.at("available"));
    m.band = j.at("band").get<double>();
    m.degenerate = j.at("degenerate").get<bool>();
    return m;
  }
  if (type == "dvc") {
    return DistanceVectorModel{j.at("layout_id").get<std::string>(), j.at("centroid").get<std::vector<double>>(),
                               detail::bools(j.at("available"))};
  }
  if (type == "svm") {
    RbfSvmModel m;
    m.layout_id = j.at("layout_id").get<std::string>();
    for (const auto& v : j.at("support_vectors")) m.support_vectors.push_back(vector_from_json(v));
    m.dual_coefficients = j.at("dual_coefficients").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.gamma = j.at("gamma").get<double>();
    m.c = j.at("c").get<double>();
    m.iterations = j.at("iterations").get<std::size_t>();
    m.kkt_residual = j.at("kkt_residual").get<double>();
    return m;
  }
  throw Error(ErrorCode::StoreError, "unknown model type '" + type + "'");
}

inline json template_to_json(const UserTemplate& t) {
  return {{"user_id", t.user_id},
          {"layout_id", t.layout_id},
          {"classifier", to_string(classifier_of(t.model))},
          {"model", model_to_json(t.model)},
          {"scaler", scaler_to_json(t.scaler)},
          {"threshold", t.threshold}};
}

inline UserTemplate template_from_json(const json& j) {
  UserTemplate t;
  t.user_id = j.at("user_id").get<std::string>();
  t.layout_id = j.at("layout_id").get<std::string>();
  t.model = model_from_json(j.at("model"));
  t.scaler = scaler_from_json(j.at("scaler"));
  t.threshold = j.at("threshold").get<double>();
  return t;
}

}  // namespace keydyn::service
