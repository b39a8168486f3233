#pragma once

#include <string>
#include <variant>

#include "keydyn/classifiers.hpp"
#include "keydyn/core.hpp"
#include "keydyn/features.hpp"
#include "keydyn/preprocess.hpp"

namespace keydyn {

using TemplateModel = std::variant<MedianProximityModel, DistanceVectorModel, RbfSvmModel>;

inline ClassifierKind classifier_of(const TemplateModel& model) {
  return static_cast<ClassifierKind>(model.index());
}

/// Trained per-user verifier: model, the scaler fitted on its training data, and
/// the decision threshold.
struct UserTemplate {
  std::string user_id;
  std::string layout_id;
  TemplateModel model;
  ScalerParams scaler;
  double threshold = 0.0;

  bool operator==(const UserTemplate&) const = default;
};

/// Score of an already-scaled vector against a model.
inline double score_model(const TemplateModel& model, const FeatureVector& scaled) {
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, MedianProximityModel>) return score_mvp(m, scaled);
        else if constexpr (std::is_same_v<M, DistanceVectorModel>) return score_dvc(m, scaled);
        else return score_svm(m, scaled);
      },
      model);
}

/// Extracts, scales and scores a raw sample.
inline double score_sample(const UserTemplate& tpl, const KeystrokeSample& sample) {
  const auto layout = layout_from_id(tpl.layout_id);
  return score_model(tpl.model, apply_scaler(build_vector(sample, layout), tpl.scaler));
}

}  // namespace keydyn
