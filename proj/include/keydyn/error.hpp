#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace keydyn {

enum class ErrorCode {
  InvalidArgument,
  InvalidLayout,
  LayoutMismatch,
  SampleTooShort,
  EmptyInput,
  NoSharedFeatures,
  EmptyClass,
  NonConvergence,
  ZeroTotal,
  ZeroDenominator,
  ZeroAttempts,
  ZeroUsers,
  OutOfRange,
  EmptyScores,
  MalformedHeader,
  MalformedRow,
  EmptyFile,
  InsufficientSamples,
  ConfigError,
  InvalidSample,
  TrainingFailed,
  UnknownUser,
  NotTrained,
  StoreError,
  BadRequest,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidLayout: return "InvalidLayout";
    case ErrorCode::LayoutMismatch: return "LayoutMismatch";
    case ErrorCode::SampleTooShort: return "SampleTooShort";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NoSharedFeatures: return "NoSharedFeatures";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::ZeroTotal: return "ZeroTotal";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::ZeroAttempts: return "ZeroAttempts";
    case ErrorCode::ZeroUsers: return "ZeroUsers";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::EmptyScores: return "EmptyScores";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::InvalidSample: return "InvalidSample";
    case ErrorCode::TrainingFailed: return "TrainingFailed";
    case ErrorCode::UnknownUser: return "UnknownUser";
    case ErrorCode::NotTrained: return "NotTrained";
    case ErrorCode::StoreError: return "StoreError";
    case ErrorCode::BadRequest: return "BadRequest";
  }
  return "Unknown";
}

/// Library-wide exception. `line()` is non-zero only for MalformedRow;
/// `details()` carries per-item diagnostics such as sample violations.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::size_t line = 0)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message),
        line_(line) {}

  Error(ErrorCode code, const std::string& message, std::vector<std::string> details)
      : Error(code, message) {
    details_ = std::move(details);
  }

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }
  std::size_t line() const noexcept { return line_; }
  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  ErrorCode code_;
  std::string message_;
  std::size_t line_;
  std::vector<std::string> details_;
};

}  // namespace keydyn
