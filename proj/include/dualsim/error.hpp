#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dualsim {

enum class ErrorCode {
  NegativeParameter,
  ZeroDenominator,
  NegativeState,
  NonFiniteState,
  StepUnderflow,
  DivisionByZero,
  DriftMismatch,
  UnknownScenario,
  EmptySample,
  GridMismatch,
  SyntaxError,
  UnknownKey,
  MissingRequired,
  UnboundIdentifier,
  NoSuchSeries,
  InvalidArgument,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NegativeParameter: return "NegativeParameter";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::NegativeState: return "NegativeState";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::StepUnderflow: return "StepUnderflow";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::DriftMismatch: return "DriftMismatch";
    case ErrorCode::UnknownScenario: return "UnknownScenario";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::MissingRequired: return "MissingRequired";
    case ErrorCode::UnboundIdentifier: return "UnboundIdentifier";
    case ErrorCode::NoSuchSeries: return "NoSuchSeries";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

// All library failures are reported through this type; code() identifies the
// failure class, what() carries the human-readable detail.
class SimError : public std::runtime_error {
 public:
  SimError(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

// Parse failures additionally carry the 1-based column (or byte offset for
// JSON documents) where the problem was detected.
class SyntaxError : public SimError {
 public:
  SyntaxError(std::size_t column, const std::string& detail)
      : SimError(ErrorCode::SyntaxError, "column " + std::to_string(column) + ": " + detail),
        column_(column) {}

  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

}  // namespace dualsim
