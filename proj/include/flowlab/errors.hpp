#pragma once

#include <stdexcept>
#include <string>

namespace flowlab {

enum class ErrorCode {
  InvalidArgument,
  IntegrandUnbounded,
  NotInvertible,
  NotFoundWithinHorizon,
  UncertifiedReport,
  EmptySamples,
  EmptyCloud,
  DivergedDenominator,
  DivergedMeasure,
  SaturatedGrid,
  WitnessNotFound,
  Config,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

  /// True for failures that signal numerical divergence rather than bad input.
  bool is_divergence() const {
    return code_ == ErrorCode::IntegrandUnbounded || code_ == ErrorCode::NotInvertible ||
           code_ == ErrorCode::DivergedDenominator || code_ == ErrorCode::DivergedMeasure;
  }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IntegrandUnbounded: return "IntegrandUnbounded";
    case ErrorCode::NotInvertible: return "NotInvertible";
    case ErrorCode::NotFoundWithinHorizon: return "NotFoundWithinHorizon";
    case ErrorCode::UncertifiedReport: return "UncertifiedReport";
    case ErrorCode::EmptySamples: return "EmptySamples";
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::DivergedDenominator: return "DivergedDenominator";
    case ErrorCode::DivergedMeasure: return "DivergedMeasure";
    case ErrorCode::SaturatedGrid: return "SaturatedGrid";
    case ErrorCode::WitnessNotFound: return "WitnessNotFound";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

}  // namespace flowlab
