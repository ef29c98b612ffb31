#pragma once

#include <stdexcept>
#include <string>

namespace kbe {

enum class ErrorCode {
  DimensionMismatch,
  IndexOutOfRange,
  InvalidArgument,
  InvalidPair,
  IdenticalBoundaries,
  DegenerateDenominator,
  SingularTrainingCovariance,
  SingularMatrix,
  SolverFailure,
  NotPositiveSemidefinite,
  OutOfRange,
  StepSizeUnderflow,
  Unsupported,
  Io,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidPair: return "InvalidPair";
    case ErrorCode::IdenticalBoundaries: return "IdenticalBoundaries";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::SingularTrainingCovariance: return "SingularTrainingCovariance";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::NotPositiveSemidefinite: return "NotPositiveSemidefinite";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for failures of the numerical kind (as opposed to bad input or I/O).
  bool numerical() const noexcept {
    switch (code_) {
      case ErrorCode::DegenerateDenominator:
      case ErrorCode::SingularTrainingCovariance:
      case ErrorCode::SingularMatrix:
      case ErrorCode::NotPositiveSemidefinite:
      case ErrorCode::StepSizeUnderflow:
      case ErrorCode::SolverFailure:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorCode code_;
};

}  // namespace kbe
