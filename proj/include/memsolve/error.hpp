#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace memsolve {

enum class ErrorCode {
  BadParameter,
  TouchdownInput,
  LinearSolveFailure,
  NonConvergence,
  LeftAdmissibleSet,
  TouchdownApproach,
  InternalInconsistency,
  NoCrossing,
  FoldNotBracketed,
  NonPositiveData,
  InsufficientData,
};

inline const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::BadParameter: return "BadParameter";
    case ErrorCode::TouchdownInput: return "TouchdownInput";
    case ErrorCode::LinearSolveFailure: return "LinearSolveFailure";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::LeftAdmissibleSet: return "LeftAdmissibleSet";
    case ErrorCode::TouchdownApproach: return "TouchdownApproach";
    case ErrorCode::InternalInconsistency: return "InternalInconsistency";
    case ErrorCode::NoCrossing: return "NoCrossing";
    case ErrorCode::FoldNotBracketed: return "FoldNotBracketed";
    case ErrorCode::NonPositiveData: return "NonPositiveData";
    case ErrorCode::InsufficientData: return "InsufficientData";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when the Picard iteration exhausts its budget; keeps the update norms.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& message, std::vector<double> history)
      : Error(ErrorCode::NonConvergence, message), history_(std::move(history)) {}

  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace memsolve
