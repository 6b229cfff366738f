#pragma once

#include <stdexcept>
#include <string>

namespace freespec {

enum class ErrorCode {
  DimensionMismatch,
  NotHermitian,
  IllPosed,
  InvalidArgument,
  UnitMissing,
  UnitViolation,
  AmbiguousKernel,
  KernelEmpty,
  SolverInconsistent,
  SeparabilityUndecidableHere,
  NotAnIsometry,
  TemplateMismatch,
  FacetsMissing,
  Parse,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::NotHermitian: return "NOT_HERMITIAN";
    case ErrorCode::IllPosed: return "ILL_POSED";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::UnitMissing: return "UNIT_MISSING";
    case ErrorCode::UnitViolation: return "UNIT_VIOLATION";
    case ErrorCode::AmbiguousKernel: return "AMBIGUOUS_KERNEL";
    case ErrorCode::KernelEmpty: return "KERNEL_EMPTY";
    case ErrorCode::SolverInconsistent: return "SOLVER_INCONSISTENT";
    case ErrorCode::SeparabilityUndecidableHere: return "SEPARABILITY_UNDECIDABLE_HERE";
    case ErrorCode::NotAnIsometry: return "NOT_AN_ISOMETRY";
    case ErrorCode::TemplateMismatch: return "TEMPLATE_MISMATCH";
    case ErrorCode::FacetsMissing: return "FACETS_MISSING";
    case ErrorCode::Parse: return "PARSE_ERROR";
  }
  return "UNKNOWN";
}

/// Exception carrying a machine-readable code; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace freespec
