#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace replicator4 {

enum class ErrorKind {
  ParseError,
  DimensionError,
  NotConservative,
  ZeroMatrix,
  RankError,
  PreconditionFailed,
  UnclassifiableSignPattern,
  InconsistentClass,
  DomainError,
  StepSizeUnderflow,
  DriftBudgetExceeded,
  SelectionExhausted,
  NoClosureFound,
  EquilibriumStart,
  ProbeEscaped,
  UnknownClass,
  PredictionViolated,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::DimensionError: return "DimensionError";
    case ErrorKind::NotConservative: return "NotConservative";
    case ErrorKind::ZeroMatrix: return "ZeroMatrix";
    case ErrorKind::RankError: return "RankError";
    case ErrorKind::PreconditionFailed: return "PreconditionFailed";
    case ErrorKind::UnclassifiableSignPattern: return "UnclassifiableSignPattern";
    case ErrorKind::InconsistentClass: return "InconsistentClass";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorKind::DriftBudgetExceeded: return "DriftBudgetExceeded";
    case ErrorKind::SelectionExhausted: return "SelectionExhausted";
    case ErrorKind::NoClosureFound: return "NoClosureFound";
    case ErrorKind::EquilibriumStart: return "EquilibriumStart";
    case ErrorKind::ProbeEscaped: return "ProbeEscaped";
    case ErrorKind::UnknownClass: return "UnknownClass";
    case ErrorKind::PredictionViolated: return "PredictionViolated";
  }
  return "Unknown";
}

/// Every failure raised by the library. `kind()` is stable and is what the
/// CLI reports in its structured error output.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace replicator4
