#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace perfect {

enum class ErrorKind {
  Validation,
  Parse,
  ReducibleChain,
  ZeroMassState,
  NotStationary,
  StateSpaceTooLarge,
  PosetTooLarge,
  UnreachableConditioning,
  UndefinedUpwardRow,
  ImpossibleTransition,
  NotMonotone,
  EnumerationTooLarge,
  TooManyRecords,
  ZeroMassSeed,
  ZeroBottomMass,
  MaxAttemptsExceeded,
  HorizonExceeded,
  EmptySample,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation: return "ValidationError";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::ReducibleChain: return "ReducibleChain";
    case ErrorKind::ZeroMassState: return "ZeroMassState";
    case ErrorKind::NotStationary: return "NotStationary";
    case ErrorKind::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case ErrorKind::PosetTooLarge: return "PosetTooLarge";
    case ErrorKind::UnreachableConditioning: return "UnreachableConditioning";
    case ErrorKind::UndefinedUpwardRow: return "UndefinedUpwardRow";
    case ErrorKind::ImpossibleTransition: return "ImpossibleTransition";
    case ErrorKind::NotMonotone: return "NotMonotone";
    case ErrorKind::EnumerationTooLarge: return "EnumerationTooLarge";
    case ErrorKind::TooManyRecords: return "TooManyRecords";
    case ErrorKind::ZeroMassSeed: return "ZeroMassSeed";
    case ErrorKind::ZeroBottomMass: return "ZeroBottomMass";
    case ErrorKind::MaxAttemptsExceeded: return "MaxAttemptsExceeded";
    case ErrorKind::HorizonExceeded: return "HorizonExceeded";
    case ErrorKind::EmptySample: return "EmptySample";
  }
  return "Error";
}

/// Every failure raised by the library carries one of the kinds above so
/// callers (notably the CLI exit-code mapping) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace perfect
