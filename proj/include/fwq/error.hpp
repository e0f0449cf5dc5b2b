#pragma once

#include <stdexcept>
#include <string>

namespace fwq {

// Failure conditions surfaced by the library. Each maps to one named
// contract violation; the CLI translates them into exit codes.
enum class Err {
  NoEquilibria,
  DegenerateCritical,
  NonUniqueDeepest,
  TooLarge,
  Infeasible,
  Reducible,
  BandViolated,
  HorizonTooSmall,
  CaseParamOutOfRange,
  EmptySet,
  StepUnstable,
  NoCompleteCycle,
  TooFewCycles,
  TooFewReplicas,
  ConfigInvalid,
  BudgetExceeded,
  RegimeMismatch,
};

inline const char* err_name(Err e) {
  switch (e) {
    case Err::NoEquilibria: return "NoEquilibria";
    case Err::DegenerateCritical: return "DegenerateCritical";
    case Err::NonUniqueDeepest: return "NonUniqueDeepest";
    case Err::TooLarge: return "TooLarge";
    case Err::Infeasible: return "Infeasible";
    case Err::Reducible: return "Reducible";
    case Err::BandViolated: return "BandViolated";
    case Err::HorizonTooSmall: return "HorizonTooSmall";
    case Err::CaseParamOutOfRange: return "CaseParamOutOfRange";
    case Err::EmptySet: return "EmptySet";
    case Err::StepUnstable: return "StepUnstable";
    case Err::NoCompleteCycle: return "NoCompleteCycle";
    case Err::TooFewCycles: return "TooFewCycles";
    case Err::TooFewReplicas: return "TooFewReplicas";
    case Err::ConfigInvalid: return "ConfigInvalid";
    case Err::BudgetExceeded: return "BudgetExceeded";
    case Err::RegimeMismatch: return "RegimeMismatch";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& what)
      : std::runtime_error(std::string(err_name(code)) + ": " + what), code_(code) {}
  Err code() const { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& what) { throw Error(code, what); }

}  // namespace fwq
