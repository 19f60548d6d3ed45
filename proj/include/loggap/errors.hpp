#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace loggap {

enum class ErrorKind {
  InvalidSpec,
  NonPSDQuadratic,
  UnboundedDensity,
  DimensionTooLarge,
  SingularWeight,
  NotConverged,
  NotNormalized,
  OutOfMemory,
  NoConvergence,
  NotCentered,
  SolverBreakdown,
  HessianNotPD,
  InsufficientSpectrum,
  GroupDoesNotPreserveGrid,
  DensityUnderflow,
  FNotOdd,
  DivergentChain,
  ChordNotFound,
  TooFewSamples,
  DimensionMismatch,
  UnknownFormula,
  BadParams,
  ConfigInvalid,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries one of the kinds above so
// callers (and the CLI exit-code logic) can dispatch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace loggap
