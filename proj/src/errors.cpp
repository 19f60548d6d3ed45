#include "loggap/errors.hpp"

namespace loggap {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::NonPSDQuadratic: return "NonPSDQuadratic";
    case ErrorKind::UnboundedDensity: return "UnboundedDensity";
    case ErrorKind::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorKind::SingularWeight: return "SingularWeight";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::NotNormalized: return "NotNormalized";
    case ErrorKind::OutOfMemory: return "OutOfMemory";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NotCentered: return "NotCentered";
    case ErrorKind::SolverBreakdown: return "SolverBreakdown";
    case ErrorKind::HessianNotPD: return "HessianNotPD";
    case ErrorKind::InsufficientSpectrum: return "InsufficientSpectrum";
    case ErrorKind::GroupDoesNotPreserveGrid: return "GroupDoesNotPreserveGrid";
    case ErrorKind::DensityUnderflow: return "DensityUnderflow";
    case ErrorKind::FNotOdd: return "FNotOdd";
    case ErrorKind::DivergentChain: return "DivergentChain";
    case ErrorKind::ChordNotFound: return "ChordNotFound";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::UnknownFormula: return "UnknownFormula";
    case ErrorKind::BadParams: return "BadParams";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace loggap
