#include "frontlab/error.hpp"

namespace frontlab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::DegenerateRoot: return "DegenerateRoot";
    case ErrorKind::WrongSign: return "WrongSign";
    case ErrorKind::PositiveNu: return "PositiveNu";
    case ErrorKind::NoRootInBracket: return "NoRootInBracket";
    case ErrorKind::MultipleRoots: return "MultipleRoots";
    case ErrorKind::GridTooSmall: return "GridTooSmall";
    case ErrorKind::InvalidGrid: return "InvalidGrid";
    case ErrorKind::ResonanceAbort: return "ResonanceAbort";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::NaNInJacobian: return "NaNInJacobian";
    case ErrorKind::FlatProfile: return "FlatProfile";
    case ErrorKind::UnknownModel: return "UnknownModel";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::EllipticityViolation: return "EllipticityViolation";
    case ErrorKind::EquilibriumResidual: return "EquilibriumResidual";
    case ErrorKind::FirstStepFailure: return "FirstStepFailure";
    case ErrorKind::WrongSide: return "WrongSide";
    case ErrorKind::FrontExitedDomain: return "FrontExitedDomain";
    case ErrorKind::CFLViolation: return "CFLViolation";
    case ErrorKind::OracleScope: return "OracleScope";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::NoTransition: return "NoTransition";
  }
  return "Unknown";
}

}  // namespace frontlab
