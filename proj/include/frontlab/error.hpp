#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace frontlab {

enum class ErrorKind {
  NoConvergence,
  DegenerateRoot,
  WrongSign,
  PositiveNu,
  NoRootInBracket,
  MultipleRoots,
  GridTooSmall,
  InvalidGrid,
  ResonanceAbort,
  SingularJacobian,
  NaNInJacobian,
  FlatProfile,
  UnknownModel,
  ParseError,
  EllipticityViolation,
  EquilibriumResidual,
  FirstStepFailure,
  WrongSide,
  FrontExitedDomain,
  CFLViolation,
  OracleScope,
  ConfigError,
  NoTransition,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace frontlab
