#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pip {

enum class ErrorCode {
  InvalidArgument,
  Undecidable,
  DivergentSeries,
  Incompatible,
  NotInDomain,
  NoRepresentative,
  NoFactorization,
  NotInjective,
  NotSurjective,
  NotBounded,
  NotInResolventSet,
  OutsideRadius,
  Unstable,
  NotUnitModulus,
  NotAChain,
  NotComparable,
  NotSymmetric,
  NotInvertible,
  DomainNotDense,
  NoCompleteFamily,
  InSpectrum,
  PairingDiverges,
  GammaSingular,
  FreeSpectrum,
  NotClosedForm,
  GrowthViolated,
  SymbolUnbounded,
  NotAdmissible,
  GeneratorTooRegular,
};

std::string_view error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pip
