#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace serrinlab {

enum class ErrorCode {
  NonPositiveRadius,
  NotStarShaped,
  OutsideDomain,
  PointNotInterior,
  MeshTooFine,
  SolverFailure,
  DegeneratePatch,
  KindMismatch,
  NotTorsion,
  NotNeumann,
  NotDirichlet,
  NotTorsionPolynomial,
  ConvergenceFailure,
  InvalidVariant,
  BoundaryMinimum,
  GradientNotZeroAtZ,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

// Single exception type for every contract violation; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace serrinlab
