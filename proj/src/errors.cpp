#include "serrinlab/errors.hpp"

namespace serrinlab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveRadius: return "NonPositiveRadius";
    case ErrorCode::NotStarShaped: return "NotStarShaped";
    case ErrorCode::OutsideDomain: return "OutsideDomain";
    case ErrorCode::PointNotInterior: return "PointNotInterior";
    case ErrorCode::MeshTooFine: return "MeshTooFine";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::DegeneratePatch: return "DegeneratePatch";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::NotTorsion: return "NotTorsion";
    case ErrorCode::NotNeumann: return "NotNeumann";
    case ErrorCode::NotDirichlet: return "NotDirichlet";
    case ErrorCode::NotTorsionPolynomial: return "NotTorsionPolynomial";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::InvalidVariant: return "InvalidVariant";
    case ErrorCode::BoundaryMinimum: return "BoundaryMinimum";
    case ErrorCode::GradientNotZeroAtZ: return "GradientNotZeroAtZ";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace serrinlab
