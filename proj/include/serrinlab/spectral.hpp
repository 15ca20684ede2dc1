#pragma once

#include "serrinlab/fem.hpp"

#include <string_view>

namespace serrinlab {

enum class EigenKind { neumann, steklov };
std::string_view to_string(EigenKind kind);

struct EigenResult {
  EigenKind which = EigenKind::neumann;
  double value = 0.0;
  FemField eigenfunction;      // normalized to unit norm in the defining inner product
  double rayleigh_residual = 0.0;  // |K x - lambda B x| / |K x|
  double orthogonality = 0.0;  // |<x, 1>_B| / (|x|_B |1|_B)
  int iterations = 0;
};

struct EigenOptions {
  int block_size = 6;
  int max_iterations = 300;
  double tolerance = 1e-8;
};

/// Smallest nonzero eigenvalue of K x = nu M x, by block inverse iteration on the
/// complement of the constants with a Rayleigh-Ritz step per iteration.
/// Throws ConvergenceFailure when the residual target is not reached.
EigenResult neumann_eigenvalue_2(const SpacePtr& space, const EigenOptions& options = {});

/// Smallest nonzero eigenvalue of K x = sigma B x, where B is the consistent quadratic
/// boundary mass matrix.
EigenResult steklov_eigenvalue_2(const SpacePtr& space, const EigenOptions& options = {});

struct L2OscillationReport {
  double lhs = 0.0;  // |h - h_Omega|_{2,Omega}
  double rhs = 0.0;  // 2 |R - q_nu|_{2,Gamma} / sqrt(nu2 sigma2)
  double slack = 0.0;
  double tol = 0.0;
  bool holds = false;
  double lhs_boundary_mean = 0.0;  // |h - h_Gamma|_{2,Omega}
  double h_volume_mean = 0.0;
  double h_boundary_mean = 0.0;
  double flux_defect = 0.0;  // |R - q_nu|_{2,Gamma}
  double nu2 = 0.0;
  double sigma2 = 0.0;
};

/// h = q^z - u for a Neumann torsion field u. Throws NotNeumann when u_nu is not constant.
L2OscillationReport check_l2_oscillation_bound(const FemField& u, const Vec2& z, double a, double nu2, double sigma2,
                                               double tol = 1e-3);
/// Same, computing nu2 and sigma2 on the space of u.
L2OscillationReport check_l2_oscillation_bound(const FemField& u, const Vec2& z, double a = 0.0, double tol = 1e-3);

}  // namespace serrinlab
