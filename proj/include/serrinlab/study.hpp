#pragma once

#include "serrinlab/identity.hpp"

#include <optional>
#include <vector>

namespace serrinlab {

/// Evaluates an identity on the standard fields of a domain:
///   classical_1_2   Dirichlet torsion u, q about z
///   general_1_9     u Dirichlet torsion, v Neumann torsion
///   mother_3_2/3_3  Neumann torsion u, q about z
///   neumann_1_11    Neumann torsion u, q about z
/// z defaults to the domain center.
IdentityReport evaluate_identity(const SpacePtr& space, IdentityId id, const std::optional<Vec2>& z = std::nullopt);

struct ConvergenceLevel {
  double h_target = 0.0;
  double h = 0.0;
  std::size_t dofs = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_residual = 0.0;
  double rel_residual = 0.0;
};

struct ConvergenceStudy {
  IdentityId id = IdentityId::classical_1_2;
  std::vector<ConvergenceLevel> levels;  // in the order of h_list
  bool rigid = false;     // both sides at the noise floor on the finest level; no order fitted
  bool monotone = false;  // rel_residual strictly decreasing as h decreases
  std::optional<double> order;  // least-squares slope of log rel_residual against log h
};

/// Both sides of an identity below this are treated as zero.
inline constexpr double kRigidFloor = 1e-6;

/// Requires at least three levels. Throws InvalidArgument.
ConvergenceStudy convergence_study(const StarDomain& domain, IdentityId id, const std::vector<double>& h_list);

}  // namespace serrinlab
