#pragma once

#include "serrinlab/boundary.hpp"
#include "serrinlab/recovery.hpp"

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace serrinlab {

enum class IdentityId { classical_1_2, general_1_9, mother_3_2, mother_3_3, neumann_1_11 };

std::string_view to_string(IdentityId id);
IdentityId identity_from_string(std::string_view name);
/// Human readable label of the identity, stored alongside the id in reports.
std::string_view anchor(IdentityId id);

struct IdentityReport {
  IdentityId id = IdentityId::classical_1_2;
  std::vector<std::pair<std::string, double>> terms;  // in a fixed order
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_residual = 0.0;
  double rel_residual = 0.0;
  double h = 0.0;
  std::string fingerprint;
  std::vector<std::pair<std::string, double>> diagnostics;

  double term(std::string_view name) const;
  double max_abs_term() const;
};

/// Relative residual floor.
inline constexpr double kResidualFloor = 1e-14;

struct PFunction {
  double ubar = 0.0;
  VectorXd p_nodal;         // 0.5 |grad u|^2 + (ubar - u) from recovered gradients
  VectorXd delta_p_nodal;   // |H|^2 - (tr H)^2 / N from recovered Hessians
  std::vector<double> delta_p_qp;  // same at the volume quadrature points
  std::size_t clamped = 0;  // points where the formula went negative and was set to 0
  double min_delta_p = 0.0;
};
PFunction p_function(const FemField& u);

/// Strong-form audit of a torsion field: relative L2 norm of tr(recovered Hessian) - N.
struct TorsionAudit {
  double laplacian_defect = 0.0;
  bool passed = false;
};
TorsionAudit audit_torsion(const FemField& u, double tol = 0.05);

/// q^z(x) = |x - z|^2 / 2 + a.
struct Quadratic {
  Vec2 z = Vec2::Zero();
  double a = 0.0;

  double operator()(const Vec2& x) const { return 0.5 * (x - z).squaredNorm() + a; }
  Vec2 gradient(const Vec2& x) const { return x - z; }
};

IdentityReport eval_general_identity(const FemField& u, const FemField& v);
std::pair<IdentityReport, IdentityReport> eval_mother_identity(const FemField& u, const Vec2& z, double a = 0.0);
IdentityReport eval_neumann_identity(const FemField& u, const Vec2& z);
IdentityReport eval_classical_identity(const FemField& u, const Vec2& z, double a = 0.0);

struct RigidityVerdict {
  double s = 0.0;  // signed right-hand side of the Neumann identity
  double V = 0.0;  // volume term
  double sphere_deviation = 0.0;
  double tol = 0.0;
  bool rhs_nonpositive = false;
  bool v_small = false;
  bool contract_holds = false;
};
RigidityVerdict rigidity_test(const FemField& u, const Vec2& z, double tol = 1e-6);

}  // namespace serrinlab
