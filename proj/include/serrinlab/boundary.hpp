#pragma once

#include "serrinlab/fem.hpp"

#include <functional>
#include <iosfwd>

namespace serrinlab {

/// Boundary values of the field in theta order.
BoundaryFunction trace(const FemField& field);

/// Analytic function of the boundary frame sampled at the boundary nodes.
BoundaryFunction sample_boundary(const FemSpace& space, const std::function<double(const BoundaryFrame&)>& f);

/// Normal derivative at the boundary nodes.
///
/// For fields with a known Laplacian f (torsion and harmonic solutions) this is the
/// variationally consistent flux: the boundary function lambda with
/// M_Gamma lambda = (K c + f F) on the boundary rows. For a Neumann torsion solve it
/// reproduces R_discrete exactly. Generic fields use <recovered grad, nu>.
BoundaryFunction normal_derivative(const FemField& field);

/// <recovered grad, nu> regardless of the field kind.
BoundaryFunction normal_derivative_recovered(const FemField& field);

/// Signed tangential component d/ds of the trace, by spectral differentiation.
/// The `tangential` member of the result holds the same values.
BoundaryFunction tangential_gradient(const FemField& field);

struct TangentialAudit {
  double vs_recovered = 0.0;    // max |spectral - <recovered grad, tau>|
  double vs_finite_diff = 0.0;  // max |spectral - periodic 4th-order difference of the trace|
};
TangentialAudit audit_tangential(const FemField& field);

/// Normal and tangential components and the assembled gradient at the boundary nodes.
struct BoundaryGradient {
  BoundaryFunction normal;
  BoundaryFunction tangential;
  std::vector<Vec2> grad;  // normal * nu + tangential * tau
};
BoundaryGradient boundary_gradient(const FemField& field);

/// d/ds by periodic spectral differentiation in theta.
BoundaryFunction arclength_derivative(const BoundaryFunction& f);
/// d/ds by periodic fourth-order central differences in theta.
BoundaryFunction arclength_derivative_fd4(const BoundaryFunction& f);
/// d^2/ds^2 as two spectral first-derivative passes.
BoundaryFunction laplace_beltrami(const BoundaryFunction& f);

/// Arclength coordinate of every node measured from theta = 0.
VectorXd arclength_coordinates(const BoundaryFunction& f);

double surface_integral(const BoundaryFunction& f);
double surface_l2_norm(const BoundaryFunction& f);
double max_abs(const BoundaryFunction& f);
double oscillation(const BoundaryFunction& f);

/// Discrete Holder seminorm: max |f_i - f_j| / d_ij^alpha over node pairs whose
/// arclength separation d_ij along the curve is at least min_separation.
double holder_seminorm(const BoundaryFunction& f, double alpha, double min_separation);

struct IbpResidual {
  double gradient_form = 0.0;   // integral of <grad_G v, grad_G w>
  double laplacian_form = 0.0;  // -integral of v lap_G w
  double abs_residual = 0.0;
  double rel_residual = 0.0;
};
IbpResidual check_integration_by_parts(const BoundaryFunction& v, const BoundaryFunction& w);
IbpResidual check_integration_by_parts(const FemField& v, const FemField& w);

/// <grad^2 u grad u, nu> at the boundary nodes.
///
/// For fields with a known Laplacian the Hessian is taken in the boundary frame:
/// u_nn = lap u - lap_G u - kappa u_n and u_nt = d/ds u_n - kappa u_t. Generic fields
/// use the recovered nodal Hessian.
BoundaryFunction hessian_flux(const FemField& u);

/// Same quantity from the recovered nodal Hessian and the boundary gradient.
BoundaryFunction hessian_flux_recovered(const FemField& u);

enum class BoundaryKind { dirichlet, neumann };

/// Pointwise residual <grad^2 u grad u, nu> - RHS(kind) with the recovered Hessian.
/// Throws KindMismatch when the boundary data of u do not match `kind`.
BoundaryFunction lemma21_residual(const FemField& u, BoundaryKind kind);

/// Writes "theta,arclength,value" rows.
void write_csv(std::ostream& out, const BoundaryFunction& f);

}  // namespace serrinlab
