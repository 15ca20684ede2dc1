#pragma once

#include "serrinlab/fem.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace serrinlab {

enum class PsiVariant { standard, improved };

/// Stability profile in dimension n: t (n = 2), t max(log(1/t), 1) (n = 3), t^(2/(n-1))
/// (n >= 4); the improved variant t^(4/(n+1)) exists only for n >= 4.
double psi(double t, int n, PsiVariant variant = PsiVariant::standard);

/// Minimum point of a Neumann torsion field: best node, refined by minimizing the
/// element quadratic on the elements around it. Throws BoundaryMinimum when the
/// minimizer lies on the boundary.
Vec2 argmin_point(const FemField& u);

/// Gradient of the quadratic field at an arbitrary point. Throws OutsideDomain.
Vec2 gradient_at(const FemField& u, const Vec2& x);

struct DeviationSet {
  double osc_gamma_u = 0.0;
  double grad_inf = 0.0;         // max |grad_G u|
  double grad_l2 = 0.0;          // |grad_G u|_{2,Gamma}
  double tangential_norm = 0.0;  // sqrt(|ubar-u|_{2,Gamma}^2 + grad_l2^2)
  double c1alpha_norm = 0.0;     // |ubar-u|_inf + |grad_G u|_inf + [grad_G u]_alpha
  double alpha = 0.5;

  double uniform() const { return osc_gamma_u + grad_inf; }
  double weak() const { return osc_gamma_u + grad_l2; }
};

/// Hölder quotients use node pairs at least one mesh size apart along the curve.
DeviationSet deviations(const FemField& u, double alpha = 0.5);

struct GeometricBoundsReport {
  double min_slack_square = 0.0;  // min over nodes of (ubar-u) - delta^2/2
  double min_slack_linear = 0.0;  // min over nodes of (ubar-u) - r_i delta/2
  Vec2 z = Vec2::Zero();
  double delta_z = 0.0;
  double delta_z_lower = 0.0;  // (r_i^2 - 2 osc) / (2 |grad u|_inf)
  double remark_slack = 0.0;   // delta_z - delta_z_lower
  double r_i = 0.0;
  double grad_inf_omega = 0.0;
  double osc_gamma_u = 0.0;
};
GeometricBoundsReport geometric_bounds_check(const FemField& u);

struct OscillationReport {
  Vec2 z = Vec2::Zero();
  double grad_h_at_z = 0.0;
  double osc_gamma_h = 0.0;
  double W = 0.0;  // |sqrt(delta) D2h|_{2,Omega}
  double V = 0.0;  // integral of (ubar-u)|D2h|^2
  double tangential_norm = 0.0;
  double osc_gamma_u = 0.0;
  double volume_ratio = 0.0;       // V / ((1 + osc u) |ubar-u|_{1,2,tau}^2)
  double oscillation_ratio = 0.0;  // osc h / W
  double rho_i = 0.0;
  double rho_e = 0.0;
  double radii_slack = 0.0;  // rho_e^2 - rho_i^2 - sqrt(|Omega| / pi)(rho_e - rho_i)
};
/// h = q^z - u for a Neumann torsion field. Throws GradientNotZeroAtZ when |grad h(z)| > grad_tol.
OscillationReport oscillation_bound_check(const FemField& u, const Vec2& z, double grad_tol = 1e-4);

struct StrongDeviationReport {
  double flux_l2 = 0.0;         // |R - f_nu|_{2,Gamma}
  double flux_c0alpha = 0.0;    // |R - f_nu|_inf + [R - f_nu]_alpha
  double c1alpha_deviation = 0.0;
  double ratio = 0.0;  // flux_c0alpha / c1alpha_deviation, 0 when the deviation vanishes
  double f_trace_max = 0.0;
  double laplacian_defect = 0.0;
  double R = 0.0;
};
/// f = u - w with w harmonic and w = u on the boundary.
StrongDeviationReport strong_deviation_pipeline(const FemField& u, double alpha = 0.5);

struct FamilySpec {
  int mode = 2;
  std::vector<double> amplitudes;
  double rho0 = 1.0;
  double h_target = 0.05;
  double alpha = 0.5;
  int workers = 1;
  double richardson_order = 2.0;
};

struct StabilityRecord {
  double epsilon = 0.0;
  double rho_gap = 0.0;
  DeviationSet deviations;
  std::vector<std::pair<std::string, double>> psi_values;  // psi (N = 2) of each deviation kind
  Vec2 z = Vec2::Zero();
  double delta_z = 0.0;
  double mesh_h = 0.0;
  double rho_gap_coarse = 0.0;  // unextrapolated values on the two levels
  double rho_gap_fine = 0.0;
  bool small_regime = false;  // uniform deviation below min(1, r_i^2/4)
  StrongDeviationReport strong;
  double volume_ratio = 0.0;
  bool flagged = false;
  std::string flag_reason;
};

struct ExponentFit {
  std::string deviation_kind;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int n_points = 0;
  double c_fit = 0.0;  // max rho_gap / psi(deviation) over the fitted records
};

struct SweepResult {
  FamilySpec spec;
  std::vector<StabilityRecord> records;  // sorted by epsilon
  std::vector<ExponentFit> fits;
  ExponentFit strong_flux_fit;  // |R - f_nu|_2 against epsilon
  const ExponentFit& fit(std::string_view kind) const;
};

/// Names of the deviation kinds that are fitted: uniform, weak, strong, osc, grad_inf, grad_l2.
const std::vector<std::string>& deviation_kinds();
double deviation_value(const DeviationSet& d, std::string_view kind);

/// Least-squares line through (log x, log y).
ExponentFit fit_log_log(const std::vector<double>& x, const std::vector<double>& y, std::string kind);

/// Builds one record per amplitude on levels h and h/2 with Richardson extrapolation,
/// then fits log(rho_gap) against log(deviation) for every kind. Records that fail an
/// audit are flagged and excluded, as are records with rho_gap <= 1e-10.
SweepResult stability_sweep(const FamilySpec& spec);

}  // namespace serrinlab
