#include "serrinlab/stability.hpp"

#include "serrinlab/boundary.hpp"
#include "serrinlab/errors.hpp"
#include "serrinlab/identity.hpp"
#include "serrinlab/recovery.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

namespace serrinlab {

namespace {

constexpr double kRigidGap = 1e-10;

// Gradient (reference coordinates) of the element quadratic at ref.
Eigen::Vector2d reference_gradient(const FemField& u, std::size_t e, const Eigen::Vector2d& ref) {
  const auto& t = u.space().mesh().triangles[e];
  const auto G = p2_shape_grad(ref);
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (int a = 0; a < 6; ++a) g += u.gauge_coeffs()[t[a]] * G.row(a).transpose();
  return g;
}

double reference_value(const FemField& u, std::size_t e, const Eigen::Vector2d& ref) {
  const auto& t = u.space().mesh().triangles[e];
  const auto N = p2_shape(ref);
  double v = 0.0;
  for (int a = 0; a < 6; ++a) v += u.coeffs()[t[a]] * N[a];
  return v;
}

double boundary_gap_l2(const BoundaryFunction& tr) {
  const double ubar = tr.values.maxCoeff();
  return surface_l2_norm(tr.with_values((ubar - tr.values.array()).matrix()));
}

std::vector<double> nodal_distances(const FemSpace& space) {
  const BoundarySampler sampler(space.domain());
  std::vector<double> d(space.num_dofs());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = space.mesh().on_boundary[i] ? 0.0 : sampler.distance(space.mesh().nodes[i]);
  return d;
}

double extrapolate(double coarse, double fine, double order) {
  const double r = fine + (fine - coarse) / (std::pow(2.0, order) - 1.0);
  return r >= 0.0 ? r : fine;
}

struct LevelData {
  double rho_gap = 0.0;
  DeviationSet dev;
  Vec2 z = Vec2::Zero();
  double h = 0.0;
  double volume_ratio = 0.0;
  std::optional<StrongDeviationReport> strong;
};

LevelData measure_level(const StarDomain& domain, double h, double alpha, bool with_strong) {
  const SpacePtr space = make_space(domain, h);
  const FemField u = solve_torsion_neumann(space);
  LevelData d;
  d.h = space->h();
  d.z = argmin_point(u);
  const auto [rho_i, rho_e] = radii_about(domain, d.z);
  d.rho_gap = rho_e - rho_i;
  d.dev = deviations(u, alpha);
  d.volume_ratio = oscillation_bound_check(u, d.z).volume_ratio;
  if (with_strong) d.strong = strong_deviation_pipeline(u, alpha);
  return d;
}

StabilityRecord sweep_member(const FamilySpec& spec, double epsilon) {
  StabilityRecord r;
  r.epsilon = epsilon;
  try {
    std::vector<FourierMode> modes;
    if (epsilon != 0.0) modes.push_back({spec.mode, epsilon, 0.0});
    const StarDomain domain = StarDomain::fourier(spec.rho0, modes);
    const LevelData coarse = measure_level(domain, spec.h_target, spec.alpha, false);
    const LevelData fine = measure_level(domain, 0.5 * spec.h_target, spec.alpha, true);
    const double p = spec.richardson_order;
    r.rho_gap_coarse = coarse.rho_gap;
    r.rho_gap_fine = fine.rho_gap;
    r.rho_gap = extrapolate(coarse.rho_gap, fine.rho_gap, p);
    r.deviations.alpha = spec.alpha;
    r.deviations.osc_gamma_u = extrapolate(coarse.dev.osc_gamma_u, fine.dev.osc_gamma_u, p);
    r.deviations.grad_inf = extrapolate(coarse.dev.grad_inf, fine.dev.grad_inf, p);
    r.deviations.grad_l2 = extrapolate(coarse.dev.grad_l2, fine.dev.grad_l2, p);
    r.deviations.tangential_norm = extrapolate(coarse.dev.tangential_norm, fine.dev.tangential_norm, p);
    r.deviations.c1alpha_norm = extrapolate(coarse.dev.c1alpha_norm, fine.dev.c1alpha_norm, p);
    r.z = fine.z;
    r.delta_z = distance_to_boundary(domain, fine.z);
    r.mesh_h = fine.h;
    r.strong = *fine.strong;
    r.volume_ratio = fine.volume_ratio;
    const double r_i = measures(domain).r_i;
    r.small_regime = r.deviations.uniform() < std::min(1.0, 0.25 * r_i * r_i);
    for (const auto& kind : deviation_kinds()) {
      const double t = deviation_value(r.deviations, kind);
      r.psi_values.emplace_back(kind, t > 0.0 ? psi(t, 2) : 0.0);
    }
  } catch (const Error& e) {
    r.flagged = true;
    r.flag_reason = std::string(to_string(e.code())) + ": " + e.what();
  }
  return r;
}

}  // namespace

double psi(double t, int n, PsiVariant variant) {
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "psi needs t > 0");
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "psi needs n >= 2");
  if (variant == PsiVariant::improved) {
    if (n < 4) throw Error(ErrorCode::InvalidVariant, "the improved profile needs n >= 4");
    return std::pow(t, 4.0 / (n + 1));
  }
  if (n == 2) return t;
  if (n == 3) return t * std::max(std::log(1.0 / t), 1.0);
  return std::pow(t, 2.0 / (n - 1));
}

Vec2 gradient_at(const FemField& u, const Vec2& x) {
  const auto loc = u.space().locate(x);
  if (!loc) throw Error(ErrorCode::OutsideDomain, "point lies outside the mesh");
  const auto& [e, ref] = *loc;
  const Mat2 J = u.space().map_jacobian(e, ref);
  return J.transpose().inverse() * reference_gradient(u, e, ref);
}

Vec2 argmin_point(const FemField& u) {
  const FemSpace& space = u.space();
  const Mesh& mesh = space.mesh();
  Eigen::Index best;
  double best_value = u.coeffs().minCoeff(&best);
  Vec2 z = mesh.nodes[best];
  bool refined = false;
  for (std::size_t e = 0; e < mesh.triangles.size(); ++e) {
    const auto& t = mesh.triangles[e];
    if (std::find(t.begin(), t.end(), int(best)) == t.end()) continue;
    // The field is quadratic in the reference coordinates whatever the element map.
    const Eigen::Vector2d g0 = reference_gradient(u, e, Eigen::Vector2d::Zero());
    Eigen::Matrix2d H;
    H.col(0) = reference_gradient(u, e, Eigen::Vector2d(1, 0)) - g0;
    H.col(1) = reference_gradient(u, e, Eigen::Vector2d(0, 1)) - g0;
    if (std::abs(H.determinant()) < 1e-14 * (1.0 + H.squaredNorm())) continue;
    const Eigen::Vector2d ref = -H.inverse() * g0;
    constexpr double slack = 1e-12;
    if (ref.x() < -slack || ref.y() < -slack || ref.x() + ref.y() > 1.0 + slack) continue;
    const double v = reference_value(u, e, ref);
    if (v < best_value) {
      best_value = v;
      z = space.map_point(e, ref);
      refined = true;
    }
  }
  if ((!refined && mesh.on_boundary[best]) || !space.domain().contains(z, -1e-12)) {
    throw Error(ErrorCode::BoundaryMinimum, "minimum of u lies on the boundary");
  }
  return z;
}

DeviationSet deviations(const FemField& u, double alpha) {
  const BoundaryFunction tr = trace(u);
  const BoundaryFunction ut = tangential_gradient(u);
  DeviationSet d;
  d.alpha = alpha;
  d.osc_gamma_u = oscillation(tr);
  d.grad_inf = max_abs(ut);
  d.grad_l2 = surface_l2_norm(ut);
  const double gap_l2 = boundary_gap_l2(tr);
  d.tangential_norm = std::sqrt(gap_l2 * gap_l2 + d.grad_l2 * d.grad_l2);
  d.c1alpha_norm = d.osc_gamma_u + d.grad_inf + holder_seminorm(ut, alpha, u.space().h());
  return d;
}

GeometricBoundsReport geometric_bounds_check(const FemField& u) {
  const FemSpace& space = u.space();
  const BoundaryFunction tr = trace(u);
  const double ubar = tr.values.maxCoeff();
  GeometricBoundsReport r;
  r.r_i = measures(space.domain()).r_i;
  r.osc_gamma_u = oscillation(tr);
  const std::vector<double> delta = nodal_distances(space);
  r.min_slack_square = r.min_slack_linear = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < delta.size(); ++i) {
    const double gap = ubar - u.coeffs()[i];
    r.min_slack_square = std::min(r.min_slack_square, gap - 0.5 * delta[i] * delta[i]);
    r.min_slack_linear = std::min(r.min_slack_linear, gap - 0.5 * r.r_i * delta[i]);
  }
  const GradientField g = recover_gradient(u);
  for (std::size_t i = 0; i < space.num_dofs(); ++i) r.grad_inf_omega = std::max(r.grad_inf_omega, g.at(i).norm());
  r.z = argmin_point(u);
  r.delta_z = BoundarySampler(space.domain()).distance(r.z);
  r.delta_z_lower = (r.r_i * r.r_i - 2.0 * r.osc_gamma_u) / (2.0 * r.grad_inf_omega);
  r.remark_slack = r.delta_z - r.delta_z_lower;
  return r;
}

OscillationReport oscillation_bound_check(const FemField& u, const Vec2& z, double grad_tol) {
  const FemSpace& space = u.space();
  OscillationReport r;
  r.z = z;
  r.grad_h_at_z = gradient_at(u, z).norm();
  if (r.grad_h_at_z > grad_tol) {
    throw Error(ErrorCode::GradientNotZeroAtZ, "|grad h(z)| = " + std::to_string(r.grad_h_at_z));
  }
  const BoundaryFunction tr = trace(u);
  const double ubar = tr.values.maxCoeff();
  const auto& frames = space.boundary_frames();
  VectorXd h_gamma(tr.values.size());
  for (Eigen::Index i = 0; i < h_gamma.size(); ++i) h_gamma[i] = 0.5 * (frames[i].point - z).squaredNorm() - tr.values[i];
  r.osc_gamma_h = h_gamma.maxCoeff() - h_gamma.minCoeff();

  const HessianField H = recover_hessian(u);
  const std::vector<double> delta = nodal_distances(space);
  double w2 = 0.0;
  r.V = 0.0;
  for (std::size_t e = 0; e < space.num_elements(); ++e) {
    const auto& t = space.mesh().triangles[e];
    for (int q = 0; q < FemSpace::kQuadPoints; ++q) {
      const auto& N = FemSpace::shape_values(q);
      double d = 0.0;
      for (int a = 0; a < 6; ++a) d += N[a] * delta[t[a]];
      const double h2 = (Mat2::Identity() - H.at_qp(space, e, q)).squaredNorm();
      w2 += std::max(d, 0.0) * h2 * space.qp_weight(e, q);
      r.V += (ubar - u.value_at_qp(e, q)) * h2 * space.qp_weight(e, q);
    }
  }
  r.W = std::sqrt(w2);

  r.osc_gamma_u = oscillation(tr);
  const double gap_l2 = boundary_gap_l2(tr);
  const double grad_l2 = surface_l2_norm(tangential_gradient(u));
  r.tangential_norm = std::sqrt(gap_l2 * gap_l2 + grad_l2 * grad_l2);
  const double tn2 = r.tangential_norm * r.tangential_norm;
  r.volume_ratio = tn2 > 0.0 ? r.V / ((1.0 + r.osc_gamma_u) * tn2) : 0.0;
  r.oscillation_ratio = r.W > 0.0 ? r.osc_gamma_h / r.W : 0.0;

  std::tie(r.rho_i, r.rho_e) = radii_about(space.domain(), z);
  r.radii_slack = (r.rho_e * r.rho_e - r.rho_i * r.rho_i) - std::sqrt(space.area() / M_PI) * (r.rho_e - r.rho_i);
  return r;
}

StrongDeviationReport strong_deviation_pipeline(const FemField& u, double alpha) {
  const SpacePtr& space = u.space_ptr();
  const BoundaryFunction tr = trace(u);
  const FemField w = solve_harmonic_dirichlet(space, tr);
  const FemField f(space, u.coeffs() - w.coeffs(), FieldKind::torsion_dirichlet);
  StrongDeviationReport r;
  const TorsionAudit audit = audit_torsion(f);
  r.laplacian_defect = audit.laplacian_defect;
  if (!audit.passed) throw Error(ErrorCode::NotTorsion, "u - w fails the strong-form audit");
  r.f_trace_max = max_abs(trace(f));
  if (r.f_trace_max > 1e-10 * (1.0 + u.coeffs().cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::NotDirichlet, "u - w does not vanish on the boundary");
  }
  r.R = space->R_discrete();
  const BoundaryFunction fn = normal_derivative(f);
  const BoundaryFunction defect = fn.with_values((r.R - fn.values.array()).matrix());
  r.flux_l2 = surface_l2_norm(defect);
  r.flux_c0alpha = max_abs(defect) + holder_seminorm(defect, alpha, space->h());
  r.c1alpha_deviation = deviations(u, alpha).c1alpha_norm;
  r.ratio = r.c1alpha_deviation > 1e-12 ? r.flux_c0alpha / r.c1alpha_deviation : 0.0;
  return r;
}

const std::vector<std::string>& deviation_kinds() {
  static const std::vector<std::string> kinds{"uniform", "weak", "strong", "osc", "grad_inf", "grad_l2"};
  return kinds;
}

double deviation_value(const DeviationSet& d, std::string_view kind) {
  if (kind == "uniform") return d.uniform();
  if (kind == "weak") return d.weak();
  if (kind == "strong") return d.c1alpha_norm;
  if (kind == "osc") return d.osc_gamma_u;
  if (kind == "grad_inf") return d.grad_inf;
  if (kind == "grad_l2") return d.grad_l2;
  throw Error(ErrorCode::InvalidArgument, "unknown deviation kind '" + std::string(kind) + "'");
}

ExponentFit fit_log_log(const std::vector<double>& x, const std::vector<double>& y, std::string kind) {
  ExponentFit f;
  f.deviation_kind = std::move(kind);
  f.n_points = int(x.size());
  if (x.size() < 2) {
    f.slope = f.intercept = f.r_squared = std::numeric_limits<double>::quiet_NaN();
    return f;
  }
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= double(n);
  my /= double(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx, dy = std::log(y[i]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

const ExponentFit& SweepResult::fit(std::string_view kind) const {
  for (const auto& f : fits) {
    if (f.deviation_kind == kind) return f;
  }
  throw Error(ErrorCode::InvalidArgument, "no fit for deviation kind '" + std::string(kind) + "'");
}

SweepResult stability_sweep(const FamilySpec& spec) {
  if (spec.amplitudes.empty()) throw Error(ErrorCode::InvalidArgument, "empty amplitude grid");
  if (!(spec.h_target > 0.0)) throw Error(ErrorCode::InvalidArgument, "h_target must be positive");
  SweepResult out;
  out.spec = spec;
  const std::size_t workers = std::size_t(std::max(1, spec.workers));
  for (std::size_t start = 0; start < spec.amplitudes.size(); start += workers) {
    std::vector<std::future<StabilityRecord>> jobs;
    for (std::size_t i = start; i < std::min(spec.amplitudes.size(), start + workers); ++i) {
      jobs.push_back(std::async(std::launch::async, sweep_member, std::cref(spec), spec.amplitudes[i]));
    }
    for (auto& j : jobs) out.records.push_back(j.get());
  }
  std::sort(out.records.begin(), out.records.end(),
            [](const StabilityRecord& a, const StabilityRecord& b) { return a.epsilon < b.epsilon; });

  std::vector<const StabilityRecord*> usable;
  for (const auto& r : out.records) {
    if (!r.flagged && r.rho_gap > kRigidGap) usable.push_back(&r);
  }
  for (const auto& kind : deviation_kinds()) {
    std::vector<double> x, y;
    for (const auto* r : usable) {
      const double t = deviation_value(r->deviations, kind);
      if (t <= 0.0) continue;
      x.push_back(t);
      y.push_back(r->rho_gap);
    }
    ExponentFit f = fit_log_log(x, y, kind);
    for (std::size_t i = 0; i < x.size(); ++i) f.c_fit = std::max(f.c_fit, y[i] / psi(x[i], 2));
    out.fits.push_back(f);
  }
  std::vector<double> eps, flux;
  for (const auto* r : usable) {
    if (r->strong.flux_l2 <= 0.0) continue;
    eps.push_back(std::abs(r->epsilon));
    flux.push_back(r->strong.flux_l2);
  }
  out.strong_flux_fit = fit_log_log(eps, flux, "flux_vs_epsilon");
  return out;
}

}  // namespace serrinlab
