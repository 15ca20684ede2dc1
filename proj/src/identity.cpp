#include "serrinlab/identity.hpp"

#include "serrinlab/errors.hpp"

#include <algorithm>
#include <cmath>

namespace serrinlab {

namespace {

constexpr double N = kDim;

struct BoundaryData {
  BoundaryFunction tr;
  BoundaryFunction un;
  BoundaryFunction ut;
  std::vector<Vec2> grad;
  VectorXd gap;  // ubar - u on the boundary
  double ubar = 0.0;
};

BoundaryData boundary_data(const FemField& u) {
  BoundaryData d;
  d.tr = trace(u);
  BoundaryGradient bg = boundary_gradient(u);
  d.un = std::move(bg.normal);
  d.ut = std::move(bg.tangential);
  d.grad = std::move(bg.grad);
  d.ubar = d.tr.values.maxCoeff();
  d.gap = (d.ubar - d.tr.values.array()).matrix();
  return d;
}

double delta_p(const Mat2& H) {
  const double tr = H.trace();
  return H.squaredNorm() - tr * tr / N;
}

double integrate(const BoundaryFunction& like, const VectorXd& values) { return values.dot(like.weights); }

void finish(IdentityReport& r, const FemField& u) {
  r.abs_residual = std::abs(r.lhs - r.rhs);
  r.rel_residual = r.abs_residual / std::max({std::abs(r.lhs), std::abs(r.rhs), kResidualFloor});
  r.h = u.space().h();
  r.fingerprint = u.space().domain().fingerprint();
}

void require_torsion(const FemField& f, const char* role) {
  const TorsionAudit audit = audit_torsion(f);
  if (!audit.passed) {
    throw Error(ErrorCode::NotTorsion, std::string(role) + " fails the strong-form audit (defect " +
                                           std::to_string(audit.laplacian_defect) + ")");
  }
}

}  // namespace

std::string_view to_string(IdentityId id) {
  switch (id) {
    case IdentityId::classical_1_2: return "classical_1_2";
    case IdentityId::general_1_9: return "general_1_9";
    case IdentityId::mother_3_2: return "mother_3_2";
    case IdentityId::mother_3_3: return "mother_3_3";
    case IdentityId::neumann_1_11: return "neumann_1_11";
  }
  return "unknown";
}

IdentityId identity_from_string(std::string_view name) {
  for (IdentityId id : {IdentityId::classical_1_2, IdentityId::general_1_9, IdentityId::mother_3_2,
                        IdentityId::mother_3_3, IdentityId::neumann_1_11}) {
    if (to_string(id) == name) return id;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown identity '" + std::string(name) + "'");
}

std::string_view anchor(IdentityId id) {
  switch (id) {
    case IdentityId::classical_1_2: return "Dirichlet torsion identity: int (-u) dP = 1/2 int (u_n^2 - R^2)(u_n - q_n)";
    case IdentityId::general_1_9: return "general two-solution identity for u, v with lap = N";
    case IdentityId::mother_3_2: return "quadratic-case identity, full-gradient form";
    case IdentityId::mother_3_3: return "quadratic-case identity, normal/tangential form";
    case IdentityId::neumann_1_11: return "constant Neumann identity: int (ubar-u)|D2 h|^2 = boundary terms";
  }
  return "";
}

double IdentityReport::term(std::string_view name) const {
  for (const auto& [k, v] : terms) {
    if (k == name) return v;
  }
  throw Error(ErrorCode::InvalidArgument, "no term named '" + std::string(name) + "'");
}

double IdentityReport::max_abs_term() const {
  double m = 0.0;
  for (const auto& kv : terms) m = std::max(m, std::abs(kv.second));
  return m;
}

PFunction p_function(const FemField& u) {
  const FemSpace& space = u.space();
  const HessianField H = recover_hessian(u);
  const GradientField g = recover_gradient(u);
  PFunction p;
  p.ubar = trace(u).values.maxCoeff();
  const std::size_t nd = space.num_dofs();
  p.p_nodal.resize(nd);
  p.delta_p_nodal.resize(nd);
  for (std::size_t i = 0; i < nd; ++i) {
    p.p_nodal[i] = 0.5 * g.at(i).squaredNorm() + (p.ubar - u.coeffs()[i]);
    p.delta_p_nodal[i] = delta_p(H.at_node(i));
  }
  p.delta_p_qp.resize(space.num_elements() * FemSpace::kQuadPoints);
  p.min_delta_p = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < space.num_elements(); ++e) {
    for (int q = 0; q < FemSpace::kQuadPoints; ++q) {
      double v = delta_p(H.at_qp(space, e, q));
      p.min_delta_p = std::min(p.min_delta_p, v);
      if (v < 0.0) {
        v = 0.0;
        ++p.clamped;
      }
      p.delta_p_qp[e * FemSpace::kQuadPoints + q] = v;
    }
  }
  return p;
}

TorsionAudit audit_torsion(const FemField& u, double tol) {
  const FemSpace& space = u.space();
  const HessianField H = recover_hessian(u);
  const double defect2 = volume_integral(space, [&](std::size_t e, int q, const Vec2&) {
    const double d = H.at_qp(space, e, q).trace() - N;
    return d * d;
  });
  TorsionAudit audit;
  audit.laplacian_defect = std::sqrt(defect2 / space.area()) / N;
  audit.passed = audit.laplacian_defect <= tol;
  return audit;
}

IdentityReport eval_general_identity(const FemField& u, const FemField& v) {
  if (u.space_ptr() != v.space_ptr()) throw Error(ErrorCode::InvalidArgument, "fields live on different meshes");
  require_torsion(u, "u");
  require_torsion(v, "v");
  const FemSpace& space = u.space();
  const PFunction p = p_function(u);
  const HessianField Hv = recover_hessian(v);
  const BoundaryData bu = boundary_data(u);
  const BoundaryData bv = boundary_data(v);
  const VectorXd hflux = hessian_flux(u).values;

  const double V1 = volume_integral(space, [&](std::size_t e, int q, const Vec2&) {
    return (p.ubar - u.value_at_qp(e, q)) * p.delta_p_qp[e * FemSpace::kQuadPoints + q];
  });
  const double V2 = volume_integral(space, [&](std::size_t e, int q, const Vec2&) {
    const Vec2 g = u.gradient_at_qp(e, q);
    return g.dot((Mat2::Identity() - Hv.at_qp(space, e, q)) * g);
  });

  const std::size_t nb = space.num_boundary();
  VectorXd s1(nb), s2(nb), s3(nb), s4(nb), s5(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    const double un = bu.un.values[i];
    const double vn = bv.un.values[i];
    const double g = bu.gap[i];
    s1[i] = g * hflux[i];
    s2[i] = 0.5 * bu.grad[i].squaredNorm() * (un + vn);
    s3[i] = -bv.grad[i].dot(bu.grad[i]) * un;
    s4[i] = -g * un;
    s5[i] = N * g * (un - vn);
  }
  IdentityReport r;
  r.id = IdentityId::general_1_9;
  r.terms = {{"volume_delta_p", V1},
             {"volume_hessian_v", V2},
             {"boundary_hessian_flux", integrate(bu.tr, s1)},
             {"boundary_gradient_sq", integrate(bu.tr, s2)},
             {"boundary_cross", integrate(bu.tr, s3)},
             {"boundary_ubar_un", integrate(bu.tr, s4)},
             {"boundary_ubar_un_minus_vn", integrate(bu.tr, s5)}};
  r.lhs = V1 + V2;
  r.rhs = 0.0;
  for (std::size_t k = 2; k < r.terms.size(); ++k) r.rhs += r.terms[k].second;
  r.diagnostics = {{"ubar", p.ubar}, {"osc_un", oscillation(bu.un)}, {"delta_p_clamped", double(p.clamped)}};
  finish(r, u);
  return r;
}

std::pair<IdentityReport, IdentityReport> eval_mother_identity(const FemField& u, const Vec2& z, double a) {
  require_torsion(u, "u");
  const FemSpace& space = u.space();
  const Quadratic q{z, a};
  const PFunction p = p_function(u);
  const BoundaryData bu = boundary_data(u);
  const VectorXd hflux = hessian_flux(u).values;
  const auto& frames = space.boundary_frames();

  const double V = volume_integral(space, [&](std::size_t e, int k, const Vec2&) {
    return (p.ubar - u.value_at_qp(e, k)) * p.delta_p_qp[e * FemSpace::kQuadPoints + k];
  });

  const std::size_t nb = space.num_boundary();
  VectorXd m1(nb), m2(nb), m3(nb), m4(nb), a1(nb), a2(nb), a3(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    const Vec2 gq = q.gradient(frames[i].point);
    const double qn = gq.dot(frames[i].nu);
    const double qt = gq.dot(frames[i].tangent);
    const double un = bu.un.values[i];
    const double ut = bu.ut.values[i];
    const double g = bu.gap[i];
    m1[i] = 0.5 * bu.grad[i].squaredNorm() * (un + qn);
    m2[i] = -gq.dot(bu.grad[i]) * un;
    m3[i] = g * hflux[i];
    m4[i] = g * ((N - 1) * un - N * qn);
    a1[i] = 0.5 * un * un * (un - qn);
    a2[i] = 0.5 * ut * ut * (un + qn);
    a3[i] = -qt * ut * un;
  }
  IdentityReport full;
  full.id = IdentityId::mother_3_2;
  full.terms = {{"volume_delta_p", V},
                {"boundary_gradient_sq", integrate(bu.tr, m1)},
                {"boundary_cross", integrate(bu.tr, m2)},
                {"boundary_hessian_flux", integrate(bu.tr, m3)},
                {"boundary_ubar_combo", integrate(bu.tr, m4)}};
  full.lhs = V;
  full.rhs = full.terms[1].second + full.terms[2].second + full.terms[3].second + full.terms[4].second;

  IdentityReport split;
  split.id = IdentityId::mother_3_3;
  split.terms = {{"volume_delta_p", V},
                 {"boundary_normal_cubic", integrate(bu.tr, a1)},
                 {"boundary_tangential_sq", integrate(bu.tr, a2)},
                 {"boundary_tangential_cross", integrate(bu.tr, a3)},
                 {"boundary_hessian_flux", full.terms[3].second},
                 {"boundary_ubar_combo", full.terms[4].second}};
  split.lhs = V;
  split.rhs = 0.0;
  for (std::size_t k = 1; k < split.terms.size(); ++k) split.rhs += split.terms[k].second;

  for (IdentityReport* r : {&full, &split}) {
    r->diagnostics = {{"ubar", p.ubar}, {"osc_un", oscillation(bu.un)}, {"a", a}};
    finish(*r, u);
  }
  return {full, split};
}

IdentityReport eval_neumann_identity(const FemField& u, const Vec2& z) {
  require_torsion(u, "u");
  const FemSpace& space = u.space();
  const BoundaryData bu = boundary_data(u);
  const double R = space.R_discrete();
  const double osc_un = oscillation(bu.un);
  if (osc_un > 1e-3 * R) {
    throw Error(ErrorCode::NotNeumann, "normal derivative oscillation " + std::to_string(osc_un));
  }
  const HessianField H = recover_hessian(u);
  const Quadratic q{z, 0.0};
  const auto& frames = space.boundary_frames();

  const double V = volume_integral(space, [&](std::size_t e, int k, const Vec2&) {
    const Mat2 D2h = Mat2::Identity() - H.at_qp(space, e, k);
    return (bu.ubar - u.value_at_qp(e, k)) * D2h.squaredNorm();
  });

  const std::size_t nb = space.num_boundary();
  VectorXd t1(nb), t2(nb), t3(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    const double hn = q.gradient(frames[i].point).dot(frames[i].nu) - bu.un.values[i];
    const double ut2 = bu.ut.values[i] * bu.ut.values[i];
    const double k = frames[i].kappa;
    const double g = bu.gap[i];
    t1[i] = 0.5 * ut2 * hn;
    t2[i] = g * ((N - 1) * R * k - N) * hn;
    t3[i] = -g * k * ut2;
  }
  IdentityReport r;
  r.id = IdentityId::neumann_1_11;
  r.terms = {{"volume_hessian_h", V},
             {"boundary_tangential_sq_hn", integrate(bu.tr, t1)},
             {"boundary_curvature_hn", integrate(bu.tr, t2)},
             {"boundary_curvature_tangential", integrate(bu.tr, t3)}};
  r.lhs = V;
  r.rhs = r.terms[1].second + r.terms[2].second + r.terms[3].second;
  r.diagnostics = {{"ubar", bu.ubar}, {"osc_un", osc_un}, {"R", R}};
  finish(r, u);
  return r;
}

IdentityReport eval_classical_identity(const FemField& u, const Vec2& z, double a) {
  const FemSpace& space = u.space();
  const BoundaryFunction tr = trace(u);
  if (oscillation(tr) > 1e-8 * (1.0 + u.coeffs().cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::NotDirichlet, "trace is not constant");
  }
  require_torsion(u, "u");
  const Quadratic q{z, a};
  const PFunction p = p_function(u);
  const BoundaryFunction un = normal_derivative(u);
  const double R = space.R_discrete();
  const auto& frames = space.boundary_frames();

  const double V = volume_integral(space, [&](std::size_t e, int k, const Vec2&) {
    return (p.ubar - u.value_at_qp(e, k)) * p.delta_p_qp[e * FemSpace::kQuadPoints + k];
  });
  VectorXd s(space.num_boundary());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double qn = q.gradient(frames[i].point).dot(frames[i].nu);
    const double n = un.values[i];
    s[i] = 0.5 * (n * n - R * R) * (n - qn);
  }
  IdentityReport r;
  r.id = IdentityId::classical_1_2;
  r.terms = {{"volume_delta_p", V}, {"boundary_flux_defect", integrate(tr, s)}};
  r.lhs = V;
  r.rhs = r.terms[1].second;
  r.diagnostics = {{"ubar", p.ubar}, {"R", R}, {"osc_un", oscillation(un)}};
  finish(r, u);
  return r;
}

RigidityVerdict rigidity_test(const FemField& u, const Vec2& z, double tol) {
  const IdentityReport r = eval_neumann_identity(u, z);
  RigidityVerdict v;
  v.s = r.rhs;
  v.V = r.term("volume_hessian_h");
  const auto [rho_i, rho_e] = radii_about(u.space().domain(), z);
  v.sphere_deviation = rho_e - rho_i;
  v.tol = tol;
  v.rhs_nonpositive = v.s <= tol;
  v.v_small = v.V <= tol;
  const bool sphere_small = v.sphere_deviation <= std::sqrt(tol);
  v.contract_holds = (!v.rhs_nonpositive || v.v_small) && (!v.v_small || sphere_small);
  return v;
}

}  // namespace serrinlab
