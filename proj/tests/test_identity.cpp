#include "serrinlab/errors.hpp"
#include "serrinlab/identity.hpp"
#include "serrinlab/stability.hpp"
#include "serrinlab/study.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace serrinlab;
using std::numbers::pi;

namespace {

// Closed-form Dirichlet torsion on the ellipse (2, 1): c (x^2/4 + y^2 - 1), c = 4/5.
// Hessian diag(2c/4, 2c) = diag(2/5, 8/5), so dP = 4/25 + 64/25 - 2 = 18/25, and
// int (-u) = c (|Omega| - int (x^2/4 + y^2)) = c (2 pi - pi).
constexpr double kEllipseC = 0.8;
const double kEllipseDeltaP = (0.4 * 0.4 + 1.6 * 1.6) - (0.4 + 1.6) * (0.4 + 1.6) / 2.0;
const double kEllipseLhs = kEllipseDeltaP * kEllipseC * pi;

const StarDomain& perturbed() {
  static const StarDomain d = StarDomain::fourier(1.0, {{2, 0.05, 0.0}});
  return d;
}

}  // namespace

TEST_CASE("identity ids and anchors") {
  for (IdentityId id : {IdentityId::classical_1_2, IdentityId::general_1_9, IdentityId::mother_3_2,
                        IdentityId::mother_3_3, IdentityId::neumann_1_11}) {
    CHECK(identity_from_string(to_string(id)) == id);
    CHECK(std::string(anchor(id)).find("Eq") == std::string::npos);
    CHECK_FALSE(anchor(id).empty());
  }
  CHECK_THROWS_AS(identity_from_string("nope"), Error);
}

TEST_CASE("classical identity on the ellipse against the closed form") {
  CHECK(kEllipseDeltaP == doctest::Approx(0.72));
  const SpacePtr sp = make_space(StarDomain::ellipse(2.0, 1.0), 0.05);
  const FemField u = solve_torsion_dirichlet(sp);
  const IdentityReport r = eval_classical_identity(u, Vec2::Zero());
  CHECK(r.lhs == doctest::Approx(kEllipseLhs).epsilon(1e-3));
  CHECK(r.rel_residual <= 5e-3);
  // Both coordinate translations of z leave the right-hand side unchanged on the centered ellipse.
  CHECK(std::abs(eval_classical_identity(u, Vec2(0.2, 0.0)).rhs - r.rhs) <= 1e-8);
  CHECK(std::abs(eval_classical_identity(u, Vec2(0.0, -0.3)).rhs - r.rhs) <= 1e-8);

  const PFunction p = p_function(u);
  double worst = 0.0;
  for (std::size_t i = 0; i < sp->num_dofs(); ++i) {
    const Vec2& x = sp->mesh().nodes[i];
    if (x.x() * x.x() / 4.0 + x.y() * x.y() > 0.64) continue;
    worst = std::max(worst, std::abs(p.delta_p_nodal[Eigen::Index(i)] - kEllipseDeltaP));
  }
  CHECK(worst <= 1e-3);
  CHECK(p.min_delta_p >= -1e-6);
}

TEST_CASE("rigid disk") {
  const SpacePtr sp = make_space(StarDomain::disk(), 0.05);
  const FemField ud = solve_torsion_dirichlet(sp);
  const FemField un = solve_torsion_neumann(sp);

  // The flux defect is quadratic in the O(h^2) flux error.
  const IdentityReport c = eval_classical_identity(ud, Vec2::Zero());
  CHECK(std::abs(c.lhs) <= 1e-8);
  CHECK(std::abs(c.rhs) <= 1e-6);
  const auto [m2, m3] = eval_mother_identity(un, Vec2::Zero());
  CHECK(std::abs(m2.lhs) <= 1e-8);
  CHECK(std::abs(m2.rhs) <= 1e-7);
  CHECK(std::abs(m3.rhs) <= 1e-7);

  // Both sides tend to zero, but two boundary terms are +-2 pi and cancel.
  const IdentityReport g = eval_general_identity(ud, ud);
  CHECK(std::abs(g.lhs) <= 1e-3);
  CHECK(std::abs(g.rhs) <= 1e-3);
  CHECK(g.term("boundary_gradient_sq") == doctest::Approx(2.0 * pi).epsilon(1e-3));
  CHECK(g.term("boundary_cross") == doctest::Approx(-2.0 * pi).epsilon(1e-3));

  const PFunction p = p_function(ud);
  CHECK(p.delta_p_nodal.cwiseAbs().maxCoeff() <= 1e-5);

  const IdentityReport n = eval_neumann_identity(un, Vec2::Zero());
  CHECK(n.max_abs_term() <= 5e-8);
  const RigidityVerdict v = rigidity_test(un, Vec2::Zero());
  CHECK(std::abs(v.s) <= 1e-8);
  CHECK(v.V <= 1e-7);
  CHECK(v.sphere_deviation <= 1e-10);
  CHECK(v.contract_holds);
}

TEST_CASE("equivalences on a perturbed disk") {
  const SpacePtr sp = make_space(perturbed(), 0.05);
  const FemField u = solve_torsion_neumann(sp);
  const Vec2 z(0.05, -0.02);

  const auto [m2, m3] = eval_mother_identity(u, z, 0.3);
  CHECK(std::abs(m2.lhs - m3.lhs) <= 1e-10);
  CHECK(std::abs(m2.rhs - m3.rhs) <= 1e-10);

  const auto [a2, a3] = eval_mother_identity(u, z, -4.0);
  for (std::size_t i = 0; i < m2.terms.size(); ++i) CHECK(std::abs(a2.terms[i].second - m2.terms[i].second) <= 1e-12);

  const Quadratic q{z, 0.3};
  const FemField vq = interpolate(sp, [&](const Vec2& x) { return q(x); });
  const IdentityReport g = eval_general_identity(u, vq);
  CHECK(std::abs(g.term("volume_hessian_v")) <= 1e-10);
  CHECK(std::abs(g.lhs - m2.lhs) <= 1e-10);
  CHECK(std::abs(g.rhs - m2.rhs) <= 1e-10);

  const FemField shifted = u.shifted(17.3);
  const IdentityReport n0 = eval_neumann_identity(u, z);
  const IdentityReport n1 = eval_neumann_identity(shifted, z);
  CHECK(std::abs(n0.rel_residual - n1.rel_residual) <= 1e-12);
  const auto [s2, s3] = eval_mother_identity(shifted, z, 0.3);
  CHECK(std::abs(s2.rel_residual - m2.rel_residual) <= 1e-12);
  CHECK(std::abs(s3.rel_residual - m3.rel_residual) <= 1e-12);
  CHECK(std::abs(eval_general_identity(shifted, vq).rel_residual - g.rel_residual) <= 1e-12);
  CHECK(std::abs(eval_general_identity(u, vq.shifted(17.3)).rel_residual - g.rel_residual) <= 1e-12);
}

TEST_CASE("convergence on a perturbed disk") {
  const SpacePtr sp = make_space(perturbed(), 0.025);
  const FemField u = solve_torsion_neumann(sp);
  const Quadratic q{Vec2(0.05, -0.02), 0.0};
  CHECK(eval_general_identity(u, interpolate(sp, [&](const Vec2& x) { return q(x); })).rel_residual <= 5e-3);
  CHECK(eval_neumann_identity(u, argmin_point(u)).rel_residual <= 1e-2);

  const ConvergenceStudy s = convergence_study(perturbed(), IdentityId::neumann_1_11, {0.1, 0.05, 0.025});
  CHECK(s.monotone);
  REQUIRE(s.order.has_value());
  CHECK(*s.order >= 1.0);

  const ConvergenceStudy rigid = convergence_study(StarDomain::disk(), IdentityId::neumann_1_11, {0.2, 0.1, 0.05});
  CHECK(rigid.rigid);
  CHECK_FALSE(rigid.order.has_value());
  CHECK_THROWS_AS(convergence_study(StarDomain::disk(), IdentityId::neumann_1_11, {0.1, 0.05}), Error);
}

TEST_CASE("perturbed disk is not rigid") {
  const SpacePtr sp = make_space(perturbed(), 0.05);
  const FemField u = solve_torsion_neumann(sp);
  const RigidityVerdict v = rigidity_test(u, argmin_point(u));
  CHECK(v.s > 0.0);
  CHECK(v.V > 0.0);
  CHECK(v.sphere_deviation == doctest::Approx(0.1).epsilon(0.02));
  CHECK(v.contract_holds);
}

TEST_CASE("general identity with a Dirichlet and a Neumann solution") {
  const SpacePtr sp = make_space(StarDomain::ellipse(2.0, 1.0), 0.025);
  const IdentityReport r = eval_general_identity(solve_torsion_dirichlet(sp), solve_torsion_neumann(sp));
  CHECK(r.rel_residual <= 5e-3);
  CHECK(std::abs(r.term("volume_hessian_v")) > 1e-3);
}

TEST_CASE("contract errors") {
  const SpacePtr sp = make_space(perturbed(), 0.1);
  const FemField ud = solve_torsion_dirichlet(sp);
  const FemField un = solve_torsion_neumann(sp);
  auto code_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code_of([&] { eval_classical_identity(un, Vec2::Zero()); }) == ErrorCode::NotDirichlet);
  CHECK(code_of([&] { eval_neumann_identity(ud, Vec2::Zero()); }) == ErrorCode::NotNeumann);
  const FemField cubic = interpolate(sp, [](const Vec2& x) { return x.x() * x.x() * x.x(); });
  CHECK(code_of([&] { eval_general_identity(cubic, un); }) == ErrorCode::NotTorsion);
  const SpacePtr other = make_space(perturbed(), 0.2);
  CHECK(code_of([&] { eval_general_identity(ud, solve_torsion_neumann(other)); }) == ErrorCode::InvalidArgument);
}
