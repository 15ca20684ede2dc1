#include "serrinlab/boundary.hpp"
#include "serrinlab/errors.hpp"
#include "serrinlab/fem.hpp"
#include "serrinlab/recovery.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace serrinlab;

namespace {

// Dirichlet torsion function of the ellipse x^2/a^2 + y^2/b^2 < 1: c (x^2/a^2 + y^2/b^2 - 1)
// with 2c (1/a^2 + 1/b^2) = 2.
struct EllipseTorsion {
  double a, b, c;
  EllipseTorsion(double a_, double b_) : a(a_), b(b_), c(1.0 / (1.0 / (a_ * a_) + 1.0 / (b_ * b_))) {}
  double operator()(const Vec2& x) const { return c * (x.x() * x.x() / (a * a) + x.y() * x.y() / (b * b) - 1.0); }
  Mat2 hessian() const { return Mat2{{2.0 * c / (a * a), 0.0}, {0.0, 2.0 * c / (b * b)}}; }
};

}  // namespace

TEST_CASE("mesh audit") {
  const Mesh m = generate_mesh(StarDomain::disk(), 0.1);
  CHECK(m.h_max <= 0.15);
  CHECK(m.num_nodes() == ring_mesh_dofs(m.rings));
  CHECK(m.num_boundary() == std::size_t(12 * m.rings));
  double qmin = 1.0;
  for (std::size_t e = 0; e < m.triangles.size(); ++e) qmin = std::min(qmin, element_quality(m, e));
  CHECK(qmin >= 0.3);

  const StarDomain pert = StarDomain::fourier(1.0, {{2, 0.05, 0.0}});
  const Mesh mp = generate_mesh(pert, 0.1);
  for (std::size_t i = 0; i < mp.num_boundary(); ++i) {
    const Vec2& x = mp.nodes[mp.boundary_nodes[i]];
    CHECK(std::abs(pert.radius(mp.boundary_theta[i]) - x.norm()) <= 1e-12);
  }
  CHECK_THROWS_AS(generate_mesh(StarDomain::disk(), 1e-5), Error);
  try {
    generate_mesh(StarDomain::disk(), 1e-5);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MeshTooFine);
  }
}

TEST_CASE("volume integrals") {
  const SpacePtr coarse = make_space(StarDomain::disk(), 0.2);
  const SpacePtr fine = make_space(StarDomain::disk(), 0.1);
  const auto one = [](std::size_t, int, const Vec2&) { return 1.0; };
  const double e0 = std::abs(volume_integral(*coarse, one) - std::numbers::pi);
  const double e1 = std::abs(volume_integral(*fine, one) - std::numbers::pi);
  CHECK(e1 < e0);
  CHECK(e1 <= fine->h() * fine->h());
  CHECK(std::abs(volume_integral(*fine, [](std::size_t, int, const Vec2& x) { return x.x(); })) <= 1e-12);
}

TEST_CASE("Dirichlet torsion on the disk and the ellipse") {
  const SpacePtr disk = make_space(StarDomain::disk(), 0.05);
  const FemField u = solve_torsion_dirichlet(disk);
  CHECK(u.evaluate(Vec2::Zero()) == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(max_abs(trace(u)) <= 1e-12);
  for (std::size_t i = 0; i < disk->num_dofs(); ++i) {
    if (!disk->mesh().on_boundary[i]) REQUIRE(u.coeffs()[i] < 0.0);
  }
  // u_nu = 1; the consistent flux carries a vertex/midpoint sawtooth of size O(h^2).
  const BoundaryFunction un = normal_derivative(u);
  const double e_mid = (un.values.array() - 1.0).abs().maxCoeff();
  CHECK(e_mid <= 1e-3);
  // Discrete compatibility holds in the consistent boundary mass inner product.
  CHECK(std::abs((disk->boundary_mass() * un.values).sum() - 2.0 * disk->area()) <= 1e-10);
  const SpacePtr disk_fine = make_space(StarDomain::disk(), 0.025);
  const BoundaryFunction un_fine = normal_derivative(solve_torsion_dirichlet(disk_fine));
  const double e_fine = (un_fine.values.array() - 1.0).abs().maxCoeff();
  CHECK(e_fine <= 2e-4);
  CHECK(std::log2(e_mid / e_fine) >= 1.8);

  const EllipseTorsion exact(2.0, 1.0);
  const SpacePtr ell = make_space(StarDomain::ellipse(2.0, 1.0), 0.05);
  const FemField ue = solve_torsion_dirichlet(ell);
  CHECK(ue.evaluate(Vec2::Zero()) == doctest::Approx(exact(Vec2::Zero())).epsilon(1e-5));
  CHECK(exact(Vec2::Zero()) == doctest::Approx(-0.8));
  // Normal derivative at the axis vertices: |grad u| of the closed form.
  const BoundaryFunction une = normal_derivative(ue);
  const std::size_t n = une.size();
  CHECK(une.values[0] == doctest::Approx(2.0 * exact.c * 2.0 / 4.0).epsilon(1e-3));
  CHECK(une.values[Eigen::Index(n / 4)] == doctest::Approx(2.0 * exact.c).epsilon(1e-3));
}

TEST_CASE("Neumann torsion on the disk") {
  const SpacePtr disk = make_space(StarDomain::disk(), 0.025);
  const FemField u = solve_torsion_neumann(disk);
  CHECK(std::abs(u.mean()) <= 1e-12);
  const double u0 = u.evaluate(Vec2::Zero());
  double worst = 0.0;
  for (std::size_t i = 0; i < disk->num_dofs(); ++i) {
    worst = std::max(worst, std::abs(u.coeffs()[i] - u0 - 0.5 * disk->mesh().nodes[i].squaredNorm()));
  }
  CHECK(worst <= 1e-6);
  const BoundaryFunction un = normal_derivative(u);
  CHECK((un.values.array() - disk->R_discrete()).abs().maxCoeff() <= 1e-10);
}

TEST_CASE("harmonic Dirichlet reproduces constants and linear data") {
  const SpacePtr disk = make_space(StarDomain::disk(), 0.1);
  BoundaryFunction g = boundary_zero(*disk);
  g.values.setOnes();
  const FemField w1 = solve_harmonic_dirichlet(disk, g);
  CHECK((w1.coeffs().array() - 1.0).abs().maxCoeff() <= 1e-12);
  const BoundaryFunction gx = sample_boundary(*disk, [](const BoundaryFrame& f) { return f.point.x(); });
  const FemField wx = solve_harmonic_dirichlet(disk, gx);
  double worst = 0.0;
  for (std::size_t i = 0; i < disk->num_dofs(); ++i) {
    worst = std::max(worst, std::abs(wx.coeffs()[i] - disk->mesh().nodes[i].x()));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("Hessian recovery") {
  const SpacePtr pert = make_space(StarDomain::fourier(1.0, {{2, 0.05, 0.0}}), 0.1);
  const FemField q = interpolate(pert, [](const Vec2& x) { return 0.5 * x.squaredNorm(); });
  const HessianField hq = recover_hessian(q);
  double worst = 0.0;
  for (std::size_t i = 0; i < pert->num_dofs(); ++i) {
    worst = std::max(worst, (hq.at_node(i) - Mat2::Identity()).cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-10);
  const GradientField gq = recover_gradient(q);
  worst = 0.0;
  for (std::size_t i = 0; i < pert->num_dofs(); ++i) worst = std::max(worst, (gq.at(i) - pert->mesh().nodes[i]).norm());
  CHECK(worst <= 1e-10);

  const EllipseTorsion exact(2.0, 1.0);
  const SpacePtr ell = make_space(StarDomain::ellipse(2.0, 1.0), 0.05);
  const HessianField h = recover_hessian(solve_torsion_dirichlet(ell));
  worst = 0.0;
  for (std::size_t i = 0; i < ell->num_dofs(); ++i) {
    const Vec2& x = ell->mesh().nodes[i];
    if (exact(x) > -0.2) continue;  // interior nodes away from the curved ring
    worst = std::max(worst, (h.at_node(i) - exact.hessian()).cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("field kinds and shifts") {
  CHECK(field_kind_from_string(to_string(FieldKind::torsion_neumann)) == FieldKind::torsion_neumann);
  CHECK(known_laplacian(FieldKind::harmonic_dirichlet) == 0.0);
  CHECK_FALSE(known_laplacian(FieldKind::generic).has_value());
  const SpacePtr disk = make_space(StarDomain::disk(), 0.2);
  const FemField u = solve_torsion_neumann(disk);
  const FemField s = u.shifted(17.3);
  CHECK(s.kind() == u.kind());
  CHECK(s.mean() == doctest::Approx(u.mean() + 17.3).epsilon(1e-12));
  CHECK(s.offset() == 17.3);
  CHECK(s.gauge_coeffs() == u.coeffs());
  CHECK(s.shifted(-17.3).coeffs().isApprox(u.coeffs(), 1e-14));
  CHECK(s.gradient_at_qp(3, 1) == u.gradient_at_qp(3, 1));
}
