#include "serrinlab/spectral.hpp"
#include "serrinlab/stability.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace serrinlab;

namespace {

// First zero of J1', by bisection on J0(x) - J1(x)/x.
double first_zero_j1_prime() {
  auto f = [](double x) { return std::cyl_bessel_j(0.0, x) - std::cyl_bessel_j(1.0, x) / x; };
  double lo = 1.0, hi = 3.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    ((f(lo) < 0.0) == (f(mid) < 0.0) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("Neumann eigenvalue of disks against the Bessel oracle") {
  const double j = first_zero_j1_prime();
  CHECK(j == doctest::Approx(1.84118).epsilon(1e-5));
  const EigenResult d = neumann_eigenvalue_2(make_space(StarDomain::disk(), 0.025));
  CHECK(d.value == doctest::Approx(j * j).epsilon(1e-3));
  CHECK(d.rayleigh_residual <= 1e-8);
  CHECK(d.orthogonality <= 1e-10);
  const EigenResult d2 = neumann_eigenvalue_2(make_space(StarDomain::disk(2.0), 0.05));
  CHECK(d2.value == doctest::Approx(j * j / 4.0).epsilon(1e-3));
  // Szego-Weinberger: nu_2 |Omega| <= j^2 pi, with equality only for disks.
  const SpacePtr ps = make_space(StarDomain::fourier(1.0, {{2, 0.05, 0.0}}), 0.05);
  const EigenResult p = neumann_eigenvalue_2(ps);
  CHECK(p.value * ps->area() < j * j * std::numbers::pi);
  CHECK(p.value * ps->area() > 0.8 * j * j * std::numbers::pi);
}

TEST_CASE("Steklov eigenvalue of disks by separation of variables") {
  // r^k cos(k theta) on a disk of radius rho has Steklov eigenvalue k / rho.
  CHECK(steklov_eigenvalue_2(make_space(StarDomain::disk(), 0.05)).value == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(steklov_eigenvalue_2(make_space(StarDomain::disk(2.0), 0.1)).value == doctest::Approx(0.5).epsilon(1e-3));
  const double e1 = steklov_eigenvalue_2(make_space(StarDomain::ellipse(2.0, 1.0), 0.1)).value;
  const double e2 = steklov_eigenvalue_2(make_space(StarDomain::ellipse(2.0, 1.0), 0.05)).value;
  CHECK(e1 > 0.0);
  CHECK(e1 < 1.0);
  CHECK(std::abs(e1 - e2) <= 1e-3);
}

TEST_CASE("L2 oscillation bound") {
  const SpacePtr sp = make_space(StarDomain::disk(), 0.05);
  const FemField u = solve_torsion_neumann(sp);
  const double nu2 = neumann_eigenvalue_2(sp).value;
  const double sigma2 = steklov_eigenvalue_2(sp).value;

  const L2OscillationReport r0 = check_l2_oscillation_bound(u, Vec2::Zero(), 0.0, nu2, sigma2);
  CHECK(r0.lhs <= 1e-5);
  CHECK(r0.rhs <= 1e-5);
  CHECK(r0.holds);

  // q_nu = 1 - 0.3 cos(theta), so |R - q_nu|^2 = 0.09 pi.
  const L2OscillationReport r1 = check_l2_oscillation_bound(u, Vec2(0.3, 0.0), 0.0, nu2, sigma2);
  CHECK(r1.flux_defect * r1.flux_defect == doctest::Approx(0.09 * std::numbers::pi).epsilon(1e-6));
  CHECK(r1.lhs > 0.0);
  CHECK(r1.slack >= 0.0);

  const StarDomain pert = StarDomain::fourier(1.0, {{2, 0.05, 0.0}});
  for (double h : {0.1, 0.05}) {
    const FemField up = solve_torsion_neumann(make_space(pert, h));
    CHECK(check_l2_oscillation_bound(up, argmin_point(up)).slack >= 0.0);
  }
}

TEST_CASE("eigen solver rejects bad options") {
  const SpacePtr sp = make_space(StarDomain::disk(), 0.2);
  EigenOptions o;
  o.block_size = 1;
  CHECK_THROWS(neumann_eigenvalue_2(sp, o));
  o.block_size = 6;
  o.max_iterations = 1;
  o.tolerance = 1e-15;
  CHECK_THROWS(neumann_eigenvalue_2(sp, o));
}
