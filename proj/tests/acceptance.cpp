// Acceptance runner: one PASS/FAIL line per criterion. Exit status 1 if any criterion fails.
#include "serrinlab/boundary.hpp"
#include "serrinlab/identity.hpp"
#include "serrinlab/polynomial.hpp"
#include "serrinlab/spectral.hpp"
#include "serrinlab/stability.hpp"
#include "serrinlab/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace serrinlab;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [x]");
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

int failures = 0;

void run(int id, const char* title, double budget_s, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.require(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.require(secs <= budget_s, "runtime " + fmt(secs) + " s <= " + fmt(budget_s) + " s");
  if (!o.pass) ++failures;
  std::printf("[%s] C%d %s: %s\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.str().c_str());
  std::fflush(stdout);
}

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

StarDomain mode2(double eps) { return StarDomain::fourier(1.0, {{2, eps, 0.0}}); }

void criterion1(Outcome& o) {
  for (int n = 2; n <= 5; ++n) {
    const auto cases = run_pointwise_suite(n, 4, 20, 1000 + 100 * std::uint64_t(n));
    int good = 0;
    for (const auto& c : cases) {
      if (c.residual_is_zero && c.pfunction_is_zero && c.points_vanish) ++good;
    }
    o.require(cases.size() == 20 && good == 20, "N=" + std::to_string(n) + " " + std::to_string(good) + "/20 zero");
  }
}

void criterion2(Outcome& o) {
  constexpr double kTerm = 1e-6, kGap = 1e-8, kDev = 1e-6;
  const SpacePtr sp = make_space(StarDomain::disk(), 0.05);
  for (IdentityId id : {IdentityId::classical_1_2, IdentityId::general_1_9, IdentityId::neumann_1_11}) {
    const IdentityReport r = evaluate_identity(sp, id);
    std::string worst;
    double worst_v = 0.0;
    for (const auto& [name, v] : r.terms) {
      if (std::abs(v) >= worst_v) {
        worst_v = std::abs(v);
        worst = name;
      }
    }
    o.require(worst_v <= kTerm, std::string(to_string(id)) + " max term " + fmt(worst_v) + " (" + worst + ")");
  }
  const FemField u = solve_torsion_neumann(sp);
  const auto [ri, re] = radii_about(sp->domain(), argmin_point(u));
  o.require(re - ri <= kGap, "rho_e - rho_i " + fmt(re - ri));
  const DeviationSet d = deviations(u);
  for (auto [name, v] : {std::pair{"osc", d.osc_gamma_u}, {"grad_inf", d.grad_inf}, {"grad_l2", d.grad_l2},
                         {"tangential", d.tangential_norm}, {"c1alpha", d.c1alpha_norm}}) {
    o.require(v <= kDev, std::string(name) + " " + fmt(v));
  }
}

void criterion3(Outcome& o) {
  // u = c (x^2/a^2 + y^2/b^2 - 1) with lap u = 2.
  const double a = 2.0, b = 1.0;
  const double c = 1.0 / (1.0 / (a * a) + 1.0 / (b * b));
  const double hxx = 2.0 * c / (a * a), hyy = 2.0 * c / (b * b);
  const double delta_p = hxx * hxx + hyy * hyy - 0.5 * (hxx + hyy) * (hxx + hyy);
  const double lhs_exact = delta_p * c * pi * a * b / 2.0;  // int(-u) = c pi a b / 2

  const SpacePtr sp = make_space(StarDomain::ellipse(a, b), 0.025);
  const FemField u = solve_torsion_dirichlet(sp);
  o.require(std::abs(u.evaluate(Vec2::Zero()) + c) <= 1e-4, "u(0) err " + fmt(std::abs(u.evaluate(Vec2::Zero()) + c)));

  const BoundaryFunction un = normal_derivative(u);
  const auto& frames = sp->boundary_frames();
  const std::size_t quarter = frames.size() / 4;
  o.require((frames[0].point - Vec2(a, 0.0)).norm() <= 1e-12 && (frames[quarter].point - Vec2(0.0, b)).norm() <= 1e-12,
            "vertex nodes located");
  const double e1 = std::abs(un.values[0] - 2.0 * c / a);
  const double e2 = std::abs(un.values[Eigen::Index(quarter)] - 2.0 * c / b);
  o.require(e1 <= 1e-3, "u_nu(a,0) err " + fmt(e1));
  o.require(e2 <= 1e-3, "u_nu(0,b) err " + fmt(e2));

  const PFunction p = p_function(u);
  double worst = 0.0;
  for (std::size_t i = 0; i < sp->num_dofs(); ++i) {
    const Vec2& x = sp->mesh().nodes[i];
    if (x.x() * x.x() / (a * a) + x.y() * x.y() / (b * b) > 0.64) continue;
    worst = std::max(worst, std::abs(p.delta_p_nodal[Eigen::Index(i)] - delta_p));
  }
  o.require(worst <= 1e-2, "dP interior err " + fmt(worst));

  const IdentityReport r = eval_classical_identity(u, Vec2::Zero());
  const double lhs_rel = std::abs(r.lhs - lhs_exact) / lhs_exact;
  o.require(lhs_rel <= 1e-2, "LHS rel err " + fmt(lhs_rel));
  o.require(r.rel_residual <= 1e-2, "LHS/RHS rel residual " + fmt(r.rel_residual));
}

void criterion4(Outcome& o) {
  for (IdentityId id : {IdentityId::general_1_9, IdentityId::neumann_1_11}) {
    const ConvergenceStudy s = convergence_study(mode2(0.05), id, {0.1, 0.05, 0.025});
    std::string levels;
    for (const auto& l : s.levels) levels += (levels.empty() ? "" : ",") + fmt(l.rel_residual);
    o.require(s.monotone, std::string(to_string(id)) + " monotone [" + levels + "]");
    o.require(s.order && *s.order >= 1.0, std::string(to_string(id)) + " order " + (s.order ? fmt(*s.order) : "none"));
  }
}

void criterion5(Outcome& o) {
  constexpr double kBand = 1e-3;
  struct Case {
    const char* name;
    StarDomain domain;
  };
  const std::vector<Case> cases = {{"disk", StarDomain::disk()},
                                   {"ellipse", StarDomain::ellipse(2.0, 1.0)},
                                   {"mode2", mode2(0.05)},
                                   {"mode3", StarDomain::fourier(1.0, {{3, 0.04, 0.0}})},
                                   {"mixed", StarDomain::fourier(1.0, {{2, 0.03, 0.0}, {4, 0.0, 0.02}})}};
  for (const auto& c : cases) {
    const SpacePtr sp = make_space(c.domain, 0.05);
    const FemField u = solve_torsion_neumann(sp);
    const Vec2 z = argmin_point(u);
    const GeometricBoundsReport g = geometric_bounds_check(u);
    const OscillationReport osc = oscillation_bound_check(u, z);
    const L2OscillationReport l2 = check_l2_oscillation_bound(u, z);
    const double lemma = std::min(g.min_slack_square, g.min_slack_linear);
    const bool ok = std::min({lemma, g.remark_slack, osc.radii_slack, l2.slack}) >= -kBand;
    o.require(ok, std::string(c.name) + " slacks lemma " + fmt(lemma) + " remark " + fmt(g.remark_slack) + " radii " +
                      fmt(osc.radii_slack) + " l2 " + fmt(l2.slack));
  }
  const double j = first_zero_j1_prime();
  const SpacePtr disk = make_space(StarDomain::disk(), 0.05);
  const double nu2 = neumann_eigenvalue_2(disk).value;
  const double sigma2 = steklov_eigenvalue_2(disk).value;
  o.require(std::abs(nu2 - j * j) <= 5e-3 * j * j, "nu2 " + fmt(nu2) + " vs " + fmt(j * j));
  o.require(std::abs(nu2 - 3.390) <= 5e-3 * 3.390, "nu2 within 0.5% of 3.390");
  o.require(std::abs(sigma2 - 1.0) <= 5e-3, "sigma2 " + fmt(sigma2));
}

SweepResult family_sweep() {
  FamilySpec spec;
  spec.mode = 2;
  spec.amplitudes = {0.0125, 0.025, 0.05, 0.1};
  spec.h_target = 0.05;
  return stability_sweep(spec);
}

void criterion6(Outcome& o, const SweepResult& s) {
  const ExponentFit& f = s.fit("uniform");
  o.require(f.n_points == 4, "points " + std::to_string(f.n_points));
  o.require(f.slope >= 0.85 && f.slope <= 1.3, "slope " + fmt(f.slope));
  o.require(f.r_squared >= 0.98, "r2 " + fmt(f.r_squared));
  bool bounded = true;
  for (const auto& r : s.records) {
    if (r.flagged) continue;
    const double bound = f.c_fit * psi(r.deviations.uniform(), 2);
    bounded = bounded && r.rho_gap <= bound * (1.0 + 1e-12);
  }
  o.require(bounded, "rho_gap <= c_fit psi with c_fit " + fmt(f.c_fit));
}

void criterion7(Outcome& o, const SweepResult& s) {
  o.require(std::abs(s.strong_flux_fit.slope - 1.0) <= 0.2, "flux slope " + fmt(s.strong_flux_fit.slope));
  double lo = INFINITY, hi = 0.0;
  for (const auto& r : s.records) {
    if (r.flagged) continue;
    lo = std::min(lo, r.strong.ratio);
    hi = std::max(hi, r.strong.ratio);
  }
  o.require(lo > 0.0 && hi <= 5.0 * lo, "ratio range [" + fmt(lo) + ", " + fmt(hi) + "]");
}

void criterion8(Outcome& o) {
  const SpacePtr sp = make_space(mode2(0.05), 0.05);
  const FemField u = solve_torsion_neumann(sp);
  const FemField ud = solve_torsion_dirichlet(sp);
  const Vec2 z(0.05, -0.02);
  const double a = 0.3;

  const auto [m2, m3] = eval_mother_identity(u, z, a);
  const double forms = std::max(std::abs(m2.lhs - m3.lhs), std::abs(m2.rhs - m3.rhs));
  o.require(forms <= 1e-10, "3.2 vs 3.3 " + fmt(forms));

  const Quadratic q{z, a};
  const FemField vq = interpolate(sp, [&](const Vec2& x) { return q(x); });
  const IdentityReport g = eval_general_identity(u, vq);
  const double reduce = std::max(std::abs(g.lhs - m2.lhs), std::abs(g.rhs - m2.rhs));
  o.require(reduce <= 1e-10, "general(v=q) vs mother " + fmt(reduce));

  const double c = 17.3;
  const FemField us = u.shifted(c), uds = ud.shifted(c), vn = solve_torsion_neumann(sp);
  const auto [s2, s3] = eval_mother_identity(us, z, a);
  const std::vector<std::pair<double, double>> pairs = {
      {m2.rel_residual, s2.rel_residual},
      {m3.rel_residual, s3.rel_residual},
      {g.rel_residual, eval_general_identity(us, vq).rel_residual},
      {eval_general_identity(ud, vn).rel_residual, eval_general_identity(uds, vn).rel_residual},
      {eval_neumann_identity(u, z).rel_residual, eval_neumann_identity(us, z).rel_residual},
      {eval_classical_identity(ud, z).rel_residual, eval_classical_identity(uds, z).rel_residual}};
  double gauge = 0.0;
  for (const auto& [x, y] : pairs) gauge = std::max(gauge, std::abs(x - y));
  o.require(gauge <= 1e-12, "gauge shift " + fmt(gauge));
}

}  // namespace

int main() {
  run(1, "symbolic identity suite", 60, criterion1);
  run(2, "rigid disk", 30, criterion2);
  run(3, "ellipse closed form", 120, criterion3);
  run(4, "identity convergence", 300, criterion4);
  run(5, "inequalities and spectral oracles", 300, criterion5);

  SweepResult sweep;
  double sweep_secs = 0.0;
  run(6, "stability sweep", 600, [&](Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    sweep = family_sweep();
    sweep_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    criterion6(o, sweep);
  });
  run(7, "strong deviation pipeline", 300 + sweep_secs, [&](Outcome& o) {
    if (sweep.records.empty()) throw std::runtime_error("sweep unavailable");
    criterion7(o, sweep);
  });
  run(8, "equivalence audits", 120, criterion8);

  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
