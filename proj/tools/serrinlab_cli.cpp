#include "serrinlab/boundary.hpp"
#include "serrinlab/errors.hpp"
#include "serrinlab/report.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#ifndef SERRINLAB_VERSION
#define SERRINLAB_VERSION "dev"
#endif

using namespace serrinlab;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitContract = 2;

// Discretization band for one-sided inequality slacks.
constexpr double kSlackBand = 1e-3;

struct Common {
  std::string domain;
  double h_target = 0.05;
  double alpha = 0.5;
  int workers = 1;
  std::string out = "serrinlab_out";
  std::uint64_t seed = 1;
};

struct Run {
  std::string command;
  Json config = Json::object();
  std::optional<StarDomain> domain;
  Json mesh = Json::object();
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> artifacts;
  fs::path out;

  void write(const std::string& name, const Json& j) {
    write_json(out / name, j);
    artifacts.push_back((out / name).string());
  }
  std::ofstream open(const std::string& name) {
    std::ofstream f(out / name);
    if (!f) throw std::runtime_error("cannot write '" + (out / name).string() + "'");
    artifacts.push_back((out / name).string());
    return f;
  }
  void note_space(const FemSpace& s) {
    mesh = {{"h_target", config.value("h_target", 0.0)},
            {"h", s.h()},
            {"rings", s.mesh().rings},
            {"dofs", s.num_dofs()},
            {"elements", s.num_elements()},
            {"boundary_nodes", s.num_boundary()},
            {"dof_cap", default_dof_cap()}};
  }
  void finish() {
    RunManifest m;
    m.command = command;
    m.config = config;
    m.config_hash = config_hash(config);
    m.domain = domain ? domain_to_json(*domain) : Json(nullptr);
    m.mesh = mesh;
    m.seeds = seeds;
    m.tool_version = SERRINLAB_VERSION;
    m.timestamp = utc_timestamp();
    m.artifacts = artifacts;
    m.artifacts.push_back((out / "manifest.json").string());
    write_json(out / "manifest.json", to_json(m));
  }
};

void add_common(CLI::App* cmd, Common& c, bool with_domain = true) {
  if (with_domain) cmd->add_option("--domain", c.domain, "domain JSON file or inline JSON (default: unit disk)");
  cmd->add_option("--h-target", c.h_target, "target mesh size")->check(CLI::PositiveNumber);
  cmd->add_option("--alpha", c.alpha, "Holder exponent")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--workers", c.workers, "concurrent sweep members")->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--seed", c.seed, "random seed");
}

Run start(const std::string& command, const Common& c, bool uses_domain = true) {
  Run r;
  r.command = command;
  r.out = c.out;
  fs::create_directories(r.out);
  r.config = {{"command", command}, {"h_target", c.h_target}, {"alpha", c.alpha}, {"seed", c.seed}};
  if (uses_domain) {
    r.domain = c.domain.empty() ? StarDomain::disk() : load_domain(c.domain);
    r.config["domain"] = domain_to_json(*r.domain);
  }
  r.seeds.push_back(c.seed);
  return r;
}

void print_line(const char* label, double value) { std::printf("  %-22s % .10e\n", label, value); }

bool is_contract(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotTorsion:
    case ErrorCode::NotNeumann:
    case ErrorCode::NotDirichlet:
    case ErrorCode::NotTorsionPolynomial:
    case ErrorCode::KindMismatch:
    case ErrorCode::GradientNotZeroAtZ:
    case ErrorCode::BoundaryMinimum:
    case ErrorCode::PointNotInterior:
    case ErrorCode::DegeneratePatch:
      return true;
    default:
      return false;
  }
}

Vec2 pick_z(const FemField& u) {
  try {
    return argmin_point(u);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BoundaryMinimum) throw;
    return u.space().domain().center();
  }
}

int cmd_solve(const Common& c, const std::string& kind) {
  Run run = start("solve", c);
  run.config["kind"] = kind;
  const SpacePtr space = make_space(*run.domain, c.h_target);
  run.note_space(*space);
  FemField u = kind == "neumann" ? solve_torsion_neumann(space) : solve_torsion_dirichlet(space);
  const TorsionAudit audit = audit_torsion(u);
  const BoundaryFunction un = normal_derivative(u);
  Json j = {{"kind", to_string(u.kind())},
            {"measures", to_json(measures(*run.domain))},
            {"area_h", space->area()},
            {"perimeter_h", space->perimeter()},
            {"R_discrete", space->R_discrete()},
            {"u_min", u.coeffs().minCoeff()},
            {"u_max", u.coeffs().maxCoeff()},
            {"u_mean", u.mean()},
            {"normal_derivative_min", un.values.minCoeff()},
            {"normal_derivative_max", un.values.maxCoeff()},
            {"trace_oscillation", oscillation(trace(u))},
            {"laplacian_defect", audit.laplacian_defect},
            {"audit_passed", audit.passed}};
  run.write("solve.json", j);
  {
    auto f = run.open("trace.csv");
    write_csv(f, trace(u));
  }
  {
    auto f = run.open("normal_derivative.csv");
    write_csv(f, un);
  }
  run.finish();
  std::printf("solve %s: %zu dofs, h = %.4g\n", kind.c_str(), space->num_dofs(), space->h());
  print_line("u min", u.coeffs().minCoeff());
  print_line("u max", u.coeffs().maxCoeff());
  print_line("laplacian defect", audit.laplacian_defect);
  return audit.passed ? kExitOk : kExitContract;
}

int cmd_verify_identity(const Common& c, const std::string& id_name, const std::vector<double>& z, double tol) {
  Run run = start("verify-identity", c);
  const IdentityId id = identity_from_string(id_name);
  run.config["identity"] = id_name;
  run.config["tol"] = tol;
  std::optional<Vec2> zp;
  if (z.size() == 2) {
    zp = Vec2(z[0], z[1]);
    run.config["z"] = z;
  } else if (!z.empty()) {
    throw Error(ErrorCode::InvalidArgument, "--z takes two values");
  }
  const SpacePtr space = make_space(*run.domain, c.h_target);
  run.note_space(*space);
  const IdentityReport r = evaluate_identity(space, id, zp);
  Json j = to_json(r);
  const bool rigid = std::max(std::abs(r.lhs), std::abs(r.rhs)) <= kRigidFloor;
  bool pass = rigid || r.rel_residual <= tol;
  if (id == IdentityId::neumann_1_11) {
    const RigidityVerdict v = rigidity_test(solve_torsion_neumann(space), zp.value_or(run.domain->center()));
    j["rigidity"] = to_json(v);
    pass = pass && v.contract_holds;
  }
  j["rigid"] = rigid;
  j["pass"] = pass;
  run.write("identity.json", j);
  run.finish();
  std::printf("%s on %s\n", std::string(to_string(id)).c_str(), r.fingerprint.c_str());
  for (const auto& [k, v] : r.terms) print_line(k.c_str(), v);
  print_line("lhs", r.lhs);
  print_line("rhs", r.rhs);
  print_line("rel residual", r.rel_residual);
  std::printf("%s\n", pass ? "PASS" : "FAIL");
  return pass ? kExitOk : kExitContract;
}

int cmd_pointwise(const Common& c, int n, int degree, int cases) {
  Run run = start("pointwise-identity", c, false);
  run.config["N"] = n;
  run.config["degree"] = degree;
  run.config["cases"] = cases;
  const auto results = run_pointwise_suite(n, degree, cases, c.seed);
  Json rows = Json::array();
  bool pass = true;
  std::printf("%4s %7s %20s %9s %9s %7s %7s %6s\n", "N", "degree", "seed", "identity", "P-func", "points", "dP>=0",
              "terms");
  for (const auto& r : results) {
    rows.push_back(to_json(r));
    const bool ok = r.residual_is_zero && r.pfunction_is_zero && r.points_vanish;
    pass = pass && ok;
    std::printf("%4d %7d %20llu %9s %9s %7s %7s %6zu\n", r.n, r.degree, static_cast<unsigned long long>(r.seed),
                r.residual_is_zero ? "zero" : "NONZERO", r.pfunction_is_zero ? "zero" : "NONZERO",
                r.points_vanish ? "ok" : "BAD", r.delta_p_nonnegative ? "yes" : "no", r.residual_terms);
  }
  run.write("pointwise.json", {{"N", n}, {"degree", degree}, {"cases", rows}, {"pass", pass}});
  run.finish();
  std::printf("%s\n", pass ? "PASS" : "FAIL");
  return pass ? kExitOk : kExitContract;
}

int cmd_spectral(const Common& c) {
  Run run = start("spectral", c);
  const SpacePtr space = make_space(*run.domain, c.h_target);
  run.note_space(*space);
  const EigenResult nu = neumann_eigenvalue_2(space);
  const EigenResult sigma = steklov_eigenvalue_2(space);
  const FemField u = solve_torsion_neumann(space);
  const Vec2 z = pick_z(u);
  const L2OscillationReport l2 = check_l2_oscillation_bound(u, z, 0.0, nu.value, sigma.value);
  run.write("spectral.json", {{"neumann", to_json(nu)}, {"steklov", to_json(sigma)}, {"z", to_json(z)},
                              {"l2_oscillation", to_json(l2)}, {"pass", l2.holds}});
  run.finish();
  print_line("nu_2", nu.value);
  print_line("sigma_2", sigma.value);
  print_line("L2 bound slack", l2.slack);
  std::printf("%s\n", l2.holds ? "PASS" : "FAIL");
  return l2.holds ? kExitOk : kExitContract;
}

int cmd_sweep(const Common& c, FamilySpec spec, double slope_min, double slope_max, double r2_min) {
  Run run = start("sweep", c, false);
  spec.h_target = c.h_target;
  spec.alpha = c.alpha;
  spec.workers = c.workers;
  run.config["family"] = to_json(spec);
  run.config["slope_window"] = {slope_min, slope_max};
  run.config["r2_min"] = r2_min;
  run.mesh = {{"h_target", spec.h_target}, {"levels", {spec.h_target, 0.5 * spec.h_target}},
              {"dof_cap", default_dof_cap()}};
  const SweepResult s = stability_sweep(spec);
  {
    auto f = run.open("sweep.csv");
    write_sweep_csv(f, s);
  }
  const ExponentFit& uf = s.fit("uniform");
  const bool pass = uf.n_points >= 2 && uf.slope >= slope_min && uf.slope <= slope_max && uf.r_squared >= r2_min;
  Json summary = fit_summary(s);
  summary["pass"] = pass;
  run.write("fits.json", summary);
  run.finish();
  std::printf("%10s %14s %14s %14s\n", "epsilon", "rho_gap", "uniform", "flux_l2");
  for (const auto& r : s.records) {
    std::printf("%10.5g %14.6e %14.6e %14.6e%s\n", r.epsilon, r.rho_gap, r.deviations.uniform(), r.strong.flux_l2,
                r.flagged ? "  flagged" : "");
  }
  for (const auto& f : s.fits) {
    std::printf("  fit %-9s slope %.4f  r2 %.5f  n %d  c_fit %.4g\n", f.deviation_kind.c_str(), f.slope, f.r_squared,
                f.n_points, f.c_fit);
  }
  std::printf("%s\n", pass ? "PASS" : "FAIL");
  return pass ? kExitOk : kExitContract;
}

int cmd_check_bounds(const Common& c) {
  Run run = start("check-bounds", c);
  const SpacePtr space = make_space(*run.domain, c.h_target);
  run.note_space(*space);
  const FemField u = solve_torsion_neumann(space);
  const GeometricBoundsReport g = geometric_bounds_check(u);
  const OscillationReport o = oscillation_bound_check(u, g.z);
  const L2OscillationReport l2 = check_l2_oscillation_bound(u, g.z);
  const std::pair<const char*, double> slacks[] = {{"distance_square", g.min_slack_square},
                                                   {"distance_linear", g.min_slack_linear},
                                                   {"minimum_depth", g.remark_slack},
                                                   {"radii", o.radii_slack},
                                                   {"l2_oscillation", l2.slack}};
  bool pass = true;
  Json sj = Json::object();
  for (const auto& [k, v] : slacks) {
    sj[k] = v;
    pass = pass && v >= -kSlackBand;
  }
  run.write("bounds.json", {{"geometric", to_json(g)},
                            {"oscillation", to_json(o)},
                            {"l2_oscillation", to_json(l2)},
                            {"slacks", sj},
                            {"band", kSlackBand},
                            {"pass", pass}});
  run.finish();
  for (const auto& [k, v] : slacks) print_line(k, v);
  std::printf("%s\n", pass ? "PASS" : "FAIL");
  return pass ? kExitOk : kExitContract;
}

int cmd_strong_deviation(const Common& c) {
  Run run = start("strong-deviation", c);
  const SpacePtr space = make_space(*run.domain, c.h_target);
  run.note_space(*space);
  const FemField u = solve_torsion_neumann(space);
  const StrongDeviationReport r = strong_deviation_pipeline(u, c.alpha);
  run.write("strong_deviation.json", {{"report", to_json(r)}, {"deviations", to_json(deviations(u, c.alpha))}});
  run.finish();
  print_line("|R - f_nu|_2", r.flux_l2);
  print_line("|R - f_nu|_C0a", r.flux_c0alpha);
  print_line("C1a deviation", r.c1alpha_deviation);
  print_line("ratio", r.ratio);
  std::printf("PASS\n");
  return kExitOk;
}

int cmd_convergence(const Common& c, const std::string& id_name, const std::vector<double>& h_list) {
  Run run = start("convergence", c);
  const IdentityId id = identity_from_string(id_name);
  run.config["identity"] = id_name;
  run.config["h_list"] = h_list;
  run.mesh = {{"h_list", h_list}, {"dof_cap", default_dof_cap()}};
  const ConvergenceStudy s = convergence_study(*run.domain, id, h_list);
  const bool pass = s.rigid || (s.monotone && s.order && *s.order > 0.0);
  Json j = to_json(s);
  j["pass"] = pass;
  run.write("convergence.json", j);
  run.finish();
  std::printf("%10s %10s %10s %14s\n", "h_target", "h", "dofs", "rel_residual");
  for (const auto& l : s.levels) std::printf("%10.4g %10.4g %10zu %14.6e\n", l.h_target, l.h, l.dofs, l.rel_residual);
  if (s.rigid) {
    std::printf("rigid: residuals at the noise floor, no order fitted\n");
  } else if (s.order) {
    std::printf("fitted order %.3f, %s\n", *s.order, s.monotone ? "monotone" : "not monotone");
  }
  std::printf("%s\n", pass ? "PASS" : "FAIL");
  return pass ? kExitOk : kExitContract;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for torsion functions and overdetermined boundary problems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SERRINLAB_VERSION);

  Common c;

  std::string solve_kind = "dirichlet";
  auto* solve = app.add_subcommand("solve", "solve the torsion problem and write its boundary data");
  add_common(solve, c);
  solve->add_option("--kind", solve_kind, "boundary condition")->check(CLI::IsMember({"dirichlet", "neumann"}));

  std::string identity;
  std::vector<double> z;
  double tol = 1e-2;
  auto* verify = app.add_subcommand("verify-identity", "evaluate an integral identity on a mesh");
  add_common(verify, c);
  verify->add_option("--identity", identity, "identity id")
      ->required()
      ->check(CLI::IsMember({"classical_1_2", "general_1_9", "mother_3_2", "mother_3_3", "neumann_1_11"}));
  verify->add_option("--z", z, "center of the quadratic, as x,y")->delimiter(',');
  verify->add_option("--tol", tol, "relative residual tolerance");

  int n = 2, degree = 4, cases = 20;
  auto* pointwise = app.add_subcommand("pointwise-identity", "exact symbolic check on random torsion polynomials");
  add_common(pointwise, c, false);
  pointwise->add_option("--N", n, "dimension")->check(CLI::Range(2, 8));
  pointwise->add_option("--degree", degree, "polynomial degree")->check(CLI::Range(2, 6));
  pointwise->add_option("--cases", cases, "number of random pairs")->check(CLI::PositiveNumber);

  auto* spectral = app.add_subcommand("spectral", "second Neumann and Steklov eigenvalues and the L2 oscillation bound");
  add_common(spectral, c);

  FamilySpec family;
  family.amplitudes = {0.0, 0.0125, 0.025, 0.05, 0.1};
  double slope_min = 0.85, slope_max = 1.3, r2_min = 0.98;
  auto* sweep = app.add_subcommand("sweep", "stability sweep over a one-mode perturbation family");
  add_common(sweep, c, false);
  sweep->add_option("--mode", family.mode, "Fourier mode")->check(CLI::PositiveNumber);
  sweep->add_option("--amplitudes", family.amplitudes, "comma separated amplitudes")->delimiter(',');
  sweep->add_option("--rho0", family.rho0, "mean radius")->check(CLI::PositiveNumber);
  sweep->add_option("--slope-min", slope_min, "lower end of the slope window");
  sweep->add_option("--slope-max", slope_max, "upper end of the slope window");
  sweep->add_option("--r2-min", r2_min, "minimum r^2 of the uniform fit");

  auto* bounds = app.add_subcommand("check-bounds", "pointwise, oscillation and radii inequalities");
  add_common(bounds, c);

  auto* strong = app.add_subcommand("strong-deviation", "harmonic splitting and the strong deviation ratio");
  add_common(strong, c);

  std::string conv_identity;
  std::vector<double> h_list = {0.1, 0.05, 0.025};
  auto* conv = app.add_subcommand("convergence", "identity residuals over mesh levels");
  add_common(conv, c);
  conv->add_option("--identity", conv_identity, "identity id")
      ->required()
      ->check(CLI::IsMember({"classical_1_2", "general_1_9", "mother_3_2", "mother_3_3", "neumann_1_11"}));
  conv->add_option("--h-list", h_list, "comma separated mesh sizes")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitError;
  }

  try {
    if (*solve) return cmd_solve(c, solve_kind);
    if (*verify) return cmd_verify_identity(c, identity, z, tol);
    if (*pointwise) return cmd_pointwise(c, n, degree, cases);
    if (*spectral) return cmd_spectral(c);
    if (*sweep) return cmd_sweep(c, family, slope_min, slope_max, r2_min);
    if (*bounds) return cmd_check_bounds(c);
    if (*strong) return cmd_strong_deviation(c);
    if (*conv) return cmd_convergence(c, conv_identity, h_list);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_contract(e.code()) ? kExitContract : kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
