#include "serrinlab/report.hpp"

#include "serrinlab/errors.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>

namespace serrinlab {

namespace {

Vec2 vec_from_json(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

Json named_values(const std::vector<std::pair<std::string, double>>& values) {
  Json out = Json::object();
  for (const auto& [k, v] : values) out[k] = v;
  return out;
}

std::string csv_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

StarDomain domain_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "domain spec must be a JSON object");
  const Vec2 center = j.contains("center") ? vec_from_json(j["center"], "center") : Vec2::Zero();
  if (j.contains("ellipse")) {
    const Vec2 ab = vec_from_json(j["ellipse"], "ellipse");
    return StarDomain::ellipse(ab.x(), ab.y(), center);
  }
  const double rho0 = j.value("rho0", 1.0);
  std::vector<FourierMode> modes;
  if (j.contains("modes")) {
    for (const auto& m : j["modes"]) {
      if (!m.is_array() || m.size() != 3) throw Error(ErrorCode::InvalidArgument, "each mode must be [k, a, b]");
      modes.push_back({m[0].get<int>(), m[1].get<double>(), m[2].get<double>()});
    }
  }
  return StarDomain::fourier(rho0, std::move(modes), center);
}

Json domain_to_json(const StarDomain& domain) {
  Json j = Json::object();
  if (domain.is_ellipse()) {
    j["ellipse"] = {domain.ellipse_shape().a, domain.ellipse_shape().b};
  } else {
    j["rho0"] = domain.rho0();
    Json modes = Json::array();
    for (const auto& m : domain.modes()) modes.push_back({m.k, m.a, m.b});
    j["modes"] = modes;
  }
  j["center"] = to_json(domain.center());
  return j;
}

StarDomain load_domain(const std::string& path_or_inline) {
  if (!path_or_inline.empty() && path_or_inline.front() == '{') return domain_from_json(Json::parse(path_or_inline));
  std::ifstream in(path_or_inline);
  if (!in) throw std::runtime_error("cannot open domain file '" + path_or_inline + "'");
  return domain_from_json(Json::parse(in));
}

Json to_json(const Vec2& x) { return Json::array({x.x(), x.y()}); }

Json to_json(const DomainMeasures& m) {
  return {{"area", m.area},           {"perimeter", m.perimeter}, {"R", m.R},
          {"diameter", m.diameter},   {"r_i", m.r_i},             {"r_e", m.r_e},
          {"kappa_min", m.kappa_min}, {"kappa_max", m.kappa_max}};
}

Json to_json(const IdentityReport& r) {
  return {{"identity_id", to_string(r.id)},
          {"anchor", anchor(r.id)},
          {"terms", named_values(r.terms)},
          {"lhs", r.lhs},
          {"rhs", r.rhs},
          {"abs_residual", r.abs_residual},
          {"rel_residual", r.rel_residual},
          {"h", r.h},
          {"fingerprint", r.fingerprint},
          {"diagnostics", named_values(r.diagnostics)}};
}

Json to_json(const RigidityVerdict& r) {
  return {{"s", r.s},
          {"V", r.V},
          {"sphere_deviation", r.sphere_deviation},
          {"tol", r.tol},
          {"rhs_nonpositive", r.rhs_nonpositive},
          {"v_small", r.v_small},
          {"contract_holds", r.contract_holds}};
}

Json to_json(const DeviationSet& d) {
  return {{"osc_gamma_u", d.osc_gamma_u},
          {"grad_inf", d.grad_inf},
          {"grad_l2", d.grad_l2},
          {"tangential_norm", d.tangential_norm},
          {"c1alpha_norm", d.c1alpha_norm},
          {"alpha", d.alpha},
          {"uniform", d.uniform()},
          {"weak", d.weak()}};
}

Json to_json(const GeometricBoundsReport& r) {
  return {{"min_slack_square", r.min_slack_square},
          {"min_slack_linear", r.min_slack_linear},
          {"z", to_json(r.z)},
          {"delta_z", r.delta_z},
          {"delta_z_lower", r.delta_z_lower},
          {"remark_slack", r.remark_slack},
          {"r_i", r.r_i},
          {"grad_inf_omega", r.grad_inf_omega},
          {"osc_gamma_u", r.osc_gamma_u}};
}

Json to_json(const OscillationReport& r) {
  return {{"z", to_json(r.z)},
          {"grad_h_at_z", r.grad_h_at_z},
          {"osc_gamma_h", r.osc_gamma_h},
          {"W", r.W},
          {"V", r.V},
          {"tangential_norm", r.tangential_norm},
          {"osc_gamma_u", r.osc_gamma_u},
          {"volume_ratio", r.volume_ratio},
          {"oscillation_ratio", r.oscillation_ratio},
          {"rho_i", r.rho_i},
          {"rho_e", r.rho_e},
          {"radii_slack", r.radii_slack}};
}

Json to_json(const StrongDeviationReport& r) {
  return {{"flux_l2", r.flux_l2},
          {"flux_c0alpha", r.flux_c0alpha},
          {"c1alpha_deviation", r.c1alpha_deviation},
          {"ratio", r.ratio},
          {"f_trace_max", r.f_trace_max},
          {"laplacian_defect", r.laplacian_defect},
          {"R", r.R}};
}

Json to_json(const L2OscillationReport& r) {
  return {{"lhs", r.lhs},
          {"rhs", r.rhs},
          {"slack", r.slack},
          {"tol", r.tol},
          {"holds", r.holds},
          {"lhs_boundary_mean", r.lhs_boundary_mean},
          {"h_volume_mean", r.h_volume_mean},
          {"h_boundary_mean", r.h_boundary_mean},
          {"flux_defect", r.flux_defect},
          {"nu2", r.nu2},
          {"sigma2", r.sigma2}};
}

Json to_json(const EigenResult& r) {
  return {{"which", to_string(r.which)},
          {"value", r.value},
          {"rayleigh_residual", r.rayleigh_residual},
          {"orthogonality", r.orthogonality},
          {"iterations", r.iterations}};
}

Json to_json(const ExponentFit& f) {
  return {{"deviation_kind", f.deviation_kind},
          {"slope", f.slope},
          {"intercept", f.intercept},
          {"r_squared", f.r_squared},
          {"n_points", f.n_points},
          {"c_fit", f.c_fit}};
}

Json to_json(const StabilityRecord& r) {
  return {{"epsilon", r.epsilon},
          {"rho_gap", r.rho_gap},
          {"rho_gap_coarse", r.rho_gap_coarse},
          {"rho_gap_fine", r.rho_gap_fine},
          {"deviations", to_json(r.deviations)},
          {"psi", named_values(r.psi_values)},
          {"z", to_json(r.z)},
          {"delta_z", r.delta_z},
          {"mesh_h", r.mesh_h},
          {"small_regime", r.small_regime},
          {"strong", to_json(r.strong)},
          {"volume_ratio", r.volume_ratio},
          {"flagged", r.flagged},
          {"flag_reason", r.flag_reason}};
}

Json to_json(const FamilySpec& s) {
  return {{"mode", s.mode},         {"amplitudes", s.amplitudes}, {"rho0", s.rho0},
          {"h_target", s.h_target}, {"alpha", s.alpha},           {"workers", s.workers},
          {"richardson_order", s.richardson_order}};
}

Json fit_summary(const SweepResult& s) {
  Json fits = Json::array();
  for (const auto& f : s.fits) fits.push_back(to_json(f));
  std::size_t flagged = 0;
  for (const auto& r : s.records) flagged += r.flagged ? 1 : 0;
  return {{"family", to_json(s.spec)},
          {"records", s.records.size()},
          {"flagged", flagged},
          {"fits", fits},
          {"strong_flux_fit", to_json(s.strong_flux_fit)}};
}

Json to_json(const ConvergenceStudy& s) {
  Json levels = Json::array();
  for (const auto& l : s.levels) {
    levels.push_back({{"h_target", l.h_target},
                      {"h", l.h},
                      {"dofs", l.dofs},
                      {"lhs", l.lhs},
                      {"rhs", l.rhs},
                      {"abs_residual", l.abs_residual},
                      {"rel_residual", l.rel_residual}});
  }
  Json j = {{"identity_id", to_string(s.id)}, {"anchor", anchor(s.id)}, {"levels", levels},
            {"rigid", s.rigid},               {"monotone", s.monotone}};
  j["order"] = s.order ? Json(*s.order) : Json(nullptr);
  return j;
}

Json to_json(const PointwiseCase& c) {
  return {{"n", c.n},
          {"degree", c.degree},
          {"seed", c.seed},
          {"residual_is_zero", c.residual_is_zero},
          {"pfunction_is_zero", c.pfunction_is_zero},
          {"points_vanish", c.points_vanish},
          {"delta_p_nonnegative", c.delta_p_nonnegative},
          {"residual_terms", c.residual_terms}};
}

Json to_json(const RunManifest& m) {
  return {{"command", m.command}, {"config_hash", m.config_hash}, {"config", m.config},
          {"domain", m.domain},   {"mesh", m.mesh},               {"seeds", m.seeds},
          {"tool_version", m.tool_version}, {"timestamp", m.timestamp}, {"artifacts", m.artifacts}};
}

std::string config_hash(const Json& config) {
  // nlohmann::json keeps object keys in a std::map, so its dump is canonical.
  const std::string canonical = nlohmann::json::parse(config.dump()).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_sweep_csv(std::ostream& out, const SweepResult& s) {
  out << "epsilon,rho_gap,rho_gap_coarse,rho_gap_fine,osc_gamma_u,grad_inf,grad_l2,tangential_norm,c1alpha_norm,"
         "uniform,weak,psi_uniform,z_x,z_y,delta_z,mesh_h,small_regime,flux_l2,flux_c0alpha,c1alpha_deviation,"
         "strong_ratio,volume_ratio,flagged,flag_reason\n";
  for (const auto& r : s.records) {
    double psi_uniform = 0.0;
    for (const auto& [k, v] : r.psi_values) {
      if (k == "uniform") psi_uniform = v;
    }
    const double row[] = {r.epsilon,
                          r.rho_gap,
                          r.rho_gap_coarse,
                          r.rho_gap_fine,
                          r.deviations.osc_gamma_u,
                          r.deviations.grad_inf,
                          r.deviations.grad_l2,
                          r.deviations.tangential_norm,
                          r.deviations.c1alpha_norm,
                          r.deviations.uniform(),
                          r.deviations.weak(),
                          psi_uniform,
                          r.z.x(),
                          r.z.y(),
                          r.delta_z,
                          r.mesh_h};
    for (double x : row) out << csv_double(x) << ',';
    out << (r.small_regime ? 1 : 0) << ',' << csv_double(r.strong.flux_l2) << ',' << csv_double(r.strong.flux_c0alpha)
        << ',' << csv_double(r.strong.c1alpha_deviation) << ',' << csv_double(r.strong.ratio) << ','
        << csv_double(r.volume_ratio) << ',' << (r.flagged ? 1 : 0) << ',';
    std::string reason = r.flag_reason;
    for (char& c : reason) {
      if (c == ',' || c == '\n' || c == '"') c = ';';
    }
    out << reason << '\n';
  }
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

}  // namespace serrinlab
