#include "serrinlab/boundary.hpp"

#include "serrinlab/errors.hpp"
#include "serrinlab/recovery.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <mutex>
#include <numbers>
#include <ostream>

namespace serrinlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// FFTW planning is not thread safe; execution is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// Applies multiplier(k) to the Fourier coefficients k = 0..n/2 of a real periodic sample.
template <class Multiplier>
VectorXd spectral_filter(const VectorXd& f, Multiplier&& multiplier) {
  const int n = int(f.size());
  std::vector<double> real(f.data(), f.data() + n);
  std::vector<std::complex<double>> spec(n / 2 + 1);
  auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
  fftw_plan forward, backward;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    forward = fftw_plan_dft_r2c_1d(n, real.data(), cplx, FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r_1d(n, cplx, real.data(), FFTW_ESTIMATE);
  }
  fftw_execute(forward);
  for (int k = 0; k <= n / 2; ++k) spec[k] *= multiplier(k, n);
  fftw_execute(backward);
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }
  VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = real[i] / n;
  return out;
}

VectorXd theta_derivative(const VectorXd& f) {
  return spectral_filter(f, [](int k, int n) {
    if (2 * k == n) return std::complex<double>(0.0, 0.0);
    return std::complex<double>(0.0, double(k));
  });
}

VectorXd boundary_slice(const FemField& field, const VectorXd& full) {
  const auto& nodes = field.space().mesh().boundary_nodes;
  VectorXd out(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) out[i] = full[nodes[i]];
  return out;
}

double kappa_at(const FemSpace& space, std::size_t i) { return space.boundary_frames()[i].kappa; }

void require_laplacian_two(const FemField& u) {
  const auto lap = known_laplacian(u.kind());
  if (!lap || *lap != double(kDim)) {
    throw Error(ErrorCode::KindMismatch, "field is not tagged as a torsion solution");
  }
}

}  // namespace

BoundaryFunction trace(const FemField& field) {
  BoundaryFunction b = boundary_zero(field.space());
  b.values = boundary_slice(field, field.coeffs());
  return b;
}

BoundaryFunction sample_boundary(const FemSpace& space, const std::function<double(const BoundaryFrame&)>& f) {
  BoundaryFunction b = boundary_zero(space);
  for (std::size_t i = 0; i < b.size(); ++i) b.values[i] = f(space.boundary_frames()[i]);
  return b;
}

BoundaryFunction normal_derivative_recovered(const FemField& field) {
  const FemSpace& space = field.space();
  const GradientField g = recover_gradient(field);
  BoundaryFunction b = boundary_zero(space);
  const auto& nodes = space.mesh().boundary_nodes;
  for (std::size_t i = 0; i < nodes.size(); ++i) b.values[i] = g.at(nodes[i]).dot(space.boundary_frames()[i].nu);
  return b;
}

BoundaryFunction normal_derivative(const FemField& field) {
  const auto lap = known_laplacian(field.kind());
  if (!lap) return normal_derivative_recovered(field);
  const FemSpace& space = field.space();
  const VectorXd residual = space.stiffness() * field.gauge_coeffs() + (*lap) * space.volume_load();
  BoundaryFunction b = boundary_zero(space);
  b.values = space.solve_boundary_mass(boundary_slice(field, residual));
  return b;
}

BoundaryFunction arclength_derivative(const BoundaryFunction& f) {
  BoundaryFunction out = f.with_values(theta_derivative(f.values).cwiseQuotient(f.speed));
  return out;
}

BoundaryFunction arclength_derivative_fd4(const BoundaryFunction& f) {
  const int n = int(f.size());
  const double dtheta = kTwoPi / n;
  VectorXd d(n);
  for (int i = 0; i < n; ++i) {
    auto at = [&](int k) { return f.values[((i + k) % n + n) % n]; };
    d[i] = (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * dtheta) / f.speed[i];
  }
  return f.with_values(std::move(d));
}

BoundaryFunction laplace_beltrami(const BoundaryFunction& f) {
  const VectorXd first = theta_derivative(f.values).cwiseQuotient(f.speed);
  return f.with_values(theta_derivative(first).cwiseQuotient(f.speed));
}

VectorXd arclength_coordinates(const BoundaryFunction& f) {
  const int n = int(f.size());
  const double mean_speed = f.speed.mean();
  // Periodic antiderivative of speed - mean_speed, plus the linear part.
  const VectorXd periodic = spectral_filter(f.speed, [](int k, int m) {
    if (k == 0 || 2 * k == m) return std::complex<double>(0.0, 0.0);
    return std::complex<double>(0.0, -1.0 / k);
  });
  VectorXd s(n);
  for (int i = 0; i < n; ++i) s[i] = mean_speed * f.theta[i] + periodic[i] - periodic[0];
  return s;
}

BoundaryFunction tangential_gradient(const FemField& field) {
  BoundaryFunction t = arclength_derivative(boundary_zero(field.space()).with_values(boundary_slice(field, field.gauge_coeffs())));
  t.tangential = t.values;
  return t;
}

TangentialAudit audit_tangential(const FemField& field) {
  const FemSpace& space = field.space();
  const BoundaryFunction tr = trace(field);
  const VectorXd spectral = arclength_derivative(tr).values;
  const VectorXd fd = arclength_derivative_fd4(tr).values;
  const GradientField g = recover_gradient(field);
  TangentialAudit audit;
  const auto& nodes = space.mesh().boundary_nodes;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double rec = g.at(nodes[i]).dot(space.boundary_frames()[i].tangent);
    audit.vs_recovered = std::max(audit.vs_recovered, std::abs(spectral[i] - rec));
    audit.vs_finite_diff = std::max(audit.vs_finite_diff, std::abs(spectral[i] - fd[i]));
  }
  return audit;
}

BoundaryGradient boundary_gradient(const FemField& field) {
  BoundaryGradient bg{normal_derivative(field), tangential_gradient(field), {}};
  const auto& frames = field.space().boundary_frames();
  bg.grad.resize(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    bg.grad[i] = bg.normal.values[i] * frames[i].nu + bg.tangential.values[i] * frames[i].tangent;
  }
  return bg;
}

double surface_integral(const BoundaryFunction& f) { return f.values.dot(f.weights); }

double surface_l2_norm(const BoundaryFunction& f) {
  return std::sqrt(f.values.cwiseAbs2().dot(f.weights));
}

double max_abs(const BoundaryFunction& f) { return f.size() ? f.values.cwiseAbs().maxCoeff() : 0.0; }

double oscillation(const BoundaryFunction& f) {
  return f.size() ? f.values.maxCoeff() - f.values.minCoeff() : 0.0;
}

double holder_seminorm(const BoundaryFunction& f, double alpha, double min_separation) {
  const VectorXd s = arclength_coordinates(f);
  const double length = f.speed.mean() * kTwoPi;
  const int n = int(f.size());
  double best = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double gap = std::abs(s[j] - s[i]);
      const double d = std::min(gap, length - gap);
      if (d < min_separation) continue;
      best = std::max(best, std::abs(f.values[i] - f.values[j]) / std::pow(d, alpha));
    }
  }
  return best;
}

IbpResidual check_integration_by_parts(const BoundaryFunction& v, const BoundaryFunction& w) {
  IbpResidual r;
  const VectorXd dv = arclength_derivative(v).values;
  const VectorXd dw = arclength_derivative(w).values;
  r.gradient_form = dv.cwiseProduct(dw).dot(v.weights);
  r.laplacian_form = -v.values.cwiseProduct(laplace_beltrami(w).values).dot(v.weights);
  r.abs_residual = std::abs(r.gradient_form - r.laplacian_form);
  r.rel_residual = r.abs_residual / std::max({std::abs(r.gradient_form), std::abs(r.laplacian_form), 1e-14});
  return r;
}

IbpResidual check_integration_by_parts(const FemField& v, const FemField& w) {
  if (v.space_ptr() != w.space_ptr()) throw Error(ErrorCode::InvalidArgument, "fields live on different meshes");
  return check_integration_by_parts(trace(v), trace(w));
}

BoundaryFunction hessian_flux_recovered(const FemField& u) {
  const FemSpace& space = u.space();
  const HessianField H = recover_hessian(u);
  const BoundaryGradient bg = boundary_gradient(u);
  BoundaryFunction out = boundary_zero(space);
  const auto& nodes = space.mesh().boundary_nodes;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    out.values[i] = (H.at_node(nodes[i]) * bg.grad[i]).dot(space.boundary_frames()[i].nu);
  }
  return out;
}

BoundaryFunction hessian_flux(const FemField& u) {
  const auto lap = known_laplacian(u.kind());
  if (!lap) return hessian_flux_recovered(u);
  const FemSpace& space = u.space();
  const BoundaryFunction un = normal_derivative(u);
  const BoundaryFunction tr = trace(u);
  const VectorXd ut = arclength_derivative(tr).values;
  const VectorXd lap_g = laplace_beltrami(tr).values;
  const VectorXd dun = arclength_derivative(un).values;
  BoundaryFunction out = boundary_zero(space);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double k = kappa_at(space, i);
    const double unn = *lap - lap_g[i] - k * un.values[i];
    const double unt = dun[i] - k * ut[i];
    out.values[i] = unn * un.values[i] + unt * ut[i];
  }
  return out;
}

BoundaryFunction lemma21_residual(const FemField& u, BoundaryKind kind) {
  require_laplacian_two(u);
  const FemSpace& space = u.space();
  const BoundaryFunction tr = trace(u);
  const BoundaryFunction un = normal_derivative(u);
  if (kind == BoundaryKind::dirichlet) {
    if (oscillation(tr) > 1e-8 * (1.0 + u.coeffs().cwiseAbs().maxCoeff())) {
      throw Error(ErrorCode::KindMismatch, "trace is not constant");
    }
  } else {
    const double mean = std::abs(un.values.mean());
    if (oscillation(un) > 1e-6 * std::max(mean, 1e-300)) {
      throw Error(ErrorCode::KindMismatch, "normal derivative is not constant");
    }
  }
  const BoundaryFunction lhs = hessian_flux_recovered(u);
  const VectorXd ut = arclength_derivative(tr).values;
  const VectorXd lap_g = laplace_beltrami(tr).values;
  const double N = kDim;
  BoundaryFunction out = boundary_zero(space);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double k = kappa_at(space, i);
    const double n = un.values[i];
    const double rhs = kind == BoundaryKind::dirichlet ? n * (N - (N - 1) * k * n)
                                                       : -k * ut[i] * ut[i] + n * (N - lap_g[i] - (N - 1) * k * n);
    out.values[i] = lhs.values[i] - rhs;
  }
  return out;
}

void write_csv(std::ostream& out, const BoundaryFunction& f) {
  const VectorXd s = arclength_coordinates(f);
  out << "theta,arclength,value\n";
  char line[128];
  for (std::size_t i = 0; i < f.size(); ++i) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", f.theta[i], s[i], f.values[i]);
    out << line;
  }
}

}  // namespace serrinlab
