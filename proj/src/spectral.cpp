#include "serrinlab/spectral.hpp"

#include "serrinlab/boundary.hpp"
#include "serrinlab/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>

namespace serrinlab {

namespace {

using Eigen::MatrixXd;

// Harmonic polynomials about the domain center, used as the starting block.
MatrixXd starting_block(const FemSpace& space, int m) {
  const Vec2 c = space.domain().center();
  MatrixXd X(space.num_dofs(), m);
  for (std::size_t i = 0; i < space.num_dofs(); ++i) {
    const std::complex<double> w(space.mesh().nodes[i].x() - c.x(), space.mesh().nodes[i].y() - c.y());
    std::complex<double> p = w;
    for (int j = 0; j < m; j += 2) {
      X(i, j) = p.real();
      if (j + 1 < m) X(i, j + 1) = p.imag();
      p *= w;
    }
  }
  return X;
}

EigenResult block_inverse_iteration(const SpacePtr& space, EigenKind kind, const SparseMatrix& B,
                                    const EigenOptions& options) {
  const FemSpace& s = *space;
  const SparseMatrix& K = s.stiffness();
  const int m = options.block_size;
  if (m < 2) throw Error(ErrorCode::InvalidArgument, "block size must be at least 2");
  const VectorXd ones = VectorXd::Ones(Eigen::Index(s.num_dofs()));
  const VectorXd B1 = B * ones;
  const double one_b = ones.dot(B1);
  auto deflate = [&](MatrixXd& X) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) X.col(j) -= ones * (B1.dot(X.col(j)) / one_b);
  };

  MatrixXd X = starting_block(s, m);
  deflate(X);
  double residual = std::numeric_limits<double>::infinity();
  double value = 0.0;
  VectorXd x;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const MatrixXd BX = B * X;
    MatrixXd Y(X.rows(), m);
    for (int j = 0; j < m; ++j) Y.col(j) = s.solve_pinned(BX.col(j));
    deflate(Y);
    MatrixXd Kp = Y.transpose() * (K * Y);
    MatrixXd Bp = Y.transpose() * (B * Y);
    Kp = 0.5 * (Kp + Kp.transpose()).eval();
    Bp = 0.5 * (Bp + Bp.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(Kp, Bp);
    if (es.info() != Eigen::Success) throw Error(ErrorCode::ConvergenceFailure, "Rayleigh-Ritz step failed");
    X = Y * es.eigenvectors();
    value = es.eigenvalues()[0];
    x = X.col(0);
    const VectorXd Kx = K * x;
    residual = (Kx - value * (B * x)).norm() / Kx.norm();
    if (residual <= options.tolerance) break;
  }
  if (!(residual <= options.tolerance)) {
    throw Error(ErrorCode::ConvergenceFailure,
                std::string(to_string(kind)) + " eigen solve stalled at residual " + std::to_string(residual));
  }
  x /= std::sqrt(x.dot(B * x));
  Eigen::Index imax;
  x.cwiseAbs().maxCoeff(&imax);
  if (x[imax] < 0) x = -x;
  const double orth = std::abs(B1.dot(x)) / std::sqrt(one_b);
  return EigenResult{kind, value, FemField(space, x), residual, orth, it + 1};
}

}  // namespace

std::string_view to_string(EigenKind kind) { return kind == EigenKind::neumann ? "neumann" : "steklov"; }

EigenResult neumann_eigenvalue_2(const SpacePtr& space, const EigenOptions& options) {
  return block_inverse_iteration(space, EigenKind::neumann, space->mass(), options);
}

EigenResult steklov_eigenvalue_2(const SpacePtr& space, const EigenOptions& options) {
  // Consistent quadratic boundary mass scattered to the global dofs.
  const auto& nodes = space->mesh().boundary_nodes;
  const SparseMatrix& Mg = space->boundary_mass();
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index k = 0; k < Mg.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(Mg, k); it; ++it) trip.emplace_back(nodes[it.row()], nodes[it.col()], it.value());
  }
  SparseMatrix B(Eigen::Index(space->num_dofs()), Eigen::Index(space->num_dofs()));
  B.setFromTriplets(trip.begin(), trip.end());
  return block_inverse_iteration(space, EigenKind::steklov, B, options);
}

L2OscillationReport check_l2_oscillation_bound(const FemField& u, const Vec2& z, double a, double nu2, double sigma2,
                                               double tol) {
  const FemSpace& space = u.space();
  const double R = space.R_discrete();
  const BoundaryFunction un = normal_derivative(u);
  if (oscillation(un) > 1e-3 * R) throw Error(ErrorCode::NotNeumann, "normal derivative is not constant");
  auto q = [&](const Vec2& x) { return 0.5 * (x - z).squaredNorm() + a; };
  auto h_at = [&](std::size_t e, int k, const Vec2& x) { return q(x) - u.value_at_qp(e, k); };

  L2OscillationReport r;
  r.nu2 = nu2;
  r.sigma2 = sigma2;
  r.tol = tol;
  r.h_volume_mean = volume_integral(space, h_at) / space.area();
  const BoundaryFunction tr = trace(u);
  const auto& frames = space.boundary_frames();
  VectorXd h_gamma(tr.values.size()), defect(tr.values.size());
  for (Eigen::Index i = 0; i < h_gamma.size(); ++i) {
    h_gamma[i] = q(frames[i].point) - tr.values[i];
    defect[i] = R - (frames[i].point - z).dot(frames[i].nu);
  }
  r.h_boundary_mean = surface_integral(tr.with_values(h_gamma)) / tr.weights.sum();
  auto spread = [&](double c) {
    return std::sqrt(volume_integral(space, [&](std::size_t e, int k, const Vec2& x) {
      const double d = h_at(e, k, x) - c;
      return d * d;
    }));
  };
  r.lhs = spread(r.h_volume_mean);
  r.lhs_boundary_mean = spread(r.h_boundary_mean);
  r.flux_defect = surface_l2_norm(tr.with_values(defect));
  r.rhs = 2.0 * r.flux_defect / std::sqrt(nu2 * sigma2);
  r.slack = r.rhs - r.lhs;
  r.holds = r.slack >= -tol;
  return r;
}

L2OscillationReport check_l2_oscillation_bound(const FemField& u, const Vec2& z, double a, double tol) {
  const double nu2 = neumann_eigenvalue_2(u.space_ptr()).value;
  const double sigma2 = steklov_eigenvalue_2(u.space_ptr()).value;
  return check_l2_oscillation_bound(u, z, a, nu2, sigma2, tol);
}

}  // namespace serrinlab
