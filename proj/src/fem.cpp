#include "serrinlab/fem.hpp"

#include "serrinlab/errors.hpp"
#include "serrinlab/recovery.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <numbers>

namespace serrinlab {

namespace {

constexpr double kResidualTarget = 1e-12;

// Degree-4 six-point rule on the reference triangle (weights sum to 1).
constexpr double kA1 = 0.44594849091596488632;
constexpr double kW1 = 0.22338158967801146570;
constexpr double kA2 = 0.091576213509770743460;
constexpr double kW2 = 0.10995174365532186764;

struct RefRule {
  std::array<Eigen::Vector2d, 6> points;
  std::array<double, 6> weights;
  std::array<std::array<double, 6>, 6> shape;
  std::array<Eigen::Matrix<double, 6, 2>, 6> grad;
};

// Collapsed Gauss-Legendre product rule, used to assemble matrices on curved elements
// where the isoparametric integrands are rational.
struct DenseRule {
  std::vector<Eigen::Vector2d> points;
  std::vector<double> weights;
};

const DenseRule& curved_rule() {
  static const DenseRule rule = [] {
    using GL = boost::math::quadrature::gauss<double, 8>;
    std::vector<std::pair<double, double>> g;
    for (std::size_t i = 0; i < GL::abscissa().size(); ++i) {
      const double x = GL::abscissa()[i];
      const double w = 0.5 * GL::weights()[i];
      g.emplace_back(0.5 * (1.0 + x), w);
      if (x != 0.0) g.emplace_back(0.5 * (1.0 - x), w);
    }
    DenseRule r;
    for (const auto& [a, wa] : g) {
      for (const auto& [b, wb] : g) {
        r.points.emplace_back(a, b * (1.0 - a));
        r.weights.push_back(wa * wb * (1.0 - a));
      }
    }
    return r;
  }();
  return rule;
}

const RefRule& ref_rule() {
  static const RefRule rule = [] {
    RefRule r;
    const double bary[6][3] = {{kA1, kA1, 1 - 2 * kA1}, {kA1, 1 - 2 * kA1, kA1}, {1 - 2 * kA1, kA1, kA1},
                               {kA2, kA2, 1 - 2 * kA2}, {kA2, 1 - 2 * kA2, kA2}, {1 - 2 * kA2, kA2, kA2}};
    for (int q = 0; q < 6; ++q) {
      r.points[q] = Eigen::Vector2d(bary[q][1], bary[q][2]);
      r.weights[q] = 0.5 * (q < 3 ? kW1 : kW2);
      r.shape[q] = p2_shape(r.points[q]);
      r.grad[q] = p2_shape_grad(r.points[q]);
    }
    return r;
  }();
  return rule;
}

// Second derivatives (xixi, xieta, etaeta) of the reference shape functions.
constexpr double kShapeHess[6][3] = {{4, 4, 4}, {4, 0, 0}, {0, 0, 4}, {-8, -4, 0}, {0, 4, 0}, {0, -4, -8}};

Mat2 jacobian_of(const std::array<Vec2, 6>& X, const Eigen::Matrix<double, 6, 2>& dN) {
  Mat2 J = Mat2::Zero();
  for (int a = 0; a < 6; ++a) J += X[a] * dN.row(a);
  return J;
}

// Normwise backward error |Ax - b| / (|A| |x| + |b|) with the infinity norms.
double relative_residual(const SparseMatrix& A, const VectorXd& x, const VectorXd& b) {
  double anorm = 0.0;
  VectorXd row_abs = VectorXd::Zero(A.rows());
  for (int col = 0; col < A.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(A, col); it; ++it) row_abs[it.row()] += std::abs(it.value());
  }
  anorm = row_abs.size() ? row_abs.maxCoeff() : 0.0;
  const double scale = anorm * x.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>();
  const double nr = (A * x - b).lpNorm<Eigen::Infinity>();
  return scale > 0.0 ? nr / scale : nr;
}

template <class Solver>
VectorXd refined_solve(const Solver& solver, const SparseMatrix& A, const VectorXd& b, const char* what) {
  if (b.size() == 0) return VectorXd();
  VectorXd x = solver.solve(b);
  for (int it = 0; it < 3 && relative_residual(A, x, b) > kResidualTarget; ++it) {
    x += solver.solve(VectorXd(b - A * x));
  }
  const double res = relative_residual(A, x, b);
  if (!(res <= kResidualTarget)) {
    throw Error(ErrorCode::SolverFailure, std::string(what) + " residual " + std::to_string(res));
  }
  return x;
}

}  // namespace

std::string_view to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::torsion_dirichlet: return "torsion_dirichlet";
    case FieldKind::torsion_neumann: return "torsion_neumann";
    case FieldKind::harmonic_dirichlet: return "harmonic_dirichlet";
    case FieldKind::generic: return "generic";
  }
  return "generic";
}

FieldKind field_kind_from_string(std::string_view name) {
  for (FieldKind k : {FieldKind::torsion_dirichlet, FieldKind::torsion_neumann, FieldKind::harmonic_dirichlet,
                      FieldKind::generic}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown field kind '" + std::string(name) + "'");
}

std::optional<double> known_laplacian(FieldKind kind) {
  switch (kind) {
    case FieldKind::torsion_dirichlet:
    case FieldKind::torsion_neumann: return double(kDim);
    case FieldKind::harmonic_dirichlet: return 0.0;
    case FieldKind::generic: return std::nullopt;
  }
  return std::nullopt;
}

std::array<double, 6> p2_shape(const Eigen::Vector2d& ref) {
  const double x = ref.x(), y = ref.y(), l = 1.0 - x - y;
  return {l * (2 * l - 1), x * (2 * x - 1), y * (2 * y - 1), 4 * l * x, 4 * x * y, 4 * y * l};
}

Eigen::Matrix<double, 6, 2> p2_shape_grad(const Eigen::Vector2d& ref) {
  const double x = ref.x(), y = ref.y(), l = 1.0 - x - y;
  Eigen::Matrix<double, 6, 2> g;
  g << -(4 * l - 1), -(4 * l - 1),  //
      4 * x - 1, 0.0,               //
      0.0, 4 * y - 1,               //
      4 * (l - x), -4 * x,          //
      4 * y, 4 * x,                 //
      -4 * y, 4 * (l - y);
  return g;
}

struct FemSpace::Factorizations {
  SparseMatrix k_ii;
  SparseMatrix k_ib;
  SparseMatrix k_pinned;
  Eigen::SimplicialLLT<SparseMatrix> interior;
  Eigen::SimplicialLLT<SparseMatrix> pinned;
  Eigen::SimplicialLDLT<SparseMatrix> boundary;
};

FemSpace::FemSpace(Mesh mesh) : mesh_(std::move(mesh)) {
  assemble();
  build_boundary();
}

FemSpace::~FemSpace() = default;

const std::array<double, 6>& FemSpace::shape_values(int q) { return ref_rule().shape[q]; }

Eigen::Vector2d FemSpace::reference_point(int q) { return ref_rule().points[q]; }

void FemSpace::assemble() {
  const auto& rule = ref_rule();
  const std::size_t ne = mesh_.triangles.size();
  const std::size_t nd = mesh_.num_nodes();
  qp_x_.resize(ne * kQuadPoints);
  qp_w_.resize(ne * kQuadPoints);
  qp_grad_.resize(ne * kQuadPoints);
  volume_load_ = VectorXd::Zero(nd);

  std::vector<Eigen::Triplet<double>> kt, mt;
  kt.reserve(ne * 36);
  mt.reserve(ne * 36);
  area_ = 0.0;
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& t = mesh_.triangles[e];
    std::array<Vec2, 6> X;
    for (int a = 0; a < 6; ++a) X[a] = mesh_.nodes[t[a]];
    Eigen::Matrix<double, 6, 6> ke = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 6> me = Eigen::Matrix<double, 6, 6>::Zero();
    for (int q = 0; q < kQuadPoints; ++q) {
      const Mat2 J = jacobian_of(X, rule.grad[q]);
      const double det = J.determinant();
      if (!(det > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "inverted element " + std::to_string(e));
      }
      const ShapeGrad G = rule.grad[q] * J.inverse();
      const double w = rule.weights[q] * det;
      Vec2 x = Vec2::Zero();
      Eigen::Matrix<double, 6, 1> N;
      for (int a = 0; a < 6; ++a) {
        N[a] = rule.shape[q][a];
        x += N[a] * X[a];
      }
      qp_x_[e * kQuadPoints + q] = x;
      qp_w_[e * kQuadPoints + q] = w;
      qp_grad_[e * kQuadPoints + q] = G;
      if (!mesh_.curved[e]) {
        ke += w * G * G.transpose();
        me += w * N * N.transpose();
      }
      for (int a = 0; a < 6; ++a) volume_load_[t[a]] += w * N[a];
      area_ += w;
    }
    if (mesh_.curved[e]) {
      const auto& dense = curved_rule();
      for (std::size_t q = 0; q < dense.points.size(); ++q) {
        const auto dN = p2_shape_grad(dense.points[q]);
        const Mat2 J = jacobian_of(X, dN);
        const double w = dense.weights[q] * J.determinant();
        const ShapeGrad G = dN * J.inverse();
        const auto Nq = p2_shape(dense.points[q]);
        const Eigen::Matrix<double, 6, 1> N = Eigen::Map<const Eigen::Matrix<double, 6, 1>>(Nq.data());
        ke += w * G * G.transpose();
        me += w * N * N.transpose();
      }
    }
    for (int a = 0; a < 6; ++a) {
      for (int b = 0; b < 6; ++b) {
        kt.emplace_back(t[a], t[b], ke(a, b));
        mt.emplace_back(t[a], t[b], me(a, b));
      }
    }
  }
  stiffness_.resize(nd, nd);
  stiffness_.setFromTriplets(kt.begin(), kt.end());
  mass_.resize(nd, nd);
  mass_.setFromTriplets(mt.begin(), mt.end());

  interior_index_.assign(nd, -1);
  interior_dofs_.clear();
  for (std::size_t i = 0; i < nd; ++i) {
    if (!mesh_.on_boundary[i]) {
      interior_index_[i] = int(interior_dofs_.size());
      interior_dofs_.push_back(int(i));
    }
  }
}

void FemSpace::build_boundary() {
  const std::size_t nb = mesh_.num_boundary();
  const std::size_t edges = nb / 2;
  using GL = boost::math::quadrature::gauss<double, 5>;
  std::vector<std::pair<double, double>> gl;  // points on [0,1], weights
  for (std::size_t i = 0; i < GL::abscissa().size(); ++i) {
    const double x = GL::abscissa()[i];
    const double w = 0.5 * GL::weights()[i];
    gl.emplace_back(0.5 * (1.0 + x), w);
    if (x != 0.0) gl.emplace_back(0.5 * (1.0 - x), w);
  }

  std::vector<Eigen::Triplet<double>> bt;
  bt.reserve(edges * 9);
  perimeter_ = 0.0;
  for (std::size_t k = 0; k < edges; ++k) {
    const std::array<std::size_t, 3> slot{2 * k, 2 * k + 1, (2 * k + 2) % nb};
    std::array<Vec2, 3> X;
    for (int a = 0; a < 3; ++a) X[a] = mesh_.nodes[mesh_.boundary_nodes[slot[a]]];
    Eigen::Matrix3d me = Eigen::Matrix3d::Zero();
    for (const auto& [t, w] : gl) {
      const Eigen::Vector3d psi((1 - t) * (1 - 2 * t), 4 * t * (1 - t), t * (2 * t - 1));
      const Eigen::Vector3d dpsi(4 * t - 3, 4 - 8 * t, 4 * t - 1);
      const Vec2 dx = dpsi[0] * X[0] + dpsi[1] * X[1] + dpsi[2] * X[2];
      const double jw = w * dx.norm();
      me += jw * psi * psi.transpose();
      perimeter_ += jw;
    }
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) bt.emplace_back(int(slot[a]), int(slot[b]), me(a, b));
    }
  }
  boundary_mass_.resize(nb, nb);
  boundary_mass_.setFromTriplets(bt.begin(), bt.end());

  boundary_load_ = VectorXd::Zero(mesh_.num_nodes());
  const VectorXd row_sums = boundary_mass_ * VectorXd::Ones(nb);
  for (std::size_t i = 0; i < nb; ++i) boundary_load_[mesh_.boundary_nodes[i]] = row_sums[i];

  frames_.resize(nb);
  boundary_weights_.resize(nb);
  const double dtheta = 2.0 * std::numbers::pi / double(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    frames_[i] = mesh_.domain.frame(mesh_.boundary_theta[i]);
    boundary_weights_[i] = frames_[i].arclength_density * dtheta;
  }
}

FemSpace::Factorizations& FemSpace::factorizations() const {
  std::call_once(fact_once_, [this] {
    auto f = std::make_unique<Factorizations>();
    const std::size_t nd = num_dofs();
    const std::size_t ni = interior_dofs_.size();
    std::vector<int> boundary_slot(nd, -1);
    for (std::size_t i = 0; i < mesh_.num_boundary(); ++i) boundary_slot[mesh_.boundary_nodes[i]] = int(i);

    std::vector<Eigen::Triplet<double>> ii, ib, pp;
    for (int col = 0; col < stiffness_.outerSize(); ++col) {
      for (SparseMatrix::InnerIterator it(stiffness_, col); it; ++it) {
        const int r = int(it.row());
        const int c = int(it.col());
        if (interior_index_[r] >= 0) {
          if (interior_index_[c] >= 0) ii.emplace_back(interior_index_[r], interior_index_[c], it.value());
          else ib.emplace_back(interior_index_[r], boundary_slot[c], it.value());
        }
        if (r != 0 && c != 0) pp.emplace_back(r - 1, c - 1, it.value());
      }
    }
    f->k_ii.resize(ni, ni);
    f->k_ii.setFromTriplets(ii.begin(), ii.end());
    f->k_ib.resize(ni, mesh_.num_boundary());
    f->k_ib.setFromTriplets(ib.begin(), ib.end());
    f->k_pinned.resize(nd - 1, nd - 1);
    f->k_pinned.setFromTriplets(pp.begin(), pp.end());

    f->interior.compute(f->k_ii);
    f->pinned.compute(f->k_pinned);
    f->boundary.compute(boundary_mass_);
    if (f->interior.info() != Eigen::Success || f->pinned.info() != Eigen::Success ||
        f->boundary.info() != Eigen::Success) {
      throw Error(ErrorCode::SolverFailure, "sparse Cholesky factorization failed");
    }
    fact_ = std::move(f);
  });
  return *fact_;
}

const RecoveryOperator& FemSpace::recovery() const {
  std::call_once(recovery_once_, [this] { recovery_ = std::make_unique<RecoveryOperator>(mesh_); });
  return *recovery_;
}

VectorXd FemSpace::solve_dirichlet(const VectorXd& load, const VectorXd& boundary_values) const {
  const auto& f = factorizations();
  VectorXd rhs(interior_dofs_.size());
  for (std::size_t i = 0; i < interior_dofs_.size(); ++i) rhs[i] = load[interior_dofs_[i]];
  rhs -= f.k_ib * boundary_values;
  VectorXd xi;
  if (rhs.norm() == 0.0) {
    xi = VectorXd::Zero(rhs.size());
  } else {
    xi = refined_solve(f.interior, f.k_ii, rhs, "dirichlet solve");
  }
  VectorXd x(num_dofs());
  for (std::size_t i = 0; i < interior_dofs_.size(); ++i) x[interior_dofs_[i]] = xi[i];
  for (std::size_t i = 0; i < mesh_.num_boundary(); ++i) x[mesh_.boundary_nodes[i]] = boundary_values[i];
  return x;
}

VectorXd FemSpace::solve_pinned(const VectorXd& rhs) const {
  const auto& f = factorizations();
  const VectorXd tail = rhs.tail(rhs.size() - 1);
  VectorXd x(rhs.size());
  x[0] = 0.0;
  if (tail.norm() == 0.0) {
    x.tail(rhs.size() - 1).setZero();
  } else {
    x.tail(rhs.size() - 1) = refined_solve(f.pinned, f.k_pinned, tail, "pinned solve");
  }
  return x;
}

VectorXd FemSpace::solve_boundary_mass(const VectorXd& rhs) const {
  const auto& f = factorizations();
  return refined_solve(f.boundary, boundary_mass_, rhs, "boundary mass solve");
}

VectorXd FemSpace::solve_neumann(const VectorXd& load) const {
  VectorXd x = solve_pinned(load);
  x.array() -= volume_load_.dot(x) / area_;
  const double res = relative_residual(stiffness_, x, load);
  if (!(res <= 1e3 * kResidualTarget)) {
    throw Error(ErrorCode::SolverFailure, "incompatible neumann data, residual " + std::to_string(res));
  }
  return x;
}

Mat2 FemSpace::element_hessian(std::size_t e, const VectorXd& coeffs) const {
  const auto& t = mesh_.triangles[e];
  const Eigen::Vector2d centroid(1.0 / 3.0, 1.0 / 3.0);
  std::array<Vec2, 6> X;
  for (int a = 0; a < 6; ++a) X[a] = mesh_.nodes[t[a]];
  const Mat2 Jinv = jacobian_of(X, p2_shape_grad(centroid)).inverse();
  Mat2 Href = Mat2::Zero();
  for (int a = 0; a < 6; ++a) {
    Mat2 Ha;
    Ha << kShapeHess[a][0], kShapeHess[a][1], kShapeHess[a][1], kShapeHess[a][2];
    Href += coeffs[t[a]] * Ha;
  }
  return Jinv.transpose() * Href * Jinv;
}

Vec2 FemSpace::map_point(std::size_t e, const Eigen::Vector2d& ref) const {
  const auto N = p2_shape(ref);
  Vec2 x = Vec2::Zero();
  for (int a = 0; a < 6; ++a) x += N[a] * mesh_.nodes[mesh_.triangles[e][a]];
  return x;
}

Mat2 FemSpace::map_jacobian(std::size_t e, const Eigen::Vector2d& ref) const {
  std::array<Vec2, 6> X;
  for (int a = 0; a < 6; ++a) X[a] = mesh_.nodes[mesh_.triangles[e][a]];
  return jacobian_of(X, p2_shape_grad(ref));
}

std::optional<std::pair<std::size_t, Eigen::Vector2d>> FemSpace::locate(const Vec2& x) const {
  constexpr double kTol = 1e-10;
  for (std::size_t e = 0; e < num_elements(); ++e) {
    const auto& t = mesh_.triangles[e];
    Vec2 lo = mesh_.nodes[t[0]], hi = lo;
    for (int a = 1; a < 6; ++a) {
      lo = lo.cwiseMin(mesh_.nodes[t[a]]);
      hi = hi.cwiseMax(mesh_.nodes[t[a]]);
    }
    const double pad = 0.1 * (hi - lo).maxCoeff();
    if ((x.array() < lo.array() - pad).any() || (x.array() > hi.array() + pad).any()) continue;
    Eigen::Vector2d ref(1.0 / 3.0, 1.0 / 3.0);
    for (int it = 0; it < 30; ++it) {
      const Vec2 r = map_point(e, ref) - x;
      const Eigen::Vector2d step = map_jacobian(e, ref).lu().solve(r);
      ref -= step;
      if (step.norm() < 1e-15) break;
    }
    if (ref.x() >= -kTol && ref.y() >= -kTol && ref.x() + ref.y() <= 1.0 + kTol &&
        (map_point(e, ref) - x).norm() <= 1e-12 * (1.0 + x.norm())) {
      return std::make_pair(e, ref);
    }
  }
  return std::nullopt;
}

SpacePtr make_space(const StarDomain& domain, double h_target, std::size_t dof_cap) {
  return std::make_shared<const FemSpace>(generate_mesh(domain, h_target, dof_cap));
}

FemField::FemField(SpacePtr space, VectorXd coeffs, FieldKind kind)
    : space_(std::move(space)), coeffs_(std::move(coeffs)), kind_(kind) {
  if (!space_ || std::size_t(coeffs_.size()) != space_->num_dofs()) {
    throw Error(ErrorCode::InvalidArgument, "coefficient count does not match the space");
  }
  gauge_ = coeffs_;
}

FemField::FemField(SpacePtr space, VectorXd gauge, double offset, FieldKind kind)
    : space_(std::move(space)), coeffs_((gauge.array() + offset).matrix()), gauge_(std::move(gauge)), offset_(offset), kind_(kind) {}

double FemField::value_at_qp(std::size_t e, int q) const {
  const auto& t = space_->mesh().triangles[e];
  const auto& N = FemSpace::shape_values(q);
  double v = 0.0;
  for (int a = 0; a < 6; ++a) v += N[a] * coeffs_[t[a]];
  return v;
}

Vec2 FemField::gradient_at_qp(std::size_t e, int q) const {
  const auto& t = space_->mesh().triangles[e];
  const auto& G = space_->qp_grad(e, q);
  Vec2 g = Vec2::Zero();
  for (int a = 0; a < 6; ++a) g += gauge_[t[a]] * G.row(a).transpose();
  return g;
}

double FemField::evaluate(const Vec2& x) const {
  const auto hit = space_->locate(x);
  if (!hit) throw Error(ErrorCode::OutsideDomain, "point is not inside the mesh");
  const auto N = p2_shape(hit->second);
  const auto& t = space_->mesh().triangles[hit->first];
  double v = 0.0;
  for (int a = 0; a < 6; ++a) v += N[a] * coeffs_[t[a]];
  return v;
}

FemField FemField::shifted(double c) const {
  return FemField(space_, gauge_, offset_ + c, kind_);
}

double FemField::mean() const { return space_->volume_load().dot(coeffs_) / space_->area(); }

FemField interpolate(const SpacePtr& space, const std::function<double(const Vec2&)>& f, FieldKind kind) {
  VectorXd c(space->num_dofs());
  for (std::size_t i = 0; i < space->num_dofs(); ++i) c[i] = f(space->mesh().nodes[i]);
  return FemField(space, std::move(c), kind);
}

FemField combine(double a, const FemField& x, double b, const FemField& y) {
  if (x.space_ptr() != y.space_ptr()) {
    throw Error(ErrorCode::InvalidArgument, "fields live on different meshes");
  }
  return FemField(x.space_ptr(), a * x.coeffs() + b * y.coeffs(), FieldKind::generic);
}

BoundaryFunction BoundaryFunction::with_values(VectorXd v) const {
  if (v.size() != values.size()) throw Error(ErrorCode::InvalidArgument, "boundary size mismatch");
  BoundaryFunction out = *this;
  out.values = std::move(v);
  out.tangential.reset();
  return out;
}

BoundaryFunction boundary_zero(const FemSpace& space) {
  const std::size_t nb = space.num_boundary();
  BoundaryFunction b;
  b.values = VectorXd::Zero(nb);
  b.weights = space.boundary_weights();
  b.theta.resize(nb);
  b.speed.resize(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    b.theta[i] = space.mesh().boundary_theta[i];
    b.speed[i] = space.boundary_frames()[i].arclength_density;
  }
  return b;
}

FemField solve_torsion_dirichlet(const SpacePtr& space) {
  const VectorXd load = -double(kDim) * space->volume_load();
  VectorXd x = space->solve_dirichlet(load, VectorXd::Zero(space->num_boundary()));
  return FemField(space, std::move(x), FieldKind::torsion_dirichlet);
}

FemField solve_torsion_neumann(const SpacePtr& space) {
  const VectorXd load = -double(kDim) * space->volume_load() + space->R_discrete() * space->boundary_load();
  return FemField(space, space->solve_neumann(load), FieldKind::torsion_neumann);
}

FemField solve_harmonic_dirichlet(const SpacePtr& space, const BoundaryFunction& g) {
  if (g.size() != space->num_boundary()) {
    throw Error(ErrorCode::InvalidArgument, "boundary data does not match the mesh");
  }
  VectorXd x = space->solve_dirichlet(VectorXd::Zero(space->num_dofs()), g.values);
  return FemField(space, std::move(x), FieldKind::harmonic_dirichlet);
}

}  // namespace serrinlab
