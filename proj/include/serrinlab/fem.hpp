#pragma once

#include "serrinlab/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string_view>

namespace serrinlab {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Eigen::VectorXd;

enum class FieldKind { torsion_dirichlet, torsion_neumann, harmonic_dirichlet, generic };

std::string_view to_string(FieldKind kind);
FieldKind field_kind_from_string(std::string_view name);

/// Source term f of -div grad = -f for the solution kinds with a known Laplacian.
std::optional<double> known_laplacian(FieldKind kind);

class RecoveryOperator;

/// Quadratic Lagrange space on a Mesh together with everything assembled once:
/// quadrature data, stiffness and mass matrices, load vectors, the boundary mass
/// matrix and the boundary geometry at the ordered boundary nodes.
///
/// Factorizations and the recovery operator are built lazily and are thread safe.
class FemSpace {
 public:
  static constexpr int kQuadPoints = 6;
  using ShapeGrad = Eigen::Matrix<double, 6, 2>;

  explicit FemSpace(Mesh mesh);
  ~FemSpace();
  FemSpace(const FemSpace&) = delete;
  FemSpace& operator=(const FemSpace&) = delete;

  const Mesh& mesh() const { return mesh_; }
  const StarDomain& domain() const { return mesh_.domain; }
  std::size_t num_dofs() const { return mesh_.num_nodes(); }
  std::size_t num_elements() const { return mesh_.triangles.size(); }
  std::size_t num_boundary() const { return mesh_.num_boundary(); }
  double h() const { return mesh_.h_max; }

  /// Reference shape function values at quadrature point q.
  static const std::array<double, 6>& shape_values(int q);
  /// Barycentric-free reference coordinates (xi, eta) of quadrature point q.
  static Eigen::Vector2d reference_point(int q);

  const Vec2& qp_point(std::size_t e, int q) const { return qp_x_[e * kQuadPoints + q]; }
  double qp_weight(std::size_t e, int q) const { return qp_w_[e * kQuadPoints + q]; }
  const ShapeGrad& qp_grad(std::size_t e, int q) const { return qp_grad_[e * kQuadPoints + q]; }

  const SparseMatrix& stiffness() const { return stiffness_; }
  const SparseMatrix& mass() const { return mass_; }
  /// Integrals of the basis functions over the discrete domain.
  const VectorXd& volume_load() const { return volume_load_; }
  /// Boundary integrals of the basis functions (zero off the boundary).
  const VectorXd& boundary_load() const { return boundary_load_; }
  /// Consistent quadratic mass matrix of the boundary curve, in boundary-node order.
  const SparseMatrix& boundary_mass() const { return boundary_mass_; }

  double area() const { return area_; }
  double perimeter() const { return perimeter_; }
  /// 2 |Omega_h| / |Gamma_h| from the discrete measures.
  double R_discrete() const { return 2.0 * area_ / perimeter_; }

  /// Analytic frames at the ordered boundary nodes.
  const std::vector<BoundaryFrame>& boundary_frames() const { return frames_; }
  /// Periodic trapezoid weights |gamma'(theta_i)| * 2 pi / n.
  const VectorXd& boundary_weights() const { return boundary_weights_; }

  const RecoveryOperator& recovery() const;

  /// Solves K x = b on interior dofs with x = g on the boundary (g in boundary order).
  VectorXd solve_dirichlet(const VectorXd& load, const VectorXd& boundary_values) const;
  /// Solves the singular system K x = b (b must be compatible); returns the zero-mean solution.
  VectorXd solve_neumann(const VectorXd& load) const;

  /// Solves M_Gamma x = rhs with the boundary mass matrix (boundary order).
  VectorXd solve_boundary_mass(const VectorXd& rhs) const;

  /// Pinned (first vertex removed) stiffness factorization, used by the eigen solvers.
  VectorXd solve_pinned(const VectorXd& rhs) const;

  /// Element-constant second derivatives of the quadratic field, at the element centroid.
  Mat2 element_hessian(std::size_t e, const VectorXd& coeffs) const;

  /// Isoparametric map of element e at reference point (xi, eta).
  Vec2 map_point(std::size_t e, const Eigen::Vector2d& ref) const;
  Mat2 map_jacobian(std::size_t e, const Eigen::Vector2d& ref) const;

  /// Element containing x and the reference coordinates, if any.
  std::optional<std::pair<std::size_t, Eigen::Vector2d>> locate(const Vec2& x) const;

 private:
  struct Factorizations;

  void assemble();
  void build_boundary();
  Factorizations& factorizations() const;

  Mesh mesh_;
  std::vector<Vec2> qp_x_;
  std::vector<double> qp_w_;
  std::vector<ShapeGrad> qp_grad_;
  SparseMatrix stiffness_;
  SparseMatrix mass_;
  SparseMatrix boundary_mass_;
  VectorXd volume_load_;
  VectorXd boundary_load_;
  VectorXd boundary_weights_;
  std::vector<BoundaryFrame> frames_;
  std::vector<int> interior_index_;  // dof -> interior slot or -1
  std::vector<int> interior_dofs_;
  double area_ = 0.0;
  double perimeter_ = 0.0;

  mutable std::unique_ptr<Factorizations> fact_;
  mutable std::unique_ptr<RecoveryOperator> recovery_;
  mutable std::once_flag fact_once_;
  mutable std::once_flag recovery_once_;
};

using SpacePtr = std::shared_ptr<const FemSpace>;

SpacePtr make_space(const StarDomain& domain, double h_target, std::size_t dof_cap = default_dof_cap());

/// Shape functions of the six-node reference triangle.
std::array<double, 6> p2_shape(const Eigen::Vector2d& ref);
Eigen::Matrix<double, 6, 2> p2_shape_grad(const Eigen::Vector2d& ref);

/// Scalar quadratic field on a FemSpace. Immutable.
class FemField {
 public:
  FemField(SpacePtr space, VectorXd coeffs, FieldKind kind = FieldKind::generic);

  const FemSpace& space() const { return *space_; }
  const SpacePtr& space_ptr() const { return space_; }
  const VectorXd& coeffs() const { return coeffs_; }
  /// Coefficients before any shifted() calls; coeffs() minus offset(). Derivatives use these.
  const VectorXd& gauge_coeffs() const { return gauge_; }
  double offset() const { return offset_; }
  FieldKind kind() const { return kind_; }
  int degree() const { return 2; }

  double value_at_qp(std::size_t e, int q) const;
  Vec2 gradient_at_qp(std::size_t e, int q) const;
  /// Value at an arbitrary point of the discrete domain. Throws OutsideDomain.
  double evaluate(const Vec2& x) const;

  /// Same field plus a constant; the kind is preserved.
  FemField shifted(double c) const;

  /// Discrete mean over the domain.
  double mean() const;

 private:
  FemField(SpacePtr space, VectorXd gauge, double offset, FieldKind kind);

  SpacePtr space_;
  VectorXd coeffs_;
  VectorXd gauge_;
  double offset_ = 0.0;
  FieldKind kind_;
};

/// Nodal interpolant of f.
FemField interpolate(const SpacePtr& space, const std::function<double(const Vec2&)>& f,
                     FieldKind kind = FieldKind::generic);

/// a * x + b * y as a generic field on the common space.
FemField combine(double a, const FemField& x, double b, const FemField& y);

/// Values on the ordered boundary nodes with their trapezoid weights.
struct BoundaryFunction {
  VectorXd values;
  VectorXd weights;
  VectorXd theta;
  VectorXd speed;  // |gamma'(theta_i)|
  std::optional<VectorXd> tangential;  // d/ds of the values, when known

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  /// Same nodes and weights, different values.
  BoundaryFunction with_values(VectorXd v) const;
};

/// Boundary function skeleton (zero values) on the boundary nodes of a space.
BoundaryFunction boundary_zero(const FemSpace& space);

FemField solve_torsion_dirichlet(const SpacePtr& space);
FemField solve_torsion_neumann(const SpacePtr& space);
FemField solve_harmonic_dirichlet(const SpacePtr& space, const BoundaryFunction& g);

/// Sum over elements and quadrature points of f(e, q, x) * weight.
template <class F>
double volume_integral(const FemSpace& space, F&& f) {
  double total = 0.0;
  for (std::size_t e = 0; e < space.num_elements(); ++e) {
    double local = 0.0;
    for (int q = 0; q < FemSpace::kQuadPoints; ++q) {
      local += f(e, q, space.qp_point(e, q)) * space.qp_weight(e, q);
    }
    total += local;
  }
  return total;
}

}  // namespace serrinlab
