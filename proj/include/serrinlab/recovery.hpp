#pragma once

#include "serrinlab/fem.hpp"

#include <vector>

namespace serrinlab {

/// Linear maps from nodal values to recovered nodal derivatives.
///
/// Every node gets a least-squares cubic fitted to the nodal values over a
/// patch of surrounding elements (one extra layer of elements for boundary
/// nodes); the derivatives of the fit at the node are the recovered values.
/// The fit reproduces cubic polynomials, so gradients and Hessians of global
/// quadratics are exact at every node, including on curved boundary elements.
class RecoveryOperator {
 public:
  using RowSparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  explicit RecoveryOperator(const Mesh& mesh);

  const RowSparse& gx() const { return gx_; }
  const RowSparse& gy() const { return gy_; }
  const RowSparse& hxx() const { return hxx_; }
  const RowSparse& hxy() const { return hxy_; }
  const RowSparse& hyy() const { return hyy_; }

  /// Nodes whose patch could not support a quadratic fit.
  const std::vector<char>& degenerate() const { return degenerate_; }
  std::size_t num_degenerate() const;

 private:
  RowSparse gx_, gy_, hxx_, hxy_, hyy_;
  std::vector<char> degenerate_;
};

struct GradientField {
  VectorXd gx;
  VectorXd gy;

  Vec2 at(std::size_t node) const { return {gx[node], gy[node]}; }
};

struct HessianField {
  VectorXd hxx;
  VectorXd hxy;
  VectorXd hyy;
  std::vector<Mat2> element;  // element-constant fallback
  std::vector<char> degenerate;

  Mat2 at_node(std::size_t node) const;
  /// Quadratic interpolation of the nodal Hessians at a quadrature point.
  Mat2 at_qp(const FemSpace& space, std::size_t e, int q) const;
};

GradientField recover_gradient(const FemField& field);
HessianField recover_hessian(const FemField& field);

}  // namespace serrinlab
