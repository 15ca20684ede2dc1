#include "serrinlab/recovery.hpp"

#include <Eigen/Dense>

#include <algorithm>

namespace serrinlab {

namespace {

constexpr int kMinCubicNodes = 15;
constexpr int kMaxExpansions = 3;

// Local edge slots 3, 4, 5 join vertex slots (0,1), (1,2), (2,0).
constexpr int kEdgeEnds[3][2] = {{0, 1}, {1, 2}, {2, 0}};

Eigen::RowVectorXd monomials(const Vec2& d, int degree) {
  const double x = d.x(), y = d.y();
  Eigen::RowVectorXd m(degree == 3 ? 10 : 6);
  m << 1.0, x, y, x * x, x * y, y * y;
  if (degree == 3) m.tail(4) << x * x * x, x * x * y, x * y * y, y * y * y;
  return m;
}

struct PatchFit {
  std::vector<int> nodes;
  Eigen::Matrix<double, 5, Eigen::Dynamic> rows;  // gx, gy, hxx, hxy, hyy
};

std::optional<PatchFit> fit_patch(const Mesh& mesh, int center, const std::vector<int>& patch, int degree) {
  const int unknowns = degree == 3 ? 10 : 6;
  if (int(patch.size()) < unknowns + 2) return std::nullopt;
  PatchFit fit;
  fit.nodes = patch;
  const Vec2& c = mesh.nodes[center];
  double s = 0.0;
  for (int n : fit.nodes) s = std::max(s, (mesh.nodes[n] - c).norm());
  Eigen::MatrixXd A(fit.nodes.size(), unknowns);
  for (std::size_t i = 0; i < fit.nodes.size(); ++i) A.row(i) = monomials((mesh.nodes[fit.nodes[i]] - c) / s, degree);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  if (qr.rank() < unknowns) return std::nullopt;
  // Pseudo-inverse P R^-1 Q1^T with the thin Q formed explicitly.
  const Eigen::MatrixXd Q1 = qr.householderQ() * Eigen::MatrixXd::Identity(A.rows(), unknowns);
  const Eigen::MatrixXd Rinv_QT = qr.matrixR()
                                      .topLeftCorner(unknowns, unknowns)
                                      .template triangularView<Eigen::Upper>()
                                      .solve(Q1.transpose());
  const Eigen::MatrixXd W = qr.colsPermutation() * Rinv_QT;
  fit.rows.resize(5, A.rows());
  fit.rows.row(0) = W.row(1) / s;
  fit.rows.row(1) = W.row(2) / s;
  fit.rows.row(2) = 2.0 * W.row(3) / (s * s);
  fit.rows.row(3) = W.row(4) / (s * s);
  fit.rows.row(4) = 2.0 * W.row(5) / (s * s);
  return fit;
}

}  // namespace

RecoveryOperator::RecoveryOperator(const Mesh& mesh) {
  const int nv = mesh.num_vertices;
  const std::size_t nd = mesh.num_nodes();
  std::vector<std::vector<int>> vertex_elements(nv);
  std::vector<std::array<int, 2>> edge_ends(nd, {-1, -1});
  for (std::size_t e = 0; e < mesh.triangles.size(); ++e) {
    const auto& t = mesh.triangles[e];
    for (int a = 0; a < 3; ++a) vertex_elements[t[a]].push_back(int(e));
    for (int k = 0; k < 3; ++k) edge_ends[t[3 + k]] = {t[kEdgeEnds[k][0]], t[kEdgeEnds[k][1]]};
  }

  // Rows are produced in order, so the five operators are written directly in CSR form.
  std::vector<int> outer{0};
  std::vector<int> inner;
  std::array<std::vector<double>, 5> values;
  outer.reserve(nd + 1);
  inner.reserve(nd * 32);
  for (auto& v : values) v.reserve(nd * 32);
  degenerate_.assign(nd, 0);

  auto sorted_unique = [](std::vector<int>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  std::vector<int> elements;
  for (std::size_t n = 0; n < nd; ++n) {
    elements.clear();
    if (int(n) < nv) {
      elements = vertex_elements[n];
    } else {
      for (int v : edge_ends[n]) elements.insert(elements.end(), vertex_elements[v].begin(), vertex_elements[v].end());
      sorted_unique(elements);
    }
    auto expand = [&] {
      std::vector<int> grown;
      for (int e : elements) {
        for (int a = 0; a < 3; ++a) {
          const auto& ve = vertex_elements[mesh.triangles[e][a]];
          grown.insert(grown.end(), ve.begin(), ve.end());
        }
      }
      sorted_unique(grown);
      elements.swap(grown);
    };
    auto patch_nodes = [&] {
      std::vector<int> nodes;
      for (int e : elements) nodes.insert(nodes.end(), mesh.triangles[e].begin(), mesh.triangles[e].end());
      sorted_unique(nodes);
      return nodes;
    };

    if (mesh.on_boundary[n]) expand();
    std::optional<PatchFit> fit;
    for (int round = 0; round <= kMaxExpansions && !fit; ++round) {
      const auto nodes = patch_nodes();
      if (int(nodes.size()) >= kMinCubicNodes) fit = fit_patch(mesh, int(n), nodes, 3);
      if (!fit) expand();
    }
    if (!fit) {
      fit = fit_patch(mesh, int(n), patch_nodes(), 2);
      degenerate_[n] = 1;
    }
    if (fit) {
      inner.insert(inner.end(), fit->nodes.begin(), fit->nodes.end());
      for (int r = 0; r < 5; ++r) {
        for (std::size_t j = 0; j < fit->nodes.size(); ++j) values[r].push_back(fit->rows(r, j));
      }
    }
    outer.push_back(int(inner.size()));
  }
  RowSparse* ops[5] = {&gx_, &gy_, &hxx_, &hxy_, &hyy_};
  for (int r = 0; r < 5; ++r) {
    *ops[r] = Eigen::Map<const RowSparse>(Eigen::Index(nd), Eigen::Index(nd), Eigen::Index(inner.size()), outer.data(),
                                          inner.data(), values[r].data());
  }
}

std::size_t RecoveryOperator::num_degenerate() const {
  return std::size_t(std::count(degenerate_.begin(), degenerate_.end(), 1));
}

Mat2 HessianField::at_node(std::size_t node) const {
  Mat2 H;
  H << hxx[node], hxy[node], hxy[node], hyy[node];
  return H;
}

Mat2 HessianField::at_qp(const FemSpace& space, std::size_t e, int q) const {
  const auto& t = space.mesh().triangles[e];
  const auto& N = FemSpace::shape_values(q);
  Mat2 H = Mat2::Zero();
  for (int a = 0; a < 6; ++a) H += N[a] * at_node(t[a]);
  return H;
}

GradientField recover_gradient(const FemField& field) {
  const auto& R = field.space().recovery();
  return GradientField{R.gx() * field.gauge_coeffs(), R.gy() * field.gauge_coeffs()};
}

HessianField recover_hessian(const FemField& field) {
  const FemSpace& space = field.space();
  const auto& R = space.recovery();
  HessianField H;
  H.hxx = R.hxx() * field.gauge_coeffs();
  H.hxy = R.hxy() * field.gauge_coeffs();
  H.hyy = R.hyy() * field.gauge_coeffs();
  H.degenerate = R.degenerate();
  H.element.resize(space.num_elements());
  for (std::size_t e = 0; e < space.num_elements(); ++e) H.element[e] = space.element_hessian(e, field.gauge_coeffs());
  if (R.num_degenerate() > 0) {
    const auto& mesh = space.mesh();
    std::vector<Mat2> sum(space.num_dofs(), Mat2::Zero());
    std::vector<int> count(space.num_dofs(), 0);
    for (std::size_t e = 0; e < space.num_elements(); ++e) {
      for (int a = 0; a < 6; ++a) {
        sum[mesh.triangles[e][a]] += H.element[e];
        ++count[mesh.triangles[e][a]];
      }
    }
    for (std::size_t n = 0; n < space.num_dofs(); ++n) {
      if (!H.degenerate[n] || count[n] == 0) continue;
      const Mat2 avg = sum[n] / count[n];
      H.hxx[n] = avg(0, 0);
      H.hxy[n] = 0.5 * (avg(0, 1) + avg(1, 0));
      H.hyy[n] = avg(1, 1);
    }
  }
  return H;
}

}  // namespace serrinlab
