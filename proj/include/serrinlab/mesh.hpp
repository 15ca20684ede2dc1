#pragma once

#include "serrinlab/domain.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace serrinlab {

/// Quadratic triangle: three vertices, then the mid-edge nodes of (0,1), (1,2), (2,0).
using Triangle6 = std::array<int, 6>;

/// Mapped polar triangulation of a StarDomain with quadratic (six-node) elements.
///
/// Ring j (1..rings) carries 6j vertices at reference radius j/rings, mapped onto
/// the domain by x = center + (j/rings) r(theta) e(theta). Interior elements are
/// straight-sided; an element owning a boundary edge has that edge's mid node placed
/// on the analytic curve, so it is a curved (isoparametric) element.
struct Mesh {
  StarDomain domain;
  int rings = 0;
  int num_vertices = 0;
  std::vector<Vec2> nodes{};  // vertices first, then edge nodes
  std::vector<Triangle6> triangles{};
  std::vector<char> curved{};          // per element
  std::vector<char> on_boundary{};     // per node
  std::vector<int> boundary_nodes{};   // ordered by theta; even slots are vertices
  std::vector<double> boundary_theta{};
  double h_max = 0.0;

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_boundary() const { return boundary_nodes.size(); }
};

/// Dof cap used when none is given: SERRINLAB_DOF_CAP if set, else 400000.
std::size_t default_dof_cap();

/// Number of quadratic dofs of the ring mesh with `rings` layers.
std::size_t ring_mesh_dofs(int rings);

/// Throws MeshTooFine when the dof count would exceed `dof_cap`.
Mesh generate_mesh(const StarDomain& domain, double h_target, std::size_t dof_cap = default_dof_cap());

/// 2 * inradius / circumradius of the vertex triangle of element e.
double element_quality(const Mesh& mesh, std::size_t e);

}  // namespace serrinlab
