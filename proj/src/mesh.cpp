#include "serrinlab/mesh.hpp"

#include "serrinlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numbers>
#include <string>

namespace serrinlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int ring_start(int j) { return j == 0 ? 0 : 1 + 3 * j * (j - 1); }

Mesh build_rings(const StarDomain& domain, int rings) {
  Mesh mesh{.domain = domain};
  mesh.rings = rings;
  const int M = rings;
  mesh.num_vertices = 1 + 3 * M * (M + 1);
  mesh.nodes.reserve(ring_mesh_dofs(M));

  mesh.nodes.push_back(domain.center());
  for (int j = 1; j <= M; ++j) {
    const int n = 6 * j;
    const double s = double(j) / M;
    for (int i = 0; i < n; ++i) {
      const double t = kTwoPi * i / n;
      mesh.nodes.push_back(domain.center() + s * domain.radius(t) * Vec2(std::cos(t), std::sin(t)));
    }
  }
  // Boundary vertices are placed exactly on the curve.
  for (int i = 0; i < 6 * M; ++i) mesh.nodes[ring_start(M) + i] = domain.point(kTwoPi * i / (6 * M));

  auto vid = [](int j, int i) { return ring_start(j) + (i % (6 * j)); };

  std::vector<std::array<int, 3>> tris;
  tris.reserve(6 * M * M);
  for (int i = 0; i < 6; ++i) tris.push_back({0, vid(1, i), vid(1, i + 1)});
  for (int j = 1; j < M; ++j) {
    const int n1 = 6 * j;
    const int n2 = 6 * (j + 1);
    int a = 0, b = 0;
    while (a < n1 || b < n2) {
      // Advance along whichever ring reaches the smaller next angle; ties advance the outer ring.
      const bool advance_inner = b == n2 || (a < n1 && (long)(a + 1) * n2 < (long)(b + 1) * n1);
      if (advance_inner) {
        tris.push_back({vid(j, a), vid(j + 1, b), vid(j, a + 1)});
        ++a;
      } else {
        tris.push_back({vid(j, a), vid(j + 1, b), vid(j + 1, b + 1)});
        ++b;
      }
    }
  }

  const int outer = ring_start(M);
  const int nb = 6 * M;
  auto boundary_index = [&](int v) { return v >= outer ? v - outer : -1; };

  std::map<std::pair<int, int>, int> edge_node;
  mesh.triangles.reserve(tris.size());
  mesh.curved.reserve(tris.size());
  std::vector<int> boundary_mid(nb, -1);
  for (const auto& t : tris) {
    Triangle6 el{t[0], t[1], t[2], -1, -1, -1};
    bool curved = false;
    for (int k = 0; k < 3; ++k) {
      const int va = t[k];
      const int vb = t[(k + 1) % 3];
      const auto key = std::minmax(va, vb);
      auto it = edge_node.find(key);
      if (it == edge_node.end()) {
        const int ia = boundary_index(va);
        const int ib = boundary_index(vb);
        Vec2 pos = 0.5 * (mesh.nodes[va] + mesh.nodes[vb]);
        int slot = -1;
        if (ia >= 0 && ib >= 0) {
          if ((ia + 1) % nb == ib) slot = ia;
          else if ((ib + 1) % nb == ia) slot = ib;
        }
        const int id = int(mesh.nodes.size());
        if (slot >= 0) {
          pos = domain.point(kTwoPi * (slot + 0.5) / nb);
          boundary_mid[slot] = id;
        }
        mesh.nodes.push_back(pos);
        it = edge_node.emplace(key, id).first;
      }
      el[3 + k] = it->second;
      const int ia = boundary_index(va);
      const int ib = boundary_index(vb);
      if (ia >= 0 && ib >= 0 && ((ia + 1) % nb == ib || (ib + 1) % nb == ia)) curved = true;
    }
    mesh.triangles.push_back(el);
    mesh.curved.push_back(curved ? 1 : 0);
  }

  mesh.on_boundary.assign(mesh.nodes.size(), 0);
  mesh.boundary_nodes.reserve(2 * nb);
  mesh.boundary_theta.reserve(2 * nb);
  for (int i = 0; i < nb; ++i) {
    mesh.boundary_nodes.push_back(outer + i);
    mesh.boundary_theta.push_back(kTwoPi * i / nb);
    mesh.boundary_nodes.push_back(boundary_mid[i]);
    mesh.boundary_theta.push_back(kTwoPi * (i + 0.5) / nb);
  }
  for (int n : mesh.boundary_nodes) mesh.on_boundary[n] = 1;

  mesh.h_max = 0.0;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      mesh.h_max = std::max(mesh.h_max, (mesh.nodes[t[k]] - mesh.nodes[t[(k + 1) % 3]]).norm());
    }
  }
  return mesh;
}

}  // namespace

std::size_t default_dof_cap() {
  if (const char* env = std::getenv("SERRINLAB_DOF_CAP")) {
    try {
      return static_cast<std::size_t>(std::stoull(env));
    } catch (...) {
      // fall through to the default
    }
  }
  return 400000;
}

std::size_t ring_mesh_dofs(int rings) {
  const std::size_t M = rings;
  const std::size_t V = 1 + 3 * M * (M + 1);
  const std::size_t T = 6 * M * M;
  const std::size_t E = V + T - 1;  // Euler characteristic of a disk
  return V + E;
}

Mesh generate_mesh(const StarDomain& domain, double h_target, std::size_t dof_cap) {
  if (!(h_target > 0.0) || !(h_target < domain.rho0())) {
    throw Error(ErrorCode::InvalidArgument, "h_target must lie in (0, rho0)");
  }
  const double radial = domain.max_radius();
  const double angular = domain.max_speed() * std::numbers::pi / 3.0;
  const double rings_real = std::ceil(std::max(radial, angular) / h_target);
  if (rings_real > 1e6 || ring_mesh_dofs(int(rings_real)) > dof_cap) {
    throw Error(ErrorCode::MeshTooFine, "requested mesh exceeds the dof cap of " + std::to_string(dof_cap));
  }
  int rings = std::max(2, int(rings_real));
  for (;;) {
    if (ring_mesh_dofs(rings) > dof_cap) {
      throw Error(ErrorCode::MeshTooFine, "requested mesh exceeds the dof cap of " + std::to_string(dof_cap));
    }
    Mesh mesh = build_rings(domain, rings);
    if (mesh.h_max <= 1.5 * h_target) return mesh;
    rings += std::max(1, rings / 10);
  }
}

double element_quality(const Mesh& mesh, std::size_t e) {
  const auto& t = mesh.triangles[e];
  const Vec2& a = mesh.nodes[t[0]];
  const Vec2& b = mesh.nodes[t[1]];
  const Vec2& c = mesh.nodes[t[2]];
  const double la = (b - c).norm();
  const double lb = (c - a).norm();
  const double lc = (a - b).norm();
  const double area = 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
  const double s = 0.5 * (la + lb + lc);
  const double inradius = area / s;
  const double circumradius = la * lb * lc / (4.0 * area);
  return 2.0 * inradius / circumradius;
}

}  // namespace serrinlab
