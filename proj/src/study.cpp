#include "serrinlab/study.hpp"

#include "serrinlab/errors.hpp"
#include "serrinlab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace serrinlab {

IdentityReport evaluate_identity(const SpacePtr& space, IdentityId id, const std::optional<Vec2>& z) {
  const Vec2 zc = z.value_or(space->domain().center());
  switch (id) {
    case IdentityId::classical_1_2:
      return eval_classical_identity(solve_torsion_dirichlet(space), zc);
    case IdentityId::general_1_9:
      return eval_general_identity(solve_torsion_dirichlet(space), solve_torsion_neumann(space));
    case IdentityId::mother_3_2:
      return eval_mother_identity(solve_torsion_neumann(space), zc).first;
    case IdentityId::mother_3_3:
      return eval_mother_identity(solve_torsion_neumann(space), zc).second;
    case IdentityId::neumann_1_11:
      return eval_neumann_identity(solve_torsion_neumann(space), zc);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown identity");
}

ConvergenceStudy convergence_study(const StarDomain& domain, IdentityId id, const std::vector<double>& h_list) {
  if (h_list.size() < 3) throw Error(ErrorCode::InvalidArgument, "a convergence study needs at least 3 mesh levels");
  ConvergenceStudy s;
  s.id = id;
  for (double h : h_list) {
    const SpacePtr space = make_space(domain, h);
    const IdentityReport r = evaluate_identity(space, id);
    s.levels.push_back({h, space->h(), space->num_dofs(), r.lhs, r.rhs, r.abs_residual, r.rel_residual});
  }
  std::vector<std::size_t> idx(s.levels.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s.levels[a].h > s.levels[b].h; });
  const ConvergenceLevel& finest = s.levels[idx.back()];
  s.rigid = std::max(std::abs(finest.lhs), std::abs(finest.rhs)) <= kRigidFloor;
  s.monotone = true;
  for (std::size_t k = 1; k < idx.size(); ++k) {
    if (!(s.levels[idx[k]].rel_residual < s.levels[idx[k - 1]].rel_residual)) s.monotone = false;
  }
  if (!s.rigid) {
    std::vector<double> hs, res;
    for (const auto& l : s.levels) {
      if (l.rel_residual <= 0.0) continue;
      hs.push_back(l.h);
      res.push_back(l.rel_residual);
    }
    if (hs.size() >= 2) s.order = fit_log_log(hs, res, "order").slope;
  }
  return s;
}

}  // namespace serrinlab
