#include <algorithm>
#include <cmath>

#include "mftd/cantilever.hpp"
#include "mftd/error.hpp"

namespace mftd {

LoadCase make_cantilever(const CantileverSetup& setup) {
  if (!(setup.load_fraction > 0.0 && setup.load_fraction <= 1.0)) {
    throw ConfigError("cantilever: load_fraction must be in (0, 1]");
  }
  LoadCase lc;
  lc.mesh = fem::QuadMesh::rectangle(setup.nx, setup.ny, setup.width, setup.height);
  const fem::QuadMesh& m = lc.mesh;
  lc.load = Eigen::VectorXd::Zero(m.dof_count());
  for (int j = 0; j <= m.ny; ++j) {
    const int n = m.node(0, j);
    lc.support_nodes.push_back(n);
    lc.fixed_dofs.push_back(2 * n);
    lc.fixed_dofs.push_back(2 * n + 1);
  }
  std::sort(lc.fixed_dofs.begin(), lc.fixed_dofs.end());
  // Uniform traction over `edges` element edges, lumped consistently.
  const int edges = std::max(1, static_cast<int>(std::lround(setup.load_fraction * m.ny)));
  const double per_edge = setup.total_load / edges;
  for (int j = 0; j <= edges; ++j) {
    const int n = m.node(m.nx, j);
    lc.load_nodes.push_back(n);
    const double share = (j == 0 || j == edges) ? 0.5 : 1.0;
    lc.load[2 * n + 1] -= share * per_edge;
  }
  return lc;
}

}  // namespace mftd
