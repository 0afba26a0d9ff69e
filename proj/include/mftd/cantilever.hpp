#pragma once
// Benchmark load case shared by LF optimization and HF evaluation: a square
// plate clamped along its left edge with a downward edge load on the lower
// part of the right edge.

#include <Eigen/Core>
#include <vector>

#include "mftd/grid_fem.hpp"

namespace mftd {

struct CantileverSetup {
  int nx = 64;
  int ny = 64;
  double width = 1.0;
  double height = 1.0;
  double total_load = 1.0;
  // Loaded portion of the right edge, measured upward from the corner.
  double load_fraction = 0.1;
};

// Mesh, load vector and supports of a load case, independent of material.
struct LoadCase {
  fem::QuadMesh mesh;
  Eigen::VectorXd load;
  std::vector<int> fixed_dofs;
  std::vector<int> support_nodes;
  std::vector<int> load_nodes;
};

LoadCase make_cantilever(const CantileverSetup& setup);

}  // namespace mftd
