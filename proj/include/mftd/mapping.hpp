#pragma once
// Design-domain mapping: harmonic parameterization of a quad surface patch
// onto the unit square, resampling between the patch and a regular grid,
// and Helmholtz smoothing of grid fields.
//
// Boundary convention (each list shares its end nodes with its neighbours):
//   boundary[0]  u = 0, nodes ordered by increasing v
//   boundary[1]  v = 0, nodes ordered by increasing u
//   boundary[2]  u = 1, nodes ordered by increasing v
//   boundary[3]  v = 1, nodes ordered by increasing u

#include <Eigen/Core>
#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "mftd/density.hpp"

namespace mftd::mapping {

struct SurfacePatchMesh {
  std::vector<Eigen::Vector3d> nodes;
  std::vector<std::array<int, 4>> quads;
  std::array<std::vector<int>, 4> boundary;

  // Throws ConfigError on bad indices, broken corners, zero-length
  // boundaries or a patch that is not a topological disk.
  void validate() const;
};

using UvField = std::vector<Eigen::Vector2d>;

// Structured patch of nx x ny quads; `surface(s, t)` maps [0,1]^2 to 3-D.
SurfacePatchMesh make_grid_patch(int nx, int ny,
                                 const std::function<Eigen::Vector3d(double, double)>& surface);

// Each quad split along its (0, 2) diagonal.
std::vector<std::array<int, 3>> triangulate(const SurfacePatchMesh& mesh);

// Cotangent-weight harmonic map with arc-length Dirichlet data.
UvField harmonic_map(const SurfacePatchMesh& mesh);

// Discrete Dirichlet energy of a uv assignment on the triangulated surface.
double dirichlet_energy(const SurfacePatchMesh& mesh, const UvField& uv);

// Node field -> cell-centred nx x ny grid by linear interpolation on the
// triangles in uv space. Output clamped to [0, 1].
DensityField resample_to_grid(const SurfacePatchMesh& mesh, const UvField& uv,
                              const std::vector<double>& node_values, int nx, int ny);

// Cell-centred grid -> node field by bilinear interpolation at the node uv
// positions (linear extrapolation in the half cell along the border).
// Output clamped to [0, 1].
std::vector<double> resample_from_grid(const DensityField& grid, const UvField& uv);

// Solve -r^2 lap(g) + g = f on the cell grid with zero-flux borders; r in
// cell widths. r = 0 returns the input.
DensityField helmholtz_smooth(const DensityField& field, double radius);

// Text format: node count, x y z per node, quad count, four indices per
// quad, then four boundary lists as "count i0 i1 ...". '#' starts a comment.
SurfacePatchMesh read_mesh(std::istream& in);
SurfacePatchMesh load_mesh(const std::string& path);
void write_mesh(std::ostream& out, const SurfacePatchMesh& mesh);

}  // namespace mftd::mapping
