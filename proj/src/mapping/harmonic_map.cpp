#include <Eigen/Geometry>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "mftd/error.hpp"
#include "mftd/mapping.hpp"

namespace mftd::mapping {

namespace {

using Edge = std::pair<int, int>;

Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

double cotangent(const Eigen::Vector3d& apex, const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const Eigen::Vector3d u = a - apex, v = b - apex;
  const double cross = u.cross(v).norm();
  if (!(cross > 0.0)) throw NumericalError("harmonic_map: degenerate triangle");
  return u.dot(v) / cross;
}

// Arc-length parameter along a polyline, 0 at the first node and 1 at the last.
std::vector<double> arc_parameter(const SurfacePatchMesh& mesh, const std::vector<int>& line) {
  std::vector<double> t(line.size(), 0.0);
  for (std::size_t k = 1; k < line.size(); ++k) {
    t[k] = t[k - 1] + (mesh.nodes[line[k]] - mesh.nodes[line[k - 1]]).norm();
  }
  const double total = t.back();
  for (double& x : t) x /= total;
  return t;
}

}  // namespace

void SurfacePatchMesh::validate() const {
  const int n = static_cast<int>(nodes.size());
  if (n == 0 || quads.empty()) throw ConfigError("patch mesh: no nodes or no quads");
  std::map<Edge, int> edge_count;
  std::vector<std::uint8_t> used(static_cast<std::size_t>(n), 0);
  for (const auto& q : quads) {
    for (int k = 0; k < 4; ++k) {
      if (q[k] < 0 || q[k] >= n) throw ConfigError("patch mesh: quad node index out of range");
      used[q[k]] = 1;
    }
    const std::set<int> distinct(q.begin(), q.end());
    if (distinct.size() != 4) throw ConfigError("patch mesh: quad with repeated nodes");
    for (int k = 0; k < 4; ++k) ++edge_count[make_edge(q[k], q[(k + 1) % 4])];
  }
  if (std::count(used.begin(), used.end(), 0) != 0) throw ConfigError("patch mesh: unreferenced node");

  for (std::size_t b = 0; b < 4; ++b) {
    const auto& line = boundary[b];
    if (line.size() < 2) throw ConfigError("patch mesh: boundary " + std::to_string(b + 1) + " has fewer than two nodes");
    for (int i : line) {
      if (i < 0 || i >= n) throw ConfigError("patch mesh: boundary node index out of range");
    }
    double length = 0.0;
    for (std::size_t k = 1; k < line.size(); ++k) length += (nodes[line[k]] - nodes[line[k - 1]]).norm();
    if (!(length > 0.0)) throw ConfigError("patch mesh: boundary " + std::to_string(b + 1) + " has zero length");
  }
  const auto& b = boundary;
  if (b[0].front() != b[1].front() || b[0].back() != b[3].front() ||
      b[1].back() != b[2].front() || b[2].back() != b[3].back()) {
    throw ConfigError("patch mesh: boundary lists do not share their corner nodes");
  }
  const std::set<int> corners{b[0].front(), b[0].back(), b[1].back(), b[2].back()};
  if (corners.size() != 4) throw ConfigError("patch mesh: corners are not distinct");

  std::set<Edge> open;
  for (const auto& [e, c] : edge_count) {
    if (c > 2) throw ConfigError("patch mesh: non-manifold edge");
    if (c == 1) open.insert(e);
  }
  const long euler = static_cast<long>(n) - static_cast<long>(edge_count.size()) + static_cast<long>(quads.size());
  if (euler != 1) throw ConfigError("patch mesh: not a topological disk (Euler characteristic " + std::to_string(euler) + ")");

  std::set<Edge> listed;
  std::set<int> listed_nodes;
  for (const auto& line : b) {
    for (std::size_t k = 1; k < line.size(); ++k) {
      if (!listed.insert(make_edge(line[k - 1], line[k])).second) {
        throw ConfigError("patch mesh: boundary edge listed twice");
      }
    }
    listed_nodes.insert(line.begin(), line.end());
  }
  if (listed != open) throw ConfigError("patch mesh: boundary lists do not match the single open boundary loop");
  if (listed_nodes.size() != listed.size()) throw ConfigError("patch mesh: boundary is not a simple loop");
}

SurfacePatchMesh make_grid_patch(int nx, int ny,
                                 const std::function<Eigen::Vector3d(double, double)>& surface) {
  if (nx < 1 || ny < 1) throw ConfigError("make_grid_patch: need at least one quad per direction");
  SurfacePatchMesh m;
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) m.nodes.push_back(surface(double(i) / nx, double(j) / ny));
  }
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) m.quads.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
  }
  for (int j = 0; j <= ny; ++j) {
    m.boundary[0].push_back(id(0, j));
    m.boundary[2].push_back(id(nx, j));
  }
  for (int i = 0; i <= nx; ++i) {
    m.boundary[1].push_back(id(i, 0));
    m.boundary[3].push_back(id(i, ny));
  }
  return m;
}

std::vector<std::array<int, 3>> triangulate(const SurfacePatchMesh& mesh) {
  std::vector<std::array<int, 3>> tris;
  tris.reserve(2 * mesh.quads.size());
  for (const auto& q : mesh.quads) {
    tris.push_back({q[0], q[1], q[2]});
    tris.push_back({q[0], q[2], q[3]});
  }
  return tris;
}

double dirichlet_energy(const SurfacePatchMesh& mesh, const UvField& uv) {
  if (uv.size() != mesh.nodes.size()) throw ConfigError("dirichlet_energy: uv size mismatch");
  double energy = 0.0;
  for (const auto& t : triangulate(mesh)) {
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3], c = t[(k + 2) % 3];
      const double w = cotangent(mesh.nodes[c], mesh.nodes[a], mesh.nodes[b]);
      energy += 0.25 * w * (uv[a] - uv[b]).squaredNorm();
    }
  }
  return energy;
}

UvField harmonic_map(const SurfacePatchMesh& mesh) {
  mesh.validate();
  const int n = static_cast<int>(mesh.nodes.size());
  UvField uv(static_cast<std::size_t>(n), Eigen::Vector2d::Zero());
  std::vector<std::uint8_t> fixed(static_cast<std::size_t>(n), 0);
  for (std::size_t b = 0; b < 4; ++b) {
    const auto& line = mesh.boundary[b];
    const std::vector<double> t = arc_parameter(mesh, line);
    for (std::size_t k = 0; k < line.size(); ++k) {
      Eigen::Vector2d p;
      switch (b) {
        case 0: p = {0.0, t[k]}; break;
        case 1: p = {t[k], 0.0}; break;
        case 2: p = {1.0, t[k]}; break;
        default: p = {t[k], 1.0}; break;
      }
      uv[line[k]] = p;
      fixed[line[k]] = 1;
    }
  }

  std::vector<int> slot(static_cast<std::size_t>(n), -1);
  int interior = 0;
  for (int i = 0; i < n; ++i) {
    if (!fixed[i]) slot[i] = interior++;
  }
  if (interior == 0) return uv;

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(interior, 2);
  auto couple = [&](int a, int b, double w) {
    if (slot[a] < 0) return;
    trip.emplace_back(slot[a], slot[a], w);
    if (slot[b] >= 0) {
      trip.emplace_back(slot[a], slot[b], -w);
    } else {
      rhs.row(slot[a]) += w * uv[b].transpose();
    }
  };
  for (const auto& t : triangulate(mesh)) {
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3], c = t[(k + 2) % 3];
      const double w = 0.5 * cotangent(mesh.nodes[c], mesh.nodes[a], mesh.nodes[b]);
      couple(a, b, w);
      couple(b, a, w);
    }
  }
  Eigen::SparseMatrix<double> q(interior, interior);
  q.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(q);
  if (solver.info() != Eigen::Success) throw NumericalError("harmonic_map: Laplacian factorization failed");
  const Eigen::MatrixXd sol = solver.solve(rhs);
  if (solver.info() != Eigen::Success || !sol.allFinite()) throw NumericalError("harmonic_map: Laplace solve failed");
  for (int i = 0; i < n; ++i) {
    if (slot[i] >= 0) uv[i] = sol.row(slot[i]).transpose();
  }
  return uv;
}

}  // namespace mftd::mapping
