#include <algorithm>
#include <cmath>
#include <limits>

#include "mftd/error.hpp"
#include "mftd/mapping.hpp"

namespace mftd::mapping {

namespace {

constexpr double kUvSlack = 1e-9;

void check_uv(const UvField& uv) {
  for (const auto& p : uv) {
    if (!(p.x() >= -kUvSlack && p.x() <= 1.0 + kUvSlack && p.y() >= -kUvSlack && p.y() <= 1.0 + kUvSlack)) {
      throw ConfigError("resample: uv coordinate outside the unit square");
    }
  }
}

Eigen::Vector3d barycentric(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                            const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  const Eigen::Vector2d v0 = b - a, v1 = c - a, v2 = p - a;
  const double den = v0.x() * v1.y() - v1.x() * v0.y();
  if (den == 0.0) return {-1.0, -1.0, -1.0};
  const double l1 = (v2.x() * v1.y() - v1.x() * v2.y()) / den;
  const double l2 = (v0.x() * v2.y() - v2.x() * v0.y()) / den;
  return {1.0 - l1 - l2, l1, l2};
}

}  // namespace

DensityField resample_to_grid(const SurfacePatchMesh& mesh, const UvField& uv,
                              const std::vector<double>& node_values, int nx, int ny) {
  if (nx < 1 || ny < 1) throw ConfigError("resample_to_grid: empty grid");
  if (uv.size() != mesh.nodes.size() || node_values.size() != mesh.nodes.size()) {
    throw ConfigError("resample_to_grid: field size does not match the mesh");
  }
  check_uv(uv);
  const auto tris = triangulate(mesh);

  // Bucket the triangles by their uv bounding boxes.
  const int nb = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(tris.size()))));
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(nb) * nb);
  auto cell = [nb](double x) { return std::clamp(static_cast<int>(std::floor(x * nb)), 0, nb - 1); };
  for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (int v : tris[t]) {
      x0 = std::min(x0, uv[v].x());
      x1 = std::max(x1, uv[v].x());
      y0 = std::min(y0, uv[v].y());
      y1 = std::max(y1, uv[v].y());
    }
    for (int by = cell(y0); by <= cell(y1); ++by) {
      for (int bx = cell(x0); bx <= cell(x1); ++bx) buckets[by * nb + bx].push_back(t);
    }
  }

  DensityField out(nx, ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Eigen::Vector2d p((i + 0.5) / nx, (j + 0.5) / ny);
      // Best containing triangle: the one whose smallest barycentric weight
      // is largest (exact containment gives a nonnegative minimum).
      auto search = [&](const std::vector<int>& candidates, int& best, Eigen::Vector3d& w, double& score) {
        for (int t : candidates) {
          const auto& tri = tris[t];
          const Eigen::Vector3d l = barycentric(p, uv[tri[0]], uv[tri[1]], uv[tri[2]]);
          if (l.minCoeff() > score) {
            score = l.minCoeff();
            best = t;
            w = l;
          }
        }
      };
      int best = -1;
      Eigen::Vector3d w = Eigen::Vector3d::Zero();
      double score = -std::numeric_limits<double>::infinity();
      search(buckets[cell(p.y()) * nb + cell(p.x())], best, w, score);
      if (score < -1e-12) {
        std::vector<int> all(tris.size());
        for (int t = 0; t < static_cast<int>(tris.size()); ++t) all[t] = t;
        search(all, best, w, score);
      }
      const auto& tri = tris[best];
      const double v = w[0] * node_values[tri[0]] + w[1] * node_values[tri[1]] + w[2] * node_values[tri[2]];
      out.at(i, j) = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

std::vector<double> resample_from_grid(const DensityField& grid, const UvField& uv) {
  if (grid.nx < 1 || grid.ny < 1 || grid.size() != static_cast<std::size_t>(grid.nx) * grid.ny) {
    throw ConfigError("resample_from_grid: malformed grid");
  }
  check_uv(uv);
  // Lower sample index and offset along one axis of cell centres.
  auto locate = [](double x, int n, int& i0, double& f) {
    if (n == 1) {
      i0 = 0;
      f = 0.0;
      return;
    }
    const double s = x * n - 0.5;
    i0 = std::clamp(static_cast<int>(std::floor(s)), 0, n - 2);
    f = s - i0;
  };
  std::vector<double> out(uv.size());
  for (std::size_t k = 0; k < uv.size(); ++k) {
    int i0, j0;
    double fx, fy;
    locate(uv[k].x(), grid.nx, i0, fx);
    locate(uv[k].y(), grid.ny, j0, fy);
    const int i1 = std::min(i0 + 1, grid.nx - 1), j1 = std::min(j0 + 1, grid.ny - 1);
    const double v = (1 - fx) * (1 - fy) * grid.at(i0, j0) + fx * (1 - fy) * grid.at(i1, j0) +
                     (1 - fx) * fy * grid.at(i0, j1) + fx * fy * grid.at(i1, j1);
    out[k] = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

}  // namespace mftd::mapping
