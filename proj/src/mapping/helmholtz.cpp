#include <Eigen/Sparse>
#include <algorithm>

#include "mftd/error.hpp"
#include "mftd/mapping.hpp"

namespace mftd::mapping {

DensityField helmholtz_smooth(const DensityField& field, double radius) {
  if (!(radius >= 0.0)) throw ConfigError("helmholtz_smooth: radius must be >= 0");
  if (radius == 0.0) return field;
  const int nx = field.nx, ny = field.ny;
  const int n = nx * ny;
  const double r2 = radius * radius;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(5 * n));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int row = j * nx + i;
      double diag = 1.0;
      const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
      for (const auto& [ii, jj] : nb) {
        // Zero flux across the border: the missing neighbour drops out.
        if (ii < 0 || jj < 0 || ii >= nx || jj >= ny) continue;
        trip.emplace_back(row, jj * nx + ii, -r2);
        diag += r2;
      }
      trip.emplace_back(row, row, diag);
    }
  }
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> solver(a);
  if (solver.info() != Eigen::Success) throw NumericalError("helmholtz_smooth: factorization failed");
  const Eigen::Map<const Eigen::VectorXd> rhs(field.values.data(), n);
  const Eigen::VectorXd x = solver.solve(rhs);
  DensityField out(nx, ny);
  for (int k = 0; k < n; ++k) out.values[k] = std::clamp(x[k], 0.0, 1.0);
  return out;
}

}  // namespace mftd::mapping
