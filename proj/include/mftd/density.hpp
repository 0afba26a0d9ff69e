#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mftd {

// Element-wise material density on an nx x ny grid, row-major with x
// fastest (matches fem::QuadMesh element numbering).
struct DensityField {
  int nx = 0;
  int ny = 0;
  std::vector<double> values;

  DensityField() = default;
  DensityField(int nx_, int ny_, double fill = 0.0)
      : nx(nx_), ny(ny_), values(static_cast<std::size_t>(nx_) * ny_, fill) {}
  DensityField(int nx_, int ny_, std::vector<double> v)
      : nx(nx_), ny(ny_), values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  double& at(int i, int j) { return values[static_cast<std::size_t>(j) * nx + i]; }
  double at(int i, int j) const { return values[static_cast<std::size_t>(j) * nx + i]; }
  std::span<const double> view() const { return values; }

  double mean() const {
    double s = 0.0;
    for (double v : values) s += v;
    return values.empty() ? 0.0 : s / static_cast<double>(values.size());
  }

  bool operator==(const DensityField&) const = default;
};

}  // namespace mftd
