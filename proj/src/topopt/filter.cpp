#include <algorithm>
#include <cmath>
#include <spdlog/spdlog.h>

#include "mftd/error.hpp"
#include "mftd/lf_topopt.hpp"

namespace mftd::topopt {

DensityFilter::DensityFilter(int nx, int ny, double dx, double dy, double radius) {
  if (nx < 1 || ny < 1) throw ConfigError("DensityFilter: empty grid");
  if (!(radius > 0.0)) throw ConfigError("DensityFilter: radius must be positive");
  const int reach_x = static_cast<int>(std::ceil(radius / dx));
  const int reach_y = static_cast<int>(std::ceil(radius / dy));
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(nx) * ny * (2 * reach_x + 1) * (2 * reach_y + 1));
  identity_ = true;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int row = j * nx + i;
      double sum = 0.0;
      const std::size_t first = trip.size();
      for (int jj = std::max(0, j - reach_y); jj <= std::min(ny - 1, j + reach_y); ++jj) {
        for (int ii = std::max(0, i - reach_x); ii <= std::min(nx - 1, i + reach_x); ++ii) {
          const double dist = std::hypot((ii - i) * dx, (jj - j) * dy);
          const double w = std::max(0.0, radius - dist);
          if (w > 0.0) {
            trip.emplace_back(row, jj * nx + ii, w);
            sum += w;
            if (ii != i || jj != j) identity_ = false;
          }
        }
      }
      for (std::size_t k = first; k < trip.size(); ++k) {
        trip[k] = Eigen::Triplet<double>(trip[k].row(), trip[k].col(), trip[k].value() / sum);
      }
    }
  }
  weights_.resize(nx * ny, nx * ny);
  weights_.setFromTriplets(trip.begin(), trip.end());
}

std::vector<double> DensityFilter::apply(std::span<const double> x) const {
  const Eigen::Map<const Eigen::VectorXd> in(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd out = weights_ * in;
  return {out.data(), out.data() + out.size()};
}

std::vector<double> DensityFilter::apply_transpose(std::span<const double> g) const {
  const Eigen::Map<const Eigen::VectorXd> in(g.data(), static_cast<Eigen::Index>(g.size()));
  const Eigen::VectorXd out = weights_.transpose() * in;
  return {out.data(), out.data() + out.size()};
}

DensityField density_filter(const DensityField& field, double radius, double dx,
                            double dy) {
  const DensityFilter filter(field.nx, field.ny, dx, dy, radius);
  if (filter.is_identity()) {
    spdlog::warn("density filter radius {} does not reach neighbouring elements "
                 "(spacing {} x {}); filter is the identity", radius, dx, dy);
  }
  DensityField out(field.nx, field.ny, filter.apply(field.values));
  for (double& v : out.values) v = std::clamp(v, 0.0, 1.0);
  return out;
}

double heaviside_project(double x, double beta, double eta) {
  const double num = std::tanh(beta * (x - eta)) + std::tanh(beta * eta);
  const double den = std::tanh(beta * (1.0 - eta)) + std::tanh(beta * eta);
  return num / den;
}

double heaviside_project_derivative(double x, double beta, double eta) {
  const double t = std::tanh(beta * (x - eta));
  const double den = std::tanh(beta * (1.0 - eta)) + std::tanh(beta * eta);
  return beta * (1.0 - t * t) / den;
}

DensityField heaviside_project(const DensityField& field, double beta, double eta) {
  if (!(beta > 0.0)) throw ConfigError("heaviside_project: beta must be positive");
  if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("heaviside_project: eta must be in (0, 1)");
  DensityField out = field;
  for (double& v : out.values) v = heaviside_project(v, beta, eta);
  return out;
}

}  // namespace mftd::topopt
