#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "mftd/error.hpp"
#include "mftd/mapping.hpp"

using namespace mftd;
using namespace mftd::mapping;

namespace {

Eigen::Vector3d quarter_cylinder(double s, double t) {
  const double a = 0.5 * std::numbers::pi * s;
  return {std::cos(a), std::sin(a), 1.5 * t};
}

// Energy from per-triangle gradients of the linear interpolant.
double gradient_energy(const SurfacePatchMesh& m, const UvField& uv) {
  double e = 0.0;
  for (const auto& t : triangulate(m)) {
    const Eigen::Vector3d p0 = m.nodes[t[0]], e1 = m.nodes[t[1]] - p0, e2 = m.nodes[t[2]] - p0;
    Eigen::Matrix2d g;
    g << e1.dot(e1), e1.dot(e2), e1.dot(e2), e2.dot(e2);
    const double area = 0.5 * e1.cross(e2).norm();
    for (int c = 0; c < 2; ++c) {
      const Eigen::Vector2d d(uv[t[1]][c] - uv[t[0]][c], uv[t[2]][c] - uv[t[0]][c]);
      // |grad f|^2 = d^T G^-1 d in the local frame of the triangle.
      e += 0.5 * area * d.dot(g.inverse() * d);
    }
  }
  return e;
}

std::vector<std::uint8_t> boundary_flags(const SurfacePatchMesh& m) {
  std::vector<std::uint8_t> f(m.nodes.size(), 0);
  for (const auto& line : m.boundary) {
    for (int v : line) f[v] = 1;
  }
  return f;
}

}  // namespace

TEST_CASE("harmonic map of planar domains") {
  SUBCASE("unit square maps to the identity") {
    const auto m = make_grid_patch(7, 5, [](double s, double t) { return Eigen::Vector3d(s, t, 0); });
    const UvField uv = harmonic_map(m);
    for (std::size_t k = 0; k < uv.size(); ++k) {
      CHECK(std::abs(uv[k].x() - m.nodes[k].x()) <= 1e-10);
      CHECK(std::abs(uv[k].y() - m.nodes[k].y()) <= 1e-10);
    }
  }
  SUBCASE("2 x 1 rectangle maps affinely") {
    const auto m = make_grid_patch(8, 6, [](double s, double t) {
      return Eigen::Vector3d(2.0 * s, t, 0.0);
    });
    const UvField uv = harmonic_map(m);
    for (std::size_t k = 0; k < uv.size(); ++k) {
      CHECK(std::abs(uv[k].x() - m.nodes[k].x() / 2.0) <= 1e-10);
      CHECK(std::abs(uv[k].y() - m.nodes[k].y()) <= 1e-10);
    }
  }
  SUBCASE("rotated and tilted plane still maps affinely") {
    const Eigen::Matrix3d r = Eigen::AngleAxisd(0.4, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
    const auto m = make_grid_patch(6, 6, [&](double s, double t) {
      return Eigen::Vector3d(r * Eigen::Vector3d(2.0 * s, t, 0.0));
    });
    const UvField uv = harmonic_map(m);
    for (int j = 0; j <= 6; ++j) {
      for (int i = 0; i <= 6; ++i) {
        const auto& p = uv[j * 7 + i];
        CHECK(std::abs(p.x() - i / 6.0) <= 1e-10);
        CHECK(std::abs(p.y() - j / 6.0) <= 1e-10);
      }
    }
  }
}

TEST_CASE("harmonic map of a curved patch") {
  const auto m = make_grid_patch(12, 10, quarter_cylinder);
  const UvField uv = harmonic_map(m);
  const auto on_boundary = boundary_flags(m);
  // Boundary data by arc length.
  for (std::size_t k = 0; k < m.boundary[1].size(); ++k) {
    CHECK(uv[m.boundary[1][k]].x() == doctest::Approx(double(k) / 12).epsilon(1e-12));
    CHECK(uv[m.boundary[1][k]].y() == 0.0);
  }
  // Maximum principle.
  for (std::size_t k = 0; k < uv.size(); ++k) {
    if (on_boundary[k]) continue;
    CHECK((uv[k].x() > 0.0 && uv[k].x() < 1.0 && uv[k].y() > 0.0 && uv[k].y() < 1.0));
  }
  const double e0 = dirichlet_energy(m, uv);
  CHECK(e0 == doctest::Approx(gradient_energy(m, uv)).epsilon(1e-12));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.02);
  for (int trial = 0; trial < 100; ++trial) {
    UvField p = uv;
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (!on_boundary[k]) p[k] += Eigen::Vector2d(noise(rng), noise(rng));
    }
    CHECK(gradient_energy(m, p) >= e0);
  }
}

TEST_CASE("patch validation") {
  auto flat = make_grid_patch(3, 3, [](double s, double t) { return Eigen::Vector3d(s, t, 0); });
  CHECK_NOTHROW(flat.validate());
  SUBCASE("zero-length boundary") {
    auto m = make_grid_patch(3, 3, [](double s, double t) { return Eigen::Vector3d(s, t * s, 0); });
    CHECK_THROWS_AS(harmonic_map(m), ConfigError);
  }
  SUBCASE("hole in the patch") {
    flat.quads.erase(flat.quads.begin() + 4);  // centre quad
    CHECK_THROWS_AS(flat.validate(), ConfigError);
  }
  SUBCASE("corners not shared") {
    std::reverse(flat.boundary[1].begin(), flat.boundary[1].end());
    CHECK_THROWS_AS(flat.validate(), ConfigError);
  }
  SUBCASE("cylinder is not a disk") {
    // Glue the left and right columns.
    auto m = make_grid_patch(4, 2, [](double s, double t) { return Eigen::Vector3d(s, t, 0); });
    for (auto& q : m.quads) {
      for (int& v : q) {
        if (v % 5 == 4) v -= 4;
      }
    }
    CHECK_THROWS_AS(m.validate(), ConfigError);
  }
}

TEST_CASE("mesh file round trip") {
  const auto m = make_grid_patch(3, 2, quarter_cylinder);
  std::stringstream ss;
  ss << "# quarter cylinder\n";
  write_mesh(ss, m);
  const auto back = read_mesh(ss);
  CHECK(back.quads == m.quads);
  CHECK(back.boundary == m.boundary);
  for (std::size_t k = 0; k < m.nodes.size(); ++k) CHECK((back.nodes[k] - m.nodes[k]).norm() == 0.0);
  std::istringstream bad("3\n0 0 0\n1 0 0\n");
  CHECK_THROWS_AS(read_mesh(bad), ConfigError);
  CHECK_THROWS_AS(load_mesh("/nonexistent/mesh.txt"), IoError);
}

TEST_CASE("resampling") {
  const auto m = make_grid_patch(20, 16, quarter_cylinder);
  const UvField uv = harmonic_map(m);
  SUBCASE("constant field") {
    const std::vector<double> c(m.nodes.size(), 0.3);
    const DensityField g = resample_to_grid(m, uv, c, 16, 16);
    for (double v : g.values) CHECK(v == doctest::Approx(0.3).epsilon(1e-12));
    const auto back = resample_from_grid(g, uv);
    for (double v : back) CHECK(v == doctest::Approx(0.3).epsilon(1e-12));
  }
  SUBCASE("linear-in-uv field is reproduced") {
    auto f = [](const Eigen::Vector2d& p) { return 0.1 + 0.5 * p.x() + 0.3 * p.y(); };
    std::vector<double> vals;
    for (const auto& p : uv) vals.push_back(f(p));
    const DensityField g = resample_to_grid(m, uv, vals, 16, 12);
    for (int j = 0; j < 12; ++j) {
      for (int i = 0; i < 16; ++i) {
        CHECK(g.at(i, j) == doctest::Approx(f({(i + 0.5) / 16, (j + 0.5) / 12})).epsilon(1e-12));
      }
    }
    const auto back = resample_from_grid(g, uv);
    for (std::size_t k = 0; k < uv.size(); ++k) CHECK(back[k] == doctest::Approx(f(uv[k])).epsilon(1e-12));
  }
  SUBCASE("smooth round trip at 64 x 64") {
    const auto fine = make_grid_patch(64, 64, quarter_cylinder);
    const UvField fuv = harmonic_map(fine);
    DensityField g(64, 64);
    for (int j = 0; j < 64; ++j) {
      for (int i = 0; i < 64; ++i) {
        const double x = (i + 0.5) / 64, y = (j + 0.5) / 64;
        g.at(i, j) = 0.5 + 0.3 * std::sin(3.0 * x + 1.0) * std::cos(2.0 * y);
      }
    }
    const auto nodes = resample_from_grid(g, fuv);
    const DensityField back = resample_to_grid(fine, fuv, nodes, 64, 64);
    double err = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) err = std::max(err, std::abs(back.values[k] - g.values[k]));
    MESSAGE("round-trip max error " << err);
    CHECK(err <= 0.05);
  }
  SUBCASE("uv outside the square is rejected") {
    UvField bad = uv;
    bad[0].x() = -1e-6;
    CHECK_THROWS_AS(resample_from_grid(DensityField(4, 4, 0.5), bad), ConfigError);
  }
}

TEST_CASE("Helmholtz smoothing") {
  SUBCASE("zero radius and uniform input") {
    DensityField f(6, 5);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : f.values) v = u(rng);
    CHECK(helmholtz_smooth(f, 0.0) == f);
    const DensityField c(6, 5, 0.42);
    for (double v : helmholtz_smooth(c, 3.0).values) CHECK(v == doctest::Approx(0.42).epsilon(1e-12));
    // Mass and max-norm.
    const DensityField s = helmholtz_smooth(f, 1.5);
    double m0 = 0.0, m1 = 0.0, mx0 = 0.0, mx1 = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
      m0 += f.values[k];
      m1 += s.values[k];
      mx0 = std::max(mx0, f.values[k]);
      mx1 = std::max(mx1, s.values[k]);
    }
    CHECK(std::abs(m1 - m0) <= 1e-8 * m0);
    CHECK(mx1 <= mx0);
  }
  SUBCASE("spike against a dense solve") {
    const int nx = 7, ny = 6;
    const double r = 2.0;
    DensityField f(nx, ny, 0.0);
    f.at(3, 2) = 1.0;
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(nx * ny, nx * ny);
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const int p = j * nx + i;
        // Flux through each interior face.
        if (i + 1 < nx) {
          const int q = p + 1;
          a(p, p) += r * r; a(q, q) += r * r; a(p, q) -= r * r; a(q, p) -= r * r;
        }
        if (j + 1 < ny) {
          const int q = p + nx;
          a(p, p) += r * r; a(q, q) += r * r; a(p, q) -= r * r; a(q, p) -= r * r;
        }
      }
    }
    const Eigen::VectorXd want = a.fullPivLu().solve(Eigen::Map<const Eigen::VectorXd>(f.values.data(), nx * ny));
    const DensityField got = helmholtz_smooth(f, r);
    for (int k = 0; k < nx * ny; ++k) CHECK(got.values[k] == doctest::Approx(want[k]).epsilon(1e-10));
  }
  CHECK_THROWS_AS(helmholtz_smooth(DensityField(2, 2), -1.0), ConfigError);
}
