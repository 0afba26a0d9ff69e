#pragma once
// Plane-stress linear elasticity on a structured grid of bilinear quads.
//
// Numbering: node (i, j) -> j * (nx + 1) + i, element (i, j) -> j * nx + i,
// with i along x and j along y. Node n owns DOFs 2n (x) and 2n + 1 (y).

#include <Eigen/Core>
#include <Eigen/Sparse>
#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace mftd::fem {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Matrix8d = Eigen::Matrix<double, 8, 8>;
using Vector8d = Eigen::Matrix<double, 8, 1>;

inline constexpr double kDefaultPoisson = 0.3;

struct QuadMesh {
  int nx = 1;
  int ny = 1;
  double dx = 1.0;  // element width
  double dy = 1.0;  // element height

  QuadMesh() = default;
  QuadMesh(int nx_, int ny_, double dx_, double dy_);

  // Mesh of nx x ny elements covering [0, width] x [0, height].
  static QuadMesh rectangle(int nx, int ny, double width, double height);

  int node_count() const { return (nx + 1) * (ny + 1); }
  int dof_count() const { return 2 * node_count(); }
  int element_count() const { return nx * ny; }
  double element_area() const { return dx * dy; }

  int node(int i, int j) const { return j * (nx + 1) + i; }
  int element(int i, int j) const { return j * nx + i; }
  double node_x(int n) const { return (n % (nx + 1)) * dx; }
  double node_y(int n) const { return (n / (nx + 1)) * dy; }
  std::array<double, 2> element_center(int e) const;

  // Counterclockwise: lower-left, lower-right, upper-right, upper-left.
  std::array<int, 4> element_nodes(int e) const;
  std::array<int, 8> element_dofs(int e) const;
};

struct FemProblem {
  QuadMesh mesh;
  std::vector<double> modulus;    // per element, > 0
  std::vector<double> thickness;  // per element, > 0
  Eigen::VectorXd load;           // length dof_count
  std::vector<int> fixed_dofs;    // sorted, unique
  double poisson = kDefaultPoisson;

  // Throws ConfigError when an invariant is broken.
  void validate() const;
};

struct FemSolution {
  Eigen::VectorXd displacement;
  std::vector<double> von_mises;  // per element, centroid value
  double compliance = 0.0;
};

// Plane-stress constitutive matrix for unit modulus.
Eigen::Matrix3d plane_stress_matrix(double poisson);

// Strain-displacement matrix of a dx x dy element at natural coords (xi, eta).
Eigen::Matrix<double, 3, 8> strain_displacement(double dx, double dy, double xi,
                                                double eta);

// Element stiffness for unit modulus and unit thickness, 2x2 Gauss rule.
Matrix8d element_stiffness(double dx, double dy, double poisson);

SparseMatrix assemble_stiffness(const FemProblem& problem);

enum class SolverKind { automatic, cholesky, conjugate_gradient };

// Grids above this many DOFs default to preconditioned CG.
inline constexpr int kCholeskyDofLimit = 2 * 65 * 65;

// Factorization of K restricted to the free DOFs. Reusable for several
// right-hand sides (state and adjoint solves share one factorization).
class StaticSolver {
 public:
  StaticSolver(const SparseMatrix& stiffness, std::span<const int> fixed_dofs,
               SolverKind kind = SolverKind::automatic,
               double cg_tolerance = 1e-9);
  ~StaticSolver();
  StaticSolver(StaticSolver&&) noexcept;
  StaticSolver& operator=(StaticSolver&&) noexcept;

  // Full-length solution with zeros on fixed DOFs.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  SolverKind kind() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Eigen::VectorXd solve_static(const SparseMatrix& stiffness,
                             const Eigen::VectorXd& load,
                             std::span<const int> fixed_dofs,
                             SolverKind kind = SolverKind::automatic);

// Gather the 8 element DOF values.
Vector8d element_displacement(const QuadMesh& mesh, const Eigen::VectorXd& u,
                              int e);

// Centroid stress (sx, sy, txy) of element e.
Eigen::Vector3d element_stress(const Eigen::VectorXd& u,
                               const FemProblem& problem, int e);

double von_mises(const Eigen::Vector3d& stress);

double element_von_mises(const Eigen::VectorXd& u, const FemProblem& problem,
                         int e);

// U^T K U.
double compliance(const Eigen::VectorXd& u, const SparseMatrix& stiffness);

FemSolution solve(const FemProblem& problem,
                  SolverKind kind = SolverKind::automatic);

}  // namespace mftd::fem
