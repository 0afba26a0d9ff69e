#include "mftd/grid_fem.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/LU>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "mftd/error.hpp"
#include "mftd/simd.hpp"

namespace mftd::fem {

QuadMesh::QuadMesh(int nx_, int ny_, double dx_, double dy_)
    : nx(nx_), ny(ny_), dx(dx_), dy(dy_) {
  if (nx < 1 || ny < 1) throw ConfigError("QuadMesh: nx and ny must be >= 1");
  if (!(dx > 0.0) || !(dy > 0.0)) throw ConfigError("QuadMesh: element size must be positive");
}

QuadMesh QuadMesh::rectangle(int nx, int ny, double width, double height) {
  return QuadMesh(nx, ny, width / nx, height / ny);
}

std::array<double, 2> QuadMesh::element_center(int e) const {
  const int i = e % nx;
  const int j = e / nx;
  return {(i + 0.5) * dx, (j + 0.5) * dy};
}

std::array<int, 4> QuadMesh::element_nodes(int e) const {
  const int i = e % nx;
  const int j = e / nx;
  return {node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)};
}

std::array<int, 8> QuadMesh::element_dofs(int e) const {
  const auto n = element_nodes(e);
  return {2 * n[0], 2 * n[0] + 1, 2 * n[1], 2 * n[1] + 1,
          2 * n[2], 2 * n[2] + 1, 2 * n[3], 2 * n[3] + 1};
}

void FemProblem::validate() const {
  const auto n_elem = static_cast<std::size_t>(mesh.element_count());
  if (modulus.size() != n_elem || thickness.size() != n_elem) {
    throw ConfigError("FemProblem: modulus/thickness length must equal element count");
  }
  if (load.size() != mesh.dof_count()) throw ConfigError("FemProblem: load length must equal DOF count");
  for (std::size_t e = 0; e < n_elem; ++e) {
    if (!(modulus[e] > 0.0)) throw ConfigError("FemProblem: modulus must be positive (element " + std::to_string(e) + ")");
    if (!(thickness[e] > 0.0)) throw ConfigError("FemProblem: thickness must be positive (element " + std::to_string(e) + ")");
  }
  for (int d : fixed_dofs) {
    if (d < 0 || d >= mesh.dof_count()) throw ConfigError("FemProblem: fixed DOF out of range");
  }
  if (!(poisson > -1.0 && poisson < 0.5)) throw ConfigError("FemProblem: Poisson ratio outside (-1, 0.5)");
}

Eigen::Matrix3d plane_stress_matrix(double poisson) {
  const double c = 1.0 / (1.0 - poisson * poisson);
  Eigen::Matrix3d d;
  d << c, c * poisson, 0.0,
       c * poisson, c, 0.0,
       0.0, 0.0, c * (1.0 - poisson) / 2.0;
  return d;
}

Eigen::Matrix<double, 3, 8> strain_displacement(double dx, double dy, double xi,
                                                double eta) {
  // Shape function derivatives in natural coordinates, CCW node order.
  const std::array<double, 4> xs{-1.0, 1.0, 1.0, -1.0};
  const std::array<double, 4> es{-1.0, -1.0, 1.0, 1.0};
  Eigen::Matrix<double, 3, 8> b = Eigen::Matrix<double, 3, 8>::Zero();
  for (int a = 0; a < 4; ++a) {
    const double dn_dx = 0.25 * xs[a] * (1.0 + es[a] * eta) * (2.0 / dx);
    const double dn_dy = 0.25 * es[a] * (1.0 + xs[a] * xi) * (2.0 / dy);
    b(0, 2 * a) = dn_dx;
    b(1, 2 * a + 1) = dn_dy;
    b(2, 2 * a) = dn_dy;
    b(2, 2 * a + 1) = dn_dx;
  }
  return b;
}

Matrix8d element_stiffness(double dx, double dy, double poisson) {
  const Eigen::Matrix3d d = plane_stress_matrix(poisson);
  const double g = 1.0 / std::sqrt(3.0);
  const double jac_det = dx * dy / 4.0;
  Matrix8d k = Matrix8d::Zero();
  for (double xi : {-g, g}) {
    for (double eta : {-g, g}) {
      const auto b = strain_displacement(dx, dy, xi, eta);
      k.noalias() += b.transpose() * d * b * jac_det;
    }
  }
  // Symmetrize exactly so the assembled matrix is bitwise symmetric.
  return 0.5 * (k + k.transpose());
}

namespace {

// Rigid-body combination left free by the constraints, or empty when both
// translations and the in-plane rotation are suppressed.
std::string unconstrained_rigid_mode(const QuadMesh& mesh, std::span<const int> fixed) {
  if (fixed.empty()) return "translation-x, translation-y, rotation (no fixed DOFs)";
  Eigen::MatrixXd r(static_cast<Eigen::Index>(fixed.size()), 3);
  for (std::size_t k = 0; k < fixed.size(); ++k) {
    const int d = fixed[k];
    const int n = d / 2;
    const bool is_x = (d % 2) == 0;
    const double x = mesh.node_x(n);
    const double y = mesh.node_y(n);
    r(k, 0) = is_x ? 1.0 : 0.0;
    r(k, 1) = is_x ? 0.0 : 1.0;
    r(k, 2) = is_x ? -y : x;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(r);
  lu.setThreshold(1e-12);
  if (lu.rank() == 3) return {};
  const Eigen::MatrixXd null = lu.kernel();
  const Eigen::Vector3d v = null.col(0) / null.col(0).cwiseAbs().maxCoeff();
  std::ostringstream os;
  const char* names[3] = {"translation-x", "translation-y", "rotation"};
  bool first = true;
  for (int c = 0; c < 3; ++c) {
    if (std::abs(v[c]) > 1e-9) {
      os << (first ? "" : " + ") << v[c] << "*" << names[c];
      first = false;
    }
  }
  return os.str();
}

}  // namespace

SparseMatrix assemble_stiffness(const FemProblem& problem) {
  problem.validate();
  if (const std::string mode = unconstrained_rigid_mode(problem.mesh, problem.fixed_dofs); !mode.empty()) {
    throw NumericalError("singular stiffness after constraints: unconstrained rigid-body mode " + mode);
  }
  const QuadMesh& mesh = problem.mesh;
  const Matrix8d ke = element_stiffness(mesh.dx, mesh.dy, problem.poisson);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.element_count()) * 64);
  for (int e = 0; e < mesh.element_count(); ++e) {
    const double scale = problem.modulus[e] * problem.thickness[e];
    const auto dofs = mesh.element_dofs(e);
    for (int a = 0; a < 8; ++a) {
      for (int b = 0; b < 8; ++b) triplets.emplace_back(dofs[a], dofs[b], scale * ke(a, b));
    }
  }
  SparseMatrix k(mesh.dof_count(), mesh.dof_count());
  k.setFromTriplets(triplets.begin(), triplets.end());
  return k;
}

struct StaticSolver::Impl {
  int dof_count = 0;
  std::vector<int> free_of_full;  // free index -> full DOF
  SparseMatrix reduced;
  SolverKind kind = SolverKind::cholesky;
  Eigen::SimplicialLLT<SparseMatrix> llt;
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
};

StaticSolver::StaticSolver(const SparseMatrix& stiffness,
                           std::span<const int> fixed_dofs, SolverKind kind,
                           double cg_tolerance)
    : impl_(std::make_unique<Impl>()) {
  const int n = static_cast<int>(stiffness.rows());
  if (stiffness.cols() != n) throw NumericalError("StaticSolver: stiffness matrix is not square");
  impl_->dof_count = n;
  std::vector<char> fixed(static_cast<std::size_t>(n), 0);
  for (int d : fixed_dofs) {
    if (d < 0 || d >= n) throw ConfigError("StaticSolver: fixed DOF out of range");
    fixed[d] = 1;
  }
  std::vector<int> full_to_free(static_cast<std::size_t>(n), -1);
  for (int d = 0; d < n; ++d) {
    if (!fixed[d]) {
      full_to_free[d] = static_cast<int>(impl_->free_of_full.size());
      impl_->free_of_full.push_back(d);
    }
  }
  const int nf = static_cast<int>(impl_->free_of_full.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(stiffness.nonZeros()));
  for (int c = 0; c < stiffness.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(stiffness, c); it; ++it) {
      const int fr = full_to_free[it.row()];
      const int fc = full_to_free[it.col()];
      if (fr >= 0 && fc >= 0) trip.emplace_back(fr, fc, it.value());
    }
  }
  impl_->reduced.resize(nf, nf);
  impl_->reduced.setFromTriplets(trip.begin(), trip.end());

  if (kind == SolverKind::automatic) {
    kind = n <= kCholeskyDofLimit ? SolverKind::cholesky : SolverKind::conjugate_gradient;
  }
  impl_->kind = kind;
  if (nf == 0) return;
  if (kind == SolverKind::cholesky) {
    impl_->llt.compute(impl_->reduced);
    if (impl_->llt.info() != Eigen::Success) {
      throw NumericalError("StaticSolver: singular stiffness after constraints (Cholesky breakdown)");
    }
  } else {
    impl_->cg.setTolerance(cg_tolerance);
    impl_->cg.setMaxIterations(std::max(1000, 10 * nf));
    impl_->cg.compute(impl_->reduced);
    if (impl_->cg.info() != Eigen::Success) {
      throw NumericalError("StaticSolver: CG preconditioner setup failed");
    }
  }
}

StaticSolver::~StaticSolver() = default;
StaticSolver::StaticSolver(StaticSolver&&) noexcept = default;
StaticSolver& StaticSolver::operator=(StaticSolver&&) noexcept = default;

SolverKind StaticSolver::kind() const { return impl_->kind; }

Eigen::VectorXd StaticSolver::solve(const Eigen::VectorXd& rhs) const {
  const Impl& m = *impl_;
  if (rhs.size() != m.dof_count) throw NumericalError("StaticSolver: rhs length mismatch");
  const auto nf = static_cast<Eigen::Index>(m.free_of_full.size());
  Eigen::VectorXd b(nf);
  for (Eigen::Index k = 0; k < nf; ++k) b[k] = rhs[m.free_of_full[k]];
  Eigen::VectorXd u = Eigen::VectorXd::Zero(m.dof_count);
  if (nf == 0 || b.squaredNorm() == 0.0) return u;
  Eigen::VectorXd x;
  if (m.kind == SolverKind::cholesky) {
    x = m.llt.solve(b);
  } else {
    x = m.cg.solve(b);
    if (m.cg.info() != Eigen::Success) {
      std::ostringstream os;
      os << "StaticSolver: CG did not converge after " << m.cg.iterations()
         << " iterations, relative residual " << m.cg.error();
      throw NumericalError(os.str());
    }
  }
  if (!x.allFinite()) throw NumericalError("StaticSolver: non-finite solution");
  for (Eigen::Index k = 0; k < nf; ++k) u[m.free_of_full[k]] = x[k];
  return u;
}

Eigen::VectorXd solve_static(const SparseMatrix& stiffness,
                             const Eigen::VectorXd& load,
                             std::span<const int> fixed_dofs, SolverKind kind) {
  return StaticSolver(stiffness, fixed_dofs, kind).solve(load);
}

Vector8d element_displacement(const QuadMesh& mesh, const Eigen::VectorXd& u,
                              int e) {
  const auto dofs = mesh.element_dofs(e);
  Vector8d ue;
  for (int a = 0; a < 8; ++a) ue[a] = u[dofs[a]];
  return ue;
}

Eigen::Vector3d element_stress(const Eigen::VectorXd& u,
                               const FemProblem& problem, int e) {
  const QuadMesh& mesh = problem.mesh;
  const auto b = strain_displacement(mesh.dx, mesh.dy, 0.0, 0.0);
  return problem.modulus[e] * plane_stress_matrix(problem.poisson) * b *
         element_displacement(mesh, u, e);
}

double von_mises(const Eigen::Vector3d& s) {
  const double v = s[0] * s[0] + s[1] * s[1] - s[0] * s[1] + 3.0 * s[2] * s[2];
  return std::sqrt(std::max(0.0, v));
}

double element_von_mises(const Eigen::VectorXd& u, const FemProblem& problem,
                         int e) {
  return von_mises(element_stress(u, problem, e));
}

double compliance(const Eigen::VectorXd& u, const SparseMatrix& stiffness) {
  const Eigen::VectorXd ku = stiffness * u;
  return simd::dot(std::span<const double>(u.data(), static_cast<std::size_t>(u.size())),
                   std::span<const double>(ku.data(), static_cast<std::size_t>(ku.size())));
}

FemSolution solve(const FemProblem& problem, SolverKind kind) {
  const SparseMatrix k = assemble_stiffness(problem);
  const QuadMesh& mesh = problem.mesh;
  FemSolution sol;
  sol.displacement = StaticSolver(k, problem.fixed_dofs, kind).solve(problem.load);
  sol.von_mises.resize(static_cast<std::size_t>(mesh.element_count()));
  for (int e = 0; e < mesh.element_count(); ++e) {
    sol.von_mises[e] = element_von_mises(sol.displacement, problem, e);
  }
  sol.compliance = compliance(sol.displacement, k);
  return sol;
}

}  // namespace mftd::fem
