#pragma once
// Method of Moving Asymptotes (Svanberg 1987, with the 2007 primal-dual
// subproblem solver). Problem form:
//
//   minimize  f0(x) + a0 z + sum_i (c_i y_i + d_i y_i^2 / 2)
//   s.t.      f_i(x) - a_i z - y_i <= 0,  xmin <= x <= xmax,  y, z >= 0.

#include <Eigen/Core>
#include <span>
#include <vector>

namespace mftd::topopt {

struct MmaSettings {
  double move_limit = 0.05;  // fraction of (xmax - xmin)
  double asyinit = 0.5;
  double asyincr = 1.2;
  double asydecr = 0.7;
  double albefa = 0.1;
  double raa0 = 1e-5;
  double a0 = 1.0;
  double c = 1000.0;
  double d = 1.0;
  double epsimin = 1e-9;
};

// Convex separable approximation built at the current iterate.
struct MmaSubproblem {
  Eigen::VectorXd low, upp, alpha, beta;
  Eigen::VectorXd p0, q0;  // objective terms, length n
  Eigen::MatrixXd p, q;    // constraint terms, m x n
  Eigen::VectorXd b;       // length m
  double a0 = 1.0;
  Eigen::VectorXd a, c, d;
};

struct MmaSubproblemSolution {
  Eigen::VectorXd x, y, lambda;
  double z = 0.0;
  double kkt_residual = 0.0;  // max-norm of the unperturbed KKT residual
  int newton_iterations = 0;
};

// Solve the subproblem by the primal-dual interior-point method.
// Throws NumericalError when the Newton iteration breaks down.
MmaSubproblemSolution solve_mma_subproblem(const MmaSubproblem& sp, double epsimin);

class Mma {
 public:
  Mma(int n, int m, MmaSettings settings = {});

  // One outer iteration. `constraint_grads` is m x n. Returns the new x.
  Eigen::VectorXd update(const Eigen::VectorXd& x, const Eigen::VectorXd& objective_grad,
                         const Eigen::VectorXd& constraint_values,
                         const Eigen::MatrixXd& constraint_grads,
                         const Eigen::VectorXd& xmin, const Eigen::VectorXd& xmax);

  // Subproblem that `update` would solve, without advancing the state.
  MmaSubproblem build_subproblem(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& objective_grad,
                                 const Eigen::VectorXd& constraint_values,
                                 const Eigen::MatrixXd& constraint_grads,
                                 const Eigen::VectorXd& xmin,
                                 const Eigen::VectorXd& xmax) const;

  int iteration() const { return iteration_; }
  const Eigen::VectorXd& lower_asymptotes() const { return low_; }
  const Eigen::VectorXd& upper_asymptotes() const { return upp_; }
  const MmaSubproblemSolution& last_solution() const { return last_; }

 private:
  void move_asymptotes(const Eigen::VectorXd& x, const Eigen::VectorXd& xmin,
                       const Eigen::VectorXd& xmax, Eigen::VectorXd& low,
                       Eigen::VectorXd& upp) const;

  int n_;
  int m_;
  MmaSettings settings_;
  int iteration_ = 0;
  Eigen::VectorXd xold1_, xold2_, low_, upp_;
  MmaSubproblemSolution last_;
};

}  // namespace mftd::topopt
