#include <doctest.h>

#include <Eigen/Core>
#include <cmath>

#include "mftd/error.hpp"
#include "mftd/mma.hpp"

using namespace mftd::topopt;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Minimizer of the separable subproblem for a fixed multiplier; a0 > 0 and
// a = 0 put z at zero, y has a closed form.
VectorXd primal_at(const MmaSubproblem& sp, double lam) {
  const auto n = sp.low.size();
  VectorXd x(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double pp = sp.p0[j] + lam * sp.p(0, j);
    const double qq = sp.q0[j] + lam * sp.q(0, j);
    const double sp_ = std::sqrt(pp), sq = std::sqrt(qq);
    const double xs = (sp_ * sp.low[j] + sq * sp.upp[j]) / (sp_ + sq);
    x[j] = std::clamp(xs, sp.alpha[j], sp.beta[j]);
  }
  return x;
}

double constraint_at(const MmaSubproblem& sp, const VectorXd& x) {
  double g = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    g += sp.p(0, j) / (sp.upp[j] - x[j]) + sp.q(0, j) / (x[j] - sp.low[j]);
  }
  return g - sp.b[0];
}

// Bisection on the single multiplier: g(x(lam)) - y(lam) = 0.
VectorXd dual_oracle(const MmaSubproblem& sp) {
  auto excess = [&](double lam) {
    const double y = std::max(0.0, (lam - sp.c[0]) / sp.d[0]);
    return constraint_at(sp, primal_at(sp, lam)) - y;
  };
  if (excess(0.0) <= 0.0) return primal_at(sp, 0.0);
  double lo = 0.0, hi = 1.0;
  while (excess(hi) > 0.0) hi *= 2.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return primal_at(sp, 0.5 * (lo + hi));
}

}  // namespace

TEST_CASE("zero gradient leaves the design unchanged") {
  Mma mma(4, 1);
  const VectorXd x = (VectorXd(4) << 0.2, 0.4, 0.6, 0.8).finished();
  const VectorXd g = VectorXd::Constant(1, -0.5);
  const VectorXd xn = mma.update(x, VectorXd::Zero(4), g, MatrixXd::Zero(1, 4),
                                 VectorXd::Zero(4), VectorXd::Ones(4));
  CHECK((xn - x).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("linear objective steps by the move limit") {
  MmaSettings s;
  s.move_limit = 0.05;
  Mma mma(1, 1, s);
  const VectorXd x = VectorXd::Constant(1, 0.5);
  const VectorXd xn = mma.update(x, VectorXd::Constant(1, 1.0), VectorXd::Constant(1, -1.0),
                                 MatrixXd::Zero(1, 1), VectorXd::Zero(1), VectorXd::Ones(1));
  CHECK(xn[0] == doctest::Approx(0.45).epsilon(1e-9));
  const VectorXd xu = Mma(1, 1, s).update(x, VectorXd::Constant(1, -1.0), VectorXd::Constant(1, -1.0),
                                          MatrixXd::Zero(1, 1), VectorXd::Zero(1), VectorXd::Ones(1));
  CHECK(xu[0] == doctest::Approx(0.55).epsilon(1e-9));
}

TEST_CASE("five-variable subproblem agrees with a dual bisection oracle") {
  const int n = 5;
  MmaSettings s;
  s.move_limit = 0.2;
  Mma mma(n, 1, s);
  const VectorXd x = (VectorXd(n) << 0.5, 0.3, 0.7, 0.4, 0.6).finished();
  const VectorXd df0 = (VectorXd(n) << -1.0, -2.0, 0.5, -0.3, -1.5).finished();
  // Active volume-like constraint: sum x / 2.5 - 1 with current value 0.
  const VectorXd g = VectorXd::Constant(1, x.sum() / 2.5 - 1.0);
  const MatrixXd dg = MatrixXd::Constant(1, n, 1.0 / 2.5);
  const VectorXd xmin = VectorXd::Zero(n), xmax = VectorXd::Ones(n);
  const MmaSubproblem sp = mma.build_subproblem(x, df0, g, dg, xmin, xmax);
  const VectorXd oracle = dual_oracle(sp);
  const VectorXd xn = mma.update(x, df0, g, dg, xmin, xmax);
  CHECK((xn - oracle).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(mma.last_solution().kkt_residual <= 1e-7);
  // Constraint of the approximation is met.
  CHECK(constraint_at(sp, xn) <= 1e-7);
  for (int j = 0; j < n; ++j) {
    CHECK(xn[j] >= sp.alpha[j]);
    CHECK(xn[j] <= sp.beta[j]);
  }
}

TEST_CASE("outer iterations solve a convex model problem") {
  // min sum (x - t)^2 s.t. mean(x) <= 0.4, optimum shifts every target by
  // the same amount.
  const int n = 6;
  const VectorXd t = (VectorXd(n) << 0.9, 0.8, 0.7, 0.5, 0.3, 0.2).finished();
  Mma mma(n, 1);
  VectorXd x = VectorXd::Constant(n, 0.4);
  for (int it = 0; it < 200; ++it) {
    const VectorXd df = 2.0 * (x - t);
    const VectorXd g = VectorXd::Constant(1, x.mean() / 0.4 - 1.0);
    const MatrixXd dg = MatrixXd::Constant(1, n, 1.0 / (0.4 * n));
    x = mma.update(x, df, g, dg, VectorXd::Zero(n), VectorXd::Ones(n));
    CHECK(mma.last_solution().kkt_residual <= 1e-7);
  }
  const double shift = t.mean() - 0.4;
  for (int j = 0; j < n; ++j) CHECK(x[j] == doctest::Approx(t[j] - shift).epsilon(1e-4));
}

TEST_CASE("argument validation") {
  CHECK_THROWS_AS(Mma(0, 1), mftd::ConfigError);
  Mma mma(2, 1);
  CHECK_THROWS_AS(mma.update(VectorXd::Zero(3), VectorXd::Zero(2), VectorXd::Zero(1),
                             MatrixXd::Zero(1, 2), VectorXd::Zero(2), VectorXd::Ones(2)),
                  mftd::ConfigError);
  VectorXd bad = VectorXd::Zero(2);
  bad[0] = std::nan("");
  CHECK_THROWS_AS(mma.update(VectorXd::Constant(2, 0.5), bad, VectorXd::Zero(1),
                             MatrixXd::Zero(1, 2), VectorXd::Zero(2), VectorXd::Ones(2)),
                  mftd::NumericalError);
}
