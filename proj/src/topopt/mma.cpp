#include "mftd/mma.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "mftd/error.hpp"

namespace mftd::topopt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct PrimalDual {
  VectorXd x, y;
  double z = 0.0;
  VectorXd lam, xsi, eta, mu;
  double zet = 0.0;
  VectorXd s;
};

// Residual of the KKT system perturbed by epsi (epsi = 0 gives the true
// KKT conditions).
VectorXd residual(const MmaSubproblem& sp, const PrimalDual& v, double epsi) {
  const auto n = v.x.size();
  const auto m = v.y.size();
  const VectorXd ux1 = sp.upp - v.x;
  const VectorXd xl1 = v.x - sp.low;
  const VectorXd plam = sp.p0 + sp.p.transpose() * v.lam;
  const VectorXd qlam = sp.q0 + sp.q.transpose() * v.lam;
  const VectorXd gvec = sp.p * ux1.cwiseInverse() + sp.q * xl1.cwiseInverse();
  const VectorXd dpsidx = plam.cwiseQuotient(ux1.cwiseProduct(ux1)) -
                          qlam.cwiseQuotient(xl1.cwiseProduct(xl1));
  VectorXd r(3 * n + 4 * m + 2);
  Eigen::Index k = 0;
  r.segment(k, n) = dpsidx - v.xsi + v.eta; k += n;
  r.segment(k, m) = sp.c + sp.d.cwiseProduct(v.y) - v.mu - v.lam; k += m;
  r[k++] = sp.a0 - v.zet - sp.a.dot(v.lam);
  r.segment(k, m) = gvec - sp.a * v.z - v.y + v.s - sp.b; k += m;
  r.segment(k, n) = v.xsi.cwiseProduct(v.x - sp.alpha).array() - epsi; k += n;
  r.segment(k, n) = v.eta.cwiseProduct(sp.beta - v.x).array() - epsi; k += n;
  r.segment(k, m) = v.mu.cwiseProduct(v.y).array() - epsi; k += m;
  r[k++] = v.zet * v.z - epsi;
  r.segment(k, m) = v.lam.cwiseProduct(v.s).array() - epsi;
  return r;
}

}  // namespace

MmaSubproblemSolution solve_mma_subproblem(const MmaSubproblem& sp, double epsimin) {
  const auto n = sp.low.size();
  const auto m = sp.b.size();
  PrimalDual v;
  v.x = 0.5 * (sp.alpha + sp.beta);
  v.y = VectorXd::Ones(m);
  v.z = 1.0;
  v.lam = VectorXd::Ones(m);
  v.xsi = (v.x - sp.alpha).cwiseInverse().cwiseMax(1.0);
  v.eta = (sp.beta - v.x).cwiseInverse().cwiseMax(1.0);
  v.mu = (0.5 * sp.c).cwiseMax(1.0);
  v.zet = 1.0;
  v.s = VectorXd::Ones(m);

  int total_newton = 0;
  double epsi = 1.0;
  while (epsi > epsimin) {
    VectorXd res = residual(sp, v, epsi);
    double resnorm = res.norm();
    double resmax = res.cwiseAbs().maxCoeff();
    int inner = 0;
    while (resmax > 0.9 * epsi && inner < 200) {
      ++inner;
      ++total_newton;
      const VectorXd ux1 = sp.upp - v.x;
      const VectorXd xl1 = v.x - sp.low;
      const VectorXd ux2 = ux1.cwiseProduct(ux1);
      const VectorXd xl2 = xl1.cwiseProduct(xl1);
      const VectorXd ux3 = ux2.cwiseProduct(ux1);
      const VectorXd xl3 = xl2.cwiseProduct(xl1);
      const VectorXd plam = sp.p0 + sp.p.transpose() * v.lam;
      const VectorXd qlam = sp.q0 + sp.q.transpose() * v.lam;
      const VectorXd gvec = sp.p * ux1.cwiseInverse() + sp.q * xl1.cwiseInverse();
      const MatrixXd gg = sp.p * ux2.cwiseInverse().asDiagonal() -
                          sp.q * xl2.cwiseInverse().asDiagonal();
      const VectorXd dpsidx = plam.cwiseQuotient(ux2) - qlam.cwiseQuotient(xl2);
      const VectorXd xa = v.x - sp.alpha;
      const VectorXd bx = sp.beta - v.x;
      const VectorXd delx = dpsidx - epsi * xa.cwiseInverse() + epsi * bx.cwiseInverse();
      const VectorXd dely = sp.c + sp.d.cwiseProduct(v.y) - v.lam - epsi * v.y.cwiseInverse();
      const double delz = sp.a0 - sp.a.dot(v.lam) - epsi / v.z;
      const VectorXd dellam = gvec - sp.a * v.z - v.y - sp.b + epsi * v.lam.cwiseInverse();
      const VectorXd diagx = 2.0 * plam.cwiseQuotient(ux3) + 2.0 * qlam.cwiseQuotient(xl3) +
                             v.xsi.cwiseQuotient(xa) + v.eta.cwiseQuotient(bx);
      const VectorXd diagy = sp.d + v.mu.cwiseQuotient(v.y);
      const VectorXd diaglamyi = v.s.cwiseQuotient(v.lam) + diagy.cwiseInverse();

      VectorXd dx(n), dlam(m);
      double dz = 0.0;
      if (m < n) {
        const VectorXd blam = dellam + dely.cwiseQuotient(diagy) - gg * delx.cwiseQuotient(diagx);
        MatrixXd aa(m + 1, m + 1);
        aa.topLeftCorner(m, m) = MatrixXd(diaglamyi.asDiagonal()) +
                                 gg * diagx.cwiseInverse().asDiagonal() * gg.transpose();
        aa.topRightCorner(m, 1) = sp.a;
        aa.bottomLeftCorner(1, m) = sp.a.transpose();
        aa(m, m) = -v.zet / v.z;
        VectorXd bb(m + 1);
        bb.head(m) = blam;
        bb[m] = delz;
        const VectorXd sol = aa.partialPivLu().solve(bb);
        dlam = sol.head(m);
        dz = sol[m];
        dx = -delx.cwiseQuotient(diagx) - (gg.transpose() * dlam).cwiseQuotient(diagx);
      } else {
        const VectorXd dli = diaglamyi.cwiseInverse();
        const VectorXd dellamyi = dellam + dely.cwiseQuotient(diagy);
        MatrixXd axx = MatrixXd(diagx.asDiagonal()) + gg.transpose() * dli.asDiagonal() * gg;
        const double azz = v.zet / v.z + sp.a.dot(sp.a.cwiseProduct(dli));
        const VectorXd axz = -gg.transpose() * sp.a.cwiseProduct(dli);
        const VectorXd bxv = delx + gg.transpose() * dellamyi.cwiseProduct(dli);
        const double bz = delz - sp.a.dot(dellamyi.cwiseProduct(dli));
        MatrixXd aa(n + 1, n + 1);
        aa.topLeftCorner(n, n) = axx;
        aa.topRightCorner(n, 1) = axz;
        aa.bottomLeftCorner(1, n) = axz.transpose();
        aa(n, n) = azz;
        VectorXd bb(n + 1);
        bb.head(n) = -bxv;
        bb[n] = -bz;
        const VectorXd sol = aa.partialPivLu().solve(bb);
        dx = sol.head(n);
        dz = sol[n];
        dlam = (gg * dx).cwiseProduct(dli) - dz * sp.a.cwiseProduct(dli) + dellamyi.cwiseProduct(dli);
      }
      if (!dx.allFinite() || !dlam.allFinite() || !std::isfinite(dz)) {
        throw NumericalError("MMA subproblem: non-finite Newton direction");
      }
      const VectorXd dy = -dely.cwiseQuotient(diagy) + dlam.cwiseQuotient(diagy);
      const VectorXd dxsi = -v.xsi + epsi * xa.cwiseInverse() - v.xsi.cwiseProduct(dx).cwiseQuotient(xa);
      const VectorXd deta = -v.eta + epsi * bx.cwiseInverse() + v.eta.cwiseProduct(dx).cwiseQuotient(bx);
      const VectorXd dmu = -v.mu + epsi * v.y.cwiseInverse() - v.mu.cwiseProduct(dy).cwiseQuotient(v.y);
      const double dzet = -v.zet + epsi / v.z - v.zet * dz / v.z;
      const VectorXd ds = -v.s + epsi * v.lam.cwiseInverse() - v.s.cwiseProduct(dlam).cwiseQuotient(v.lam);

      // Largest step keeping every positive variable positive.
      double stm = 1.0;
      auto bound = [&stm](const VectorXd& val, const VectorXd& dir) {
        for (Eigen::Index k = 0; k < val.size(); ++k) stm = std::max(stm, -1.01 * dir[k] / val[k]);
      };
      bound(v.y, dy);
      stm = std::max(stm, -1.01 * dz / v.z);
      bound(v.lam, dlam);
      bound(v.xsi, dxsi);
      bound(v.eta, deta);
      bound(v.mu, dmu);
      stm = std::max(stm, -1.01 * dzet / v.zet);
      bound(v.s, ds);
      for (Eigen::Index k = 0; k < n; ++k) {
        stm = std::max(stm, -1.01 * dx[k] / xa[k]);
        stm = std::max(stm, 1.01 * dx[k] / bx[k]);
      }
      double step = 1.0 / stm;

      const PrimalDual old = v;
      double resnew = 2.0 * resnorm;
      int halvings = 0;
      while (resnew > resnorm && halvings < 50) {
        ++halvings;
        v.x = old.x + step * dx;
        v.y = old.y + step * dy;
        v.z = old.z + step * dz;
        v.lam = old.lam + step * dlam;
        v.xsi = old.xsi + step * dxsi;
        v.eta = old.eta + step * deta;
        v.mu = old.mu + step * dmu;
        v.zet = old.zet + step * dzet;
        v.s = old.s + step * ds;
        res = residual(sp, v, epsi);
        resnew = res.norm();
        step *= 0.5;
      }
      resnorm = resnew;
      resmax = res.cwiseAbs().maxCoeff();
    }
    if (inner >= 200 && resmax > 0.9 * epsi) {
      std::ostringstream os;
      os << "MMA subproblem: dual solver did not converge (epsi " << epsi
         << ", residual " << resmax << ")";
      throw NumericalError(os.str());
    }
    epsi *= 0.1;
  }

  MmaSubproblemSolution out;
  out.x = v.x;
  out.y = v.y;
  out.z = v.z;
  out.lambda = v.lam;
  out.kkt_residual = residual(sp, v, 0.0).cwiseAbs().maxCoeff();
  out.newton_iterations = total_newton;
  return out;
}

Mma::Mma(int n, int m, MmaSettings settings) : n_(n), m_(m), settings_(settings) {
  if (n < 1 || m < 1) throw ConfigError("Mma: need at least one variable and one constraint");
  if (!(settings.move_limit > 0.0 && settings.move_limit <= 1.0)) {
    throw ConfigError("Mma: move limit must be in (0, 1]");
  }
}

void Mma::move_asymptotes(const VectorXd& x, const VectorXd& xmin, const VectorXd& xmax,
                          VectorXd& low, VectorXd& upp) const {
  const VectorXd range = xmax - xmin;
  if (iteration_ < 2) {
    low = x - settings_.asyinit * range;
    upp = x + settings_.asyinit * range;
    return;
  }
  low.resize(n_);
  upp.resize(n_);
  for (int j = 0; j < n_; ++j) {
    const double trend = (x[j] - xold1_[j]) * (xold1_[j] - xold2_[j]);
    const double factor = trend > 0.0 ? settings_.asyincr : (trend < 0.0 ? settings_.asydecr : 1.0);
    double l = x[j] - factor * (xold1_[j] - low_[j]);
    double u = x[j] + factor * (upp_[j] - xold1_[j]);
    l = std::clamp(l, x[j] - 10.0 * range[j], x[j] - 0.01 * range[j]);
    u = std::clamp(u, x[j] + 0.01 * range[j], x[j] + 10.0 * range[j]);
    low[j] = l;
    upp[j] = u;
  }
}

MmaSubproblem Mma::build_subproblem(const VectorXd& x, const VectorXd& df0,
                                    const VectorXd& fval, const MatrixXd& dfdx,
                                    const VectorXd& xmin, const VectorXd& xmax) const {
  if (x.size() != n_ || df0.size() != n_ || fval.size() != m_ || dfdx.rows() != m_ ||
      dfdx.cols() != n_ || xmin.size() != n_ || xmax.size() != n_) {
    throw ConfigError("Mma: argument dimensions do not match (n, m)");
  }
  if (!df0.allFinite() || !fval.allFinite() || !dfdx.allFinite()) {
    throw NumericalError("Mma: non-finite objective or constraint derivatives");
  }
  MmaSubproblem sp;
  move_asymptotes(x, xmin, xmax, sp.low, sp.upp);
  const VectorXd range = xmax - xmin;
  sp.alpha.resize(n_);
  sp.beta.resize(n_);
  for (int j = 0; j < n_; ++j) {
    sp.alpha[j] = std::max({sp.low[j] + settings_.albefa * (x[j] - sp.low[j]),
                            x[j] - settings_.move_limit * range[j], xmin[j]});
    sp.beta[j] = std::min({sp.upp[j] - settings_.albefa * (sp.upp[j] - x[j]),
                           x[j] + settings_.move_limit * range[j], xmax[j]});
  }
  const VectorXd ux1 = sp.upp - x;
  const VectorXd xl1 = x - sp.low;
  const VectorXd ux2 = ux1.cwiseProduct(ux1);
  const VectorXd xl2 = xl1.cwiseProduct(xl1);
  const VectorXd xmami_inv = range.cwiseMax(1e-5).cwiseInverse();

  const VectorXd pos0 = df0.cwiseMax(0.0);
  const VectorXd neg0 = (-df0).cwiseMax(0.0);
  const VectorXd pq0 = 0.001 * (pos0 + neg0) + settings_.raa0 * xmami_inv;
  sp.p0 = (pos0 + pq0).cwiseProduct(ux2);
  sp.q0 = (neg0 + pq0).cwiseProduct(xl2);

  sp.p.resize(m_, n_);
  sp.q.resize(m_, n_);
  for (int i = 0; i < m_; ++i) {
    for (int j = 0; j < n_; ++j) {
      const double pos = std::max(dfdx(i, j), 0.0);
      const double neg = std::max(-dfdx(i, j), 0.0);
      const double pq = 0.001 * (pos + neg) + settings_.raa0 * xmami_inv[j];
      sp.p(i, j) = (pos + pq) * ux2[j];
      sp.q(i, j) = (neg + pq) * xl2[j];
    }
  }
  sp.b = sp.p * ux1.cwiseInverse() + sp.q * xl1.cwiseInverse() - fval;
  sp.a0 = settings_.a0;
  sp.a = VectorXd::Zero(m_);
  sp.c = VectorXd::Constant(m_, settings_.c);
  sp.d = VectorXd::Constant(m_, settings_.d);
  return sp;
}

VectorXd Mma::update(const VectorXd& x, const VectorXd& df0, const VectorXd& fval,
                     const MatrixXd& dfdx, const VectorXd& xmin, const VectorXd& xmax) {
  MmaSubproblem sp = build_subproblem(x, df0, fval, dfdx, xmin, xmax);
  last_ = solve_mma_subproblem(sp, settings_.epsimin);
  xold2_ = iteration_ >= 1 ? xold1_ : x;
  xold1_ = x;
  low_ = sp.low;
  upp_ = sp.upp;
  ++iteration_;
  // The interior point lands within ~epsimin of the box; snap to it exactly.
  VectorXd out = last_.x;
  for (int j = 0; j < n_; ++j) out[j] = std::clamp(out[j], sp.alpha[j], sp.beta[j]);
  return out;
}

}  // namespace mftd::topopt
