#include <algorithm>
#include <cmath>
#include <limits>
#include <spdlog/spdlog.h>

#include "mftd/error.hpp"
#include "mftd/lf_topopt.hpp"

namespace mftd::topopt {

const char* to_string(Objective o) {
  return o == Objective::compliance ? "compliance" : "pnorm_stress";
}

Objective objective_from_string(const std::string& s) {
  if (s == "compliance" || s == "stiffness") return Objective::compliance;
  if (s == "pnorm_stress" || s == "stress") return Objective::pnorm_stress;
  throw ConfigError("unknown objective '" + s + "' (expected compliance|pnorm_stress)");
}

LfConfig LfConfig::defaults(Objective objective) {
  LfConfig c;
  c.objective = objective;
  c.max_iterations = objective == Objective::compliance ? 50 : 100;
  return c;
}

void LfConfig::validate() const {
  if (!(volume_fraction > 0.0 && volume_fraction < 1.0)) throw ConfigError("LfConfig: V_max must be in (0, 1)");
  if (!(filter_radius > 0.0)) throw ConfigError("LfConfig: filter radius must be positive");
  if (!(beta > 0.0)) throw ConfigError("LfConfig: beta must be positive");
  if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("LfConfig: eta must be in (0, 1)");
  if (!(penal >= 1.0)) throw ConfigError("LfConfig: SIMP penalty must be >= 1");
  if (!(stress_relaxation > 0.0 && stress_relaxation <= 1.0)) throw ConfigError("LfConfig: q must be in (0, 1]");
  if (!(move_limit > 0.0 && move_limit <= 1.0)) throw ConfigError("LfConfig: move limit must be in (0, 1]");
  if (!(e0 > emin && emin > 0.0)) throw ConfigError("LfConfig: need E0 > E_min > 0");
  if (max_iterations < 1) throw ConfigError("LfConfig: max_iterations must be >= 1");
  if (pnorm_schedule.empty()) throw ConfigError("LfConfig: empty p-norm schedule");
  for (const auto& st : pnorm_schedule) {
    if (!(st.exponent >= 1.0)) throw ConfigError("LfConfig: p-norm exponent must be >= 1");
  }
  if (mutation && !(mutation->max_similarity > 0.0 && mutation->max_similarity <= 1.0)) {
    throw ConfigError("LfConfig: G_mut_max must be in (0, 1]");
  }
}

double LfConfig::pnorm_exponent(int iteration) const {
  double p = pnorm_schedule.front().exponent;
  for (const auto& st : pnorm_schedule) {
    if (iteration >= st.start_iteration) p = st.exponent;
  }
  return p;
}

Evaluation mutation_similarity(std::span<const double> gamma,
                               std::span<const double> reference,
                               std::span<const double> element_volume) {
  if (gamma.size() != reference.size() || gamma.size() != element_volume.size()) {
    throw ConfigError("mutation_similarity: shape mismatch between design and reference");
  }
  Evaluation ev;
  ev.gradient.resize(gamma.size());
  for (std::size_t e = 0; e < gamma.size(); ++e) {
    const double diff = gamma[e] - reference[e];
    ev.value += (1.0 - std::abs(diff)) * element_volume[e];
    ev.gradient[e] = diff < 0.0 ? element_volume[e] : -element_volume[e];
  }
  return ev;
}

double pnorm_mean(std::span<const double> values, double exponent) {
  if (values.empty()) return 0.0;
  const double peak = *std::max_element(values.begin(), values.end());
  if (!(peak > 0.0)) return 0.0;
  double acc = 0.0;
  for (double s : values) acc += std::pow(s / peak, exponent);
  return peak * std::pow(acc / static_cast<double>(values.size()), 1.0 / exponent);
}

LfModel::LfModel(LoadCase load_case, LfConfig config)
    : lc_(std::move(load_case)),
      cfg_(std::move(config)),
      filter_(lc_.mesh.nx, lc_.mesh.ny, lc_.mesh.dx, lc_.mesh.dy, cfg_.filter_radius),
      ke_(fem::element_stiffness(lc_.mesh.dx, lc_.mesh.dy, cfg_.poisson)) {
  cfg_.validate();
  if (filter_.is_identity()) {
    spdlog::warn("LF filter radius {} is below the element spacing {}; filtering is disabled",
                 cfg_.filter_radius, std::min(lc_.mesh.dx, lc_.mesh.dy));
  }
  if (cfg_.mutation && cfg_.mutation->reference.size() != static_cast<std::size_t>(element_count())) {
    throw ConfigError("LfModel: mutation reference has wrong element count");
  }
}

std::vector<double> LfModel::filtered(std::span<const double> design) const {
  if (design.size() != static_cast<std::size_t>(element_count())) {
    throw ConfigError("LfModel: design length does not match the mesh");
  }
  return filter_.apply(design);
}

std::vector<double> LfModel::physical(std::span<const double> design) const {
  std::vector<double> out = filtered(design);
  for (double& v : out) v = std::clamp(heaviside_project(v, cfg_.beta, cfg_.eta), 0.0, 1.0);
  return out;
}

fem::FemProblem LfModel::fem_problem(std::span<const double> phys) const {
  fem::FemProblem p;
  p.mesh = lc_.mesh;
  p.modulus.resize(phys.size());
  for (std::size_t e = 0; e < phys.size(); ++e) {
    p.modulus[e] = cfg_.emin + std::pow(phys[e], cfg_.penal) * (cfg_.e0 - cfg_.emin);
  }
  p.thickness.assign(phys.size(), 1.0);
  p.load = lc_.load;
  p.fixed_dofs = lc_.fixed_dofs;
  p.poisson = cfg_.poisson;
  return p;
}

std::vector<double> LfModel::chain_to_design(std::span<const double> design,
                                             std::span<const double> d_physical) const {
  const std::vector<double> filt = filtered(design);
  std::vector<double> d_filtered(filt.size());
  for (std::size_t e = 0; e < filt.size(); ++e) {
    d_filtered[e] = d_physical[e] * heaviside_project_derivative(filt[e], cfg_.beta, cfg_.eta);
  }
  return filter_.apply_transpose(d_filtered);
}

Evaluation LfModel::compliance(std::span<const double> design) const {
  const std::vector<double> phys = physical(design);
  const fem::FemProblem prob = fem_problem(phys);
  const fem::SparseMatrix k = fem::assemble_stiffness(prob);
  const Eigen::VectorXd u = fem::StaticSolver(k, prob.fixed_dofs).solve(prob.load);
  Evaluation ev;
  ev.value = prob.load.dot(u);
  std::vector<double> d_phys(phys.size());
  for (int e = 0; e < element_count(); ++e) {
    const fem::Vector8d ue = fem::element_displacement(lc_.mesh, u, e);
    const double energy = ue.dot(ke_ * ue);
    d_phys[e] = -cfg_.penal * std::pow(phys[e], cfg_.penal - 1.0) * (cfg_.e0 - cfg_.emin) * energy;
  }
  ev.gradient = chain_to_design(design, d_phys);
  return ev;
}

std::vector<double> LfModel::relaxed_stress(std::span<const double> phys) const {
  const fem::FemProblem prob = fem_problem(phys);
  const fem::SparseMatrix k = fem::assemble_stiffness(prob);
  const Eigen::VectorXd u = fem::StaticSolver(k, prob.fixed_dofs).solve(prob.load);
  const Eigen::Matrix<double, 3, 8> db =
      cfg_.e0 * fem::plane_stress_matrix(cfg_.poisson) *
      fem::strain_displacement(lc_.mesh.dx, lc_.mesh.dy, 0.0, 0.0);
  std::vector<double> out(phys.size());
  for (int e = 0; e < element_count(); ++e) {
    const Eigen::Vector3d s = db * fem::element_displacement(lc_.mesh, u, e);
    out[e] = std::pow(phys[e], cfg_.stress_relaxation) * fem::von_mises(s);
  }
  return out;
}

Evaluation LfModel::pnorm_stress(std::span<const double> design, double exponent) const {
  if (!(exponent >= 1.0)) throw ConfigError("pnorm_stress: exponent must be >= 1");
  const std::vector<double> phys = physical(design);
  const fem::FemProblem prob = fem_problem(phys);
  const fem::SparseMatrix k = fem::assemble_stiffness(prob);
  const fem::StaticSolver solver(k, prob.fixed_dofs);
  const Eigen::VectorXd u = solver.solve(prob.load);
  const Eigen::Matrix<double, 3, 8> db =
      cfg_.e0 * fem::plane_stress_matrix(cfg_.poisson) *
      fem::strain_displacement(lc_.mesh.dx, lc_.mesh.dy, 0.0, 0.0);
  const int n = element_count();
  const double q = cfg_.stress_relaxation;

  std::vector<Eigen::Vector3d> stress(static_cast<std::size_t>(n));
  std::vector<double> vm(static_cast<std::size_t>(n));
  std::vector<double> relaxed(static_cast<std::size_t>(n));
  for (int e = 0; e < n; ++e) {
    stress[e] = db * fem::element_displacement(lc_.mesh, u, e);
    vm[e] = fem::von_mises(stress[e]);
    relaxed[e] = std::pow(phys[e], q) * vm[e];
  }
  Evaluation ev;
  ev.value = pnorm_mean(relaxed, exponent);
  ev.gradient.assign(static_cast<std::size_t>(n), 0.0);
  if (!(ev.value > 0.0)) return ev;

  // d sigma_PN / d relaxed_e = (1/N) (relaxed_e / sigma_PN)^(P-1)
  std::vector<double> weight(static_cast<std::size_t>(n));
  for (int e = 0; e < n; ++e) {
    weight[e] = std::pow(relaxed[e] / ev.value, exponent - 1.0) / n;
  }
  std::vector<double> d_phys(static_cast<std::size_t>(n), 0.0);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(lc_.mesh.dof_count());
  for (int e = 0; e < n; ++e) {
    if (phys[e] > 0.0) d_phys[e] = weight[e] * q * relaxed[e] / phys[e];
    if (vm[e] > 0.0 && weight[e] > 0.0) {
      const Eigen::Vector3d& s = stress[e];
      const Eigen::Vector3d dvm_ds(2.0 * s[0] - s[1], 2.0 * s[1] - s[0], 6.0 * s[2]);
      const fem::Vector8d g = db.transpose() * (dvm_ds / (2.0 * vm[e]));
      const double scale = weight[e] * std::pow(phys[e], q);
      const auto dofs = lc_.mesh.element_dofs(e);
      for (int a = 0; a < 8; ++a) rhs[dofs[a]] += scale * g[a];
    }
  }
  const Eigen::VectorXd lambda = solver.solve(rhs);
  for (int e = 0; e < n; ++e) {
    const fem::Vector8d ue = fem::element_displacement(lc_.mesh, u, e);
    const fem::Vector8d le = fem::element_displacement(lc_.mesh, lambda, e);
    const double dk = cfg_.penal * std::pow(phys[e], cfg_.penal - 1.0) * (cfg_.e0 - cfg_.emin);
    d_phys[e] -= dk * le.dot(ke_ * ue);
  }
  ev.gradient = chain_to_design(design, d_phys);
  return ev;
}

Evaluation LfModel::volume_fraction(std::span<const double> design) const {
  const std::vector<double> phys = physical(design);
  Evaluation ev;
  const double inv_n = 1.0 / static_cast<double>(phys.size());
  for (double v : phys) ev.value += v;
  ev.value *= inv_n;
  const std::vector<double> d_phys(phys.size(), inv_n);
  ev.gradient = chain_to_design(design, d_phys);
  return ev;
}

Evaluation LfModel::mutation_similarity(std::span<const double> design,
                                        std::span<const double> reference) const {
  const std::vector<double> phys = physical(design);
  const double inv_n = 1.0 / static_cast<double>(phys.size());
  const std::vector<double> vol(phys.size(), inv_n);
  Evaluation ev = topopt::mutation_similarity(phys, reference, vol);
  ev.gradient = chain_to_design(design, ev.gradient);
  return ev;
}

}  // namespace mftd::topopt
