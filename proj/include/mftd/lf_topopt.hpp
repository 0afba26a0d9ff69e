#pragma once
// Low-fidelity SIMP topology optimization: density filter, Heaviside
// projection, compliance and p-norm stress objectives with adjoint
// sensitivities, the similarity constraint used for mutation, and the MMA
// driven optimization loop.

#include <Eigen/Core>
#include <Eigen/Sparse>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mftd/cantilever.hpp"
#include "mftd/density.hpp"
#include "mftd/grid_fem.hpp"

namespace mftd::topopt {

// Hat-weight filter: out_e = sum_j H_ej x_j / sum_j H_ej with
// H_ej = max(0, r - |x_j - x_e|). Stored as a row-normalized sparse matrix.
class DensityFilter {
 public:
  DensityFilter(int nx, int ny, double dx, double dy, double radius);

  std::vector<double> apply(std::span<const double> x) const;
  // Transpose product, used to chain sensitivities back to design variables.
  std::vector<double> apply_transpose(std::span<const double> g) const;

  // True when only the self weight is nonzero.
  bool is_identity() const { return identity_; }
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& matrix() const { return weights_; }

 private:
  Eigen::SparseMatrix<double, Eigen::RowMajor> weights_;
  bool identity_ = false;
};

// Filter on a field with elements of size dx x dy. Logs a warning when the
// radius does not reach any neighbour (the filter degenerates to identity).
DensityField density_filter(const DensityField& field, double radius, double dx,
                            double dy);

// Smoothed Heaviside: (tanh(b(x - t)) + tanh(b t)) / (tanh(b(1 - t)) + tanh(b t)).
double heaviside_project(double x, double beta, double eta);
double heaviside_project_derivative(double x, double beta, double eta);
DensityField heaviside_project(const DensityField& field, double beta, double eta);

enum class Objective { compliance, pnorm_stress };

const char* to_string(Objective o);
Objective objective_from_string(const std::string& s);

struct PnormStage {
  int start_iteration = 0;
  double exponent = 8.0;
};

struct MutationConstraint {
  std::vector<double> reference;  // gamma_ref per element
  double max_similarity = 0.5;    // G_mut_max
};

struct LfConfig {
  Objective objective = Objective::compliance;
  double volume_fraction = 0.5;  // V_max
  double filter_radius = 0.03;   // length units
  double beta = 4.0;
  double eta = 0.5;
  double penal = 3.0;
  double stress_relaxation = 0.5;  // q
  double e0 = 1.0;
  double emin = 1e-9;
  double poisson = fem::kDefaultPoisson;
  std::vector<PnormStage> pnorm_schedule{{0, 8.0}, {30, 16.0}, {60, 32.0}, {90, 64.0}};
  double move_limit = 0.05;
  int max_iterations = 50;
  // Extra iterations allowed after max_iterations while a constraint is
  // still violated by more than constraint_tolerance.
  int feasibility_iterations = 60;
  double constraint_tolerance = 5e-4;
  std::optional<MutationConstraint> mutation;

  // Defaults: 50 iterations for compliance, 100 for p-norm stress.
  static LfConfig defaults(Objective objective);
  void validate() const;
  double pnorm_exponent(int iteration) const;
};

struct Evaluation {
  double value = 0.0;
  std::vector<double> gradient;  // with respect to raw design variables
};

// sum_e (1 - |g_e - r_e|) v_e and its subgradient (-v_e where g_e == r_e).
Evaluation mutation_similarity(std::span<const double> gamma,
                               std::span<const double> reference,
                               std::span<const double> element_volume);

// p-norm (power mean) of nonnegative values: ((1/N) sum s^P)^(1/P), overflow-safe.
double pnorm_mean(std::span<const double> values, double exponent);

// Fixed load case + LF parameters; evaluates objectives for raw designs.
// Reentrant: every evaluation builds its own stiffness factorization.
class LfModel {
 public:
  LfModel(LoadCase load_case, LfConfig config);

  const LoadCase& load_case() const { return lc_; }
  const LfConfig& config() const { return cfg_; }
  const DensityFilter& filter() const { return filter_; }
  int element_count() const { return lc_.mesh.element_count(); }

  std::vector<double> filtered(std::span<const double> design) const;
  std::vector<double> physical(std::span<const double> design) const;

  fem::FemProblem fem_problem(std::span<const double> physical) const;

  // W = U^T K U.
  Evaluation compliance(std::span<const double> design) const;
  // sigma_PN over relaxed stresses physical^q * sigma_vm(E0).
  Evaluation pnorm_stress(std::span<const double> design, double exponent) const;
  // Mean physical density.
  Evaluation volume_fraction(std::span<const double> design) const;
  // Normalized similarity G / sum v_e on physical densities.
  Evaluation mutation_similarity(std::span<const double> design,
                                 std::span<const double> reference) const;

  // Relaxed per-element stresses at a physical density.
  std::vector<double> relaxed_stress(std::span<const double> physical) const;

 private:
  std::vector<double> chain_to_design(std::span<const double> design,
                                      std::span<const double> d_physical) const;

  LoadCase lc_;
  LfConfig cfg_;
  DensityFilter filter_;
  fem::Matrix8d ke_;
};

struct LfIterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double volume = 0.0;
  double constraint = 0.0;  // normalized similarity, NaN without mutation
  double pnorm_exponent = 0.0;
};

struct LfResult {
  DensityField design;    // raw variables
  DensityField physical;  // filtered and projected
  double objective = 0.0;
  double volume = 0.0;
  std::optional<double> similarity;
  std::vector<LfIterationRecord> log;
};

// Uniform start at V_max, MMA updates with move limit, constraint on the
// physical volume fraction (and similarity when mutation is configured).
// Throws NumericalError on a non-finite objective.
LfResult run_lf_optimization(const LfModel& model);
LfResult run_lf_optimization(const CantileverSetup& setup, const LfConfig& config);

// Iteration log as CSV: iteration,objective,volume,constraint,pnorm_exponent.
std::string lf_log_csv(const std::vector<LfIterationRecord>& log);

}  // namespace mftd::topopt
