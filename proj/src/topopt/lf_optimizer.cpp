#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mftd/error.hpp"
#include "mftd/lf_topopt.hpp"
#include "mftd/mma.hpp"

namespace mftd::topopt {

namespace {

std::string state_dump(int iteration, double objective, double volume,
                       const Eigen::VectorXd& x) {
  std::ostringstream os;
  os << "LF optimization: non-finite objective at iteration " << iteration
     << " (objective " << objective << ", volume " << volume
     << ", design min " << x.minCoeff() << ", max " << x.maxCoeff()
     << ", mean " << x.mean() << ")";
  return os.str();
}

}  // namespace

LfResult run_lf_optimization(const LfModel& model) {
  const LfConfig& cfg = model.config();
  const int n = model.element_count();
  const bool has_mutation = cfg.mutation.has_value();
  const int m = has_mutation ? 2 : 1;

  MmaSettings settings;
  settings.move_limit = cfg.move_limit;
  Mma mma(n, m, settings);
  const Eigen::VectorXd xmin = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd xmax = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, cfg.volume_fraction);

  LfResult result;
  double scale = 1.0;
  double stage_exponent = -1.0;
  const int hard_limit = cfg.max_iterations + std::max(0, cfg.feasibility_iterations);

  for (int it = 0;; ++it) {
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(n));
    const double exponent = cfg.pnorm_exponent(it);
    const Evaluation obj = cfg.objective == Objective::compliance
                               ? model.compliance(xs)
                               : model.pnorm_stress(xs, exponent);
    const Evaluation vol = model.volume_fraction(xs);
    if (!std::isfinite(obj.value)) throw NumericalError(state_dump(it, obj.value, vol.value, x));

    Eigen::VectorXd g(m);
    Eigen::MatrixXd dg(m, n);
    g[0] = vol.value / cfg.volume_fraction - 1.0;
    for (int j = 0; j < n; ++j) dg(0, j) = vol.gradient[j] / cfg.volume_fraction;
    double violation = std::max(0.0, vol.value - cfg.volume_fraction);
    double similarity = std::numeric_limits<double>::quiet_NaN();
    if (has_mutation) {
      const Evaluation sim = model.mutation_similarity(xs, cfg.mutation->reference);
      const double gmax = cfg.mutation->max_similarity;
      similarity = sim.value;
      g[1] = sim.value / gmax - 1.0;
      for (int j = 0; j < n; ++j) dg(1, j) = sim.gradient[j] / gmax;
      violation = std::max(violation, sim.value - gmax);
    }
    result.log.push_back({it, obj.value, vol.value, similarity,
                          cfg.objective == Objective::compliance ? 0.0 : exponent});

    const bool budget_done = it >= cfg.max_iterations;
    if ((budget_done && violation <= cfg.constraint_tolerance) || it >= hard_limit) {
      result.objective = obj.value;
      result.volume = vol.value;
      if (has_mutation) result.similarity = similarity;
      break;
    }

    // Objective normalized at the start of every continuation stage.
    if (exponent != stage_exponent) {
      stage_exponent = exponent;
      scale = std::abs(obj.value) > 0.0 ? 1.0 / std::abs(obj.value) : 1.0;
    }
    Eigen::VectorXd df(n);
    for (int j = 0; j < n; ++j) df[j] = scale * obj.gradient[j];
    x = mma.update(x, df, g, dg, xmin, xmax);
  }

  const int nx = model.load_case().mesh.nx;
  const int ny = model.load_case().mesh.ny;
  result.design = DensityField(nx, ny, std::vector<double>(x.data(), x.data() + n));
  result.physical = DensityField(nx, ny, model.physical(result.design.values));
  return result;
}

LfResult run_lf_optimization(const CantileverSetup& setup, const LfConfig& config) {
  return run_lf_optimization(LfModel(make_cantilever(setup), config));
}

std::string lf_log_csv(const std::vector<LfIterationRecord>& log) {
  std::ostringstream os;
  os.precision(17);
  os << "iteration,objective,volume,constraint,pnorm_exponent\n";
  for (const auto& r : log) {
    os << r.iteration << ',' << r.objective << ',' << r.volume << ',';
    if (!std::isnan(r.constraint)) os << r.constraint;
    os << ',' << r.pnorm_exponent << '\n';
  }
  return os.str();
}

}  // namespace mftd::topopt
