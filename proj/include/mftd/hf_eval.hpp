#pragma once
// High-fidelity evaluation of a thresholded design with a per-sample
// thickness. Reinforcement elements get thickness h, the remaining area
// keeps a thin skin, all at the solid modulus.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "mftd/cantilever.hpp"
#include "mftd/density.hpp"
#include "mftd/grid_fem.hpp"

namespace mftd::hf {

enum class Mode { stiffness, stress };

const char* to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct BinaryField {
  int nx = 0;
  int ny = 0;
  std::vector<std::uint8_t> values;

  int solid_count() const;
  bool operator==(const BinaryField&) const = default;
};

// b_e = 1 iff gamma_e >= threshold.
BinaryField binarize(const DensityField& gamma, double threshold = 0.5);

struct HfSetup {
  double e0 = 1.0;
  double poisson = fem::kDefaultPoisson;
  double h_min = 0.01;
  double h_max = 0.1;
  double skin_ratio = 0.1;  // t_skin = skin_ratio * h_min

  double skin_thickness() const { return skin_ratio * h_min; }
  void validate() const;
};

struct HfModel {
  BinaryField binary;
  double h = 0.0;
  fem::FemProblem problem;
};

HfModel build_hf_model(const BinaryField& b, double h, const HfSetup& setup,
                       const LoadCase& load_case);

struct HfObjectives {
  double j1 = std::numeric_limits<double>::infinity();
  double j2 = std::numeric_limits<double>::infinity();
  bool feasible = false;
  std::string diagnostic;  // reason when infeasible
};

// True when solid elements connect an element touching a load node to an
// element touching a support node through shared edges.
bool connects_load_to_support(const BinaryField& b, const LoadCase& load_case);

class HfEvaluator {
 public:
  HfEvaluator(LoadCase load_case, HfSetup setup);

  const LoadCase& load_case() const { return lc_; }
  const HfSetup& setup() const { return setup_; }

  // Pure function of (density, h). Infeasible samples carry +inf objectives.
  HfObjectives evaluate(const DensityField& density, double h, Mode mode) const;

  // Von Mises stress of the solid elements (skin elements report 0).
  std::vector<double> solid_von_mises(const BinaryField& b, double h) const;

 private:
  LoadCase lc_;
  HfSetup setup_;
};

}  // namespace mftd::hf
