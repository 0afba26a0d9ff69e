#include "mftd/hf_eval.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "mftd/error.hpp"

namespace mftd::hf {

const char* to_string(Mode m) { return m == Mode::stiffness ? "stiffness" : "stress"; }

Mode mode_from_string(const std::string& s) {
  if (s == "stiffness" || s == "compliance") return Mode::stiffness;
  if (s == "stress") return Mode::stress;
  throw ConfigError("unknown mode '" + s + "' (expected stiffness|stress)");
}

int BinaryField::solid_count() const {
  return static_cast<int>(std::count(values.begin(), values.end(), std::uint8_t{1}));
}

BinaryField binarize(const DensityField& gamma, double threshold) {
  BinaryField b{gamma.nx, gamma.ny, std::vector<std::uint8_t>(gamma.size())};
  for (std::size_t e = 0; e < gamma.size(); ++e) b.values[e] = gamma.values[e] >= threshold ? 1 : 0;
  return b;
}

void HfSetup::validate() const {
  if (!(e0 > 0.0)) throw ConfigError("HfSetup: E0 must be positive");
  if (!(h_min > 0.0 && h_max > h_min)) throw ConfigError("HfSetup: need 0 < h_min < h_max");
  if (!(skin_ratio > 0.0)) throw ConfigError("HfSetup: skin ratio must be positive");
}

HfModel build_hf_model(const BinaryField& b, double h, const HfSetup& setup,
                       const LoadCase& load_case) {
  const fem::QuadMesh& mesh = load_case.mesh;
  if (b.nx != mesh.nx || b.ny != mesh.ny) throw ConfigError("build_hf_model: field shape does not match the mesh");
  HfModel model;
  model.binary = b;
  model.h = h;
  fem::FemProblem& p = model.problem;
  p.mesh = mesh;
  p.modulus.assign(b.values.size(), setup.e0);
  p.thickness.resize(b.values.size());
  const double skin = setup.skin_thickness();
  for (std::size_t e = 0; e < b.values.size(); ++e) p.thickness[e] = b.values[e] ? h : skin;
  p.load = load_case.load;
  p.fixed_dofs = load_case.fixed_dofs;
  p.poisson = setup.poisson;
  return model;
}

bool connects_load_to_support(const BinaryField& b, const LoadCase& load_case) {
  const fem::QuadMesh& m = load_case.mesh;
  std::vector<std::uint8_t> touches_load(static_cast<std::size_t>(m.node_count()), 0);
  std::vector<std::uint8_t> touches_support(touches_load.size(), 0);
  for (int n : load_case.load_nodes) touches_load[n] = 1;
  for (int n : load_case.support_nodes) touches_support[n] = 1;

  std::vector<std::uint8_t> seen(b.values.size(), 0);
  std::deque<int> queue;
  for (int e = 0; e < m.element_count(); ++e) {
    if (!b.values[e]) continue;
    for (int n : m.element_nodes(e)) {
      if (touches_load[n]) {
        seen[e] = 1;
        queue.push_back(e);
        break;
      }
    }
  }
  while (!queue.empty()) {
    const int e = queue.front();
    queue.pop_front();
    for (int n : m.element_nodes(e)) {
      if (touches_support[n]) return true;
    }
    const int i = e % m.nx, j = e / m.nx;
    const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
    for (const auto& [ii, jj] : nb) {
      if (ii < 0 || jj < 0 || ii >= m.nx || jj >= m.ny) continue;
      const int k = m.element(ii, jj);
      if (b.values[k] && !seen[k]) {
        seen[k] = 1;
        queue.push_back(k);
      }
    }
  }
  return false;
}

HfEvaluator::HfEvaluator(LoadCase load_case, HfSetup setup)
    : lc_(std::move(load_case)), setup_(setup) {
  setup_.validate();
}

std::vector<double> HfEvaluator::solid_von_mises(const BinaryField& b, double h) const {
  const HfModel model = build_hf_model(b, h, setup_, lc_);
  const fem::FemSolution sol = fem::solve(model.problem);
  std::vector<double> out(sol.von_mises.size(), 0.0);
  for (std::size_t e = 0; e < out.size(); ++e) {
    if (b.values[e]) out[e] = sol.von_mises[e];
  }
  return out;
}

HfObjectives HfEvaluator::evaluate(const DensityField& density, double h, Mode mode) const {
  HfObjectives out;
  const fem::QuadMesh& m = lc_.mesh;
  if (density.nx != m.nx || density.ny != m.ny) {
    out.diagnostic = "shape mismatch";
    return out;
  }
  if (!std::isfinite(h) || h < setup_.h_min || h > setup_.h_max) {
    std::ostringstream os;
    os << "h = " << h << " outside [" << setup_.h_min << ", " << setup_.h_max << "]";
    out.diagnostic = os.str();
    return out;
  }
  const BinaryField b = binarize(density);
  if (b.solid_count() == 0) {
    out.diagnostic = "empty design";
    return out;
  }
  if (!connects_load_to_support(b, lc_)) {
    out.diagnostic = "no load path";
    return out;
  }
  try {
    const HfModel model = build_hf_model(b, h, setup_, lc_);
    const fem::FemSolution sol = fem::solve(model.problem);
    double j1 = 0.0;
    if (mode == Mode::stiffness) {
      j1 = lc_.load.dot(sol.displacement);
    } else {
      for (std::size_t e = 0; e < b.values.size(); ++e) {
        if (b.values[e]) j1 = std::max(j1, sol.von_mises[e]);
      }
    }
    if (!std::isfinite(j1)) {
      out.diagnostic = "non-finite response";
      return out;
    }
    out.j1 = j1;
    out.j2 = h * b.solid_count() * m.element_area();
    out.feasible = true;
  } catch (const std::exception& ex) {
    out.diagnostic = std::string("FEM failure: ") + ex.what();
  }
  return out;
}

}  // namespace mftd::hf
