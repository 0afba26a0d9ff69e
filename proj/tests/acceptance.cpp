// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Each criterion also has a wall-clock budget.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mftd/cantilever.hpp"
#include "mftd/grid_fem.hpp"
#include "mftd/hf_eval.hpp"
#include "mftd/lf_topopt.hpp"
#include "mftd/mapping.hpp"
#include "mftd/mcvae.hpp"
#include "mftd/moea.hpp"
#include "mftd/pipeline.hpp"
#include "vae_toys.hpp"

using namespace mftd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::vector<double> random_design(int n, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = u(rng);
  return v;
}

fem::FemProblem uniform_problem(const fem::QuadMesh& mesh) {
  fem::FemProblem p;
  p.mesh = mesh;
  p.modulus.assign(static_cast<std::size_t>(mesh.element_count()), 1.0);
  p.thickness.assign(static_cast<std::size_t>(mesh.element_count()), 1.0);
  p.load = Eigen::VectorXd::Zero(mesh.dof_count());
  return p;
}

// ---------------------------------------------------------------- 1

Outcome fem_correctness() {
  // Cantilever L = 8, H = 1 with a parabolic tip shear; Timoshenko deflection.
  const int nx = 64, ny = 8;
  const double length = 8.0, height = 1.0, nu = fem::kDefaultPoisson, force = 1e-3;
  const fem::QuadMesh m = fem::QuadMesh::rectangle(nx, ny, length, height);
  fem::FemProblem p = uniform_problem(m);
  for (int j = 0; j <= ny; ++j) {
    p.fixed_dofs.push_back(2 * m.node(0, j));
    p.fixed_dofs.push_back(2 * m.node(0, j) + 1);
  }
  const double gp[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
  const double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
  for (int j = 0; j < ny; ++j) {
    for (int g = 0; g < 4; ++g) {
      const double s = gp[g];
      const double yc = (j + 0.5 + 0.5 * s) * m.dy - height / 2.0;
      const double traction = 1.5 * force / height * (1.0 - 4.0 * yc * yc / (height * height));
      const double w = gw[g] * m.dy / 2.0;
      p.load[2 * m.node(nx, j) + 1] -= traction * w * (1.0 - s) / 2.0;
      p.load[2 * m.node(nx, j + 1) + 1] -= traction * w * (1.0 + s) / 2.0;
    }
  }
  const fem::FemSolution sol = fem::solve(p);
  const double tip = -sol.displacement[2 * m.node(nx, ny / 2) + 1];
  const double inertia = height * height * height / 12.0;
  const double shear_modulus = 1.0 / (2.0 * (1.0 + nu));
  const double beam = force * std::pow(length, 3) / (3.0 * inertia) + force * length / (5.0 / 6.0 * shear_modulus * height);
  const double tip_err = std::abs(tip - beam) / beam;

  // Patch test: affine boundary data on a 5 x 4 patch.
  const fem::QuadMesh pm = fem::QuadMesh::rectangle(5, 4, 1.3, 0.9);
  fem::FemProblem pp = uniform_problem(pm);
  auto affine = [](double x, double y) {
    return std::pair{0.01 + 0.002 * x - 0.001 * y, -0.02 + 0.0005 * x + 0.003 * y};
  };
  Eigen::VectorXd prescribed = Eigen::VectorXd::Zero(pm.dof_count());
  for (int j = 0; j <= pm.ny; ++j) {
    for (int i = 0; i <= pm.nx; ++i) {
      if (i != 0 && j != 0 && i != pm.nx && j != pm.ny) continue;
      const int n = pm.node(i, j);
      const auto [ux, uy] = affine(pm.node_x(n), pm.node_y(n));
      prescribed[2 * n] = ux;
      prescribed[2 * n + 1] = uy;
      pp.fixed_dofs.push_back(2 * n);
      pp.fixed_dofs.push_back(2 * n + 1);
    }
  }
  std::sort(pp.fixed_dofs.begin(), pp.fixed_dofs.end());
  const fem::SparseMatrix k = fem::assemble_stiffness(pp);
  const Eigen::VectorXd u = fem::solve_static(k, -(k * prescribed), pp.fixed_dofs) + prescribed;
  double patch_err = 0.0;
  for (int n = 0; n < pm.node_count(); ++n) {
    const auto [ux, uy] = affine(pm.node_x(n), pm.node_y(n));
    patch_err = std::max({patch_err, std::abs(u[2 * n] - ux), std::abs(u[2 * n + 1] - uy)});
  }
  return {tip_err <= 0.05 && patch_err <= 1e-10,
          fmt::format("tip deflection error {:.3f}% (limit 5%), patch error {:.2e} (limit 1e-10)", 100 * tip_err,
                      patch_err)};
}

// ---------------------------------------------------------------- 2, 3

topopt::LfConfig small_config(topopt::Objective obj) {
  topopt::LfConfig c = topopt::LfConfig::defaults(obj);
  c.filter_radius = 0.25;  // two elements on an 8 x 8 unit square
  return c;
}

// Max relative error of the adjoint against central differences over
// components with a non-negligible adjoint value.
double gradient_error(const std::function<topopt::Evaluation(std::span<const double>)>& f, std::vector<double> x) {
  const topopt::Evaluation ev = f(x);
  const double step = 1e-6;
  double worst = 0.0;
  for (std::size_t e = 0; e < x.size(); ++e) {
    const double g = ev.gradient[e];
    if (std::abs(g) <= 1e-8) continue;
    const double x0 = x[e];
    x[e] = x0 + step;
    const double fp = f(x).value;
    x[e] = x0 - step;
    const double fm = f(x).value;
    x[e] = x0;
    worst = std::max(worst, std::abs((fp - fm) / (2.0 * step) - g) / std::abs(g));
  }
  return worst;
}

Outcome sensitivity_fidelity() {
  const LoadCase lc = make_cantilever({.nx = 8, .ny = 8});
  const topopt::LfModel comp(lc, small_config(topopt::Objective::compliance));
  const topopt::LfModel stress(lc, small_config(topopt::Objective::pnorm_stress));
  std::mt19937_64 rng(2024);
  double worst_c = 0.0, worst_s = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_design(64, rng);
    worst_c = std::max(worst_c, gradient_error([&](std::span<const double> d) { return comp.compliance(d); }, x));
    const auto xs = random_design(64, rng, 0.05, 1.0);
    worst_s = std::max(worst_s, gradient_error([&](std::span<const double> d) { return stress.pnorm_stress(d, 8.0); }, xs));
  }
  return {worst_c <= 1e-3 && worst_s <= 1e-2,
          fmt::format("compliance max rel. error {:.2e} (limit 1e-3), p-norm max rel. error {:.2e} (limit 1e-2)",
                      worst_c, worst_s)};
}

Outcome pnorm_sandwich() {
  const LoadCase lc = make_cantilever({.nx = 8, .ny = 8});
  const topopt::LfModel model(lc, small_config(topopt::Objective::pnorm_stress));
  std::mt19937_64 rng(77);
  int violations = 0, checks = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = random_design(64, rng);
    const auto relaxed = model.relaxed_stress(model.physical(x));
    const double peak = *std::max_element(relaxed.begin(), relaxed.end());
    const double n = static_cast<double>(relaxed.size());
    for (double p : {8.0, 16.0, 32.0, 64.0}) {
      const double pn = model.pnorm_stress(x, p).value;
      const bool ok = pn <= peak * (1 + 1e-12) && peak <= std::pow(n, 1.0 / p) * pn * (1 + 1e-12);
      violations += !ok;
      ++checks;
    }
  }
  return {violations == 0, fmt::format("{} violations in {} field/exponent pairs", violations, checks)};
}

// ---------------------------------------------------------------- 4, 5

struct LfShared {
  CantileverSetup setup{.nx = 32, .ny = 32};
  topopt::LfConfig cfg;
  std::optional<topopt::LfResult> result;
};

Outcome lf_optimizer(LfShared& shared) {
  shared.cfg = topopt::LfConfig::defaults(topopt::Objective::compliance);
  shared.cfg.filter_radius = 0.06;
  shared.cfg.volume_fraction = 0.5;
  shared.result = topopt::run_lf_optimization(shared.setup, shared.cfg);
  const topopt::LfModel model(make_cantilever(shared.setup), shared.cfg);
  const double uniform = model.compliance(std::vector<double>(32 * 32, 0.5)).value;
  const double gain = 1.0 - shared.result->objective / uniform;
  const double vol_err = std::abs(shared.result->volume - 0.5);
  return {gain >= 0.30 && vol_err <= 1e-3,
          fmt::format("compliance {:.4g} vs uniform {:.4g}: {:.1f}% lower (limit 30%), volume error {:.1e} (limit 1e-3)",
                      shared.result->objective, uniform, 100 * gain, vol_err)};
}

Outcome mutation_contract(const LfShared& shared) {
  if (!shared.result) return {false, "no LF reference available"};
  std::vector<double> ref(shared.result->physical.values.size());
  for (std::size_t e = 0; e < ref.size(); ++e) ref[e] = shared.result->physical.values[e] >= 0.5 ? 1.0 : 0.0;
  const hf::BinaryField ref_bin = hf::binarize(shared.result->physical);
  double worst_g = -1.0, least_diff = 1.0;
  for (double v : {0.35, 0.5, 0.65}) {
    topopt::LfConfig cfg = shared.cfg;
    cfg.volume_fraction = v;
    cfg.mutation = topopt::MutationConstraint{ref, 0.5};
    const topopt::LfResult r = topopt::run_lf_optimization(shared.setup, cfg);
    if (!r.similarity) return {false, "mutant run reported no similarity"};
    worst_g = std::max(worst_g, *r.similarity);
    const hf::BinaryField b = hf::binarize(r.physical);
    int diff = 0;
    for (std::size_t e = 0; e < b.values.size(); ++e) diff += b.values[e] != ref_bin.values[e];
    least_diff = std::min(least_diff, static_cast<double>(diff) / static_cast<double>(b.values.size()));
  }
  return {worst_g <= 0.5 + 1e-3 && least_diff >= 0.10,
          fmt::format("max similarity {:.4f} (limit 0.501), min binarized difference {:.1f}% (limit 10%), 3 mutants",
                      worst_g, 100 * least_diff)};
}

// ---------------------------------------------------------------- 6, 7

Outcome vae_gradients() {
  const vae::VaeShape shape{2, 4, 4, 8, 2};
  vae::VaeModel m = vae::VaeModel::initialized(shape, 31);
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(-0.2, 0.2), px(0.05, 0.95);
  for (int k = 0; k < 4; ++k) {
    const vae::LayerView l = m.layer(k);
    for (int i = 0; i < l.rows; ++i) l.b[i] = u(rng);
  }
  vae::MultiChannelImage x(2, 4, 4);
  for (double& v : x.pixels) v = px(rng);
  const std::vector<double> eps{0.3, -0.7};
  const double w_kl = 0.05;
  vae::VaeModel g(shape);
  vae::backward(m, x, eps, w_kl, g);
  const double step = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < m.parameters().size(); ++i) {
    const double p0 = m.parameters()[i];
    m.parameters()[i] = p0 + step;
    const double lp = vae::vae_loss(m, x, eps, w_kl).total;
    m.parameters()[i] = p0 - step;
    const double lm = vae::vae_loss(m, x, eps, w_kl).total;
    m.parameters()[i] = p0;
    const double fd = (lp - lm) / (2 * step);
    const double a = g.parameters()[i];
    worst = std::max(worst, std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6}));
  }
  return {worst <= 1e-4, fmt::format("max rel. error {:.2e} over {} parameters (limit 1e-4)", worst,
                                     m.parameters().size())};
}

// Median over independent initialization, training and sampling seeds.
Outcome vae_cross_channel() {
  const vae::VaeShape shape{2, 16, 16, 512, 16};
  constexpr int kRepeats = 5;
  std::vector<double> rho[2];
  std::string values[2];
  int k = 0;
  for (auto coupling : {testing::ToyCoupling::proportional, testing::ToyCoupling::inverse}) {
    const auto data = testing::toy_dataset(coupling);
    for (int r = 1; r <= kRepeats; ++r) {
      vae::TrainConfig cfg;
      cfg.seed = 100 + static_cast<std::uint64_t>(r);
      const vae::TrainResult t = vae::train(data, cfg, vae::VaeModel::initialized(shape, r));
      rho[k].push_back(testing::decoded_rank_correlation(vae::generate(t.model, 256, 200 + r)));
      values[k] += fmt::format("{}{:+.3f}", r == 1 ? "" : " ", rho[k].back());
    }
    std::sort(rho[k].begin(), rho[k].end());
    ++k;
  }
  const double prop = rho[0][kRepeats / 2], inv = rho[1][kRepeats / 2];
  return {prop >= 0.6 && inv <= -0.6,
          fmt::format("median Spearman proportional {:+.3f} [{}] (limit >= +0.6), inverse {:+.3f} [{}] (limit <= -0.6)",
                      prop, values[0], inv, values[1])};
}

// ---------------------------------------------------------------- 8

std::vector<moea::ObjectivePoint> random_points(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<moea::ObjectivePoint> pts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pts[i] = {{u(rng), u(rng)}, i};
  return pts;
}

// Peel maximal non-dominated sets with pairwise scans.
std::vector<std::set<int>> brute_fronts(const std::vector<moea::ObjectivePoint>& pts) {
  auto dom = [](const moea::ObjectivePoint& a, const moea::ObjectivePoint& b) {
    return a.j[0] <= b.j[0] && a.j[1] <= b.j[1] && (a.j[0] < b.j[0] || a.j[1] < b.j[1]);
  };
  std::set<int> left;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) left.insert(i);
  std::vector<std::set<int>> fronts;
  while (!left.empty()) {
    std::set<int> f;
    for (int p : left) {
      bool d = false;
      for (int q : left) d = d || dom(pts[q], pts[p]);
      if (!d) f.insert(p);
    }
    for (int p : f) left.erase(p);
    fronts.push_back(f);
  }
  return fronts;
}

double monte_carlo_hv(const std::vector<moea::ObjectivePoint>& pts, std::array<double, 2> r, long samples,
                      std::mt19937_64& rng) {
  double lo0 = r[0], lo1 = r[1];
  for (const auto& p : pts) {
    lo0 = std::min(lo0, p.j[0]);
    lo1 = std::min(lo1, p.j[1]);
  }
  std::uniform_real_distribution<double> u0(lo0, r[0]), u1(lo1, r[1]);
  long hits = 0;
  for (long s = 0; s < samples; ++s) {
    const double x = u0(rng), y = u1(rng);
    for (const auto& p : pts) {
      if (p.j[0] <= x && p.j[1] <= y) {
        ++hits;
        break;
      }
    }
  }
  return (r[0] - lo0) * (r[1] - lo1) * static_cast<double>(hits) / static_cast<double>(samples);
}

Outcome moea_oracles() {
  std::mt19937_64 rng(8);
  int sort_mismatch = 0;
  for (int trial = 0; trial < 200; ++trial) {
    auto pts = random_points(64, rng);
    if (trial % 4 == 0) {
      for (auto& p : pts) {
        p.j[0] = std::round(p.j[0] * 6);
        p.j[1] = std::round(p.j[1] * 6);
      }
    }
    const auto got = moea::non_dominated_sort(pts);
    const auto want = brute_fronts(pts);
    bool same = got.size() == want.size();
    for (std::size_t k = 0; same && k < got.size(); ++k) same = std::set<int>(got[k].begin(), got[k].end()) == want[k];
    sort_mismatch += !same;
  }
  double worst_hv = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto pts = random_points(20, rng);
    const std::array<double, 2> ref{1.1, 1.1};
    const double hv = moea::hypervolume_2d(pts, ref);
    const double mc = monte_carlo_hv(pts, ref, 10'000'000, rng);
    worst_hv = std::max(worst_hv, std::abs(hv - mc) / mc);
  }
  int lhs_bad = 0;
  for (int n : {1, 7, 16, 100}) {
    const std::vector<std::pair<double, double>> box{{0.2, 0.8}, {0.01, 0.1}, {-3.0, 5.0}};
    const auto s = moea::latin_hypercube(n, box, 100 + static_cast<std::uint64_t>(n));
    for (std::size_t d = 0; d < box.size(); ++d) {
      std::vector<int> hist(static_cast<std::size_t>(n), 0);
      for (const auto& p : s) {
        const double t = (p[d] - box[d].first) / (box[d].second - box[d].first);
        const int bin = static_cast<int>(std::floor(t * n));
        if (bin < 0 || bin >= n) {
          ++lhs_bad;
        } else {
          ++hist[static_cast<std::size_t>(bin)];
        }
      }
      for (int c : hist) lhs_bad += c != 1;
    }
  }
  return {sort_mismatch == 0 && worst_hv <= 0.01 && lhs_bad == 0,
          fmt::format("sort mismatches {}/200, HV max rel. deviation {:.2e} (limit 1e-2), LHS stratum errors {}",
                      sort_mismatch, worst_hv, lhs_bad)};
}

// ---------------------------------------------------------------- 9, 10

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

struct DeskShared {
  std::optional<pipeline::RunState> state;
};

Outcome desk_run(DeskShared& shared) {
  pipeline::RunConfig cfg = pipeline::load_config(MFTD_SOURCE_DIR "/configs/desk.cfg");
  cfg.seed = 7;
  const fs::path root = fs::temp_directory_path() / "mftd_acceptance";
  fs::remove_all(root);
  const fs::path a = root / "a", b = root / "b";
  const pipeline::RunState sa = pipeline::run_mftd(cfg, a.string());
  pipeline::export_artifacts(sa, a.string());
  const pipeline::RunState sb = pipeline::run_mftd(cfg, b.string());
  pipeline::export_artifacts(sb, b.string());
  shared.state = sa;

  bool monotone = !sa.hv_history.empty();
  for (std::size_t i = 1; i < sa.hv_history.size(); ++i) monotone = monotone && sa.hv_history[i] >= sa.hv_history[i - 1];
  const bool grew = !sa.hv_history.empty() && sa.hv_history.back() >= sa.hv_history.front();

  int missing = 0;
  for (const char* f : {"pareto.csv", "hv_history.csv", "evaluations.csv", "manifest.json", "state.json"}) {
    missing += !fs::exists(a / f);
  }
  for (const auto& s : sa.archive) {
    missing += !fs::exists(a / fmt::format("images/density_{:05d}.pgm", s.id));
    missing += !fs::exists(a / fmt::format("images/hf_{:05d}.pgm", s.id));
  }
  int files = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    const fs::path rel = fs::relative(e.path(), a);
    differing += !fs::exists(b / rel) || slurp(e.path()) != slurp(b / rel);
  }
  int files_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(b)) files_b += e.is_regular_file();
  const bool reproducible = differing == 0 && files == files_b;

  return {monotone && grew && missing == 0 && reproducible,
          fmt::format("{} iterations ({}), HV {:.4g} -> {:.4g}, monotone {}, {} files, {} missing, "
                      "{} differing between two runs",
                      sa.hv_history.size(), sa.stop_reason, sa.hv_history.empty() ? 0.0 : sa.hv_history.front(),
                      sa.hv_history.empty() ? 0.0 : sa.hv_history.back(), monotone ? "yes" : "no", files, missing,
                      differing)};
}

Outcome thickness_exploration(const DeskShared& shared) {
  if (!shared.state) return {false, "no desk run available"};
  const auto& s = *shared.state;
  std::set<double> hs;
  for (int id : pipeline::pareto_front_ids(s)) {
    for (const auto& x : s.archive) {
      if (x.id == id) hs.insert(x.h);
    }
  }
  const double span = hs.empty() ? 0.0 : (*hs.rbegin() - *hs.begin()) / (s.config.h_max - s.config.h_min);
  return {hs.size() >= 3 && span >= 0.5,
          fmt::format("{} distinct h on the Pareto front spanning {:.1f}% of [h_min, h_max] (limits 3, 50%)",
                      hs.size(), 100 * span)};
}

// ---------------------------------------------------------------- 11

double gradient_energy(const mapping::SurfacePatchMesh& m, const mapping::UvField& uv) {
  double e = 0.0;
  for (const auto& t : mapping::triangulate(m)) {
    const Eigen::Vector3d p0 = m.nodes[t[0]], e1 = m.nodes[t[1]] - p0, e2 = m.nodes[t[2]] - p0;
    Eigen::Matrix2d g;
    g << e1.dot(e1), e1.dot(e2), e1.dot(e2), e2.dot(e2);
    const double area = 0.5 * e1.cross(e2).norm();
    for (int c = 0; c < 2; ++c) {
      const Eigen::Vector2d d(uv[t[1]][c] - uv[t[0]][c], uv[t[2]][c] - uv[t[0]][c]);
      e += 0.5 * area * d.dot(g.inverse() * d);
    }
  }
  return e;
}

Outcome harmonic_map() {
  double planar_err = 0.0;
  {
    const auto m = mapping::make_grid_patch(7, 5, [](double s, double t) { return Eigen::Vector3d(s, t, 0); });
    const auto uv = mapping::harmonic_map(m);
    for (std::size_t k = 0; k < uv.size(); ++k) {
      planar_err = std::max({planar_err, std::abs(uv[k].x() - m.nodes[k].x()), std::abs(uv[k].y() - m.nodes[k].y())});
    }
  }
  {
    const Eigen::Matrix3d r = Eigen::AngleAxisd(0.4, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
    const auto m = mapping::make_grid_patch(8, 6, [&](double s, double t) {
      return Eigen::Vector3d(r * Eigen::Vector3d(2.0 * s, t, 0.0));
    });
    const auto uv = mapping::harmonic_map(m);
    for (int j = 0; j <= 6; ++j) {
      for (int i = 0; i <= 8; ++i) {
        const auto& p = uv[static_cast<std::size_t>(j * 9 + i)];
        planar_err = std::max({planar_err, std::abs(p.x() - i / 8.0), std::abs(p.y() - j / 6.0)});
      }
    }
  }
  const auto m = mapping::make_grid_patch(12, 10, [](double s, double t) {
    const double a = 0.5 * std::numbers::pi * s;
    return Eigen::Vector3d(std::cos(a), std::sin(a), 1.5 * t);
  });
  const auto uv = mapping::harmonic_map(m);
  std::vector<std::uint8_t> fixed(m.nodes.size(), 0);
  for (const auto& line : m.boundary) {
    for (int v : line) fixed[static_cast<std::size_t>(v)] = 1;
  }
  const double e0 = gradient_energy(m, uv);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 0.02);
  int lower = 0;
  double min_gap = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 100; ++trial) {
    mapping::UvField p = uv;
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (!fixed[k]) p[k] += Eigen::Vector2d(noise(rng), noise(rng));
    }
    const double e = gradient_energy(m, p);
    lower += e < e0;
    min_gap = std::min(min_gap, e - e0);
  }
  return {planar_err <= 1e-10 && lower == 0,
          fmt::format("planar max error {:.2e} (limit 1e-10), {} of 100 perturbations lower energy, min increase {:.2e}",
                      planar_err, lower, min_gap)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  LfShared lf;
  DeskShared desk;
  const std::vector<Criterion> criteria{
      {1, "FEM correctness", 5, fem_correctness},
      {2, "sensitivity fidelity", 60, sensitivity_fidelity},
      {3, "p-norm sandwich", 5, pnorm_sandwich},
      {4, "LF optimizer", 120, [&] { return lf_optimizer(lf); }},
      {5, "mutation contract", 120, [&] { return mutation_contract(lf); }},
      {6, "VAE gradients", 30, vae_gradients},
      {7, "VAE cross-channel learning", 600, vae_cross_channel},
      {8, "MOEA oracles", 120, moea_oracles},
      {9, "desk run", 1800, [&] { return desk_run(desk); }},
      {10, "thickness exploration", 5, [&] { return thickness_exploration(desk); }},
      {11, "harmonic map", 30, harmonic_map},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("criterion %2d %s: %s  %s  [%.2f s, budget %.0f s%s]\n", c.id, c.name, pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs, c.budget_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
