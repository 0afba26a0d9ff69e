// Command-line front end: run, evaluate, export, lf, map.
// Exit codes: 0 success, 2 invalid input, 3 numerical failure.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "mftd/cantilever.hpp"
#include "mftd/error.hpp"
#include "mftd/hf_eval.hpp"
#include "mftd/image_io.hpp"
#include "mftd/lf_topopt.hpp"
#include "mftd/mapping.hpp"
#include "mftd/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

using namespace mftd;

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out,
            bool resume, std::optional<int> threads) {
  pipeline::RunConfig cfg = pipeline::load_config(config_path);
  if (seed) cfg.seed = *seed;
  if (threads) cfg.threads = *threads;
  cfg.validate();
  std::optional<pipeline::RunState> start;
  const auto checkpoint = std::filesystem::path(out) / pipeline::kStateFile;
  if (resume) {
    start = pipeline::load_state(checkpoint.string());
    if (pipeline::format_config(start->config) != pipeline::format_config(cfg)) {
      throw ConfigError("checkpoint '" + checkpoint.string() + "' was written with a different configuration");
    }
  }
  const pipeline::RunState state = pipeline::run_mftd(cfg, out, std::move(start));
  pipeline::export_artifacts(state, out);
  std::cout << fmt::format("stopped: {} after {} iterations; archive {}, pareto front {}, hypervolume {}\n",
                           state.stop_reason, state.hv_history.size(), state.archive.size(),
                           pipeline::pareto_front_ids(state).size(),
                           state.hv_history.empty() ? 0.0 : state.hv_history.back());
  return 0;
}

int cmd_evaluate(const std::string& image, double h, const std::string& mode, double h_min, double h_max) {
  const DensityField density = io::read_pgm(image);
  hf::HfSetup setup;
  setup.h_min = h_min;
  setup.h_max = h_max;
  setup.validate();
  if (!(h >= h_min && h <= h_max)) throw ConfigError(fmt::format("--h must lie in [{}, {}]", h_min, h_max));
  CantileverSetup cs;
  cs.nx = density.nx;
  cs.ny = density.ny;
  const hf::HfEvaluator evaluator(make_cantilever(cs), setup);
  const hf::HfObjectives r = evaluator.evaluate(density, h, hf::mode_from_string(mode));
  std::cout << fmt::format("feasible = {}\nJ1 = {}\nJ2 = {}\n", r.feasible ? "true" : "false", r.j1, r.j2);
  if (!r.feasible) std::cout << "reason = " << r.diagnostic << '\n';
  return 0;
}

int cmd_export(const std::string& state_path, const std::string& out) {
  pipeline::export_artifacts(pipeline::load_state(state_path), out);
  std::cout << "artifacts written to " << out << '\n';
  return 0;
}

int cmd_lf(double vmax, const std::string& mode, int n, double radius, int iterations, const std::string& out,
           const std::string& log) {
  topopt::Objective objective;
  if (mode == "stiffness" || mode == "compliance") {
    objective = topopt::Objective::compliance;
  } else if (mode == "stress" || mode == "pnorm_stress") {
    objective = topopt::Objective::pnorm_stress;
  } else {
    throw ConfigError("--mode must be stiffness or stress");
  }
  topopt::LfConfig cfg = topopt::LfConfig::defaults(objective);
  cfg.volume_fraction = vmax;
  cfg.filter_radius = radius;
  if (iterations > 0) cfg.max_iterations = iterations;
  CantileverSetup cs;
  cs.nx = n;
  cs.ny = n;
  const topopt::LfResult r = topopt::run_lf_optimization(cs, cfg);
  std::cout << fmt::format("objective = {}\nvolume = {}\niterations = {}\n", r.objective, r.volume, r.log.size());
  if (!out.empty()) io::write_pgm(out, r.physical);
  if (!log.empty()) {
    std::ofstream f(log, std::ios::binary);
    if (!f) throw IoError("cannot write '" + log + "'");
    f << topopt::lf_log_csv(r.log);
  }
  return 0;
}

int cmd_map(const std::string& mesh_path, const std::string& out) {
  const mapping::SurfacePatchMesh mesh = mapping::load_mesh(mesh_path);
  const mapping::UvField uv = mapping::harmonic_map(mesh);
  std::string text = "node,u,v\n";
  for (std::size_t k = 0; k < uv.size(); ++k) text += fmt::format("{},{},{}\n", k, uv[k].x(), uv[k].y());
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw IoError("cannot write '" + out + "'");
    f << text;
  }
  spdlog::info("Dirichlet energy {}", mapping::dirichlet_energy(mesh, uv));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multifidelity topology design with thickness as a design parameter"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  auto* run = app.add_subcommand("run", "Run the full design loop and export artifacts");
  std::string config_path, run_out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool resume = false;
  run->add_option("--config", config_path, "Configuration file (key = value)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Run seed (overrides the config)");
  run->add_option("--out", run_out, "Output directory")->required();
  run->add_option("--threads", threads, "Worker threads (overrides the config)");
  run->add_flag("--resume", resume, "Continue from the checkpoint in the output directory");

  auto* eval = app.add_subcommand("evaluate", "HF evaluation of one density image");
  std::string density_path, eval_mode = "stiffness";
  double h = 0.0, h_min = 0.01, h_max = 0.1;
  // "--h" would collide with the short help flag.
  eval->set_help_flag("--help", "Print this help message and exit");
  eval->add_option("--density", density_path, "PGM density image")->required();
  eval->add_option("--h", h, "Thickness")->required();
  eval->add_option("--mode", eval_mode, "stiffness or stress")->check(CLI::IsMember({"stiffness", "stress"}));
  eval->add_option("--h-min", h_min, "Smallest admissible thickness");
  eval->add_option("--h-max", h_max, "Largest admissible thickness");

  auto* exp = app.add_subcommand("export", "Write artifacts from a checkpoint");
  std::string state_path, export_out;
  exp->add_option("--state", state_path, "Checkpoint file")->required();
  exp->add_option("--out", export_out, "Output directory")->required();

  auto* lf = app.add_subcommand("lf", "Single low-fidelity optimization");
  double vmax = 0.5, radius = 0.03;
  std::string lf_mode = "stiffness", lf_out, lf_log;
  int grid = 64, iterations = 0;
  lf->add_option("--vmax", vmax, "Volume fraction bound")->required();
  lf->add_option("--mode", lf_mode, "stiffness or stress");
  lf->add_option("--grid", grid, "Elements per side")->check(CLI::PositiveNumber);
  lf->add_option("--filter-radius", radius, "Filter radius (domain is the unit square)");
  lf->add_option("--iterations", iterations, "Iteration limit (0: default)");
  lf->add_option("--out", lf_out, "Write the physical density as PGM");
  lf->add_option("--log", lf_log, "Write the iteration log as CSV");

  auto* map = app.add_subcommand("map", "Harmonic map of a surface patch onto the unit square");
  std::string mesh_path, map_out;
  map->add_option("--mesh", mesh_path, "Mesh file")->required();
  map->add_option("--out", map_out, "CSV output (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  // Logs go to stderr so stdout carries only results.
  spdlog::set_default_logger(spdlog::stderr_color_mt("mftd"));
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*run) return cmd_run(config_path, seed, run_out, resume, threads);
    if (*eval) return cmd_evaluate(density_path, h, eval_mode, h_min, h_max);
    if (*exp) return cmd_export(state_path, export_out);
    if (*lf) return cmd_lf(vmax, lf_mode, grid, radius, iterations, lf_out, lf_log);
    if (*map) return cmd_map(mesh_path, map_out);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  } catch (const IoError& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  } catch (const NumericalError& e) {
    spdlog::error("{}", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
