#pragma once
// End-to-end multifidelity design loop: LF seeding, HF evaluation,
// elitist selection, hypervolume convergence, VAE crossover and constrained
// LF mutation, plus run configuration, checkpoints and artifact export.

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mftd/density.hpp"
#include "mftd/hf_eval.hpp"
#include "mftd/lf_topopt.hpp"

namespace mftd::pipeline {

struct RunConfig {
  hf::Mode mode = hf::Mode::stiffness;
  // LF problem used for seeding and mutation; defaults to compliance in
  // stiffness mode and p-norm stress in stress mode.
  std::optional<topopt::Objective> lf_objective;
  int nx = 64;
  int ny = 64;
  int n_lf_sd = 100;
  int channels = 2;
  int n_max = 100;
  int n_mut_sd = 5;
  int n_mut = 10;
  int n_mut_int = 5;
  double eps_hv = 1e-5;
  int hv_window = 5;
  int n_vae = 256;
  int min_offspring = 0;  // 0: same as n_lf_sd
  double l_min = 0.2;
  double l_max = 0.8;
  double h_min = 0.01;
  double h_max = 0.1;
  // Hypervolume reference; unset means r_hv_margin times the largest
  // objective values of the initial Pareto front.
  std::optional<std::array<double, 2>> r_hv;
  double r_hv_margin = 1.1;
  double g_mut_max = 0.5;
  double filter_radius = 0.03;
  double smooth_radius = -1.0;  // negative: same as filter_radius
  int lf_iterations = 0;        // 0: LF defaults per objective
  double skin_ratio = 0.1;
  double load_fraction = 0.1;
  int vae_hidden = 512;
  int vae_latent = 16;
  int vae_epochs = 300;
  double vae_lr = 1e-4;
  int vae_batch = 16;
  double vae_kl_weight = 1e-3;
  int vae_patience = 40;
  int oversample_bins = 4;
  std::uint64_t seed = 0;
  int threads = 0;  // 0: hardware concurrency

  topopt::Objective effective_lf_objective() const;
  int effective_min_offspring() const { return min_offspring > 0 ? min_offspring : n_lf_sd; }
  double effective_smooth_radius() const { return smooth_radius >= 0.0 ? smooth_radius : filter_radius; }
  int effective_threads() const;
  // Throws ConfigError naming the offending key.
  void validate() const;
};

// Flat `key = value` lines; '#' starts a comment. Unknown or repeated keys
// and unparsable values raise ConfigError.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);
// Every key with its current value, in declaration order.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config);
std::string format_config(const RunConfig& config);

enum class Origin { seed, vae, mutation };
const char* to_string(Origin o);
Origin origin_from_string(const std::string& s);

struct Sample {
  int id = 0;
  int iteration = 0;  // iteration at which it was first evaluated
  Origin origin = Origin::seed;
  DensityField density;
  double h = 0.0;
  double j1 = std::numeric_limits<double>::infinity();
  double j2 = std::numeric_limits<double>::infinity();
};

struct EvaluationRecord {
  int iteration = 0;
  int id = 0;
  Origin origin = Origin::seed;
  double j1 = 0.0;
  double j2 = 0.0;
  double h = 0.0;
  bool feasible = false;
  std::string diagnostic;
};

struct RunState {
  RunConfig config;
  int iteration = 0;  // next iteration to run
  int next_id = 0;
  std::vector<Sample> archive;  // feasible, selected
  std::vector<Sample> pending;  // evaluated at the next iteration
  std::vector<double> hv_history;
  std::optional<std::array<double, 2>> reference;
  std::vector<EvaluationRecord> evaluations;
  std::vector<std::string> events;
  bool finished = false;
  std::string stop_reason;
};

// Deterministic sub-seed for one stage and iteration of a run.
std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t stream, std::uint64_t iteration);

// Runs fn(0..n-1) on up to `threads` workers. Results must be written by
// index; the exception of the lowest failing index is rethrown.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

// LF runs over a Latin hypercube of (V_max, h); failed runs are dropped and
// more than half failing aborts with NumericalError.
std::vector<Sample> seed_initial_population(const RunConfig& config, int first_id = 0);

RunState initial_state(const RunConfig& config);

// One iteration of the loop: evaluate pending, squeeze, merge, select,
// convergence check, then (unless finished) crossover and mutation.
// Writes VAE training curves under `out_dir` when it is nonempty.
void run_iteration(RunState& state, const std::string& out_dir = "");

// Full loop from `start` (or a fresh state). With a nonempty out_dir the
// state is checkpointed after every iteration and on failure.
RunState run_mftd(const RunConfig& config, const std::string& out_dir = "",
                  std::optional<RunState> start = std::nullopt);

// Samples currently on the first front of the archive.
std::vector<int> pareto_front_ids(const RunState& state);
double archive_hypervolume(const RunState& state);

void save_state(std::ostream& out, const RunState& state);
void save_state(const std::string& path, const RunState& state);
RunState load_state(std::istream& in);
RunState load_state(const std::string& path);

inline constexpr const char* kStateFile = "state.json";

// pareto.csv, hv_history.csv, evaluations.csv, images/ and manifest.json.
void export_artifacts(const RunState& state, const std::string& out_dir);

}  // namespace mftd::pipeline
