#include "mftd/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "mftd/cantilever.hpp"
#include "mftd/error.hpp"
#include "mftd/mapping.hpp"
#include "mftd/mcvae.hpp"
#include "mftd/moea.hpp"

namespace mftd::pipeline {

namespace {

enum Stream : std::uint64_t {
  kSeedLhs = 1,
  kVaeInit = 2,
  kVaeTrain = 3,
  kVaeGenerate = 4,
  kMutationRefs = 5,
  kMutationLhs = 6,
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

CantileverSetup cantilever_setup(const RunConfig& c) {
  CantileverSetup s;
  s.nx = c.nx;
  s.ny = c.ny;
  s.load_fraction = c.load_fraction;
  return s;
}

topopt::LfConfig lf_config(const RunConfig& c, double v_max) {
  topopt::LfConfig lf = topopt::LfConfig::defaults(c.effective_lf_objective());
  lf.volume_fraction = v_max;
  lf.filter_radius = c.filter_radius;
  if (c.lf_iterations > 0) lf.max_iterations = c.lf_iterations;
  return lf;
}

hf::HfEvaluator make_evaluator(const RunConfig& c) {
  hf::HfSetup s;
  s.h_min = c.h_min;
  s.h_max = c.h_max;
  s.skin_ratio = c.skin_ratio;
  return hf::HfEvaluator(make_cantilever(cantilever_setup(c)), s);
}

std::vector<moea::ObjectivePoint> objective_points(const std::vector<Sample>& samples) {
  std::vector<moea::ObjectivePoint> pts;
  pts.reserve(samples.size());
  for (const auto& s : samples) pts.push_back({{s.j1, s.j2}, s.id});
  return pts;
}

void log_event(RunState& state, std::string msg) {
  spdlog::info("{}", msg);
  state.events.push_back(std::move(msg));
}

// LF runs for a list of (V_max, h) pairs; a failed run leaves nullopt.
std::vector<std::optional<Sample>> lf_batch(const RunConfig& c, const std::vector<std::vector<double>>& params,
                                            const std::vector<const DensityField*>& references) {
  const LoadCase lc = make_cantilever(cantilever_setup(c));
  std::vector<std::optional<Sample>> out(params.size());
  parallel_for(static_cast<int>(params.size()), c.effective_threads(), [&](int k) {
    topopt::LfConfig cfg = lf_config(c, params[k][0]);
    if (references[k]) cfg.mutation = topopt::MutationConstraint{references[k]->values, c.g_mut_max};
    try {
      const topopt::LfResult r = topopt::run_lf_optimization(topopt::LfModel(lc, cfg));
      Sample s;
      s.density = r.physical;
      s.h = params[k][1];
      out[k] = std::move(s);
    } catch (const NumericalError& e) {
      spdlog::warn("LF run {} failed: {}", k, e.what());
    }
  });
  return out;
}

}  // namespace

const char* to_string(Origin o) {
  switch (o) {
    case Origin::seed: return "seed";
    case Origin::vae: return "vae";
    case Origin::mutation: return "mutation";
  }
  return "?";
}

Origin origin_from_string(const std::string& s) {
  if (s == "seed") return Origin::seed;
  if (s == "vae") return Origin::vae;
  if (s == "mutation") return Origin::mutation;
  throw ConfigError("unknown sample origin '" + s + "'");
}

std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t stream, std::uint64_t iteration) {
  return splitmix64(splitmix64(splitmix64(run_seed) ^ stream) ^ iteration);
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  threads = std::clamp(threads, 1, n);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<Sample> seed_initial_population(const RunConfig& config, int first_id) {
  config.validate();
  const std::vector<std::pair<double, double>> box{{config.l_min, config.l_max}, {config.h_min, config.h_max}};
  const auto params = moea::latin_hypercube(config.n_lf_sd, box, derive_seed(config.seed, kSeedLhs, 0));
  const auto runs = lf_batch(config, params, std::vector<const DensityField*>(params.size(), nullptr));
  std::vector<Sample> out;
  int id = first_id;
  for (const auto& r : runs) {
    if (!r) continue;
    out.push_back(*r);
    out.back().id = id++;
    out.back().origin = Origin::seed;
  }
  const std::size_t failed = runs.size() - out.size();
  if (2 * failed > runs.size()) {
    throw NumericalError(fmt::format("seeding: {} of {} LF runs failed", failed, runs.size()));
  }
  return out;
}

RunState initial_state(const RunConfig& config) {
  RunState s;
  s.config = config;
  s.pending = seed_initial_population(config, 0);
  s.next_id = static_cast<int>(s.pending.size());
  log_event(s, fmt::format("seeded {} LF designs", s.pending.size()));
  return s;
}

std::vector<int> pareto_front_ids(const RunState& state) {
  const auto pts = objective_points(state.archive);
  std::vector<int> ids;
  if (pts.empty()) return ids;
  const auto fronts = moea::non_dominated_sort(pts);
  for (int k : fronts.front()) ids.push_back(state.archive[k].id);
  return ids;
}

double archive_hypervolume(const RunState& state) {
  if (!state.reference) return 0.0;
  return moea::hypervolume_2d(objective_points(state.archive), *state.reference);
}

namespace {

void evaluate_pending(RunState& state) {
  const RunConfig& c = state.config;
  const hf::HfEvaluator evaluator = make_evaluator(c);
  std::vector<hf::HfObjectives> res(state.pending.size());
  parallel_for(static_cast<int>(res.size()), c.effective_threads(), [&](int k) {
    res[k] = evaluator.evaluate(state.pending[k].density, state.pending[k].h, c.mode);
  });
  int feasible = 0;
  for (std::size_t k = 0; k < res.size(); ++k) {
    Sample& s = state.pending[k];
    s.iteration = state.iteration;
    s.j1 = res[k].j1;
    s.j2 = res[k].j2;
    state.evaluations.push_back({state.iteration, s.id, s.origin, s.j1, s.j2, s.h, res[k].feasible, res[k].diagnostic});
    if (res[k].feasible) {
      state.archive.push_back(std::move(s));
      ++feasible;
    }
  }
  log_event(state, fmt::format("iteration {}: evaluated {}, feasible {}", state.iteration, res.size(), feasible));
  state.pending.clear();
}

void select_archive(RunState& state) {
  std::sort(state.archive.begin(), state.archive.end(), [](const Sample& a, const Sample& b) { return a.id < b.id; });
  const auto pts = objective_points(state.archive);
  const int target = state.config.effective_min_offspring();
  const auto keep = moea::select(pts, target, target);
  std::vector<Sample> kept;
  kept.reserve(keep.size());
  for (int k : keep) kept.push_back(std::move(state.archive[k]));
  state.archive = std::move(kept);
}

std::vector<Sample> crossover(RunState& state, const std::string& out_dir) {
  const RunConfig& c = state.config;
  const int i = state.iteration;
  const double r_cells = c.effective_smooth_radius() * c.nx;
  std::vector<vae::MultiChannelImage> images;
  std::vector<double> hs;
  for (const auto& s : state.archive) {
    // The production domain is already the unit square, so the design
    // domain map is the identity and only the smoothing step applies.
    const DensityField smooth = mapping::helmholtz_smooth(s.density, r_cells);
    images.push_back(vae::make_sample_image(smooth, s.h, c.h_min, c.h_max));
    hs.push_back(s.h);
  }
  std::vector<vae::MultiChannelImage> data;
  for (std::size_t k : vae::oversample_indices(hs, c.oversample_bins, c.h_min, c.h_max)) data.push_back(images[k]);

  const vae::VaeShape shape{2, c.ny, c.nx, c.vae_hidden, c.vae_latent};
  vae::TrainConfig tc;
  tc.max_epochs = c.vae_epochs;
  tc.learning_rate = c.vae_lr;
  tc.batch_size = c.vae_batch;
  tc.kl_weight = c.vae_kl_weight;
  tc.patience = c.vae_patience;
  tc.seed = derive_seed(c.seed, kVaeTrain, i);
  const vae::TrainResult tr = vae::train(data, tc, vae::VaeModel::initialized(shape, derive_seed(c.seed, kVaeInit, i)));
  log_event(state, fmt::format("iteration {}: VAE trained on {} images, {} epochs, best loss {} at epoch {}", i,
                               data.size(), tr.loss_curve.size(), tr.loss_curve[tr.best_epoch], tr.best_epoch));
  if (!out_dir.empty()) {
    const auto dir = std::filesystem::path(out_dir) / "vae";
    std::filesystem::create_directories(dir);
    std::ofstream f(dir / fmt::format("curve_{:03d}.csv", i), std::ios::binary);
    if (!f) throw IoError("cannot write VAE training curve under '" + dir.string() + "'");
    f << vae::training_curve_csv(tr.loss_curve);
  }

  std::vector<Sample> out;
  for (const auto& img : vae::generate(tr.model, c.n_vae, derive_seed(c.seed, kVaeGenerate, i))) {
    Sample s;
    s.id = state.next_id++;
    s.origin = Origin::vae;
    s.density = vae::channel_field(img, 0);
    s.h = vae::extract_scalar_hf(img, c.h_min, c.h_max).h;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> mutate(RunState& state) {
  const RunConfig& c = state.config;
  const int i = state.iteration;
  const std::vector<int> front = pareto_front_ids(state);
  std::vector<const Sample*> pool;
  for (int id : front) {
    pool.push_back(&*std::find_if(state.archive.begin(), state.archive.end(),
                                  [id](const Sample& s) { return s.id == id; }));
  }
  std::mt19937_64 rng(derive_seed(c.seed, kMutationRefs, i));
  std::shuffle(pool.begin(), pool.end(), rng);
  const std::vector<std::pair<double, double>> box{{c.l_min, c.l_max}, {c.h_min, c.h_max}};
  const auto seeds = moea::latin_hypercube(c.n_mut_sd, box, derive_seed(c.seed, kMutationLhs, i));

  std::vector<std::vector<double>> params;
  std::vector<const DensityField*> refs;
  for (int n = 0; n < c.n_mut_sd; ++n) {
    for (int m = 0; m < c.n_mut; ++m) {
      params.push_back(seeds[n]);
      refs.push_back(&pool[m % pool.size()]->density);
    }
  }
  const auto runs = lf_batch(c, params, refs);
  std::vector<Sample> out;
  for (const auto& r : runs) {
    if (!r) continue;
    out.push_back(*r);
    out.back().id = state.next_id++;
    out.back().origin = Origin::mutation;
  }
  log_event(state, fmt::format("iteration {}: mutation produced {} of {} designs", i, out.size(), runs.size()));
  return out;
}

}  // namespace

void run_iteration(RunState& state, const std::string& out_dir) {
  if (state.finished) return;
  const RunConfig& c = state.config;
  const int i = state.iteration;
  evaluate_pending(state);
  if (state.archive.empty()) throw NumericalError(fmt::format("iteration {}: no feasible design", i));
  select_archive(state);

  if (!state.reference) {
    if (c.r_hv) {
      state.reference = c.r_hv;
    } else {
      std::array<double, 2> worst{0.0, 0.0};
      for (int id : pareto_front_ids(state)) {
        const auto& s = *std::find_if(state.archive.begin(), state.archive.end(),
                                      [id](const Sample& x) { return x.id == id; });
        worst[0] = std::max(worst[0], s.j1);
        worst[1] = std::max(worst[1], s.j2);
      }
      state.reference = std::array<double, 2>{c.r_hv_margin * worst[0], c.r_hv_margin * worst[1]};
    }
    log_event(state, fmt::format("hypervolume reference ({}, {})", (*state.reference)[0], (*state.reference)[1]));
  }
  state.hv_history.push_back(archive_hypervolume(state));
  log_event(state, fmt::format("iteration {}: archive {}, front {}, hv {}", i, state.archive.size(),
                               pareto_front_ids(state).size(), state.hv_history.back()));

  if (state.hv_history.size() > static_cast<std::size_t>(c.hv_window) &&
      moea::converged(state.hv_history, c.eps_hv, c.hv_window)) {
    state.finished = true;
    state.stop_reason = "converged";
  } else if (i >= c.n_max) {
    state.finished = true;
    state.stop_reason = "max_iterations";
  }
  if (state.finished) {
    log_event(state, fmt::format("stopped at iteration {}: {}", i, state.stop_reason));
    return;
  }

  std::vector<Sample> next = crossover(state, out_dir);
  if (i % c.n_mut_int == 0) {
    std::vector<Sample> mutants = mutate(state);
    std::move(mutants.begin(), mutants.end(), std::back_inserter(next));
  }
  state.pending = std::move(next);
  state.iteration = i + 1;
}

RunState run_mftd(const RunConfig& config, const std::string& out_dir, std::optional<RunState> start) {
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  const std::string checkpoint = out_dir.empty() ? "" : (std::filesystem::path(out_dir) / kStateFile).string();
  RunState state = start ? std::move(*start) : initial_state(config);
  while (!state.finished) {
    try {
      run_iteration(state, out_dir);
    } catch (const std::exception& e) {
      state.events.push_back(fmt::format("iteration {} failed: {}", state.iteration, e.what()));
      if (!checkpoint.empty()) {
        try {
          save_state(checkpoint, state);
        } catch (const std::exception& io) {
          spdlog::error("could not write checkpoint: {}", io.what());
        }
      }
      throw;
    }
    if (!checkpoint.empty()) save_state(checkpoint, state);
  }
  return state;
}

}  // namespace mftd::pipeline
