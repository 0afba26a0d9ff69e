#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "mftd/error.hpp"
#include "mftd/image_io.hpp"
#include "mftd/mcvae.hpp"
#include "mftd/moea.hpp"
#include "mftd/pipeline.hpp"

namespace mftd::pipeline {

namespace {

namespace fs = std::filesystem;

std::string num(double v) { return std::isfinite(v) ? fmt::format("{}", v) : std::string("inf"); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

void export_artifacts(const RunState& state, const std::string& out_dir) {
  const fs::path root(out_dir);
  std::error_code ec;
  fs::create_directories(root / "images", ec);
  if (ec) throw IoError("cannot create '" + (root / "images").string() + "': " + ec.message());

  std::vector<Sample> archive = state.archive;
  std::sort(archive.begin(), archive.end(), [](const Sample& a, const Sample& b) { return a.id < b.id; });
  std::vector<moea::ObjectivePoint> pts;
  for (const auto& s : archive) pts.push_back({{s.j1, s.j2}, s.id});
  const auto ranks = moea::front_ranks(moea::non_dominated_sort(pts), pts.size());

  std::string pareto = "id,J1,J2,h,rank\n";
  std::vector<std::string> files{"pareto.csv", "hv_history.csv", "evaluations.csv"};
  for (std::size_t k = 0; k < archive.size(); ++k) {
    const Sample& s = archive[k];
    pareto += fmt::format("{},{},{},{},{}\n", s.id, num(s.j1), num(s.j2), num(s.h), ranks[k] + 1);
  }
  write_text(root / "pareto.csv", pareto);

  std::string hv = "iteration,hv\n";
  for (std::size_t i = 0; i < state.hv_history.size(); ++i) hv += fmt::format("{},{}\n", i, num(state.hv_history[i]));
  write_text(root / "hv_history.csv", hv);

  std::string evals = "iteration,id,origin,J1,J2,h,feasible,diagnostic\n";
  for (const auto& e : state.evaluations) {
    std::string diag = e.diagnostic;
    std::replace(diag.begin(), diag.end(), ',', ';');
    evals += fmt::format("{},{},{},{},{},{},{},{}\n", e.iteration, e.id, to_string(e.origin), num(e.j1), num(e.j2),
                         num(e.h), e.feasible ? 1 : 0, diag);
  }
  write_text(root / "evaluations.csv", evals);

  for (const auto& s : archive) {
    const auto img = vae::make_sample_image(s.density, s.h, state.config.h_min, state.config.h_max);
    const std::string d = fmt::format("images/density_{:05d}.pgm", s.id);
    const std::string c = fmt::format("images/hf_{:05d}.pgm", s.id);
    io::write_pgm((root / d).string(), s.density);
    io::write_pgm((root / c).string(), vae::channel_field(img, 1));
    files.push_back(d);
    files.push_back(c);
  }

  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : config_entries(state.config)) cfg[k] = v;
  const nlohmann::json manifest = {{"tool", "mftd"},
                                   {"version", MFTD_VERSION},
                                   {"seed", state.config.seed},
                                   {"config", cfg},
                                   {"iterations", state.hv_history.size()},
                                   {"finished", state.finished},
                                   {"stop_reason", state.stop_reason},
                                   {"archive_size", archive.size()},
                                   {"pareto_size", std::count(ranks.begin(), ranks.end(), 0)},
                                   {"files", files}};
  write_text(root / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace mftd::pipeline
