#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mftd/error.hpp"
#include "mftd/pipeline.hpp"

namespace mftd::pipeline {

namespace {

using nlohmann::json;

constexpr int kStateVersion = 1;

// JSON has no infinity; non-finite objectives are stored as null.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number_or_inf(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

json sample_json(const Sample& s) {
  return {{"id", s.id},
          {"iteration", s.iteration},
          {"origin", to_string(s.origin)},
          {"h", s.h},
          {"j1", number_or_null(s.j1)},
          {"j2", number_or_null(s.j2)},
          {"nx", s.density.nx},
          {"ny", s.density.ny},
          {"density", s.density.values}};
}

Sample sample_from(const json& j) {
  Sample s;
  s.id = j.at("id").get<int>();
  s.iteration = j.at("iteration").get<int>();
  s.origin = origin_from_string(j.at("origin").get<std::string>());
  s.h = j.at("h").get<double>();
  s.j1 = number_or_inf(j.at("j1"));
  s.j2 = number_or_inf(j.at("j2"));
  s.density = DensityField(j.at("nx").get<int>(), j.at("ny").get<int>(), j.at("density").get<std::vector<double>>());
  if (s.density.size() != static_cast<std::size_t>(s.density.nx) * s.density.ny) {
    throw ConfigError("state: density size does not match its grid");
  }
  return s;
}

}  // namespace

void save_state(std::ostream& out, const RunState& state) {
  json cfg = json::object();
  for (const auto& [k, v] : config_entries(state.config)) cfg[k] = v;
  json archive = json::array(), pending = json::array(), evals = json::array();
  for (const auto& s : state.archive) archive.push_back(sample_json(s));
  for (const auto& s : state.pending) pending.push_back(sample_json(s));
  for (const auto& e : state.evaluations) {
    evals.push_back({{"iteration", e.iteration},
                     {"id", e.id},
                     {"origin", to_string(e.origin)},
                     {"j1", number_or_null(e.j1)},
                     {"j2", number_or_null(e.j2)},
                     {"h", e.h},
                     {"feasible", e.feasible},
                     {"diagnostic", e.diagnostic}});
  }
  json j = {{"format", "mftd-state"},
            {"version", kStateVersion},
            {"config", cfg},
            {"iteration", state.iteration},
            {"next_id", state.next_id},
            {"archive", archive},
            {"pending", pending},
            {"hv_history", state.hv_history},
            {"reference", state.reference ? json(*state.reference) : json(nullptr)},
            {"evaluations", evals},
            {"events", state.events},
            {"finished", state.finished},
            {"stop_reason", state.stop_reason}};
  out << j.dump(1) << '\n';
}

void save_state(const std::string& path, const RunState& state) {
  // Write then rename so an interrupted save keeps the previous checkpoint.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw IoError("cannot write checkpoint '" + tmp + "'");
    save_state(f, state);
    if (!f) throw IoError("write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IoError("cannot move checkpoint to '" + path + "'");
}

RunState load_state(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("state: invalid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "mftd-state" || j.at("version") != kStateVersion) {
      throw ConfigError("state: unsupported checkpoint format");
    }
    RunState s;
    std::ostringstream cfg;
    for (const auto& [k, v] : j.at("config").items()) cfg << k << " = " << v.get<std::string>() << '\n';
    std::istringstream cfg_in(cfg.str());
    s.config = parse_config(cfg_in);
    s.iteration = j.at("iteration").get<int>();
    s.next_id = j.at("next_id").get<int>();
    for (const auto& x : j.at("archive")) s.archive.push_back(sample_from(x));
    for (const auto& x : j.at("pending")) s.pending.push_back(sample_from(x));
    s.hv_history = j.at("hv_history").get<std::vector<double>>();
    if (!j.at("reference").is_null()) s.reference = j.at("reference").get<std::array<double, 2>>();
    for (const auto& e : j.at("evaluations")) {
      s.evaluations.push_back({e.at("iteration").get<int>(), e.at("id").get<int>(),
                               origin_from_string(e.at("origin").get<std::string>()), number_or_inf(e.at("j1")),
                               number_or_inf(e.at("j2")), e.at("h").get<double>(), e.at("feasible").get<bool>(),
                               e.at("diagnostic").get<std::string>()});
    }
    s.events = j.at("events").get<std::vector<std::string>>();
    s.finished = j.at("finished").get<bool>();
    s.stop_reason = j.at("stop_reason").get<std::string>();
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("state: malformed checkpoint: ") + e.what());
  }
}

RunState load_state(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint '" + path + "'");
  return load_state(f);
}

}  // namespace mftd::pipeline
