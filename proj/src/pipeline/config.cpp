#include <algorithm>
#include <charconv>
#include <functional>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "mftd/error.hpp"
#include "mftd/pipeline.hpp"

namespace mftd::pipeline {

topopt::Objective RunConfig::effective_lf_objective() const {
  if (lf_objective) return *lf_objective;
  return mode == hf::Mode::stiffness ? topopt::Objective::compliance : topopt::Objective::pnorm_stress;
}

int RunConfig::effective_threads() const {
  if (threads > 0) return threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

void RunConfig::validate() const {
  auto positive = [](const char* key, double v) {
    if (!(v > 0)) throw ConfigError(fmt::format("config: '{}' must be positive", key));
  };
  positive("nx", nx);
  positive("ny", ny);
  positive("n_lf_sd", n_lf_sd);
  positive("n_max", n_max);
  positive("n_mut_sd", n_mut_sd);
  positive("n_mut", n_mut);
  positive("n_mut_int", n_mut_int);
  positive("eps_hv", eps_hv);
  positive("hv_window", hv_window);
  positive("n_vae", n_vae);
  positive("filter_radius", filter_radius);
  positive("skin_ratio", skin_ratio);
  positive("load_fraction", load_fraction);
  positive("vae_hidden", vae_hidden);
  positive("vae_latent", vae_latent);
  positive("vae_epochs", vae_epochs);
  positive("vae_lr", vae_lr);
  positive("vae_batch", vae_batch);
  positive("vae_patience", vae_patience);
  positive("oversample_bins", oversample_bins);
  positive("r_hv_margin", r_hv_margin);
  if (channels != 2) throw ConfigError("config: 'channels' must be 2 (density and thickness)");
  if (min_offspring < 0) throw ConfigError("config: 'min_offspring' must be >= 0");
  if (lf_iterations < 0) throw ConfigError("config: 'lf_iterations' must be >= 0");
  if (threads < 0) throw ConfigError("config: 'threads' must be >= 0");
  if (vae_kl_weight < 0) throw ConfigError("config: 'vae_kl_weight' must be >= 0");
  if (vae_patience > vae_epochs) throw ConfigError("config: 'vae_patience' exceeds 'vae_epochs'");
  if (!(l_min > 0 && l_min <= l_max && l_max < 1)) {
    throw ConfigError("config: need 0 < l_min <= l_max < 1");
  }
  if (!(h_min > 0 && h_min < h_max)) throw ConfigError("config: need 0 < h_min < h_max");
  if (!(g_mut_max > 0 && g_mut_max <= 1)) throw ConfigError("config: 'g_mut_max' must lie in (0, 1]");
  if (load_fraction > 1) throw ConfigError("config: 'load_fraction' must be <= 1");
  if (r_hv && !((*r_hv)[0] > 0 && (*r_hv)[1] > 0)) throw ConfigError("config: 'r_hv' components must be positive");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) {
    throw ConfigError(fmt::format("config: cannot parse '{}' for '{}'", v, key));
  }
  return out;
}

std::string fmt_double(double v) { return fmt::format("{}", v); }

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> parse;
  std::function<std::string(const RunConfig&)> show;
};

template <typename T>
Field number(const char* key, T RunConfig::*member) {
  return {key,
          [key, member](RunConfig& c, const std::string& v) { c.*member = parse_number<T>(key, v); },
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return fmt_double(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"mode",
       [](RunConfig& c, const std::string& v) {
         if (v != "stiffness" && v != "stress") throw ConfigError("config: 'mode' must be stiffness or stress");
         c.mode = hf::mode_from_string(v);
       },
       [](const RunConfig& c) { return std::string(hf::to_string(c.mode)); }},
      {"lf_objective",
       [](RunConfig& c, const std::string& v) {
         if (v == "auto") {
           c.lf_objective.reset();
         } else if (v == "compliance" || v == "pnorm_stress") {
           c.lf_objective = topopt::objective_from_string(v);
         } else {
           throw ConfigError("config: 'lf_objective' must be auto, compliance or pnorm_stress");
         }
       },
       [](const RunConfig& c) {
         return c.lf_objective ? std::string(topopt::to_string(*c.lf_objective)) : std::string("auto");
       }},
      number("nx", &RunConfig::nx),
      number("ny", &RunConfig::ny),
      number("n_lf_sd", &RunConfig::n_lf_sd),
      number("channels", &RunConfig::channels),
      number("n_max", &RunConfig::n_max),
      number("n_mut_sd", &RunConfig::n_mut_sd),
      number("n_mut", &RunConfig::n_mut),
      number("n_mut_int", &RunConfig::n_mut_int),
      number("eps_hv", &RunConfig::eps_hv),
      number("hv_window", &RunConfig::hv_window),
      number("n_vae", &RunConfig::n_vae),
      number("min_offspring", &RunConfig::min_offspring),
      number("l_min", &RunConfig::l_min),
      number("l_max", &RunConfig::l_max),
      number("h_min", &RunConfig::h_min),
      number("h_max", &RunConfig::h_max),
      {"r_hv",
       [](RunConfig& c, const std::string& v) {
         if (v == "auto") {
           c.r_hv.reset();
           return;
         }
         const auto comma = v.find(',');
         if (comma == std::string::npos) throw ConfigError("config: 'r_hv' must be auto or 'j1,j2'");
         c.r_hv = std::array<double, 2>{parse_number<double>("r_hv", trim(v.substr(0, comma))),
                                        parse_number<double>("r_hv", trim(v.substr(comma + 1)))};
       },
       [](const RunConfig& c) {
         return c.r_hv ? fmt_double((*c.r_hv)[0]) + "," + fmt_double((*c.r_hv)[1]) : std::string("auto");
       }},
      number("r_hv_margin", &RunConfig::r_hv_margin),
      number("g_mut_max", &RunConfig::g_mut_max),
      number("filter_radius", &RunConfig::filter_radius),
      number("smooth_radius", &RunConfig::smooth_radius),
      number("lf_iterations", &RunConfig::lf_iterations),
      number("skin_ratio", &RunConfig::skin_ratio),
      number("load_fraction", &RunConfig::load_fraction),
      number("vae_hidden", &RunConfig::vae_hidden),
      number("vae_latent", &RunConfig::vae_latent),
      number("vae_epochs", &RunConfig::vae_epochs),
      number("vae_lr", &RunConfig::vae_lr),
      number("vae_batch", &RunConfig::vae_batch),
      number("vae_kl_weight", &RunConfig::vae_kl_weight),
      number("vae_patience", &RunConfig::vae_patience),
      number("oversample_bins", &RunConfig::oversample_bins),
      number("seed", &RunConfig::seed),
      number("threads", &RunConfig::threads),
  };
  return table;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig c;
  std::set<std::string> seen;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("config line {}: expected 'key = value'", line_no));
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError(fmt::format("config line {}: empty key or value", line_no));
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return key == f.key; });
    if (it == table.end()) throw ConfigError(fmt::format("config line {}: unknown key '{}'", line_no, key));
    if (!seen.insert(key).second) throw ConfigError(fmt::format("config line {}: repeated key '{}'", line_no, key));
    it->parse(c, value);
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(f);
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.show(config));
  return out;
}

std::string format_config(const RunConfig& config) {
  std::string s;
  for (const auto& [k, v] : config_entries(config)) s += k + " = " + v + "\n";
  return s;
}

}  // namespace mftd::pipeline
