#include "shaken/io.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "shaken/error.hpp"

namespace shaken {

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, std::string_view what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown " + std::string(what) + " field '" + key + "'");
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& target) {
  if (j.contains(key)) {
    try {
      target = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
  }
}

json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace

void to_json(json& j, const LatticeConfig& c) {
  j = json{{"depth_V0", c.depth_v0},
           {"basis_cutoff_nmax", c.basis_cutoff_nmax},
           {"recoil_frequency_hz", c.recoil_frequency_hz},
           {"lattice_wavelength_m", c.lattice_wavelength_m}};
}

void from_json(const json& j, LatticeConfig& c) {
  reject_unknown_keys(j, {"depth_V0", "basis_cutoff_nmax", "recoil_frequency_hz", "lattice_wavelength_m"},
                      "lattice config");
  read_if(j, "depth_V0", c.depth_v0);
  read_if(j, "basis_cutoff_nmax", c.basis_cutoff_nmax);
  read_if(j, "recoil_frequency_hz", c.recoil_frequency_hz);
  read_if(j, "lattice_wavelength_m", c.lattice_wavelength_m);
  c.validate();
}

std::string_view to_string(Envelope envelope) {
  return envelope == Envelope::none ? "none" : "smooth_window";
}

Envelope envelope_from_string(std::string_view name) {
  if (name == "none") return Envelope::none;
  if (name == "smooth_window" || name == "smooth") return Envelope::smooth_window;
  throw ConfigError("unknown envelope '" + std::string(name) + "'");
}

void to_json(json& j, const ShakingWaveform& w) {
  json comps = json::array();
  for (const auto& c : w.components) {
    comps.push_back({{"omega_wr", c.omega}, {"alpha_rad", c.alpha}, {"phase_rad", c.phase}});
  }
  j = json{{"duration_T", w.duration}, {"envelope", to_string(w.envelope)}, {"components", comps}};
}

void from_json(const json& j, ShakingWaveform& w) {
  reject_unknown_keys(j, {"duration_T", "envelope", "components"}, "waveform");
  w = ShakingWaveform{};
  read_if(j, "duration_T", w.duration);
  if (j.contains("envelope")) w.envelope = envelope_from_string(j.at("envelope").get<std::string>());
  if (j.contains("components")) {
    for (const auto& c : j.at("components")) {
      reject_unknown_keys(c, {"omega_wr", "alpha_rad", "phase_rad"}, "waveform component");
      ToneComponent tone;
      read_if(c, "omega_wr", tone.omega);
      read_if(c, "alpha_rad", tone.alpha);
      read_if(c, "phase_rad", tone.phase);
      w.components.push_back(tone);
    }
  }
  w.validate();
}

void to_json(json& j, const GaParams& p) {
  j = json{{"population_size", p.population_size},
           {"generations", p.generations},
           {"elite_count", p.elite_count},
           {"tournament_size", p.tournament_size},
           {"mutation_rate", p.mutation_rate},
           {"mutation_sigma_amplitude", p.mutation_sigma_amplitude},
           {"mutation_sigma_phase", p.mutation_sigma_phase},
           {"crossover_rate", p.crossover_rate},
           {"alpha_max", p.alpha_max},
           {"initial_alpha_max", p.initial_alpha_max},
           {"rng_seed", p.rng_seed},
           {"duration_wr", p.duration_wr},
           {"dt", p.dt},
           {"grid_points", p.grid_points},
           {"stop_error_pct", p.stop_error_pct},
           {"jobs", p.jobs}};
}

void from_json(const json& j, GaParams& p) {
  reject_unknown_keys(j,
                      {"population_size", "generations", "elite_count", "tournament_size", "mutation_rate",
                       "mutation_sigma_amplitude", "mutation_sigma_phase", "crossover_rate", "alpha_max",
                       "initial_alpha_max", "rng_seed", "duration_wr", "dt", "grid_points", "stop_error_pct", "jobs"},
                      "GA parameters");
  read_if(j, "population_size", p.population_size);
  read_if(j, "generations", p.generations);
  read_if(j, "elite_count", p.elite_count);
  read_if(j, "tournament_size", p.tournament_size);
  read_if(j, "mutation_rate", p.mutation_rate);
  read_if(j, "mutation_sigma_amplitude", p.mutation_sigma_amplitude);
  read_if(j, "mutation_sigma_phase", p.mutation_sigma_phase);
  read_if(j, "crossover_rate", p.crossover_rate);
  read_if(j, "alpha_max", p.alpha_max);
  read_if(j, "initial_alpha_max", p.initial_alpha_max);
  read_if(j, "rng_seed", p.rng_seed);
  read_if(j, "duration_wr", p.duration_wr);
  read_if(j, "dt", p.dt);
  read_if(j, "grid_points", p.grid_points);
  read_if(j, "stop_error_pct", p.stop_error_pct);
  read_if(j, "jobs", p.jobs);
  p.validate();
}

json subspace_to_json(const FrequencySubspace& subspace, const LatticeConfig& config) {
  json out = json::array();
  for (const auto& f : subspace.frequencies) {
    out.push_back({{"label", f.label}, {"freq_wr", f.omega_wr}, {"freq_khz", config.to_hz(f.omega_wr) * 1e-3}});
  }
  return out;
}

json genome_to_json(const Genome& genome, const FrequencySubspace& subspace) {
  json tones = json::array();
  for (std::size_t j = 0; j < genome.tone_count(); ++j) {
    tones.push_back({{"label", j < subspace.size() ? subspace.frequencies[j].label : ""},
                     {"omega_wr", j < subspace.size() ? subspace.frequencies[j].omega_wr : 0.0},
                     {"alpha_rad", genome.amplitude(j)},
                     {"phase_rad", genome.phase(j)}});
  }
  return json{{"subspace", to_string(subspace.kind)}, {"genes", genome.genes}, {"tones", tones}};
}

LatticeConfig load_lattice_config(const std::filesystem::path& path) { return parse_file(path).get<LatticeConfig>(); }

ShakingWaveform load_waveform(const std::filesystem::path& path) { return parse_file(path).get<ShakingWaveform>(); }

void write_text(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << contents;
  if (!out) throw Error("failed writing " + path.string());
}

void write_json(const std::filesystem::path& path, const json& document) { write_text(path, document.dump(2) + "\n"); }

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  char buf[1 << 14];
  while (in) {
    in.read(buf, sizeof buf);
    EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return hex.str();
}

void write_history_csv(std::ostream& out, const OptimizationRun& run) {
  out << "generation,best_err,mean_err\n" << std::setprecision(12);
  for (const auto& h : run.history) out << h.generation << ',' << h.best_error << ',' << h.mean_error << '\n';
}

json run_summary(const OptimizationRun& run) {
  json theta = std::isnan(run.final_theta) ? json(nullptr) : json(run.final_theta);
  return json{{"subspace", to_string(run.subspace.kind)},
              {"order_n", run.target.order},
              {"target_theta_rad", run.target.theta},
              {"final_err_pct", run.best_error},
              {"verified_err_pct", run.verified_error},
              {"theta_rad", theta},
              {"generations_run", run.history.empty() ? 0 : run.history.back().generation},
              {"first_generation_below_1pct", run.first_generation_below(1.0)},
              {"duration_wr", run.duration},
              {"seed", run.seed},
              {"wall_clock_s", run.wall_clock_s}};
}

std::vector<std::string> write_run_directory(const std::filesystem::path& dir, const OptimizationRun& run,
                                             const LatticeConfig& config, const GaParams& params) {
  std::filesystem::create_directories(dir);
  GaParams resolved = params;
  resolved.rng_seed = run.seed;
  resolved.duration_wr = run.duration;
  write_json(dir / "config.json", json{{"lattice", config},
                                       {"ga", resolved},
                                       {"subspace", to_string(run.subspace.kind)},
                                       {"frequencies", subspace_to_json(run.subspace, config)},
                                       {"target", {{"order_n", run.target.order}, {"theta_rad", run.target.theta}}}});
  std::ostringstream history;
  write_history_csv(history, run);
  write_text(dir / "history.csv", history.str());
  write_json(dir / "best_genome.json", genome_to_json(run.best_genome, run.subspace));
  std::ostringstream traj;
  write_trajectory_csv(traj, run.best_trajectory);
  write_text(dir / "best_trajectory.csv", traj.str());
  write_json(dir / "summary.json", run_summary(run));
  return {"config.json", "history.csv", "best_genome.json", "best_trajectory.csv", "summary.json"};
}

json to_json(const RunManifest& m) {
  json hashes = json::object();
  for (const auto& [path, hash] : m.input_hashes) hashes[path] = hash;
  return json{{"command", m.command},   {"argv", m.argv},         {"config", m.config},
              {"input_hashes", hashes}, {"outputs", m.outputs},   {"tool_version", m.tool_version},
              {"timestamp", m.timestamp}, {"rng_seed", m.rng_seed}};
}

RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    m.config = j.value("config", json::object());
    if (j.contains("input_hashes")) {
      for (const auto& [k, v] : j.at("input_hashes").items()) m.input_hashes.emplace_back(k, v.get<std::string>());
    }
    m.outputs = j.value("outputs", std::vector<std::string>{});
    m.tool_version = j.value("tool_version", std::string{});
    m.timestamp = j.value("timestamp", std::string{});
    m.rng_seed = j.value("rng_seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest) {
  write_json(dir / kManifestName, to_json(manifest));
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

}  // namespace shaken
