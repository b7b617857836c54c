#pragma once

// JSON documents, CSV tables and run directories.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "shaken/analytics.hpp"
#include "shaken/ga.hpp"
#include "shaken/lattice.hpp"
#include "shaken/propagator.hpp"

namespace shaken {

using json = nlohmann::ordered_json;

// LatticeConfig uses exactly the keys depth_V0, basis_cutoff_nmax,
// recoil_frequency_hz, lattice_wavelength_m. Missing keys keep defaults;
// unknown keys are rejected.
void to_json(json& j, const LatticeConfig& config);
void from_json(const json& j, LatticeConfig& config);

// {duration_T, envelope, components: [{omega_wr, alpha_rad, phase_rad}]}
void to_json(json& j, const ShakingWaveform& waveform);
void from_json(const json& j, ShakingWaveform& waveform);

void to_json(json& j, const GaParams& params);
void from_json(const json& j, GaParams& params);

std::string_view to_string(Envelope envelope);
Envelope envelope_from_string(std::string_view name);

// [{label, freq_wr, freq_khz}, ...]
json subspace_to_json(const FrequencySubspace& subspace, const LatticeConfig& config);

json genome_to_json(const Genome& genome, const FrequencySubspace& subspace);

LatticeConfig load_lattice_config(const std::filesystem::path& path);
ShakingWaveform load_waveform(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& contents);
void write_json(const std::filesystem::path& path, const json& document);

// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

// config.json, history.csv, best_genome.json, best_trajectory.csv and
// summary.json. Returns the file names written.
std::vector<std::string> write_run_directory(const std::filesystem::path& dir, const OptimizationRun& run,
                                             const LatticeConfig& config, const GaParams& params);

void write_history_csv(std::ostream& out, const OptimizationRun& run);
json run_summary(const OptimizationRun& run);

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  json config;
  std::vector<std::pair<std::string, std::string>> input_hashes;  // path, sha256
  std::vector<std::string> outputs;
  std::string tool_version;
  std::string timestamp;
  std::uint64_t rng_seed = 0;
};

inline constexpr const char* kManifestName = "manifest.json";

json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const json& j);
void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest);

std::string utc_timestamp();

}  // namespace shaken
