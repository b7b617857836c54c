// shaken: command-line front end for band structure, shaking simulations and
// waveform optimization. Every command writes its artifacts plus a
// manifest.json into --out.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shaken/analytics.hpp"
#include "shaken/error.hpp"
#include "shaken/ga.hpp"
#include "shaken/io.hpp"
#include "shaken/lattice.hpp"
#include "shaken/propagator.hpp"

#ifndef SHAKEN_VERSION
#define SHAKEN_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace shaken;

namespace {

constexpr const char* kConfigEnv = "SHAKEN_CONFIG";
constexpr int kMaxOrder = 4;

struct LatticeFlags {
  std::optional<double> depth;
  std::optional<int> nmax;
  std::optional<double> recoil_hz;
  std::optional<double> wavelength;
};

struct GaFlags {
  std::optional<int> population, generations, elite, tournament, grid, jobs;
  std::optional<double> mutation_rate, sigma_amplitude, sigma_phase, crossover_rate, alpha_max, initial_alpha_max;
  std::optional<double> dt, stop_pct;
  std::optional<std::uint64_t> seed;
};

struct Session {
  std::vector<std::string> argv;
  std::string config_path;
  std::optional<json> injected;  // resolved snapshot when rerunning a manifest
  LatticeFlags lattice_flags;
  std::string out = "shaken_out";

  json file_document;
  LatticeConfig config;
  GaParams ga;
  std::vector<std::pair<std::string, std::string>> input_hashes;

  void resolve() {
    file_document = json::object();
    if (injected) {
      file_document = *injected;
    } else {
      std::string path = config_path;
      if (path.empty()) {
        if (const char* env = std::getenv(kConfigEnv)) path = env;
      }
      if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("config file not found: " + path);
        try {
          file_document = json::parse(in);
        } catch (const json::parse_error& e) {
          throw ConfigError("invalid JSON in " + path + ": " + e.what());
        }
        input_hashes.emplace_back(fs::absolute(path).string(), sha256_file(path));
      }
    }
    json lattice_doc = json::object();
    json ga_doc = json::object();
    if (file_document.contains("lattice") || file_document.contains("ga")) {
      for (const auto& [key, value] : file_document.items()) {
        if (key != "lattice" && key != "ga") throw ConfigError("unknown config section '" + key + "'");
      }
      lattice_doc = file_document.value("lattice", json::object());
      ga_doc = file_document.value("ga", json::object());
    } else {
      lattice_doc = file_document;
    }
    config = lattice_doc.get<LatticeConfig>();
    if (lattice_flags.depth) config.depth_v0 = *lattice_flags.depth;
    if (lattice_flags.nmax) config.basis_cutoff_nmax = *lattice_flags.nmax;
    if (lattice_flags.recoil_hz) config.recoil_frequency_hz = *lattice_flags.recoil_hz;
    if (lattice_flags.wavelength) config.lattice_wavelength_m = *lattice_flags.wavelength;
    config.validate();
    ga = ga_doc.get<GaParams>();
  }

  void apply(const GaFlags& f) {
    if (f.population) ga.population_size = *f.population;
    if (f.generations) ga.generations = *f.generations;
    if (f.elite) ga.elite_count = *f.elite;
    if (f.tournament) ga.tournament_size = *f.tournament;
    if (f.grid) ga.grid_points = *f.grid;
    if (f.jobs) ga.jobs = *f.jobs;
    if (f.mutation_rate) ga.mutation_rate = *f.mutation_rate;
    if (f.sigma_amplitude) ga.mutation_sigma_amplitude = *f.sigma_amplitude;
    if (f.sigma_phase) ga.mutation_sigma_phase = *f.sigma_phase;
    if (f.crossover_rate) ga.crossover_rate = *f.crossover_rate;
    if (f.alpha_max) ga.alpha_max = *f.alpha_max;
    if (f.initial_alpha_max) ga.initial_alpha_max = *f.initial_alpha_max;
    if (f.dt) ga.dt = *f.dt;
    if (f.stop_pct) ga.stop_error_pct = *f.stop_pct;
    if (f.seed) ga.rng_seed = *f.seed;
    ga.validate();
  }

  fs::path out_dir() const {
    fs::create_directories(out);
    return fs::path(out);
  }

  void finish(const std::string& command, const json& params, const std::vector<std::string>& outputs,
              std::uint64_t seed = 0) const {
    RunManifest m;
    m.command = command;
    m.argv = argv;
    m.config = json{{"lattice", config}, {"ga", ga}, {"command", params}};
    m.input_hashes = input_hashes;
    m.outputs = outputs;
    m.tool_version = SHAKEN_VERSION;
    m.timestamp = utc_timestamp();
    m.rng_seed = seed;
    write_manifest(out_dir(), m);
  }
};

void add_lattice_flags(CLI::App& app, Session& s) {
  app.add_option("--config", s.config_path, std::string("JSON config file (default: $") + kConfigEnv + ")");
  app.add_option("--depth", s.lattice_flags.depth, "lattice depth V0 in E_R");
  app.add_option("--nmax", s.lattice_flags.nmax, "plane-wave cutoff for Bloch solves");
  app.add_option("--recoil-hz", s.lattice_flags.recoil_hz, "recoil frequency in Hz");
  app.add_option("--wavelength", s.lattice_flags.wavelength, "lattice wavelength in m");
  app.add_option("--out", s.out, "output directory")->capture_default_str();
}

void add_ga_flags(CLI::App& cmd, GaFlags& f) {
  cmd.add_option("--population", f.population, "population size");
  cmd.add_option("--generations", f.generations, "generation budget");
  cmd.add_option("--elite", f.elite, "elite count");
  cmd.add_option("--tournament", f.tournament, "tournament size");
  cmd.add_option("--mutation-rate", f.mutation_rate, "per-gene mutation probability");
  cmd.add_option("--sigma-amplitude", f.sigma_amplitude, "amplitude mutation width (rad)");
  cmd.add_option("--sigma-phase", f.sigma_phase, "phase mutation width (rad)");
  cmd.add_option("--crossover-rate", f.crossover_rate, "crossover probability");
  cmd.add_option("--alpha-max", f.alpha_max, "amplitude bound (rad)");
  cmd.add_option("--initial-alpha-max", f.initial_alpha_max, "initial amplitude bound (rad)");
  cmd.add_option("--dt", f.dt, "fitness time step (1/omega_R)");
  cmd.add_option("--grid", f.grid, "split-step grid points");
  cmd.add_option("--stop-pct", f.stop_pct, "stop once the best error falls below this percent");
  cmd.add_option("--seed", f.seed, "RNG seed");
  cmd.add_option("--jobs", f.jobs, "parallel fitness workers");
}

double duration_wr(const LatticeConfig& config, double duration_ms, std::optional<double> t_wr) {
  const double t = t_wr ? *t_wr : config.to_recoil_time(duration_ms * 1e-3);
  if (!(t > 0.0)) throw ConfigError("duration must be > 0");
  return t;
}

void check_order(int n) {
  if (n < 1 || n > kMaxOrder) throw ConfigError("splitting order n must be in [1, " + std::to_string(kMaxOrder) + "]");
}

std::string csv_of(const Trajectory& t) {
  std::ostringstream out;
  write_trajectory_csv(out, t);
  return out.str();
}

json trajectory_summary(const Trajectory& t) {
  const auto i = t.argmin_error();
  const double theta = t.relative_phase[i];
  return json{{"min_err_pct", t.errors[i]},
              {"t_min_wr", t.times[i]},
              {"max_err_pct", t.max_error()},
              {"final_err_pct", t.errors.back()},
              {"D_theta0_at_min", t.overlap_theta0[i]},
              {"D_thetapi_at_min", t.overlap_thetapi[i]},
              {"dominant", t.overlap_thetapi[i] > t.overlap_theta0[i] ? "theta_pi" : "theta_0"},
              {"theta_rad_at_min", std::isnan(theta) ? json(nullptr) : json(theta)},
              {"max_norm_drift", t.max_norm_drift()}};
}

// ---- bands ---------------------------------------------------------------

struct BandsArgs {
  int q_steps = 41;
  double depth_min = 0.0, depth_max = 20.0;
  int depth_steps = 41;
};

void cmd_bands(Session& s, const BandsArgs& a) {
  if (a.q_steps < 1 || a.depth_steps < 1) throw ConfigError("grid step counts must be >= 1");
  if (a.depth_min < 0.0 || a.depth_max < a.depth_min) throw ConfigError("need 0 <= depth-min <= depth-max");
  std::vector<BlochSolution> sweep;
  for (int i = 0; i < a.q_steps; ++i) {
    const double q = a.q_steps == 1 ? 0.0 : -1.0 + 2.0 * i / (a.q_steps - 1);
    sweep.push_back(solve_bloch(s.config, q));
  }
  std::ostringstream bands;
  write_band_table(bands, sweep);
  const auto dir = s.out_dir();
  write_text(dir / "bands.csv", bands.str());

  std::ostringstream depth;
  depth << "depth_ER";
  for (int r = 0; r <= 5; ++r) depth << ",E_" << r << "_ER";
  for (int r = 1; r <= 5; ++r) depth << ",f_0_" << r << "_khz";
  depth << ",f_0_2_half_khz\n" << std::setprecision(12);
  for (int i = 0; i < a.depth_steps; ++i) {
    LatticeConfig c = s.config;
    c.depth_v0 = a.depth_steps == 1 ? a.depth_min : a.depth_min + (a.depth_max - a.depth_min) * i / (a.depth_steps - 1);
    const BlochSolution b = solve_bloch(c, 0.0);
    depth << c.depth_v0;
    for (int r = 0; r <= 5; ++r) depth << ',' << b.energy(r);
    for (int r = 1; r <= 5; ++r) depth << ',' << transition_frequency(c, b, 0, r).khz();
    depth << ',' << transition_frequency(c, b, 0, 2).khz() / 2.0 << '\n';
  }
  write_text(dir / "transitions_vs_depth.csv", depth.str());
  s.finish("bands",
           {{"q_steps", a.q_steps}, {"depth_min", a.depth_min}, {"depth_max", a.depth_max}, {"depth_steps", a.depth_steps}},
           {"bands.csv", "transitions_vs_depth.csv"});
  std::cout << "wrote " << (dir / "bands.csv").string() << " and " << (dir / "transitions_vs_depth.csv").string()
            << "\n";
}

// ---- transitions ----------------------------------------------------------

void cmd_transitions(Session& s, int bands) {
  if (bands < 2) throw ConfigError("need at least two bands");
  const BlochSolution b = solve_bloch(s.config, 0.0);
  std::ostringstream csv;
  csv << "r,r_prime,f_wr,f_khz,m_sin,m_cos\n" << std::setprecision(12);
  std::cout << "  r  r'   f (kHz)\n";
  for (int r = 0; r < bands; ++r) {
    for (int rp = r + 1; rp < bands; ++rp) {
      const auto f = transition_frequency(s.config, b, r, rp);
      const auto m = matrix_elements(b, r, rp);
      csv << r << ',' << rp << ',' << f.omega_wr << ',' << f.khz() << ',' << m.m_sin << ',' << m.m_cos << '\n';
      std::cout << std::setw(3) << r << std::setw(3) << rp << std::setw(11) << std::fixed << std::setprecision(3)
                << f.khz() << '\n';
    }
  }
  std::cout.unsetf(std::ios::fixed);
  write_text(s.out_dir() / "transitions.csv", csv.str());
  s.finish("transitions", {{"bands", bands}}, {"transitions.csv"});
}

// ---- matrix-elements ------------------------------------------------------

struct MatrixArgs {
  int bands = 7;
  bool select_only = false;
  std::string subspace = "select";
  double duration_ms = 0.5;
};

void cmd_matrix_elements(Session& s, const MatrixArgs& a) {
  if (a.bands < 2) throw ConfigError("need at least two bands");
  const auto kind = subspace_kind_from_string(a.subspace);
  const BlochSolution b = solve_bloch(s.config, 0.0);
  const auto selected = select_transitions(b);
  std::vector<TransitionElement> all;
  for (int r = 0; r < a.bands; ++r) {
    for (int rp = r + 1; rp < a.bands; ++rp) all.push_back(matrix_elements(b, r, rp));
  }
  const auto dir = s.out_dir();
  std::ostringstream table, sel;
  write_matrix_elements_csv(table, a.select_only ? selected : all);
  write_matrix_elements_csv(sel, selected);
  write_text(dir / "matrix_elements.csv", table.str());
  write_text(dir / "select_transitions.csv", sel.str());
  const auto subspace = build_subspace(s.config, kind, s.config.to_recoil_time(a.duration_ms * 1e-3));
  write_json(dir / "subspace.json", subspace_to_json(subspace, s.config));
  s.finish("matrix-elements",
           {{"bands", a.bands}, {"select_only", a.select_only}, {"subspace", to_string(kind)}, {"duration_ms", a.duration_ms}},
           {"matrix_elements.csv", "select_transitions.csv", "subspace.json"});
  std::cout << selected.size() << " transitions flagged select (m > " << kSelectThreshold << ")\n";
  for (const auto& e : selected) {
    std::cout << "  " << e.r << " -> " << e.r_prime << "  m_sin " << e.m_sin << "  m_cos " << e.m_cos << "\n";
  }
}

// ---- split-single / accelerate / ensemble --------------------------------

struct DriveArgs {
  std::string omega = "band:0:1";
  double alpha = 0.3;
  double duration_ms = 1.0;
  std::optional<double> t_wr;
  std::string envelope = "none";
  int n = 1;
  double theta = 0.0;
  double dt = kDefaultTimeStep;
  int stride = 100;
};

ShakingWaveform single_tone(const Session& s, const DriveArgs& a, double& omega) {
  const BlochSolution b = solve_bloch(s.config, 0.0);
  omega = resolve_frequency(s.config, b, a.omega);
  ShakingWaveform w;
  w.components = {{omega, a.alpha, 0.0}};
  w.duration = duration_wr(s.config, a.duration_ms, a.t_wr);
  w.envelope = envelope_from_string(a.envelope);
  w.validate();
  return w;
}

json drive_params(const DriveArgs& a, double omega, const ShakingWaveform& w) {
  return json{{"omega", a.omega},  {"omega_wr", omega}, {"alpha_rad", a.alpha}, {"duration_wr", w.duration},
              {"envelope", a.envelope}, {"n", a.n}, {"theta_rad", a.theta}, {"dt", a.dt}, {"stride", a.stride}};
}

void cmd_split_single(Session& s, const DriveArgs& a) {
  check_order(a.n);
  double omega = 0.0;
  const ShakingWaveform w = single_tone(s, a, omega);
  PropagationOptions o;
  o.dt = a.dt;
  o.sample_stride = a.stride;
  const Trajectory t = propagate(s.config, ground_state(s.config), w, {a.n, a.theta}, o);
  const auto dir = s.out_dir();
  write_text(dir / "trajectory.csv", csv_of(t));
  write_json(dir / "waveform.json", json(w));
  json summary = trajectory_summary(t);
  summary["omega_wr"] = omega;
  summary["omega_khz"] = s.config.to_hz(omega) * 1e-3;
  write_json(dir / "summary.json", summary);
  s.finish("split-single", drive_params(a, omega, w), {"trajectory.csv", "waveform.json", "summary.json"});
  std::cout << "omega " << s.config.to_hz(omega) * 1e-3 << " kHz, min error " << t.min_error() << " % at t = "
            << t.times[t.argmin_error()] << " / omega_R, dominant " << summary["dominant"].get<std::string>() << "\n";
}

struct AccelArgs {
  int n = 3;
  double alpha = 1.0;
  double duration_ms = 1.0;
  std::optional<double> t_wr;
  double theta = 0.0;
  double dt = kDefaultTimeStep;
  int stride = 100;
};

void cmd_accelerate(Session& s, const AccelArgs& a) {
  check_order(a.n);
  PropagationOptions o;
  o.dt = a.dt;
  o.sample_stride = a.stride;
  const double duration = duration_wr(s.config, a.duration_ms, a.t_wr);
  const Trajectory t = acceleration_hold(s.config, a.n, a.alpha, duration, a.theta, o);
  const auto dir = s.out_dir();
  write_text(dir / "trajectory.csv", csv_of(t));
  json summary = trajectory_summary(t);
  summary["omega_wr"] = 4.0 * a.n;
  write_json(dir / "summary.json", summary);
  s.finish("accelerate",
           {{"n", a.n}, {"alpha_rad", a.alpha}, {"duration_wr", duration}, {"theta_rad", a.theta}, {"dt", a.dt},
            {"stride", a.stride}},
           {"trajectory.csv", "summary.json"});
  std::cout << "held split(" << a.n << ") at omega = " << 4 * a.n << " omega_R: max error " << t.max_error()
            << " %\n";
}

struct EnsembleArgs {
  DriveArgs drive;
  double sigma_q = 0.6;
  int samples = 21;
  std::string width = "half_width";
};

void cmd_ensemble(Session& s, const EnsembleArgs& a) {
  check_order(a.drive.n);
  WidthConvention convention;
  if (a.width == "half_width") {
    convention = WidthConvention::half_width;
  } else if (a.width == "fwhm") {
    convention = WidthConvention::fwhm;
  } else {
    throw ConfigError("width must be half_width or fwhm");
  }
  double omega = 0.0;
  const ShakingWaveform w = single_tone(s, a.drive, omega);
  PropagationOptions o;
  o.dt = a.drive.dt;
  o.sample_stride = a.drive.stride;
  const EnsembleResult r =
      quasimomentum_ensemble(s.config, w, a.sigma_q, a.samples, {a.drive.n, a.drive.theta}, o, convention);
  std::ostringstream csv;
  csv << "t_wr,err_pct";
  for (int n = -PopulationVector::kCutoff; n <= PopulationVector::kCutoff; ++n) csv << ",P_" << n;
  csv << '\n' << std::setprecision(12);
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    csv << r.times[i] << ',' << r.errors[i];
    for (double p : r.mean_populations[i].values()) csv << ',' << p;
    csv << '\n';
  }
  const auto dir = s.out_dir();
  write_text(dir / "ensemble.csv", csv.str());
  write_json(dir / "summary.json", {{"min_err_pct", r.min_error},
                                    {"t_min_wr", r.time_of_min},
                                    {"sigma_q_hkL", a.sigma_q},
                                    {"width_convention", a.width},
                                    {"samples", a.samples},
                                    {"quasimomenta_hkL", r.quasimomenta}});
  json params = drive_params(a.drive, omega, w);
  params["sigma_q"] = a.sigma_q;
  params["samples"] = a.samples;
  params["width"] = a.width;
  s.finish("ensemble", params, {"ensemble.csv", "summary.json"});
  std::cout << "ensemble of " << a.samples << " quasimomenta, sigma_q " << a.sigma_q << ": min error " << r.min_error
            << " %\n";
}

// ---- optimize / staged-split ---------------------------------------------

struct OptimizeArgs {
  std::string subspace = "select";
  int n = 1;
  double theta = 0.0;
  int restarts = 1;
  std::optional<double> duration_ms;
};

void report(const OptimizationRun& run) {
  std::cout << "seed " << run.seed << ": best error " << run.best_error << " % (verified " << run.verified_error
            << " %) after " << run.history.back().generation << " generations, " << run.wall_clock_s << " s\n";
}

void cmd_optimize(Session& s, const OptimizeArgs& a, const GaFlags& flags) {
  check_order(a.n);
  if (a.restarts < 1) throw ConfigError("restarts must be >= 1");
  const auto kind = subspace_kind_from_string(a.subspace);
  s.apply(flags);
  if (a.duration_ms) s.ga.duration_wr = s.config.to_recoil_time(*a.duration_ms * 1e-3);
  const OptimizationProblem problem = make_problem(kind, {a.n, a.theta}, s.ga, s.config);
  const RestartSummary summary = multi_restart(a.restarts, problem);
  const auto dir = s.out_dir();
  std::vector<std::string> outputs = write_run_directory(dir, summary.best(), s.config, s.ga);
  if (a.restarts > 1) {
    std::ostringstream csv;
    csv << "seed,best_err_pct,verified_err_pct,first_generation_below_1pct,theta_rad\n" << std::setprecision(12);
    for (const auto& run : summary.runs) {
      csv << run.seed << ',' << run.best_error << ',' << run.verified_error << ',' << run.first_generation_below(1.0)
          << ',' << run.final_theta << '\n';
      const std::string sub = "runs/seed_" + std::to_string(run.seed);
      for (const auto& f : write_run_directory(dir / sub, run, s.config, s.ga)) outputs.push_back(sub + "/" + f);
    }
    write_text(dir / "restarts.csv", csv.str());
    outputs.push_back("restarts.csv");
    json summary_doc = run_summary(summary.best());
    summary_doc["restarts"] = a.restarts;
    summary_doc["mean_err_pct"] = summary.mean_error;
    summary_doc["variance_err_pct2"] = summary.variance_error;
    write_json(dir / "summary.json", summary_doc);
  }
  for (const auto& run : summary.runs) report(run);
  s.finish("optimize", {{"subspace", to_string(kind)}, {"n", a.n}, {"theta_rad", a.theta}, {"restarts", a.restarts}},
           outputs, s.ga.rng_seed);
  std::cout << "best of " << a.restarts << ": " << summary.best().best_error << " %\n";
}

void cmd_staged_split(Session& s, double theta_initial, std::optional<double> duration_ms, const GaFlags& flags) {
  s.apply(flags);
  if (duration_ms) s.ga.duration_wr = s.config.to_recoil_time(*duration_ms * 1e-3);
  const OptimizationRun run = staged_split(s.ga, s.config, theta_initial);
  const auto dir = s.out_dir();
  const auto outputs = write_run_directory(dir, run, s.config, s.ga);
  report(run);
  s.finish("staged-split", {{"from_n", 2}, {"to_n", 3}, {"theta_initial_rad", theta_initial}}, outputs,
           s.ga.rng_seed);
}

int run_cli(std::vector<std::string> args, std::optional<json> injected);

void cmd_rerun(const std::string& manifest_path, const std::string& out) {
  std::ifstream in(manifest_path);
  if (!in) throw ConfigError("manifest not found: " + manifest_path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid manifest: ") + e.what());
  }
  const RunManifest m = manifest_from_json(doc);
  // Replay the recorded argv against the recorded config snapshot; the
  // original --config file and --out are dropped.
  std::vector<std::string> args;
  for (std::size_t i = 1; i < m.argv.size(); ++i) {
    const std::string& a = m.argv[i];
    if (a == "--config" || a == "--out") {
      ++i;
      continue;
    }
    if (a.starts_with("--config=") || a.starts_with("--out=")) continue;
    args.push_back(a);
  }
  args.insert(args.begin(), m.argv.empty() ? std::string("shaken") : m.argv.front());
  args.push_back("--out");
  args.push_back(out);
  json snapshot{{"lattice", m.config.at("lattice")}, {"ga", m.config.at("ga")}};
  const int rc = run_cli(args, snapshot);
  if (rc != 0) throw Error("rerun failed");
}

int run_cli(std::vector<std::string> args, std::optional<json> injected) {
  CLI::App app{"Shaken optical lattice simulator", "shaken"};
  app.set_version_flag("--version", SHAKEN_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  Session s;
  s.argv = args;
  s.injected = std::move(injected);
  add_lattice_flags(app, s);

  BandsArgs bands;
  auto* c_bands = app.add_subcommand("bands", "band structure vs quasimomentum and transitions vs depth");
  c_bands->add_option("--q-steps", bands.q_steps, "quasimomentum samples on [-1, 1]")->capture_default_str();
  c_bands->add_option("--depth-min", bands.depth_min, "depth sweep start (E_R)")->capture_default_str();
  c_bands->add_option("--depth-max", bands.depth_max, "depth sweep end (E_R)")->capture_default_str();
  c_bands->add_option("--depth-steps", bands.depth_steps, "depth sweep samples")->capture_default_str();

  int transition_bands = 6;
  auto* c_trans = app.add_subcommand("transitions", "band-to-band transition frequencies at q = 0");
  c_trans->add_option("--bands", transition_bands, "number of bands")->capture_default_str();

  MatrixArgs matrix;
  auto* c_matrix = app.add_subcommand("matrix-elements", "sin(2x) and cos(2x) matrix elements at q = 0");
  c_matrix->add_option("--bands", matrix.bands, "number of bands")->capture_default_str();
  c_matrix->add_flag("--select-only", matrix.select_only, "only rows above the select threshold");
  c_matrix->add_option("--subspace", matrix.subspace, "subspace written to subspace.json")->capture_default_str();
  c_matrix->add_option("--duration-ms", matrix.duration_ms, "shaking time for the all_band grid")->capture_default_str();

  auto add_drive = [](CLI::App* c, DriveArgs& d) {
    c->add_option("--omega", d.omega, "band:r:r', halfband:r:r' or omega in omega_R")->capture_default_str();
    c->add_option("--alpha", d.alpha, "shaking amplitude (rad)")->capture_default_str();
    c->add_option("--duration-ms", d.duration_ms, "shaking time (ms)")->capture_default_str();
    c->add_option("--T", d.t_wr, "shaking time in 1/omega_R, overrides --duration-ms");
    c->add_option("--envelope", d.envelope, "none or smooth_window")->capture_default_str();
    c->add_option("--n", d.n, "target splitting order")->capture_default_str();
    c->add_option("--theta", d.theta, "target relative phase (rad)")->capture_default_str();
    c->add_option("--dt", d.dt, "time step (1/omega_R)")->capture_default_str();
    c->add_option("--stride", d.stride, "steps between samples")->capture_default_str();
  };

  DriveArgs drive;
  auto* c_split = app.add_subcommand("split-single", "single-frequency shaking from the ground state");
  add_drive(c_split, drive);

  AccelArgs accel;
  auto* c_accel = app.add_subcommand("accelerate", "hold a split state in a moving-lattice drive");
  c_accel->add_option("--n", accel.n, "splitting order")->capture_default_str();
  c_accel->add_option("--alpha", accel.alpha, "shaking amplitude (rad)")->capture_default_str();
  c_accel->add_option("--duration-ms", accel.duration_ms, "hold time (ms)")->capture_default_str();
  c_accel->add_option("--T", accel.t_wr, "hold time in 1/omega_R, overrides --duration-ms");
  c_accel->add_option("--theta", accel.theta, "relative phase of the held state (rad)")->capture_default_str();
  c_accel->add_option("--dt", accel.dt, "time step (1/omega_R)")->capture_default_str();
  c_accel->add_option("--stride", accel.stride, "steps between samples")->capture_default_str();

  EnsembleArgs ensemble;
  auto* c_ens = app.add_subcommand("ensemble", "quasimomentum-averaged single-frequency shaking");
  add_drive(c_ens, ensemble.drive);
  c_ens->add_option("--sigma-q", ensemble.sigma_q, "momentum spread (hbar k_L)")->capture_default_str();
  c_ens->add_option("--samples", ensemble.samples, "quasimomentum samples")->capture_default_str();
  c_ens->add_option("--width", ensemble.width, "half_width or fwhm")->capture_default_str();

  OptimizeArgs opt;
  GaFlags opt_flags;
  auto* c_opt = app.add_subcommand("optimize", "genetic waveform search for split(n)");
  c_opt->add_option("--subspace", opt.subspace, "all_band, band, half_band, band_plus_half or select")
      ->capture_default_str();
  c_opt->add_option("--n", opt.n, "target splitting order (1..4)")->capture_default_str();
  c_opt->add_option("--theta", opt.theta, "target relative phase (rad)")->capture_default_str();
  c_opt->add_option("--restarts", opt.restarts, "independent runs with consecutive seeds")->capture_default_str();
  c_opt->add_option("--duration-ms", opt.duration_ms, "shaking time (ms, default 0.5)");
  add_ga_flags(*c_opt, opt_flags);

  double staged_theta = 0.0;
  std::optional<double> staged_duration;
  GaFlags staged_flags;
  auto* c_staged = app.add_subcommand("staged-split", "transfer split(2) to split(3) on the select subspace");
  c_staged->add_option("--theta-initial", staged_theta, "relative phase of the split(2) start (rad)")
      ->capture_default_str();
  c_staged->add_option("--duration-ms", staged_duration, "shaking time (ms, default 0.5)");
  add_ga_flags(*c_staged, staged_flags);

  std::string manifest_path;
  auto* c_rerun = app.add_subcommand("rerun", "replay a command from its manifest.json");
  c_rerun->add_option("manifest", manifest_path, "manifest.json of a previous run")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (c_rerun->parsed()) {
      cmd_rerun(manifest_path, s.out);
      return 0;
    }
    s.resolve();
    if (c_bands->parsed()) cmd_bands(s, bands);
    if (c_trans->parsed()) cmd_transitions(s, transition_bands);
    if (c_matrix->parsed()) cmd_matrix_elements(s, matrix);
    if (c_split->parsed()) cmd_split_single(s, drive);
    if (c_accel->parsed()) cmd_accelerate(s, accel);
    if (c_ens->parsed()) cmd_ensemble(s, ensemble);
    if (c_opt->parsed()) cmd_optimize(s, opt, opt_flags);
    if (c_staged->parsed()) cmd_staged_split(s, staged_theta, staged_duration, staged_flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run_cli(std::vector<std::string>(argv, argv + argc), std::nullopt); }
