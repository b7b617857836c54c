#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "shaken/analytics.hpp"
#include "shaken/error.hpp"
#include "shaken/ga.hpp"
#include "shaken/io.hpp"
#include "shaken/lattice.hpp"
#include "shaken/propagator.hpp"

namespace py = pybind11;
using namespace shaken;

namespace {

std::vector<double> populations(const PopulationVector& p) { return {p.values().begin(), p.values().end()}; }

py::dict trajectory_dict(const Trajectory& t) {
  std::vector<std::vector<double>> pops;
  for (const auto& p : t.populations) pops.push_back(populations(p));
  py::dict d;
  d["times"] = t.times;
  d["errors"] = t.errors;
  d["populations"] = pops;
  d["overlap_theta0"] = t.overlap_theta0;
  d["overlap_thetapi"] = t.overlap_thetapi;
  d["relative_phase"] = t.relative_phase;
  d["norms"] = t.norms;
  d["final_state"] = t.final_state.amplitudes();
  d["min_error"] = t.min_error();
  d["max_error"] = t.max_error();
  return d;
}

ShakingWaveform tone(double omega, double alpha, double duration, const std::string& envelope) {
  ShakingWaveform w;
  w.components = {{omega, alpha, 0.0}};
  w.duration = duration;
  w.envelope = envelope_from_string(envelope);
  return w;
}

PropagationOptions options_for(double dt, int stride) {
  PropagationOptions o;
  o.dt = dt;
  o.sample_stride = stride;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Shaken optical lattice band structure, propagation and waveform search";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<IndexError>(m, "BandIndexError", base.ptr());
  py::register_exception<EigenSolverError>(m, "EigenSolverError", base.ptr());
  py::register_exception<PhaseUndefinedError>(m, "PhaseUndefinedError", base.ptr());
  py::register_exception<PropagationError>(m, "PropagationError", base.ptr());

  py::class_<LatticeConfig>(m, "LatticeConfig")
      .def(py::init([](double depth, int nmax, double recoil_hz, double wavelength) {
             LatticeConfig c{depth, nmax, recoil_hz, wavelength};
             c.validate();
             return c;
           }),
           py::arg("depth_V0") = 10.0, py::arg("basis_cutoff_nmax") = 10,
           py::arg("recoil_frequency_hz") = kDefaultRecoilHz, py::arg("lattice_wavelength_m") = kDefaultWavelengthM)
      .def_readwrite("depth_V0", &LatticeConfig::depth_v0)
      .def_readwrite("basis_cutoff_nmax", &LatticeConfig::basis_cutoff_nmax)
      .def_readwrite("recoil_frequency_hz", &LatticeConfig::recoil_frequency_hz)
      .def_readwrite("lattice_wavelength_m", &LatticeConfig::lattice_wavelength_m)
      .def("to_recoil_time", &LatticeConfig::to_recoil_time, py::arg("seconds"))
      .def("to_hz", &LatticeConfig::to_hz, py::arg("omega_wr"))
      .def("to_json", [](const LatticeConfig& c) { return json(c).dump(); })
      .def_static("from_json", [](const std::string& s) {
        try {
          return json::parse(s).get<LatticeConfig>();
        } catch (const json::parse_error& e) {
          throw ConfigError(e.what());
        }
      })
      .def("__eq__", [](const LatticeConfig& a, const LatticeConfig& b) { return a == b; })
      .def("__repr__", [](const LatticeConfig& c) { return "LatticeConfig(" + json(c).dump() + ")"; });

  m.def(
      "solve_bloch",
      [](const LatticeConfig& config, double q) {
        const BlochSolution b = solve_bloch(config, q);
        std::vector<Eigen::VectorXcd> states;
        std::vector<std::string> parities;
        for (int r = 0; r < b.band_count(); ++r) {
          states.push_back(b.state(r).amplitudes());
          const auto p = b.parities[static_cast<std::size_t>(r)];
          parities.push_back(p == Parity::even ? "even" : p == Parity::odd ? "odd" : "none");
        }
        return py::make_tuple(b.band_energies, states, parities);
      },
      py::arg("config"), py::arg("q") = 0.0, "Band energies, momentum-space states and parities.");

  m.def(
      "transition_frequency",
      [](const LatticeConfig& config, int r, int r_prime) {
        const auto f = transition_frequency(config, r, r_prime);
        return py::make_tuple(f.omega_wr, f.khz());
      },
      py::arg("config"), py::arg("r"), py::arg("r_prime"), "(omega in omega_R, frequency in kHz)");

  m.def(
      "matrix_elements",
      [](const LatticeConfig& config, int r, int r_prime) {
        const auto e = matrix_elements(config, r, r_prime);
        return py::make_tuple(e.m_sin, e.m_cos);
      },
      py::arg("config"), py::arg("r"), py::arg("r_prime"));

  m.def(
      "select_transitions",
      [](const LatticeConfig& config) {
        std::vector<std::tuple<int, int, double, double>> out;
        for (const auto& e : select_transitions(solve_bloch(config, 0.0))) out.emplace_back(e.r, e.r_prime, e.m_sin, e.m_cos);
        return out;
      },
      py::arg("config"));

  m.def("bessel_j", &bessel_j, py::arg("k"), py::arg("x"));
  m.def(
      "jacobi_anger_normalization", [](double alpha, int kmax) { return jacobi_anger(alpha, kmax).normalization(); },
      py::arg("alpha"), py::arg("kmax"));
  m.def("fgr_rate", [](const LatticeConfig& c, double alpha, double omega, int r, int rp, double linewidth) {
        return fgr_rate(c, alpha, omega, r, rp, linewidth);
      },
      py::arg("config"), py::arg("alpha"), py::arg("omega"), py::arg("r"), py::arg("r_prime"),
      py::arg("linewidth") = kDefaultLinewidth);
  m.def(
      "moving_lattice",
      [](double depth, double alpha, double omega) {
        const auto d = moving_lattice(depth, alpha, omega);
        return py::make_tuple(d.carrier_depth, d.traveling_depth, d.velocity);
      },
      py::arg("depth_V0"), py::arg("alpha"), py::arg("omega"));

  m.def(
      "build_subspace",
      [](const LatticeConfig& config, const std::string& kind, double duration) {
        std::vector<std::pair<std::string, double>> out;
        const double t = duration > 0.0 ? duration : config.to_recoil_time(0.5e-3);
        for (const auto& f : build_subspace(config, subspace_kind_from_string(kind), t).frequencies) {
          out.emplace_back(f.label, f.omega_wr);
        }
        return out;
      },
      py::arg("config"), py::arg("kind") = "select", py::arg("duration") = 0.0);

  m.def(
      "resolve_frequency",
      [](const LatticeConfig& config, const std::string& spec) {
        return resolve_frequency(config, solve_bloch(config, 0.0), spec);
      },
      py::arg("config"), py::arg("spec"));

  m.def(
      "ground_state", [](const LatticeConfig& c, int n_max, double q) { return ground_state(c, n_max, q).amplitudes(); },
      py::arg("config"), py::arg("n_max") = kPropagationCutoff, py::arg("q") = 0.0);
  m.def(
      "split_state",
      [](int order, double theta, int n_max) { return make_split_state({order, theta}, n_max).amplitudes(); },
      py::arg("order"), py::arg("theta") = 0.0, py::arg("n_max") = kPropagationCutoff);
  m.def(
      "population_vector",
      [](const Eigen::VectorXcd& amps) { return populations(population_vector(MomentumState::normalized(amps))); },
      py::arg("amplitudes"));
  m.def(
      "error_metric",
      [](const std::array<double, PopulationVector::kSize>& a, const std::array<double, PopulationVector::kSize>& b) {
        return error_metric(PopulationVector(a), PopulationVector(b));
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "split_single",
      [](const LatticeConfig& c, double omega, double alpha, double duration, int order, double theta,
         const std::string& envelope, double dt, int stride) {
        return trajectory_dict(
            propagate(c, ground_state(c), tone(omega, alpha, duration, envelope), {order, theta}, options_for(dt, stride)));
      },
      py::arg("config"), py::arg("omega"), py::arg("alpha"), py::arg("duration"), py::arg("order") = 1,
      py::arg("theta") = 0.0, py::arg("envelope") = "none", py::arg("dt") = kDefaultTimeStep, py::arg("stride") = 100,
      "Propagates the ground state under alpha sin(omega t).");

  m.def(
      "accelerate",
      [](const LatticeConfig& c, int order, double alpha, double duration, double theta, double dt, int stride) {
        const double t = duration > 0.0 ? duration : default_hold_duration(c);
        return trajectory_dict(acceleration_hold(c, order, alpha, t, theta, options_for(dt, stride)));
      },
      py::arg("config"), py::arg("order"), py::arg("alpha") = 1.0, py::arg("duration") = 0.0, py::arg("theta") = 0.0,
      py::arg("dt") = kDefaultTimeStep, py::arg("stride") = 100);

  m.def(
      "ensemble_min_error",
      [](const LatticeConfig& c, double omega, double alpha, double duration, double sigma_q, int samples, int order,
         const std::string& width, double dt) {
        const auto convention = width == "fwhm" ? WidthConvention::fwhm : WidthConvention::half_width;
        const auto r = quasimomentum_ensemble(c, tone(omega, alpha, duration, "none"), sigma_q, samples, {order, 0.0},
                                              options_for(dt, 100), convention);
        return py::make_tuple(r.min_error, r.time_of_min);
      },
      py::arg("config"), py::arg("omega"), py::arg("alpha"), py::arg("duration"), py::arg("sigma_q") = 0.6,
      py::arg("samples") = 21, py::arg("order") = 1, py::arg("width") = "half_width", py::arg("dt") = kDefaultTimeStep);

  m.def(
      "optimize",
      [](const LatticeConfig& c, const std::string& subspace, int order, int generations, std::uint64_t seed,
         double stop_error_pct, const std::string& ga_json) {
        GaParams p = json::parse(ga_json).get<GaParams>();
        p.generations = generations;
        p.rng_seed = seed;
        p.stop_error_pct = stop_error_pct;
        OptimizationRun run;
        {
          py::gil_scoped_release release;
          run = optimize(subspace_kind_from_string(subspace), {order, 0.0}, p, c);
        }
        py::dict d;
        d["best_error"] = run.best_error;
        d["verified_error"] = run.verified_error;
        d["best_genes"] = run.best_genome.genes;
        d["first_generation_below_1pct"] = run.first_generation_below(1.0);
        std::vector<double> best, mean;
        for (const auto& h : run.history) {
          best.push_back(h.best_error);
          mean.push_back(h.mean_error);
        }
        d["best_history"] = best;
        d["mean_history"] = mean;
        d["theta"] = run.final_theta;
        d["seed"] = run.seed;
        return d;
      },
      py::arg("config"), py::arg("subspace") = "select", py::arg("order") = 1, py::arg("generations") = 20,
      py::arg("seed") = 1, py::arg("stop_error_pct") = 0.0, py::arg("ga_json") = "{}",
      "Runs the genetic search; ga_json overrides GaParams fields.");

  m.attr("DEFAULT_RECOIL_HZ") = kDefaultRecoilHz;
  m.attr("PROPAGATION_CUTOFF") = kPropagationCutoff;
}
