#include "shaken/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>
#include <fftw3.h>

#include "shaken/error.hpp"

namespace shaken {

namespace {

constexpr double kPi = std::numbers::pi;

// FFTW planning is not thread safe; execution on distinct buffers is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

int grid_mode_to_n(int k, int grid) { return k < grid / 2 ? k : k - grid; }

// e^{-i a}; Taylor series through a^13 is exact to round-off for |a| <= 0.1.
inline cplx expi_neg(double a) {
  if (std::abs(a) > 0.1) return std::polar(1.0, -a);
  constexpr double c2 = -1.0 / 2, c4 = 1.0 / 24, c6 = -1.0 / 720, c8 = 1.0 / 40320, c10 = -1.0 / 3628800,
                   c12 = 1.0 / 479001600;
  constexpr double s3 = -1.0 / 6, s5 = 1.0 / 120, s7 = -1.0 / 5040, s9 = 1.0 / 362880, s11 = -1.0 / 39916800,
                   s13 = 1.0 / 6227020800;
  const double x = a * a;
  const double c = 1.0 + x * (c2 + x * (c4 + x * (c6 + x * (c8 + x * (c10 + x * c12)))));
  const double s = a * (1.0 + x * (s3 + x * (s5 + x * (s7 + x * (s9 + x * (s11 + x * s13))))));
  return {c, -s};
}

int grid_for_cutoff(int n_max) {
  int g = kDefaultGridPoints;
  while (g < 4 * n_max) g *= 2;
  return g;
}

}  // namespace

void ShakingWaveform::validate() const {
  if (!(duration > 0.0) || !std::isfinite(duration)) throw ConfigError("waveform duration must be > 0");
  for (const auto& c : components) {
    if (!(c.alpha >= 0.0) || !std::isfinite(c.alpha)) throw ConfigError("tone amplitude must be finite and >= 0");
    if (!std::isfinite(c.omega) || !std::isfinite(c.phase)) throw ConfigError("tone omega/phase must be finite");
  }
}

double ShakingWaveform::max_omega() const {
  double m = 0.0;
  for (const auto& c : components) {
    if (c.alpha > 0.0) m = std::max(m, std::abs(c.omega));
  }
  return m;
}

double ShakingWaveform::amplitude_bound() const {
  double s = 0.0;
  for (const auto& c : components) s += c.alpha;
  return s;
}

double ShakingWaveform::phase_at(double t) const {
  double sum = 0.0;
  for (const auto& c : components) {
    if (c.alpha != 0.0) sum += c.alpha * std::sin(c.omega * t + c.phase);
  }
  if (envelope == Envelope::smooth_window) {
    const double s = std::sin(kPi * t / duration);
    sum *= s * s;
  }
  return sum;
}

double evaluate_phase(const ShakingWaveform& waveform, double t) {
  const double slack = 1e-12 * waveform.duration;
  if (t < -slack || t > waveform.duration + slack) {
    throw ConfigError("time " + std::to_string(t) + " outside the waveform window [0, " +
                      std::to_string(waveform.duration) + "]");
  }
  return waveform.phase_at(std::clamp(t, 0.0, waveform.duration));
}

// ---------------------------------------------------------------------------

struct SplitStepPropagator::Impl {
  int grid;
  double dt;
  double quasimomentum;
  double depth;
  // Interleaved (re, im). The state lives in `momentum` between steps.
  fftw_complex* momentum = nullptr;
  fftw_complex* position = nullptr;
  fftw_plan to_position = nullptr;
  fftw_plan to_momentum = nullptr;
  std::vector<double> kinetic_re;
  std::vector<double> kinetic_im;
  std::vector<double> cos2x;
  std::vector<double> sin2x;

  Impl(const LatticeConfig& config, double q, double step, int grid_points)
      : grid(grid_points), dt(step), quasimomentum(q), depth(config.depth_v0) {
    const auto n = static_cast<std::size_t>(grid);
    momentum = fftw_alloc_complex(n);
    position = fftw_alloc_complex(n);
    {
      std::lock_guard lock(fftw_planner_mutex());
      // Backward (+i) maps c_n to psi(x_j) = sum_n c_n e^{2 i n x_j}.
      to_position = fftw_plan_dft_1d(grid, momentum, position, FFTW_BACKWARD, FFTW_ESTIMATE);
      to_momentum = fftw_plan_dft_1d(grid, position, momentum, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    std::fill(&momentum[0][0], &momentum[0][0] + 2 * n, 0.0);
    std::fill(&position[0][0], &position[0][0] + 2 * n, 0.0);
    kinetic_re.resize(n);
    kinetic_im.resize(n);
    cos2x.resize(n);
    sin2x.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double p = 2.0 * grid_mode_to_n(static_cast<int>(k), grid) + q;
      kinetic_re[k] = std::cos(p * p * dt / 2.0);
      kinetic_im[k] = -std::sin(p * p * dt / 2.0);
      // x_j = pi j / grid spans one lattice period.
      const double two_x = 2.0 * kPi * static_cast<double>(k) / grid;
      cos2x[k] = std::cos(two_x);
      sin2x[k] = std::sin(two_x);
    }
  }

  ~Impl() {
    std::lock_guard lock(fftw_planner_mutex());
    if (to_position) fftw_destroy_plan(to_position);
    if (to_momentum) fftw_destroy_plan(to_momentum);
    fftw_free(momentum);
    fftw_free(position);
  }

  void apply_kinetic_half() {
    for (std::size_t k = 0; k < static_cast<std::size_t>(grid); ++k) {
      const double re = momentum[k][0];
      const double im = momentum[k][1];
      momentum[k][0] = re * kinetic_re[k] - im * kinetic_im[k];
      momentum[k][1] = re * kinetic_im[k] + im * kinetic_re[k];
    }
  }

  void step(double phi) {
    apply_kinetic_half();
    fftw_execute(to_position);
    const double cphi = std::cos(phi);
    const double sphi = std::sin(phi);
    const double scale = 1.0 / grid;
    const double strength = depth / 2.0 * dt;
    for (std::size_t j = 0; j < static_cast<std::size_t>(grid); ++j) {
      const double v = cos2x[j] * cphi - sin2x[j] * sphi;  // cos(2x_j + phi)
      const cplx f = scale * expi_neg(strength * v);
      const double re = position[j][0];
      const double im = position[j][1];
      position[j][0] = re * f.real() - im * f.imag();
      position[j][1] = re * f.imag() + im * f.real();
    }
    fftw_execute(to_momentum);
    apply_kinetic_half();
  }

  cplx amplitude(int n) const {
    if (n < -grid / 2 || n >= grid / 2) return {0.0, 0.0};
    const auto k = static_cast<std::size_t>(n >= 0 ? n : n + grid);
    return {momentum[k][0], momentum[k][1]};
  }

  void set(int n, cplx value) {
    const auto k = static_cast<std::size_t>(n >= 0 ? n : n + grid);
    momentum[k][0] = value.real();
    momentum[k][1] = value.imag();
  }

  double norm_squared() const {
    double acc = 0.0;
    for (std::size_t k = 0; k < static_cast<std::size_t>(grid); ++k) {
      acc += momentum[k][0] * momentum[k][0] + momentum[k][1] * momentum[k][1];
    }
    return acc;
  }
};

SplitStepPropagator::SplitStepPropagator(const LatticeConfig& config, double quasimomentum, double dt,
                                         int grid_points) {
  if (!(dt > 0.0)) throw ConfigError("time step must be > 0");
  if (grid_points < 8) throw ConfigError("split-step grid needs at least 8 points");
  impl_ = std::make_unique<Impl>(config, quasimomentum, dt, grid_points);
}

SplitStepPropagator::~SplitStepPropagator() = default;
SplitStepPropagator::SplitStepPropagator(SplitStepPropagator&&) noexcept = default;
SplitStepPropagator& SplitStepPropagator::operator=(SplitStepPropagator&&) noexcept = default;

int SplitStepPropagator::grid_points() const { return impl_->grid; }
double SplitStepPropagator::dt() const { return impl_->dt; }

void SplitStepPropagator::load(const MomentumState& state) {
  const int n_max = state.n_max();
  if (2 * n_max + 1 >= impl_->grid) {
    throw ConfigError("state cutoff " + std::to_string(n_max) + " does not fit a " + std::to_string(impl_->grid) +
                      "-point grid");
  }
  if (std::abs(state.quasimomentum() - impl_->quasimomentum) > 1e-12) {
    throw ConfigError("state quasimomentum differs from the propagator's");
  }
  for (int n = -impl_->grid / 2; n < impl_->grid / 2; ++n) impl_->set(n, state.amplitude(n));
}

void SplitStepPropagator::step(double phi) { impl_->step(phi); }

MomentumState SplitStepPropagator::state(int n_max) const {
  if (2 * n_max + 1 > impl_->grid) throw ConfigError("requested cutoff exceeds the grid");
  Eigen::VectorXcd out(2 * n_max + 1);
  for (int n = -n_max; n <= n_max; ++n) out(n + n_max) = impl_->amplitude(n);
  return MomentumState::normalized(std::move(out), impl_->quasimomentum);
}

double SplitStepPropagator::norm_squared() const { return impl_->norm_squared(); }
cplx SplitStepPropagator::amplitude(int n) const { return impl_->amplitude(n); }

MomentumState step(const LatticeConfig& config, const MomentumState& state, double phi, double dt) {
  SplitStepPropagator prop(config, state.quasimomentum(), dt, grid_for_cutoff(state.n_max()));
  prop.load(state);
  prop.step(phi);
  return prop.state(state.n_max());
}

// ---------------------------------------------------------------------------

std::size_t Trajectory::argmin_error() const {
  if (errors.empty()) throw Error("empty trajectory");
  return static_cast<std::size_t>(std::min_element(errors.begin(), errors.end()) - errors.begin());
}

double Trajectory::max_error() const {
  if (errors.empty()) throw Error("empty trajectory");
  return *std::max_element(errors.begin(), errors.end());
}

double Trajectory::max_norm_drift() const {
  double d = 0.0;
  for (double n : norms) d = std::max(d, std::abs(1.0 - n));
  return d;
}

namespace {

struct StepPlan {
  long steps;
  double dt;
};

StepPlan plan_steps(const ShakingWaveform& waveform, const PropagationOptions& options) {
  waveform.validate();
  if (!(options.dt > 0.0)) throw ConfigError("time step must be > 0");
  double dt = options.dt;
  const double omega_max = waveform.max_omega();
  if (omega_max > 0.0) {
    const double limit = 2.0 * kPi / (kMinStepsPerPeriod * omega_max);
    if (dt > limit) {
      if (!options.auto_tighten) {
        std::ostringstream msg;
        msg << "time step " << dt << " does not resolve omega = " << omega_max << " (need dt <= " << limit << ")";
        throw ConfigError(msg.str());
      }
      dt = limit;
    }
  }
  const long steps = std::max(1L, static_cast<long>(std::ceil(waveform.duration / dt - 1e-9)));
  return {steps, waveform.duration / static_cast<double>(steps)};
}

void check_drift(double norm, double time, const PropagationOptions& options) {
  if (std::abs(1.0 - norm) > options.max_norm_drift) {
    std::ostringstream msg;
    msg << "norm drifted to " << std::setprecision(12) << norm << " at t = " << time
        << " omega_R^-1; unstable configuration";
    throw PropagationError(msg.str());
  }
}

}  // namespace

Trajectory propagate(const LatticeConfig& config, const MomentumState& initial, const ShakingWaveform& waveform,
                     const SplitTarget& target, const PropagationOptions& options) {
  config.validate();
  if (options.sample_stride < 1) throw ConfigError("sample stride must be >= 1");
  const StepPlan plan = plan_steps(waveform, options);
  SplitStepPropagator prop(config, initial.quasimomentum(), plan.dt, options.grid_points);
  prop.load(initial);

  const PopulationVector target_pop = population_vector(make_split_state(target, std::max(target.order, 5)));
  Trajectory traj;
  traj.target = target;
  const double s = 1.0 / std::sqrt(2.0);
  auto record = [&](double t) {
    PopulationVector p;
    for (int n = -PopulationVector::kCutoff; n <= PopulationVector::kCutoff; ++n) p[n] = std::norm(prop.amplitude(n));
    const cplx plus = prop.amplitude(target.order);
    const cplx minus = prop.amplitude(-target.order);
    const double norm = prop.norm_squared();
    traj.times.push_back(t);
    traj.populations.push_back(p);
    traj.errors.push_back(p.magnitude() > 0.0 ? error_metric(p, target_pop) : 100.0);
    traj.overlap_theta0.push_back(std::norm(s * (plus + minus)));
    traj.overlap_thetapi.push_back(std::norm(s * (minus - plus)));
    traj.relative_phase.push_back(std::abs(plus) > 1e-6 && std::abs(minus) > 1e-6
                                      ? wrap_phase(std::arg(plus * std::conj(minus)))
                                      : std::numeric_limits<double>::quiet_NaN());
    traj.norms.push_back(norm);
    check_drift(norm, t, options);
  };

  record(0.0);
  for (long i = 0; i < plan.steps; ++i) {
    prop.step(waveform.phase_at((static_cast<double>(i) + 0.5) * plan.dt));
    const long done = i + 1;
    if (done % options.sample_stride == 0 || done == plan.steps) {
      record(done == plan.steps ? waveform.duration : static_cast<double>(done) * plan.dt);
    }
  }
  traj.final_state = prop.state(std::min(options.output_cutoff, options.grid_points / 2 - 1));
  return traj;
}

MomentumState propagate_final(const LatticeConfig& config, const MomentumState& initial,
                              const ShakingWaveform& waveform, const PropagationOptions& options) {
  const StepPlan plan = plan_steps(waveform, options);
  SplitStepPropagator prop(config, initial.quasimomentum(), plan.dt, options.grid_points);
  prop.load(initial);
  for (long i = 0; i < plan.steps; ++i) prop.step(waveform.phase_at((static_cast<double>(i) + 0.5) * plan.dt));
  check_drift(prop.norm_squared(), waveform.duration, options);
  return prop.state(std::min(options.output_cutoff, options.grid_points / 2 - 1));
}

MomentumState ground_state(const LatticeConfig& config, int n_max, double q) {
  return solve_bloch(config, q).state(0).resized(n_max);
}

double default_hold_duration(const LatticeConfig& config) { return config.to_recoil_time(1e-3); }

Trajectory acceleration_hold(const LatticeConfig& config, int order, double alpha, double duration, double theta,
                             const PropagationOptions& options) {
  if (order < 1) throw ConfigError("split order must be positive");
  if (!(alpha >= 0.0)) throw ConfigError("shaking amplitude must be >= 0");
  const SplitTarget target{order, theta};
  ShakingWaveform waveform;
  waveform.duration = duration;
  waveform.envelope = Envelope::none;
  waveform.components.push_back({4.0 * order, alpha, 0.0});
  return propagate(config, make_split_state(target, options.output_cutoff), waveform, target, options);
}

EnsembleResult quasimomentum_ensemble(const LatticeConfig& config, const ShakingWaveform& waveform, double sigma_q,
                                      int n_samples, const SplitTarget& target, const PropagationOptions& options,
                                      WidthConvention convention) {
  if (!(sigma_q >= 0.0)) throw ConfigError("momentum width must be >= 0");
  if (n_samples < 1) throw ConfigError("ensemble needs at least one member");
  const double stddev =
      convention == WidthConvention::half_width ? sigma_q / 2.0 : sigma_q / (2.0 * std::sqrt(2.0 * std::log(2.0)));

  EnsembleResult out;
  for (int i = 0; i < n_samples; ++i) {
    const double u = (i + 0.5) / n_samples;
    const double z = std::sqrt(2.0) * boost::math::erf_inv(2.0 * u - 1.0);
    out.quasimomenta.push_back(stddev == 0.0 ? 0.0 : stddev * z);
  }

  const PopulationVector target_pop = population_vector(make_split_state(target, std::max(target.order, 5)));
  for (double q : out.quasimomenta) {
    const Trajectory member =
        propagate(config, ground_state(config, options.output_cutoff, q), waveform, target, options);
    if (out.times.empty()) {
      out.times = member.times;
      out.mean_populations.assign(member.size(), PopulationVector{});
    }
    for (std::size_t s = 0; s < member.size(); ++s) {
      for (int n = -PopulationVector::kCutoff; n <= PopulationVector::kCutoff; ++n) {
        out.mean_populations[s][n] += member.populations[s][n] / n_samples;
      }
    }
  }
  for (const auto& p : out.mean_populations) out.errors.push_back(error_metric(p, target_pop));
  const auto best = std::min_element(out.errors.begin(), out.errors.end()) - out.errors.begin();
  out.min_error = out.errors[static_cast<std::size_t>(best)];
  out.time_of_min = out.times[static_cast<std::size_t>(best)];
  return out;
}

MomentumState oracle_propagate(const LatticeConfig& config, const MomentumState& initial,
                               const ShakingWaveform& waveform, double dt_dense) {
  if (initial.n_max() > kOracleMaxCutoff) {
    throw ConfigError("oracle propagation limited to n_max <= " + std::to_string(kOracleMaxCutoff));
  }
  if (!(dt_dense > 0.0)) throw ConfigError("time step must be > 0");
  waveform.validate();
  LatticeConfig small = config;
  small.basis_cutoff_nmax = initial.n_max();
  const long steps = std::max(1L, static_cast<long>(std::ceil(waveform.duration / dt_dense - 1e-9)));
  const double dt = waveform.duration / static_cast<double>(steps);

  Eigen::VectorXcd psi = initial.amplitudes();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver;
  for (long i = 0; i < steps; ++i) {
    const double phi = waveform.phase_at((static_cast<double>(i) + 0.5) * dt);
    solver.compute(build_hamiltonian(small, initial.quasimomentum(), phi));
    if (solver.info() != Eigen::Success) throw EigenSolverError("oracle eigendecomposition failed");
    const Eigen::VectorXcd phases =
        (solver.eigenvalues().cast<cplx>() * cplx{0.0, -dt}).array().exp().matrix();
    psi = solver.eigenvectors() * (phases.asDiagonal() * (solver.eigenvectors().adjoint() * psi));
  }
  return MomentumState::normalized(std::move(psi), initial.quasimomentum());
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "t_wr,norm,err_pct,D_theta0,D_thetapi";
  for (int n = -PopulationVector::kCutoff; n <= PopulationVector::kCutoff; ++n) out << ",P_" << n;
  out << '\n' << std::setprecision(12);
  for (std::size_t s = 0; s < trajectory.size(); ++s) {
    out << trajectory.times[s] << ',' << trajectory.norms[s] << ',' << trajectory.errors[s] << ','
        << trajectory.overlap_theta0[s] << ',' << trajectory.overlap_thetapi[s];
    for (double p : trajectory.populations[s].values()) out << ',' << p;
    out << '\n';
  }
}

}  // namespace shaken
