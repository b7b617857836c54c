#pragma once

// Time evolution under H = p^2 + (V0/2) cos(2x + phi(t)) (recoil units) with
// a symmetric split-step Fourier method over one lattice period.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <vector>

#include "shaken/lattice.hpp"

namespace shaken {

enum class Envelope { none, smooth_window };

struct ToneComponent {
  double omega = 0.0;  // omega_R units
  double alpha = 0.0;  // rad
  double phase = 0.0;  // rad
};

// phi(t) = envelope(t) * sum_j alpha_j sin(omega_j t + phase_j) on [0, T].
// smooth_window is sin^2(pi t / T).
struct ShakingWaveform {
  std::vector<ToneComponent> components;
  double duration = 1.0;  // 1/omega_R
  Envelope envelope = Envelope::none;

  void validate() const;
  double max_omega() const;
  double amplitude_bound() const;  // sum_j alpha_j
  // No range check; see evaluate_phase.
  double phase_at(double t) const;
};

// phi(t); throws ConfigError for t outside [0, T].
double evaluate_phase(const ShakingWaveform& waveform, double t);

inline constexpr int kDefaultGridPoints = 64;
inline constexpr int kPropagationCutoff = 16;
inline constexpr double kDefaultTimeStep = 1e-3;
inline constexpr double kMinStepsPerPeriod = 50.0;

// Repeated split-step updates on a fixed grid at fixed quasimomentum.
// Holds FFTW plans and work buffers; one instance per thread.
class SplitStepPropagator {
 public:
  SplitStepPropagator(const LatticeConfig& config, double quasimomentum, double dt,
                      int grid_points = kDefaultGridPoints);
  ~SplitStepPropagator();
  SplitStepPropagator(SplitStepPropagator&&) noexcept;
  SplitStepPropagator& operator=(SplitStepPropagator&&) noexcept;
  SplitStepPropagator(const SplitStepPropagator&) = delete;
  SplitStepPropagator& operator=(const SplitStepPropagator&) = delete;

  int grid_points() const;
  double dt() const;

  // Loads a state onto the grid (its n_max must fit below grid_points / 2).
  void load(const MomentumState& state);
  // Half kinetic, full potential at lattice phase phi, half kinetic.
  void step(double phi);
  // Current state truncated to |n| <= n_max.
  MomentumState state(int n_max) const;
  double norm_squared() const;
  cplx amplitude(int n) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// One split-step update of a momentum state.
MomentumState step(const LatticeConfig& config, const MomentumState& state, double phi, double dt);

struct PropagationOptions {
  double dt = kDefaultTimeStep;
  int sample_stride = 100;
  int grid_points = kDefaultGridPoints;
  int output_cutoff = kPropagationCutoff;
  // Shrinks dt to keep kMinStepsPerPeriod steps per period of the fastest tone.
  bool auto_tighten = true;
  double max_norm_drift = 1e-6;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<PopulationVector> populations;
  std::vector<double> errors;        // percent, vs the split target
  std::vector<double> overlap_theta0;
  std::vector<double> overlap_thetapi;
  std::vector<double> relative_phase;  // NaN where an arm vanishes
  std::vector<double> norms;
  MomentumState final_state{Eigen::VectorXcd::Ones(1), 0.0};
  SplitTarget target;

  std::size_t size() const { return times.size(); }
  std::size_t argmin_error() const;
  double min_error() const { return errors.at(argmin_error()); }
  double max_error() const;
  double max_norm_drift() const;
};

Trajectory propagate(const LatticeConfig& config, const MomentumState& initial, const ShakingWaveform& waveform,
                     const SplitTarget& target, const PropagationOptions& options = {});

// Populations of the state propagated under `waveform` at its final time, the
// cheap path used for fitness evaluation.
MomentumState propagate_final(const LatticeConfig& config, const MomentumState& initial,
                              const ShakingWaveform& waveform, const PropagationOptions& options = {});

// Ground Bloch state at q = 0, lifted to the propagation cutoff.
MomentumState ground_state(const LatticeConfig& config, int n_max = kPropagationCutoff, double q = 0.0);

// 1 ms at the configured recoil frequency.
double default_hold_duration(const LatticeConfig& config);

// Holds split(order) in a lattice shaken at omega = 4 * order omega_R.
Trajectory acceleration_hold(const LatticeConfig& config, int order, double alpha, double duration,
                             double theta = 0.0, const PropagationOptions& options = {});

enum class WidthConvention {
  half_width,  // standard deviation sigma_q / 2
  fwhm,        // sigma_q is the full width at half maximum
};

struct EnsembleResult {
  std::vector<double> quasimomenta;
  std::vector<double> times;
  std::vector<PopulationVector> mean_populations;
  std::vector<double> errors;  // error of the mean population vs target
  double min_error = 0.0;
  double time_of_min = 0.0;
};

// Propagates the ground Bloch state of each quasimomentum in a deterministic
// Gaussian quantile grid and averages population vectors over members.
EnsembleResult quasimomentum_ensemble(const LatticeConfig& config, const ShakingWaveform& waveform, double sigma_q,
                                      int n_samples, const SplitTarget& target,
                                      const PropagationOptions& options = {},
                                      WidthConvention convention = WidthConvention::half_width);

// Reference integrator: exact exponentials of the instantaneous Hamiltonian,
// phi sampled at step midpoints. Only for small bases (n_max <= 8).
MomentumState oracle_propagate(const LatticeConfig& config, const MomentumState& initial,
                               const ShakingWaveform& waveform, double dt_dense);

inline constexpr int kOracleMaxCutoff = 8;

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace shaken
