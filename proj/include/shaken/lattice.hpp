#pragma once

// Static 1-D optical lattice in recoil units.
//
// Lengths are in 1/k_L, energies in E_R, times in 1/omega_R and momenta in
// hbar*k_L. The potential is (V0/2) cos(2x + phi); at quasimomentum q the
// plane wave with ladder index n carries momentum 2n + q and kinetic energy
// (2n + q)^2.

#include <array>
#include <complex>
#include <iosfwd>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace shaken {

using cplx = std::complex<double>;

// Recoil frequency omega_R / 2pi of a lattice atom, h / (2 m lambda^2).
constexpr double recoil_frequency_hz(double mass_kg, double wavelength_m) {
  constexpr double planck = 6.62607015e-34;
  return planck / (2.0 * mass_kg * wavelength_m * wavelength_m);
}

inline constexpr double kRb87MassKg = 86.909180527 * 1.66053906660e-27;
inline constexpr double kDefaultWavelengthM = 852e-9;
// 87Rb at 852 nm evaluates to 3162.5 Hz; frozen at 3162 Hz.
inline constexpr double kDefaultRecoilHz = 3162.0;

struct LatticeConfig {
  double depth_v0 = 10.0;
  int basis_cutoff_nmax = 10;
  double recoil_frequency_hz = kDefaultRecoilHz;
  double lattice_wavelength_m = kDefaultWavelengthM;

  // Throws ConfigError when an invariant is violated.
  void validate() const;

  // Dimensionless duration for a time in seconds.
  double to_recoil_time(double seconds) const {
    return 2.0 * std::numbers::pi * recoil_frequency_hz * seconds;
  }
  // Frequency in Hz for an angular frequency in omega_R units.
  double to_hz(double omega_wr) const { return omega_wr * recoil_frequency_hz; }
  double from_hz(double hz) const { return hz / recoil_frequency_hz; }

  int dimension() const { return 2 * basis_cutoff_nmax + 1; }

  bool operator==(const LatticeConfig&) const = default;
};

// Amplitudes on the momentum ladder n = -n_max..n_max at fixed quasimomentum.
class MomentumState {
 public:
  static constexpr double kNormTolerance = 1e-10;

  // Takes ownership of amplitudes (size must be odd) and checks the norm.
  MomentumState(Eigen::VectorXcd amplitudes, double quasimomentum = 0.0);

  // Rescales arbitrary nonzero amplitudes to unit norm.
  static MomentumState normalized(Eigen::VectorXcd amplitudes, double quasimomentum = 0.0);

  int n_max() const { return static_cast<int>(amplitudes_.size() / 2); }
  double quasimomentum() const { return quasimomentum_; }
  const Eigen::VectorXcd& amplitudes() const { return amplitudes_; }

  // Amplitude of ladder index n; zero outside the stored range.
  cplx amplitude(int n) const;
  double norm_squared() const { return amplitudes_.squaredNorm(); }

  // Same state on a different cutoff. Truncation drops the outer mass and
  // renormalizes nothing, so it must be negligible.
  MomentumState resized(int n_max) const;

  cplx inner(const MomentumState& other) const;  // <this|other>

 private:
  Eigen::VectorXcd amplitudes_;
  double quasimomentum_;
};

enum class Parity { even, odd, none };

struct BlochSolution {
  std::vector<double> band_energies;  // ascending, E_R
  std::vector<MomentumState> band_states;
  std::vector<Parity> parities;  // Parity::none away from q = 0
  double quasimomentum = 0.0;

  int band_count() const { return static_cast<int>(band_energies.size()); }
  const MomentumState& state(int band) const;
  double energy(int band) const;
};

// P_n for |n| <= 5; mass outside that window is dropped.
class PopulationVector {
 public:
  static constexpr int kCutoff = 5;
  static constexpr int kSize = 2 * kCutoff + 1;

  PopulationVector() { values_.fill(0.0); }
  explicit PopulationVector(const std::array<double, kSize>& values);

  double operator[](int n) const { return values_.at(static_cast<std::size_t>(n + kCutoff)); }
  double& operator[](int n) { return values_.at(static_cast<std::size_t>(n + kCutoff)); }
  const std::array<double, kSize>& values() const { return values_; }
  double sum() const;
  double magnitude() const;

 private:
  std::array<double, kSize> values_;
};

// Equal superposition of the +-2n hbar k_L states with relative phase theta.
struct SplitTarget {
  int order = 1;
  double theta = 0.0;
};

struct TransitionFrequency {
  double omega_wr;  // angular frequency in omega_R units
  double hz;
  double khz() const { return hz * 1e-3; }
};

// Hamiltonian at quasimomentum q for a lattice displaced by phi, in E_R.
Eigen::MatrixXcd build_hamiltonian(const LatticeConfig& config, double q, double phi = 0.0);

// Eigenpairs sorted by energy. At q = 0 the even and odd sectors are
// diagonalized separately so every band has definite parity, and exact ties
// order even before odd.
BlochSolution solve_bloch(const LatticeConfig& config, double q = 0.0);

TransitionFrequency transition_frequency(const LatticeConfig& config, const BlochSolution& bloch,
                                         int r, int r_prime);
TransitionFrequency transition_frequency(const LatticeConfig& config, int r, int r_prime);

MomentumState make_split_state(const SplitTarget& target, int n_max);
MomentumState make_split_state(const SplitTarget& target, const LatticeConfig& config);

PopulationVector population_vector(const MomentumState& state);

// Cosine distance between population vectors, in percent.
double error_metric(const PopulationVector& a, const PopulationVector& b);

// |<target|state>|^2
double split_overlap(const MomentumState& state, const SplitTarget& target);

// arg(c_{+n}) - arg(c_{-n}) wrapped to (-pi, pi].
double extract_relative_phase(const MomentumState& state, int order);

double wrap_phase(double angle);

// Rows `band,energy_ER,q_hkL` for every band of every solution.
void write_band_table(std::ostream& out, const std::vector<BlochSolution>& solutions);

}  // namespace shaken
