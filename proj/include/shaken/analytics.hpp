#pragma once

// Closed-form analytics for a phase-modulated lattice driven by
// phi(t) = alpha sin(omega t): Bessel harmonics of the drive, band-to-band
// matrix elements of sin(2x) and cos(2x), golden-rule rates, the frequency
// subspaces used for waveform optimization, and the carrier + moving lattice
// picture of the drive.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "shaken/lattice.hpp"

namespace shaken {

// Bessel function of the first kind J_k(x) for integer k >= 0, by Miller's
// backward recurrence normalized with J_0 + 2 sum J_2k = 1.
double bessel_j(int k, double x);

enum class DriveParity { even_cosine, odd_sine };

struct BesselWeight {
  int k;
  double value;  // J_k(alpha)
  DriveParity parity;
};

struct JacobiAngerDecomposition {
  double alpha = 0.0;
  int truncation_kmax = 0;
  std::vector<BesselWeight> weights;  // k = 0..kmax

  double j(int k) const { return weights.at(static_cast<std::size_t>(k)).value; }
  // J_0^2 + 2 sum_{k>=1} J_k^2, which tends to 1 as kmax grows.
  double normalization() const;
};

JacobiAngerDecomposition jacobi_anger(double alpha, int kmax);

struct TransitionElement {
  int r = 0;
  int r_prime = 0;
  double m_sin = 0.0;  // |<r'|sin 2x|r>|^2
  double m_cos = 0.0;  // |<r'|cos 2x|r>|^2
};

TransitionElement matrix_elements(const BlochSolution& bloch, int r, int r_prime);
TransitionElement matrix_elements(const LatticeConfig& config, int r, int r_prime);

// Lorentzian of half width `linewidth`, unit area.
double lorentzian(double detuning, double linewidth);

struct GoldenRuleRate {
  double even = 0.0;  // J_2k cos(2x) terms
  double odd = 0.0;   // J_{2k-1} sin(2x) terms
  double total() const { return even + odd; }
};

inline constexpr double kDefaultLinewidth = 0.05;
inline constexpr int kGoldenRuleHarmonics = 10;

// Golden-rule rate for a transition of energy `gap` with given squared matrix
// elements; the delta function is replaced by a Lorentzian.
GoldenRuleRate fgr_rate_terms(double depth_v0, double alpha, double omega, double gap, double m_sin,
                              double m_cos, double linewidth = kDefaultLinewidth);

double fgr_rate(const LatticeConfig& config, double alpha, double omega, int r, int r_prime,
                double linewidth = kDefaultLinewidth);

enum class SubspaceKind { all_band, band, half_band, band_plus_half, select };

std::string_view to_string(SubspaceKind kind);
SubspaceKind subspace_kind_from_string(std::string_view name);

struct SubspaceFrequency {
  std::string label;  // band:r:r', halfband:r:r' or grid:k
  double omega_wr;
};

struct FrequencySubspace {
  SubspaceKind kind = SubspaceKind::select;
  std::vector<SubspaceFrequency> frequencies;  // ascending

  std::size_t size() const { return frequencies.size(); }
};

inline constexpr double kSelectThreshold = 0.1;
inline constexpr int kSubspaceBands = 5;  // bands 0..4 for band / half_band

// Builds the requested subspace at q = 0. `duration` (1/omega_R) sets the
// Fourier grid spacing 2pi/duration of the all_band class, whose top is the
// 0 -> 5 transition.
FrequencySubspace build_subspace(const LatticeConfig& config, SubspaceKind kind, double duration);

// Band pairs with m_sin or m_cos above kSelectThreshold among bands 0..5.
std::vector<TransitionElement> select_transitions(const BlochSolution& bloch);

// Resolves a symbolic frequency `band:r:r'`, `halfband:r:r'` or a bare number
// (omega_R units) to an angular frequency in omega_R units.
double resolve_frequency(const LatticeConfig& config, const BlochSolution& bloch, std::string_view spec);

// Static carrier plus two counter-propagating lattices. Depths follow the V0
// convention (potential = depth/2 * cos(...)).
struct MovingLatticeDecomposition {
  double carrier_depth;    // V0 J0(alpha)
  double traveling_depth;  // V0 J1(alpha), each lattice
  double velocity;         // hbar k_L / m units; lattices move at +-velocity
};

MovingLatticeDecomposition moving_lattice(double depth_v0, double alpha, double omega);

void write_matrix_elements_csv(std::ostream& out, const std::vector<TransitionElement>& elements);

}  // namespace shaken
