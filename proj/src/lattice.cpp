#include "shaken/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "shaken/error.hpp"

namespace shaken {

namespace {

constexpr double kTieTolerance = 1e-12;

int index_of(int n, int n_max) { return n + n_max; }

// Real symmetric Hamiltonian for phi = 0.
Eigen::MatrixXd static_hamiltonian(const LatticeConfig& config, double q) {
  const int n_max = config.basis_cutoff_nmax;
  const int dim = config.dimension();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  const double coupling = config.depth_v0 / 4.0;
  for (int n = -n_max; n <= n_max; ++n) {
    const int i = index_of(n, n_max);
    h(i, i) = (2.0 * n + q) * (2.0 * n + q);
    if (n < n_max) {
      h(i, i + 1) = coupling;
      h(i + 1, i) = coupling;
    }
  }
  return h;
}

// Rotates a real eigenvector so its largest component is positive. Ties are
// broken in the order n = 0, +1, -1, +2, -2, ...
void fix_sign(Eigen::VectorXd& v, int n_max) {
  int best = index_of(0, n_max);
  double best_mag = std::abs(v(best));
  for (int k = 1; k <= n_max; ++k) {
    for (int n : {k, -k}) {
      const int i = index_of(n, n_max);
      if (std::abs(v(i)) > best_mag * (1.0 + 1e-9) + 1e-300) {
        best = i;
        best_mag = std::abs(v(i));
      }
    }
  }
  if (v(best) < 0.0) v = -v;
}

struct Eigenpair {
  double energy;
  Eigen::VectorXd vector;
  Parity parity;
};

void diagonalize_into(const Eigen::MatrixXd& projected, const Eigen::MatrixXd& embedding, Parity parity,
                      std::vector<Eigenpair>& out) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(projected);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "eigensolver failed: dimension " << projected.rows() << ", Frobenius norm " << projected.norm()
        << ", max |H - H^T| " << (projected - projected.transpose()).cwiseAbs().maxCoeff();
    throw EigenSolverError(msg.str());
  }
  for (Eigen::Index k = 0; k < projected.rows(); ++k) {
    out.push_back({solver.eigenvalues()(k), embedding * solver.eigenvectors().col(k), parity});
  }
}

}  // namespace

void LatticeConfig::validate() const {
  if (!(depth_v0 >= 0.0) || !std::isfinite(depth_v0)) {
    throw ConfigError("depth_V0 must be finite and >= 0");
  }
  if (basis_cutoff_nmax < 5) {
    throw ConfigError("basis_cutoff_nmax must be >= 5");
  }
  if (!(recoil_frequency_hz > 0.0) || !std::isfinite(recoil_frequency_hz)) {
    throw ConfigError("recoil_frequency_hz must be > 0");
  }
}

MomentumState::MomentumState(Eigen::VectorXcd amplitudes, double quasimomentum)
    : amplitudes_(std::move(amplitudes)), quasimomentum_(quasimomentum) {
  if (amplitudes_.size() % 2 == 0) {
    throw ConfigError("momentum state needs an odd number of amplitudes (n = -n_max..n_max)");
  }
  const double norm = amplitudes_.squaredNorm();
  if (std::abs(norm - 1.0) > kNormTolerance) {
    std::ostringstream msg;
    msg << "momentum state not normalized: sum |c_n|^2 = " << std::setprecision(17) << norm;
    throw ConfigError(msg.str());
  }
}

MomentumState MomentumState::normalized(Eigen::VectorXcd amplitudes, double quasimomentum) {
  const double norm = amplitudes.norm();
  if (!(norm > 0.0)) throw ConfigError("cannot normalize a zero state");
  amplitudes /= norm;
  return MomentumState(std::move(amplitudes), quasimomentum);
}

cplx MomentumState::amplitude(int n) const {
  const int m = n_max();
  if (n < -m || n > m) return {0.0, 0.0};
  return amplitudes_(index_of(n, m));
}

MomentumState MomentumState::resized(int new_n_max) const {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(2 * new_n_max + 1);
  for (int n = -new_n_max; n <= new_n_max; ++n) out(index_of(n, new_n_max)) = amplitude(n);
  return MomentumState::normalized(std::move(out), quasimomentum_);
}

cplx MomentumState::inner(const MomentumState& other) const {
  const int m = std::max(n_max(), other.n_max());
  cplx acc{0.0, 0.0};
  for (int n = -m; n <= m; ++n) acc += std::conj(amplitude(n)) * other.amplitude(n);
  return acc;
}

const MomentumState& BlochSolution::state(int band) const {
  if (band < 0 || band >= band_count()) {
    throw IndexError("band index " + std::to_string(band) + " outside 0.." + std::to_string(band_count() - 1));
  }
  return band_states[static_cast<std::size_t>(band)];
}

double BlochSolution::energy(int band) const {
  state(band);
  return band_energies[static_cast<std::size_t>(band)];
}

PopulationVector::PopulationVector(const std::array<double, kSize>& values) : values_(values) {}

double PopulationVector::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

double PopulationVector::magnitude() const {
  double acc = 0.0;
  for (double v : values_) acc += v * v;
  return std::sqrt(acc);
}

Eigen::MatrixXcd build_hamiltonian(const LatticeConfig& config, double q, double phi) {
  const int n_max = config.basis_cutoff_nmax;
  const int dim = config.dimension();
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  // (V0/2) cos(2x + phi) = (V0/4) (e^{i phi} e^{2ix} + c.c.), raising n by one.
  const cplx up = (config.depth_v0 / 4.0) * std::polar(1.0, phi);
  for (int n = -n_max; n <= n_max; ++n) {
    const int i = index_of(n, n_max);
    h(i, i) = (2.0 * n + q) * (2.0 * n + q);
    if (n < n_max) {
      h(i + 1, i) = up;
      h(i, i + 1) = std::conj(up);
    }
  }
  return h;
}

BlochSolution solve_bloch(const LatticeConfig& config, double q) {
  config.validate();
  const int n_max = config.basis_cutoff_nmax;
  const int dim = config.dimension();
  const Eigen::MatrixXd h = static_hamiltonian(config, q);

  std::vector<Eigenpair> pairs;
  pairs.reserve(static_cast<std::size_t>(dim));
  const bool symmetric = (q == 0.0);
  if (symmetric) {
    const double s = 1.0 / std::sqrt(2.0);
    Eigen::MatrixXd even = Eigen::MatrixXd::Zero(dim, n_max + 1);
    Eigen::MatrixXd odd = Eigen::MatrixXd::Zero(dim, n_max);
    even(index_of(0, n_max), 0) = 1.0;
    for (int k = 1; k <= n_max; ++k) {
      even(index_of(k, n_max), k) = s;
      even(index_of(-k, n_max), k) = s;
      odd(index_of(k, n_max), k - 1) = s;
      odd(index_of(-k, n_max), k - 1) = -s;
    }
    diagonalize_into(even.transpose() * h * even, even, Parity::even, pairs);
    diagonalize_into(odd.transpose() * h * odd, odd, Parity::odd, pairs);
  } else {
    diagonalize_into(h, Eigen::MatrixXd::Identity(dim, dim), Parity::none, pairs);
  }

  std::stable_sort(pairs.begin(), pairs.end(), [](const Eigenpair& a, const Eigenpair& b) {
    if (std::abs(a.energy - b.energy) <= kTieTolerance) {
      return a.parity == Parity::even && b.parity != Parity::even;
    }
    return a.energy < b.energy;
  });

  BlochSolution out;
  out.quasimomentum = q;
  for (auto& p : pairs) {
    fix_sign(p.vector, n_max);
    // Tied pairs were reordered by parity; keep the reported energies ascending.
    const double e = out.band_energies.empty() ? p.energy : std::max(p.energy, out.band_energies.back());
    out.band_energies.push_back(e);
    out.band_states.push_back(MomentumState::normalized(p.vector.cast<cplx>(), q));
    out.parities.push_back(p.parity);
  }
  return out;
}

TransitionFrequency transition_frequency(const LatticeConfig& config, const BlochSolution& bloch, int r,
                                         int r_prime) {
  if (r == r_prime) throw IndexError("transition frequency needs two distinct bands");
  const double omega = std::abs(bloch.energy(r_prime) - bloch.energy(r));
  return {omega, config.to_hz(omega)};
}

TransitionFrequency transition_frequency(const LatticeConfig& config, int r, int r_prime) {
  return transition_frequency(config, solve_bloch(config, 0.0), r, r_prime);
}

MomentumState make_split_state(const SplitTarget& target, int n_max) {
  if (target.order < 1) throw ConfigError("split order must be positive");
  if (target.order > n_max) {
    throw ConfigError("split order " + std::to_string(target.order) + " exceeds basis cutoff " +
                      std::to_string(n_max));
  }
  Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(2 * n_max + 1);
  const double s = 1.0 / std::sqrt(2.0);
  amps(index_of(target.order, n_max)) = std::polar(s, target.theta);
  amps(index_of(-target.order, n_max)) = s;
  return MomentumState(std::move(amps), 0.0);
}

MomentumState make_split_state(const SplitTarget& target, const LatticeConfig& config) {
  return make_split_state(target, config.basis_cutoff_nmax);
}

PopulationVector population_vector(const MomentumState& state) {
  PopulationVector p;
  for (int n = -PopulationVector::kCutoff; n <= PopulationVector::kCutoff; ++n) {
    p[n] = std::norm(state.amplitude(n));
  }
  return p;
}

double error_metric(const PopulationVector& a, const PopulationVector& b) {
  const double ma = a.magnitude();
  const double mb = b.magnitude();
  if (!(ma > 0.0) || !(mb > 0.0)) {
    throw ConfigError("error metric undefined for a zero-magnitude population vector");
  }
  double dot = 0.0;
  for (int n = -PopulationVector::kCutoff; n <= PopulationVector::kCutoff; ++n) dot += a[n] * b[n];
  const double cosine = std::clamp(dot / (ma * mb), 0.0, 1.0);
  return (1.0 - cosine) * 100.0;
}

double split_overlap(const MomentumState& state, const SplitTarget& target) {
  const int n = target.order;
  const double s = 1.0 / std::sqrt(2.0);
  // <target|state> with target amplitudes e^{i theta}/sqrt2 at +n, 1/sqrt2 at -n.
  const cplx overlap = s * std::polar(1.0, -target.theta) * state.amplitude(n) + s * state.amplitude(-n);
  return std::norm(overlap);
}

double wrap_phase(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(angle, two_pi);
  if (w <= -std::numbers::pi) w += two_pi;
  if (w > std::numbers::pi) w -= two_pi;
  return w;
}

double extract_relative_phase(const MomentumState& state, int order) {
  const cplx plus = state.amplitude(order);
  const cplx minus = state.amplitude(-order);
  if (std::abs(plus) <= 1e-6 || std::abs(minus) <= 1e-6) {
    throw PhaseUndefinedError("relative phase undefined: an arm of order " + std::to_string(order) +
                              " has vanishing amplitude");
  }
  return wrap_phase(std::arg(plus * std::conj(minus)));
}

void write_band_table(std::ostream& out, const std::vector<BlochSolution>& solutions) {
  out << "band,energy_ER,q_hkL\n";
  out << std::setprecision(12);
  for (const auto& s : solutions) {
    for (int r = 0; r < s.band_count(); ++r) {
      out << r << ',' << s.band_energies[static_cast<std::size_t>(r)] << ',' << s.quasimomentum << '\n';
    }
  }
}

}  // namespace shaken
