#include "shaken/analytics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

#include "shaken/error.hpp"

namespace shaken {

double bessel_j(int k, double x) {
  if (k < 0) throw ConfigError("bessel_j needs k >= 0");
  if (x == 0.0) return k == 0 ? 1.0 : 0.0;
  const bool negate = (x < 0.0) && (k % 2 == 1);
  x = std::abs(x);

  // Start well above both k and x so the recurrence is dominated by J.
  const int start = 2 * ((std::max(k, static_cast<int>(x)) + 20 + static_cast<int>(std::sqrt(40.0 * (k + x)))) / 2);
  double next = 0.0;  // J_{m+1}
  double cur = 1e-300;  // J_m
  double sum = 0.0;     // J_0 + 2 sum J_{2j}, unnormalized
  double result = 0.0;
  for (int m = start; m >= 1; --m) {
    const double prev = 2.0 * m / x * cur - next;  // J_{m-1}
    next = cur;
    cur = prev;
    if (std::abs(cur) > 1e250) {
      cur *= 1e-250;
      next *= 1e-250;
      sum *= 1e-250;
      result *= 1e-250;
    }
    if (m - 1 == k) result = cur;
    if ((m - 1) % 2 == 0) sum += (m - 1 == 0) ? cur : 2.0 * cur;
  }
  const double value = result / sum;
  return negate ? -value : value;
}

double JacobiAngerDecomposition::normalization() const {
  double acc = 0.0;
  for (const auto& w : weights) acc += (w.k == 0 ? 1.0 : 2.0) * w.value * w.value;
  return acc;
}

JacobiAngerDecomposition jacobi_anger(double alpha, int kmax) {
  if (kmax < 2) throw ConfigError("Jacobi-Anger truncation needs kmax >= 2");
  JacobiAngerDecomposition out;
  out.alpha = alpha;
  out.truncation_kmax = kmax;
  for (int k = 0; k <= kmax; ++k) {
    out.weights.push_back({k, bessel_j(k, alpha), k % 2 == 0 ? DriveParity::even_cosine : DriveParity::odd_sine});
  }
  return out;
}

TransitionElement matrix_elements(const BlochSolution& bloch, int r, int r_prime) {
  const MomentumState& from = bloch.state(r);
  const MomentumState& to = bloch.state(r_prime);
  const int n_max = from.n_max();
  // cos(2x) raises or lowers n with weight 1/2; sin(2x) = (e^{2ix} - e^{-2ix})/2i
  // raises with -i/2 and lowers with +i/2.
  cplx sin_elem{0.0, 0.0};
  cplx cos_elem{0.0, 0.0};
  for (int n = -n_max; n <= n_max; ++n) {
    const cplx c = from.amplitude(n);
    const cplx up = std::conj(to.amplitude(n + 1)) * c;
    const cplx down = std::conj(to.amplitude(n - 1)) * c;
    cos_elem += 0.5 * (up + down);
    sin_elem += cplx{0.0, -0.5} * up + cplx{0.0, 0.5} * down;
  }
  return {r, r_prime, std::norm(sin_elem), std::norm(cos_elem)};
}

TransitionElement matrix_elements(const LatticeConfig& config, int r, int r_prime) {
  return matrix_elements(solve_bloch(config, 0.0), r, r_prime);
}

double lorentzian(double detuning, double linewidth) {
  if (!(linewidth > 0.0)) throw ConfigError("linewidth must be > 0");
  return (linewidth / std::numbers::pi) / (detuning * detuning + linewidth * linewidth);
}

GoldenRuleRate fgr_rate_terms(double depth_v0, double alpha, double omega, double gap, double m_sin,
                              double m_cos, double linewidth) {
  const double prefactor = 2.0 * std::numbers::pi * depth_v0 * depth_v0;
  GoldenRuleRate rate;
  for (int k = 1; k <= kGoldenRuleHarmonics; ++k) {
    const double j_even = bessel_j(2 * k, alpha);
    const double j_odd = bessel_j(2 * k - 1, alpha);
    rate.even += prefactor * j_even * j_even * m_cos * lorentzian(gap - 2.0 * k * omega, linewidth);
    rate.odd += prefactor * j_odd * j_odd * m_sin * lorentzian(gap - (2.0 * k - 1.0) * omega, linewidth);
  }
  return rate;
}

double fgr_rate(const LatticeConfig& config, double alpha, double omega, int r, int r_prime, double linewidth) {
  const BlochSolution bloch = solve_bloch(config, 0.0);
  const TransitionElement m = matrix_elements(bloch, r, r_prime);
  const double gap = std::abs(bloch.energy(r_prime) - bloch.energy(r));
  return fgr_rate_terms(config.depth_v0, alpha, omega, gap, m.m_sin, m.m_cos, linewidth).total();
}

std::string_view to_string(SubspaceKind kind) {
  switch (kind) {
    case SubspaceKind::all_band: return "all_band";
    case SubspaceKind::band: return "band";
    case SubspaceKind::half_band: return "half_band";
    case SubspaceKind::band_plus_half: return "band_plus_half";
    case SubspaceKind::select: return "select";
  }
  return "unknown";
}

SubspaceKind subspace_kind_from_string(std::string_view name) {
  for (auto k : {SubspaceKind::all_band, SubspaceKind::band, SubspaceKind::half_band, SubspaceKind::band_plus_half,
                 SubspaceKind::select}) {
    if (name == to_string(k)) return k;
  }
  if (name == "all") return SubspaceKind::all_band;
  if (name == "halfband") return SubspaceKind::half_band;
  if (name == "band+half") return SubspaceKind::band_plus_half;
  throw ConfigError("unknown subspace kind '" + std::string(name) + "'");
}

namespace {

std::string pair_label(std::string_view prefix, int r, int r_prime) {
  return std::string(prefix) + ":" + std::to_string(r) + ":" + std::to_string(r_prime);
}

void sort_by_frequency(std::vector<SubspaceFrequency>& f) {
  std::stable_sort(f.begin(), f.end(),
                   [](const SubspaceFrequency& a, const SubspaceFrequency& b) { return a.omega_wr < b.omega_wr; });
}

void add_pairs(const BlochSolution& bloch, double divisor, std::string_view prefix, std::vector<SubspaceFrequency>& out) {
  for (int r = 0; r < kSubspaceBands; ++r) {
    for (int rp = r + 1; rp < kSubspaceBands; ++rp) {
      out.push_back({pair_label(prefix, r, rp), (bloch.energy(rp) - bloch.energy(r)) / divisor});
    }
  }
}

}  // namespace

std::vector<TransitionElement> select_transitions(const BlochSolution& bloch) {
  std::vector<TransitionElement> out;
  for (int r = 0; r <= 5; ++r) {
    for (int rp = r + 1; rp <= 5; ++rp) {
      const TransitionElement m = matrix_elements(bloch, r, rp);
      if (m.m_sin > kSelectThreshold || m.m_cos > kSelectThreshold) out.push_back(m);
    }
  }
  return out;
}

FrequencySubspace build_subspace(const LatticeConfig& config, SubspaceKind kind, double duration) {
  const BlochSolution bloch = solve_bloch(config, 0.0);
  FrequencySubspace out;
  out.kind = kind;
  auto& f = out.frequencies;
  switch (kind) {
    case SubspaceKind::band:
      add_pairs(bloch, 1.0, "band", f);
      break;
    case SubspaceKind::half_band:
      add_pairs(bloch, 2.0, "halfband", f);
      break;
    case SubspaceKind::band_plus_half:
      add_pairs(bloch, 1.0, "band", f);
      add_pairs(bloch, 2.0, "halfband", f);
      break;
    case SubspaceKind::select:
      for (const auto& m : select_transitions(bloch)) {
        const double gap = bloch.energy(m.r_prime) - bloch.energy(m.r);
        if (m.m_sin >= m.m_cos) {
          f.push_back({pair_label("band", m.r, m.r_prime), gap});
        } else {
          f.push_back({pair_label("halfband", m.r, m.r_prime), gap / 2.0});
        }
      }
      break;
    case SubspaceKind::all_band: {
      if (!(duration > 0.0)) throw ConfigError("all_band subspace needs a positive duration");
      const double spacing = 2.0 * std::numbers::pi / duration;
      const double top = bloch.energy(5) - bloch.energy(0);
      for (int k = 1; k * spacing <= top * (1.0 + 1e-12); ++k) {
        f.push_back({"grid:" + std::to_string(k), k * spacing});
      }
      break;
    }
  }
  sort_by_frequency(f);
  return out;
}

double resolve_frequency(const LatticeConfig& config, const BlochSolution& bloch, std::string_view spec) {
  auto parse_int = [&](std::string_view s) {
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
      throw ConfigError("bad band index in frequency '" + std::string(spec) + "'");
    }
    return v;
  };
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    try {
      std::size_t used = 0;
      const double v = std::stod(std::string(spec), &used);
      if (used != spec.size()) throw ConfigError("");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("cannot parse frequency '" + std::string(spec) + "'");
    }
  }
  const std::string_view kind = spec.substr(0, colon);
  const std::string_view rest = spec.substr(colon + 1);
  const auto colon2 = rest.find(':');
  if (colon2 == std::string_view::npos) throw ConfigError("frequency '" + std::string(spec) + "' needs r:r'");
  const int r = parse_int(rest.substr(0, colon2));
  const int rp = parse_int(rest.substr(colon2 + 1));
  const double omega = transition_frequency(config, bloch, r, rp).omega_wr;
  if (kind == "band") return omega;
  if (kind == "halfband") return omega / 2.0;
  throw ConfigError("unknown frequency kind '" + std::string(kind) + "'");
}

MovingLatticeDecomposition moving_lattice(double depth_v0, double alpha, double omega) {
  if (!(alpha > 0.0) || !(omega > 0.0)) throw ConfigError("moving lattice needs alpha > 0 and omega > 0");
  // cos(2x - omega t) moves at omega / 2k_L; with omega in omega_R = hbar k_L^2 / 2m
  // units that is omega / 4 in hbar k_L / m.
  return {depth_v0 * bessel_j(0, alpha), depth_v0 * bessel_j(1, alpha), omega / 4.0};
}

void write_matrix_elements_csv(std::ostream& out, const std::vector<TransitionElement>& elements) {
  out << "r,r_prime,m_sin,m_cos\n" << std::setprecision(12);
  for (const auto& e : elements) out << e.r << ',' << e.r_prime << ',' << e.m_sin << ',' << e.m_cos << '\n';
}

}  // namespace shaken
