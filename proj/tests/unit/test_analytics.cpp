#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "shaken/analytics.hpp"
#include "shaken/error.hpp"

using namespace shaken;

namespace {

// Ascending series J_k(x) = sum_m (-1)^m (x/2)^(2m+k) / (m! (m+k)!).
double bessel_series(int k, double x) {
  double term = 1.0;
  for (int i = 1; i <= k; ++i) term *= (x / 2.0) / i;
  double sum = term;
  for (int m = 1; m < 60; ++m) {
    term *= -(x / 2.0) * (x / 2.0) / (m * static_cast<double>(m + k));
    sum += term;
  }
  return sum;
}

// <r'| sin 2x |r> and <r'| cos 2x |r> directly from plane-wave amplitudes:
// e^{+-2ix} shifts the ladder index by +-1.
std::pair<double, double> direct_elements(const BlochSolution& b, int r, int rp) {
  const auto& a = b.state(r);
  const auto& c = b.state(rp);
  cplx s{0.0, 0.0}, co{0.0, 0.0};
  const int nmax = a.n_max();
  for (int n = -nmax; n <= nmax; ++n) {
    const cplx up = a.amplitude(n - 1);    // (e^{2ix} psi)_n
    const cplx down = a.amplitude(n + 1);  // (e^{-2ix} psi)_n
    s += std::conj(c.amplitude(n)) * (up - down) / cplx{0.0, 2.0};
    co += std::conj(c.amplitude(n)) * (up + down) / 2.0;
  }
  return {std::norm(s), std::norm(co)};
}

}  // namespace

TEST_SUITE("analytics") {
  TEST_CASE("bessel values against the ascending series") {
    for (int k = 0; k <= 12; ++k) {
      for (double x : {0.0, 0.1, 0.3, 1.0, 2.5, 3.0, 6.0}) {
        CHECK(std::abs(bessel_j(k, x) - bessel_series(k, x)) < 1e-12);
        CHECK(std::abs(bessel_j(k, x) - std::cyl_bessel_j(static_cast<double>(k), x)) < 1e-12);
      }
    }
    CHECK(bessel_j(1, 0.3) == doctest::Approx(0.14831882).epsilon(1e-7));
    CHECK(bessel_j(2, 0.3) == doctest::Approx(0.01116657).epsilon(1e-6));
    const double ratio = std::pow(bessel_j(2, 0.3) / bessel_j(1, 0.3), 2);
    CHECK(ratio == doctest::Approx(0.0057).epsilon(0.02));
  }

  TEST_CASE("jacobi-anger decomposition") {
    const auto zero = jacobi_anger(0.0, 5);
    CHECK(zero.j(0) == 1.0);
    for (int k = 1; k <= 5; ++k) CHECK(zero.j(k) == 0.0);
    for (double alpha : {0.1, 0.3, 1.0, 2.0, 3.0}) {
      CHECK(std::abs(jacobi_anger(alpha, 30).normalization() - 1.0) < 1e-8);
      CHECK(std::abs(jacobi_anger(alpha, 20).normalization() - 1.0) < 1e-8);
    }
    const auto d = jacobi_anger(1.0, 10);
    for (int k = 2; k < 10; ++k) CHECK(std::abs(d.j(k + 1)) < std::abs(d.j(k)));
    CHECK(d.weights[1].parity == DriveParity::odd_sine);
    CHECK(d.weights[2].parity == DriveParity::even_cosine);
    CHECK_THROWS_AS(jacobi_anger(0.3, 1), ConfigError);
  }

  TEST_CASE("matrix elements match a direct evaluation") {
    LatticeConfig c;
    const auto b = solve_bloch(c, 0.0);
    for (int r = 0; r <= 6; ++r) {
      for (int rp = 0; rp <= 6; ++rp) {
        if (r == rp) continue;
        const auto [ms, mc] = direct_elements(b, r, rp);
        const auto e = matrix_elements(b, r, rp);
        CHECK(std::abs(e.m_sin - ms) < 1e-12);
        CHECK(std::abs(e.m_cos - mc) < 1e-12);
      }
    }
  }

  TEST_CASE("parity selection rules") {
    LatticeConfig c;
    const auto b = solve_bloch(c, 0.0);
    for (int r = 0; r <= 6; ++r) {
      for (int rp = r + 1; rp <= 6; ++rp) {
        const auto e = matrix_elements(b, r, rp);
        CHECK(std::min(e.m_sin, e.m_cos) < 1e-10);
        CHECK(e.m_sin <= 1.0);
        CHECK(e.m_cos <= 1.0);
        if ((r + rp) % 2 == 1) {
          CHECK(e.m_cos < 1e-10);
        } else {
          CHECK(e.m_sin < 1e-10);
        }
      }
    }
  }

  TEST_CASE("matrix element hierarchy") {
    LatticeConfig c;
    const auto b = solve_bloch(c, 0.0);
    const double s01 = matrix_elements(b, 0, 1).m_sin;
    const double c02 = matrix_elements(b, 0, 2).m_cos;
    CHECK(c02 / s01 > 0.25);
    CHECK(c02 / s01 < 1.0);
    const double top = std::max(s01, c02);
    for (int rp = 3; rp <= 6; ++rp) {
      const auto e = matrix_elements(b, 0, rp);
      CHECK(std::max(e.m_sin, e.m_cos) < top / 10.0);
    }
    CHECK(matrix_elements(b, 3, 4).m_sin < 0.1);
    CHECK(matrix_elements(b, 2, 3).m_sin > 0.1);
    CHECK(matrix_elements(b, 4, 5).m_sin > 0.1);
  }

  TEST_CASE("select transitions are the starred set") {
    LatticeConfig c;
    const auto sel = select_transitions(solve_bloch(c, 0.0));
    std::set<std::pair<int, int>> got;
    for (const auto& e : sel) got.insert({e.r, e.r_prime});
    const std::set<std::pair<int, int>> starred{{0, 1}, {0, 2}, {1, 2}, {1, 3}, {1, 4},
                                                {2, 3}, {2, 4}, {3, 5}, {4, 5}};
    CHECK(got == starred);
  }

  TEST_CASE("subspace cardinalities and contents") {
    LatticeConfig c;
    const double t = c.to_recoil_time(0.5e-3);
    const auto band = build_subspace(c, SubspaceKind::band, t);
    const auto half = build_subspace(c, SubspaceKind::half_band, t);
    const auto both = build_subspace(c, SubspaceKind::band_plus_half, t);
    const auto sel = build_subspace(c, SubspaceKind::select, t);
    const auto all = build_subspace(c, SubspaceKind::all_band, t);
    CHECK(band.size() == 10);
    CHECK(half.size() == 10);
    CHECK(both.size() == 20);
    CHECK(sel.size() == 9);
    CHECK(all.size() >= 45);
    CHECK(all.size() <= 65);

    for (const auto* s : {&band, &half, &both, &sel, &all}) {
      for (std::size_t i = 0; i < s->size(); ++i) {
        CHECK(s->frequencies[i].omega_wr > 0.0);
        if (i > 0) CHECK(s->frequencies[i].omega_wr > s->frequencies[i - 1].omega_wr);
      }
    }

    std::multiset<double> union_set;
    for (const auto& f : band.frequencies) union_set.insert(f.omega_wr);
    for (const auto& f : half.frequencies) union_set.insert(f.omega_wr);
    std::multiset<double> got;
    for (const auto& f : both.frequencies) got.insert(f.omega_wr);
    CHECK(got == union_set);

    for (double khz : {17.89, 24.61, 6.72, 40.25, 40.36, 33.53, 33.64}) {
      const bool found = std::any_of(band.frequencies.begin(), band.frequencies.end(), [&](const auto& f) {
        return std::abs(c.to_hz(f.omega_wr) * 1e-3 - khz) / khz < 0.005;
      });
      CHECK(found);
    }
    const bool degenerate = std::any_of(band.frequencies.begin(), band.frequencies.end(),
                                        [&](const auto& f) { return std::abs(c.to_hz(f.omega_wr) * 1e-3 - 0.10) < 0.02; });
    CHECK(degenerate);

    const double f05 = transition_frequency(c, 0, 5).omega_wr;
    CHECK(all.frequencies.back().omega_wr <= f05 + 1e-9);
    CHECK(all.frequencies.front().omega_wr == doctest::Approx(2.0 * std::numbers::pi / t));
  }

  TEST_CASE("select subspace uses single and two-photon resonances") {
    LatticeConfig c;
    const auto sel = build_subspace(c, SubspaceKind::select, 10.0);
    std::map<std::string, double> by_label;
    for (const auto& f : sel.frequencies) by_label[f.label] = f.omega_wr;
    CHECK(by_label.at("band:0:1") == doctest::Approx(transition_frequency(c, 0, 1).omega_wr));
    CHECK(by_label.at("halfband:0:2") == doctest::Approx(transition_frequency(c, 0, 2).omega_wr / 2.0));
  }

  TEST_CASE("subspace kind names") {
    for (auto k : {SubspaceKind::all_band, SubspaceKind::band, SubspaceKind::half_band, SubspaceKind::band_plus_half,
                   SubspaceKind::select}) {
      CHECK(subspace_kind_from_string(to_string(k)) == k);
    }
    CHECK_THROWS_AS(subspace_kind_from_string("everything"), ConfigError);
  }

  TEST_CASE("frequency specs resolve symbolically") {
    LatticeConfig c;
    const auto b = solve_bloch(c, 0.0);
    CHECK(resolve_frequency(c, b, "band:0:1") == doctest::Approx(transition_frequency(c, b, 0, 1).omega_wr));
    CHECK(resolve_frequency(c, b, "halfband:0:2") == doctest::Approx(transition_frequency(c, b, 0, 2).omega_wr / 2));
    CHECK(resolve_frequency(c, b, "7.5") == doctest::Approx(7.5));
    CHECK_THROWS_AS(resolve_frequency(c, b, "band:0"), ConfigError);
    CHECK_THROWS_AS(resolve_frequency(c, b, "wobble"), ConfigError);
    CHECK(c.to_hz(resolve_frequency(c, b, "halfband:0:2")) * 1e-3 == doctest::Approx(12.3).epsilon(0.005));
  }

  TEST_CASE("golden rule rate") {
    LatticeConfig c;
    const auto b = solve_bloch(c, 0.0);
    const double w01 = transition_frequency(c, b, 0, 1).omega_wr;
    const double on = fgr_rate(c, 0.3, w01, 0, 1);
    const double off = fgr_rate(c, 0.3, w01 * 1.37, 0, 1);
    CHECK(on > 1e3 * off);

    // Even and odd channels on their own resonances compose the two oracles.
    const double gap = 11.0, ms = 0.37, mc = 0.15;
    const auto odd = fgr_rate_terms(10.0, 0.3, gap, gap, ms, mc);
    const auto even = fgr_rate_terms(10.0, 0.3, gap / 2.0, gap, ms, mc);
    const double expected = std::pow(bessel_series(2, 0.3) / bessel_series(1, 0.3), 2) * mc / ms;
    CHECK(even.even / odd.odd == doctest::Approx(expected).epsilon(0.01));

    const auto r01 = fgr_rate_terms(10.0, 0.3, w01, w01, matrix_elements(b, 0, 1).m_sin, matrix_elements(b, 0, 1).m_cos);
    CHECK(r01.odd > 1e6 * r01.even);

    const auto v1 = fgr_rate_terms(10.0, 0.3, gap, gap, ms, mc);
    const auto v2 = fgr_rate_terms(20.0, 0.3, gap, gap, ms, mc);
    CHECK(v2.total() == doctest::Approx(4.0 * v1.total()).epsilon(1e-12));
    CHECK_THROWS_AS(lorentzian(0.0, 0.0), ConfigError);
  }

  TEST_CASE("moving lattice decomposition") {
    const auto m12 = moving_lattice(10.0, 1.0, 12.0);
    const auto m16 = moving_lattice(10.0, 1.0, 16.0);
    // cos(2x - omega t) travels at omega / 2 k_L = omega / 4 in hbar k_L / m.
    CHECK(m12.velocity == doctest::Approx(3.0));
    CHECK(m16.velocity == doctest::Approx(4.0));
    CHECK(m12.traveling_depth == doctest::Approx(10.0 * bessel_series(1, 1.0)));
    CHECK(m12.carrier_depth == doctest::Approx(10.0 * bessel_series(0, 1.0)));
    CHECK(moving_lattice(10.0, 1e-9, 12.0).traveling_depth < 1e-8);
    CHECK_THROWS_AS(moving_lattice(10.0, 0.0, 12.0), ConfigError);
    CHECK_THROWS_AS(moving_lattice(10.0, 1.0, -1.0), ConfigError);
  }

  TEST_CASE("matrix element table export") {
    LatticeConfig c;
    std::ostringstream out;
    write_matrix_elements_csv(out, select_transitions(solve_bloch(c, 0.0)));
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "r,r_prime,m_sin,m_cos");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 9);
  }
}
