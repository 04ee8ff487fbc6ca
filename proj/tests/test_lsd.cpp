#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "sepspec/lsd.hpp"
#include "sepspec/model.hpp"
#include "sepspec/rng.hpp"
#include "sepspec/spectra.hpp"

using namespace sepspec;
using Complexd = std::complex<double>;

namespace {

// Closed-form Marchenko-Pastur Stieltjes transform for ratio c:
// m(z) = [(1 - c) - z + sqrt((z - 1 - c)^2 - 4c)] / (2 c z), branch Im m > 0.
Complexd mp_stieltjes(Complexd z, double c) {
  Complexd s = std::sqrt((z - 1.0 - c) * (z - 1.0 - c) - 4.0 * c);
  Complexd m1 = ((1.0 - c) - z + s) / (2.0 * c * z);
  Complexd m2 = ((1.0 - c) - z - s) / (2.0 * c * z);
  return m1.imag() > 0 ? m1 : m2;
}

// Closed-form M-P density on ((1-sqrt c)^2, (1+sqrt c)^2).
double mp_density(double x, double c) {
  double lo = (1.0 - std::sqrt(c)) * (1.0 - std::sqrt(c));
  double hi = (1.0 + std::sqrt(c)) * (1.0 + std::sqrt(c));
  if (x <= lo || x >= hi) return 0.0;
  return std::sqrt((hi - x) * (x - lo)) / (2.0 * M_PI * c * x);
}

SpectralMeasure<double> random_positive_discrete(CounterRng& rng, int max_atoms) {
  int count = 1 + static_cast<int>(rng.next_double() * max_atoms);
  std::vector<SpectralMeasure<double>::Atom> atoms;
  double total = 0;
  for (int i = 0; i < count; ++i) {
    double w = 0.2 + rng.next_double();
    atoms.push_back({0.05 + 4.0 * rng.next_double(), w});
    total += w;
  }
  for (auto& a : atoms) a.weight /= total;
  double s = 0;
  for (auto& a : atoms) s += a.weight;
  atoms.back().weight += 1.0 - s;
  return SpectralMeasure<double>::discrete(atoms);
}

SpectralMeasure<double> random_signed_discrete(CounterRng& rng, int max_atoms) {
  int count = 1 + static_cast<int>(rng.next_double() * max_atoms);
  std::vector<SpectralMeasure<double>::Atom> atoms;
  double total = 0;
  for (int i = 0; i < count; ++i) {
    double w = 0.2 + rng.next_double();
    atoms.push_back({-2.0 + 5.0 * rng.next_double(), w});
    total += w;
  }
  for (auto& a : atoms) a.weight /= total;
  double s = 0;
  for (auto& a : atoms) s += a.weight;
  atoms.back().weight += 1.0 - s;
  return SpectralMeasure<double>::discrete(atoms);
}

}  // namespace

TEST_CASE("solver reproduces the Marchenko-Pastur transform") {
  auto delta1 = SpectralMeasure<double>::point_mass(1.0);
  for (double c : {0.25, 0.5, 1.0, 2.0}) {
    for (Complexd z : {Complexd(1.0, 1.0), Complexd(0.5, 0.1), Complexd(2.5, 0.01),
                       Complexd(-0.4, 0.05), Complexd(4.0, 0.001)}) {
      auto t = solve_triple(delta1, delta1, c, z);
      CHECK(std::abs(t.m - mp_stieltjes(z, c)) < 1e-8);
      CHECK(t.residual < 1e-10);
    }
  }
}

TEST_CASE("point mass T2 satisfies the single-equation form") {
  // With H2 concentrated at 1, m solves m = int dH1(t) / (t (1 - c - c z m) - z).
  CounterRng rng(41);
  auto delta1 = SpectralMeasure<double>::point_mass(1.0);
  for (int trial = 0; trial < 25; ++trial) {
    auto H1 = random_positive_discrete(rng, 4);
    double c = 0.2 + 2.0 * rng.next_double();
    Complexd z(-1.0 + 6.0 * rng.next_double(), 0.05 + rng.next_double());
    auto t = solve_triple(H1, delta1, c, z);
    Complexd rhs(0, 0);
    for (const auto& atom : H1.atoms())
      rhs += atom.weight / (atom.location * (1.0 - c - c * z * t.m) - z);
    CHECK(std::abs(t.m - rhs) < 1e-8);
  }
}

TEST_CASE("conjugate reflection returns conjugate triples") {
  auto H1 = SpectralMeasure<double>::discrete({{1.0, 0.5}, {3.0, 0.5}});
  auto H2 = SpectralMeasure<double>::arcsine();
  Complexd z(1.3, 0.4);
  auto up = stieltjes_at(H1, H2, 0.5, z);
  auto down = stieltjes_at(H1, H2, 0.5, std::conj(z));
  CHECK(std::abs(down.m - std::conj(up.m)) < 1e-12);
  CHECK(std::abs(down.g1 - std::conj(up.g1)) < 1e-12);
  CHECK(std::abs(down.g2 - std::conj(up.g2)) < 1e-12);
  CHECK_THROWS_AS(stieltjes_at(H1, H2, 0.5, Complexd(1.0, 0.0)), ParameterError);
  CHECK_THROWS_AS(solve_triple(H1, H2, 0.5, Complexd(1.0, -0.1)), ParameterError);
}

TEST_CASE("residuals and admissibility on random instances") {
  CounterRng rng(2025);
  for (int trial = 0; trial < 60; ++trial) {
    auto H1 = random_positive_discrete(rng, 5);
    const bool signed_h2 = trial % 2 == 0;
    auto H2 = signed_h2 ? random_signed_discrete(rng, 6) : random_positive_discrete(rng, 6);
    double c = 0.2 + 2.8 * rng.next_double();
    for (int probe = 0; probe < 3; ++probe) {
      Complexd z(-4.0 + 10.0 * rng.next_double(),
                 std::pow(10.0, -3.0 + 3.0 * rng.next_double()));
      auto t = solve_triple(H1, H2, c, z);
      auto r = system_residuals(H1, H2, c, t);
      CHECK(std::max({r[0], r[1], r[2]}) < 1e-10);
      CHECK(in_solution_set(t, !signed_h2));
      CHECK(t.m.imag() > 0.0);
      if (!signed_h2) {
        // the full sign conditions characterise the branch for H2 >= 0
        CHECK((t.z * t.g1).imag() > 0.0);
        CHECK(t.g2.imag() > 0.0);
      }
    }
  }
}

TEST_CASE("warm and cold solves agree") {
  auto H1 = SpectralMeasure<double>::discrete({{1.0, 0.5}, {3.0, 0.5}});
  auto H2 = SpectralMeasure<double>::arcsine();
  CounterRng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    Complexd z(-2.0 + 6.0 * rng.next_double(), 0.01 + rng.next_double());
    auto cold = solve_triple(H1, H2, 0.5, z);
    // warm start from a solve at a nearby point
    auto nearby = solve_triple(H1, H2, 0.5, z + Complexd(0.05, 0.02));
    auto warm = solve_triple(H1, H2, 0.5, z, &nearby);
    CHECK(std::abs(warm.m - cold.m) < 1e-9);
    CHECK(std::abs(warm.g1 - cold.g1) < 1e-9);
    CHECK(std::abs(warm.g2 - cold.g2) < 1e-9);
  }
}

TEST_CASE("g1 and g2 vanish together at large |z|") {
  auto H1 = SpectralMeasure<double>::discrete({{1.0, 0.5}, {3.0, 0.5}});
  for (auto H2 : {SpectralMeasure<double>::arcsine(),
                  SpectralMeasure<double>::discrete({{0.5, 0.5}, {1.5, 0.5}})}) {
    for (double radius : {10.0, 100.0, 1000.0}) {
      auto t = solve_triple(H1, H2, 0.5, Complexd(radius * 0.8, radius * 0.6));
      CHECK(std::abs(t.g1) < 10.0 / radius);
      CHECK(std::abs(t.g2) <= 10.0 * std::max(std::abs(t.g1), 1e-14));
    }
  }
}

TEST_CASE("derivative of g1 matches the closed-form ratio") {
  // dg1/dz = c int x/(1+x g2)^2 dH1 / (z^2 - c d3 d4)
  auto H1 = SpectralMeasure<double>::discrete({{1.0, 0.5}, {3.0, 0.5}});
  auto H2 = SpectralMeasure<double>::arcsine();
  const double c = 0.5;
  CounterRng rng(123);
  for (int trial = 0; trial < 5; ++trial) {
    Complexd z(-1.0 + 4.0 * rng.next_double(), 0.1 + rng.next_double());
    auto t = solve_triple(H1, H2, c, z);
    const double h = 1e-5 * std::abs(z);
    auto tp = solve_triple(H1, H2, c, z + h, &t);
    auto tm = solve_triple(H1, H2, c, z - h, &t);
    Complexd fd = (tp.g1 - tm.g1) / (2.0 * h);
    Complexd d3 = H1.resolvent_integral(t.g2, 2, 2);
    Complexd d4 = H2.resolvent_integral(t.g1, 2, 2);
    Complexd closed = c * H1.resolvent_integral(t.g2, 2, 1) / (z * z - c * d3 * d4);
    CHECK(std::abs(fd - closed) < 1e-5 * std::abs(closed));
  }
}

TEST_CASE("support estimate brackets the M-P bulk") {
  auto est = estimate_support<double>(0.25, 1.0, 1.0, 1.0, 1.0);
  CHECK(est.x_l <= 0.25);
  CHECK(est.x_r >= 2.25);
  CHECK(est.x_l < est.x_r);
}

TEST_CASE("support estimate with negative smallest eigenvalue") {
  const double c = 0.5, s1 = 0.9, sn = -0.95, lam_max = 3.0, lam_min = 1.0;
  auto est = estimate_support<double>(c, s1, sn, lam_max, lam_min);
  CHECK(est.x_l <= sn * lam_max * (1.0 + std::sqrt(c)) * (1.0 + std::sqrt(c)));
  CHECK(est.x_r >= s1 * lam_max * (1.0 + std::sqrt(c)) * (1.0 + std::sqrt(c)));
}

TEST_CASE("support estimate brackets simulated eigenvalues") {
  const int p = 200, n = 400;
  MatrixX<double> T1 = sqrt_spd(model1_sigma0(p));
  MatrixX<double> T2 = shift_matrix(n, 1);
  SeparableModel<double> model(Dimensions(p, n, p, n), T1, T2, EntryLaw::real_gaussian());
  MatrixX<double> S = sample_covariance(model, model.generate(314));
  auto spec = esd(S);
  auto t2s = esd(T2);
  auto est = estimate_support<double>(static_cast<double>(p) / n, t2s.eigenvalues.maxCoeff(),
                                      t2s.eigenvalues.minCoeff(), 3.0, 1.0);
  CHECK(spec.eigenvalues.minCoeff() > est.x_l);
  CHECK(spec.eigenvalues.maxCoeff() < est.x_r);
}

TEST_CASE("density reproduces the closed M-P form") {
  auto delta1 = SpectralMeasure<double>::point_mass(1.0);
  const double c = 0.5;
  const double lo = (1.0 - std::sqrt(c)) * (1.0 - std::sqrt(c));
  const double hi = (1.0 + std::sqrt(c)) * (1.0 + std::sqrt(c));
  const double width = hi - lo;
  std::vector<double> grid;
  for (int i = 0; i < 60; ++i)
    grid.push_back(lo + width * (0.02 + 0.96 * i / 59.0));
  auto density = lsd_density(delta1, delta1, c, grid, 1e-5);
  for (const auto& [x, f] : density) CHECK(std::abs(f - mp_density(x, c)) < 1e-3);
}

TEST_CASE("density vanishes far from the support") {
  auto delta1 = SpectralMeasure<double>::point_mass(1.0);
  std::vector<double> grid = {5.0, 6.0, 8.0};
  auto density = lsd_density(delta1, delta1, 0.5, grid, 1e-5);
  for (const auto& [x, f] : density) CHECK(f < 1e-6);
}

TEST_CASE("density integrates to one below c = 1") {
  auto delta1 = SpectralMeasure<double>::point_mass(1.0);
  const double c = 0.5;
  auto est = estimate_support<double>(c, 1.0, 1.0, 1.0, 1.0);
  auto curve = lsd_cdf(delta1, delta1, c, est.x_l, est.x_r, 800, 1e-5);
  CHECK(curve.total_mass() > 0.99);
  CHECK(curve.total_mass() < 1.01);
}

TEST_CASE("density propagates solver failures with the grid point named") {
  auto delta1 = SpectralMeasure<double>::point_mass(1.0);
  std::vector<double> bad_grid = {1.0, 0.5};  // not increasing
  CHECK_THROWS_AS(lsd_density(delta1, delta1, 0.5, bad_grid, 1e-5), ParameterError);
  CHECK_THROWS_AS(lsd_density(delta1, delta1, 0.5, {1.0}, -1.0), ParameterError);
}
