#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "sepspec/model.hpp"
#include "sepspec/rng.hpp"
#include "sepspec/whitenoise.hpp"

using namespace sepspec;

namespace {

// Exact rational arithmetic; the independent oracle for the closed-form null
// parameters at rational inputs.
struct Fraction {
  long long num;
  long long den;

  Fraction(long long n, long long d) : num(n), den(d) { reduce(); }
  void reduce() {
    long long g = std::gcd(std::abs(num), std::abs(den));
    if (g > 0) {
      num /= g;
      den /= g;
    }
    if (den < 0) {
      num = -num;
      den = -den;
    }
  }
  Fraction operator*(const Fraction& o) const { return {num * o.num, den * o.den}; }
  Fraction operator+(const Fraction& o) const {
    return {num * o.den + o.num * den, den * o.den};
  }
  Fraction operator-(const Fraction& o) const {
    return {num * o.den - o.num * den, den * o.den};
  }
  double value() const { return static_cast<double>(num) / den; }
};

// trace-form oracle for the statistic:
// (1/n^2) tr[ G X T2 X' G' (G X T2 X' G')' ] with T2 = shift_matrix(n, tau).
double trace_form(const MatrixX<double>& gamma, const MatrixX<double>& X, int tau) {
  const int n = static_cast<int>(X.cols());
  MatrixX<double> T2 = shift_matrix(n, tau);
  MatrixX<double> M = gamma * X * T2 * X.transpose() * gamma.transpose();
  return (M * M.transpose()).trace() / (static_cast<double>(n) * n);
}

}  // namespace

TEST_CASE("lambda hat hand values") {
  MatrixX<double> zero = MatrixX<double>::Zero(4, 9);
  CHECK(lambda_hat(zero, 1) == 0.0);

  MatrixX<double> d(1, 3);
  d << 1, 2, 3;
  // lag-1 autocovariance 8/3, squared
  CHECK(lambda_hat(d, 1) == doctest::Approx(64.0 / 9.0));
  CHECK_THROWS_AS(lambda_hat(d, 3), InvalidLagError);
  CHECK_THROWS_AS(lambda_hat(d, 0), InvalidLagError);
}

TEST_CASE("data form equals the trace form") {
  CounterRng rng(88);
  for (int trial = 0; trial < 100; ++trial) {
    int p = 1 + static_cast<int>(rng.next_double() * 19);
    int n = 4 + static_cast<int>(rng.next_double() * 16);
    int tau = 1 + static_cast<int>(rng.next_double() * std::min(3, n - 2));
    MatrixX<double> gamma(p, p), X(p, n);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) gamma(i, j) = rng.next_normal();
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < n; ++j) X(i, j) = rng.next_normal();
    MatrixX<double> data = gamma * X;
    double direct = lambda_hat(data, tau);
    double traced = trace_form(gamma, X, tau);
    CHECK(std::abs(direct - traced) <= 1e-8 * std::max(std::abs(traced), 1e-30));
  }
}

TEST_CASE("quartic homogeneity of the statistic") {
  CounterRng rng(7);
  MatrixX<double> data(6, 30);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 30; ++j) data(i, j) = rng.next_normal();
  for (int trial = 0; trial < 200; ++trial) {
    double a = 0.1 + 3.0 * rng.next_double();
    double lhs = lambda_hat(a * data, 1);
    double rhs = a * a * a * a * lambda_hat(data, 1);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * rhs);
  }
}

TEST_CASE("null parameters at the reference cell") {
  auto np = null_parameters(100, 200, 1, 2.0, 5.0, 1.0, 0.0, Centering::Asymptotic);
  CHECK(np.centering == doctest::Approx(99.5).epsilon(1e-12));
  CHECK(np.mu == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(np.sigma2 == doctest::Approx(13.75).epsilon(1e-12));

  // exact rational recomputation: c = 1/2, m1 = 2, m2 = 5
  const Fraction c(1, 2), m1(2, 1), m2(5, 1), alpha(1, 1), kappa(0, 1);
  // centering = (p c / 2 - tau c^2 / 2) m1^2, p = 100, tau = 1
  Fraction centering = (Fraction(100, 2) * c - c * c * Fraction(1, 2)) * m1 * m1;
  CHECK(centering.value() == doctest::Approx(np.centering).epsilon(1e-14));
  // mu = c (alpha + kappa) / 2 * m2
  Fraction mu = c * (alpha + kappa) * Fraction(1, 2) * m2;
  CHECK(mu.value() == doctest::Approx(np.mu).epsilon(1e-14));
  // sigma2 = c^2 (1 + alpha^2)/2 m2^2 + (3/2) c^3 (kappa + 2) m1^2 m2
  Fraction s2 = c * c * (Fraction(1, 1) + alpha * alpha) * Fraction(1, 2) * m2 * m2 +
                Fraction(3, 2) * c * c * c * (kappa + Fraction(2, 1)) * m1 * m1 * m2;
  CHECK(s2.value() == doctest::Approx(np.sigma2).epsilon(1e-14));
}

TEST_CASE("mean parameter vanishes for the complex Gaussian law") {
  auto np = null_parameters(100, 200, 1, 2.0, 5.0, 0.0, 0.0);
  CHECK(np.mu == 0.0);
  CHECK(np.sigma2 > 0.0);
}

TEST_CASE("finite-n and asymptotic centerings coincide when c = p/n") {
  CounterRng rng(15);
  for (int trial = 0; trial < 200; ++trial) {
    int p = 1 + static_cast<int>(rng.next_double() * 400);
    int n = 2 + static_cast<int>(rng.next_double() * 900);
    int tau = 1 + static_cast<int>(rng.next_double() * std::min(5, n - 1));
    if (tau >= n) continue;
    double m1 = 0.2 + 3.0 * rng.next_double();
    auto fin = null_parameters(p, n, tau, m1, 1.0, 1.0, 0.0, Centering::FiniteN);
    auto asy = null_parameters(p, n, tau, m1, 1.0, 1.0, 0.0, Centering::Asymptotic);
    CHECK(std::abs(fin.centering - asy.centering) <= 1e-12 * std::abs(asy.centering));
  }
}

TEST_CASE("null parameter guards") {
  CHECK_THROWS_AS(null_parameters(10, 20, 1, 1.0, 0.0, 1.0, 0.0), ParameterError);
  CHECK_THROWS_AS(null_parameters(10, 1, 1, 1.0, 1.0, 1.0, 0.0), ParameterError);
}

TEST_CASE("plug-in moments converge to the population values") {
  // identity population
  auto eye_spec = LinearProcessSpec(MatrixX<double>::Identity(40, 40), {1.0},
                                    EntryLaw::real_gaussian());
  MatrixX<double> data = generate_linear_process(eye_spec, 40, 20000, 4);
  auto [m1, m2] = plug_in_moments(data);
  CHECK(std::abs(m1 - 1.0) < 0.02);
  CHECK(std::abs(m2 - 1.0) < 0.05);

  // model-1 population: m1 = 2, m2 = 5
  auto spec = model1_process(50);
  MatrixX<double> d2 = generate_linear_process(spec, 50, 10000, 5);
  auto [n1, n2] = plug_in_moments(d2);
  CHECK(std::abs(n1 - 2.0) < 0.04);
  CHECK(std::abs(n2 - 5.0) < 0.25);
}

TEST_CASE("plug-in moments hand value at n = 2") {
  // columns (sqrt2, 0) and (0, sqrt6) give S0 = diag(1, 3):
  // m1 = 4/2 = 2, m2 = (10 - 16/2) * 4 / (1 * 4) / 2 = 1
  MatrixX<double> data(2, 2);
  data << std::sqrt(2.0), 0.0, 0.0, std::sqrt(6.0);
  MatrixX<double> s0 = lag_autocovariance(data, 0);
  CHECK((s0 - MatrixX<double>(VectorX<double>::Map(
                  std::array<double, 2>{1.0, 3.0}.data(), 2).asDiagonal()))
            .cwiseAbs()
            .maxCoeff() < 1e-14);
  auto [m1, m2] = plug_in_moments(data);
  CHECK(m1 == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("report scale invariance with rescaled known moments") {
  auto spec = model1_process(30);
  MatrixX<double> data = generate_linear_process(spec, 30, 90, 21);
  TestConfig cfg;
  cfg.q = 2;
  cfg.moments = MomentSource::known(2.0, 5.0);
  auto base = run_test(data, cfg);

  const double a = 2.0;
  TestConfig scaled = cfg;
  scaled.moments = MomentSource::known(a * a * 2.0, a * a * a * a * 5.0);
  auto rescaled = run_test(a * data, scaled);
  REQUIRE(base.per_lag.size() == rescaled.per_lag.size());
  for (std::size_t i = 0; i < base.per_lag.size(); ++i) {
    CHECK(rescaled.per_lag[i].zscore ==
          doctest::Approx(base.per_lag[i].zscore).epsilon(1e-12));
    CHECK(rescaled.per_lag[i].lambda_hat ==
          doctest::Approx(std::pow(a, 4) * base.per_lag[i].lambda_hat).epsilon(1e-12));
  }
  CHECK(base.decision == rescaled.decision);
}

TEST_CASE("plug-in warning for short samples and degenerate zero data") {
  MatrixX<double> short_data = MatrixX<double>::Random(10, 11);
  TestConfig cfg;
  cfg.q = 1;
  auto report = run_test(short_data, cfg);
  REQUIRE(!report.warnings.empty());

  MatrixX<double> zeros = MatrixX<double>::Zero(5, 50);
  auto degenerate = run_test(zeros, cfg);
  CHECK(degenerate.per_lag[0].lambda_hat == 0.0);
  CHECK(!degenerate.decision);
  REQUIRE(!degenerate.warnings.empty());
}

TEST_CASE("lambda is zero only for vanishing symmetrised autocovariance") {
  CounterRng rng(3);
  MatrixX<double> data(4, 20);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 20; ++j) data(i, j) = rng.next_normal();
  CHECK(lambda_hat(data, 1) > 0.0);
  CHECK(lambda_hat(MatrixX<double>::Zero(4, 20), 1) == 0.0);
}

TEST_CASE("run_test guards") {
  MatrixX<double> data = MatrixX<double>::Random(4, 10);
  TestConfig cfg;
  cfg.q = 0;
  CHECK_THROWS_AS(run_test(data, cfg), ParameterError);
  cfg.q = 10;
  CHECK_THROWS_AS(run_test(data, cfg), ParameterError);
  cfg.q = 1;
  cfg.level = 1.5;
  CHECK_THROWS_AS(run_test(data, cfg), ParameterError);
}

TEST_CASE("zscores are roughly standard normal under the null") {
  // small-sample sanity; the acceptance suite runs the full calibration
  auto spec = model1_process(60);
  TestConfig cfg;
  cfg.q = 1;
  cfg.moments = MomentSource::known(2.0, 5.0);
  const int reps = 300;
  double sum = 0, sum2 = 0;
  for (int r = 0; r < reps; ++r) {
    MatrixX<double> data = generate_linear_process(spec, 60, 120, derive_seed(99, 0, r));
    auto report = run_test(data, cfg);
    sum += report.per_lag[0].zscore;
    sum2 += report.per_lag[0].zscore * report.per_lag[0].zscore;
  }
  double mean = sum / reps;
  double var = sum2 / reps - mean * mean;
  CHECK(std::abs(mean) < 0.25);
  CHECK(var > 0.6);
  CHECK(var < 1.5);
}
