#ifndef SEPSPEC_SPECTRA_HPP
#define SEPSPEC_SPECTRA_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <vector>

#include "sepspec/errors.hpp"

namespace sepspec {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

namespace detail {

// integral of f(t) against the arcsine density via Gauss-Chebyshev nodes of
// the first kind: (1/N) sum f(cos((2j-1) pi / 2N)). Node count doubles from
// n_start until the value is stable or n_max is reached.
template <typename Real, typename F>
std::complex<Real> gauss_chebyshev_arcsine(F&& f, int n_start = 256, int n_max = 4096,
                                           Real tol = Real(1e-12)) {
  const Real pi = Real(3.14159265358979323846264338328L);
  std::complex<Real> prev(0, 0);
  for (int n = n_start; n <= n_max; n *= 2) {
    std::complex<Real> sum(0, 0);
    for (int j = 1; j <= n; ++j) {
      Real t = std::cos(Real(2 * j - 1) * pi / Real(2 * n));
      sum += f(t);
    }
    std::complex<Real> value = sum / Real(n);
    if (n > n_start && std::abs(value - prev) <= tol * (Real(1) + std::abs(value)))
      return value;
    prev = value;
  }
  return prev;
}

}  // namespace detail

// One-dimensional probability law on the real line: discrete atoms, a unit
// point mass, or the arcsine law with density 1/(pi sqrt(1 - t^2)) on (-1, 1).
template <typename Real = double>
class SpectralMeasure {
 public:
  using Complex = std::complex<Real>;
  enum class Kind { Discrete, Arcsine, PointMass };

  struct Atom {
    Real location;
    Real weight;
  };

  static SpectralMeasure discrete(std::vector<Atom> atoms) {
    SpectralMeasure m;
    m.kind_ = Kind::Discrete;
    if (atoms.empty()) throw ConfigError("discrete measure needs at least one atom");
    Real total = 0;
    for (const auto& a : atoms) {
      if (a.weight < Real(0)) throw ConfigError("negative atom weight");
      total += a.weight;
    }
    if (std::abs(total - Real(1)) > Real(1e-12))
      throw ConfigError("atom weights must sum to 1");
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.location < b.location; });
    m.atoms_ = std::move(atoms);
    m.support_lo_ = m.atoms_.front().location;
    m.support_hi_ = m.atoms_.back().location;
    return m;
  }

  // Equal-weight atoms at the given eigenvalues (an empirical spectral law).
  static SpectralMeasure from_eigenvalues(const VectorX<Real>& eigenvalues) {
    if (eigenvalues.size() == 0) throw ConfigError("empty eigenvalue list");
    std::vector<Atom> atoms(eigenvalues.size());
    const Real w = Real(1) / Real(eigenvalues.size());
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
      atoms[static_cast<std::size_t>(i)] = {eigenvalues[i], w};
    return discrete(std::move(atoms));
  }

  static SpectralMeasure arcsine() {
    SpectralMeasure m;
    m.kind_ = Kind::Arcsine;
    m.support_lo_ = Real(-1);
    m.support_hi_ = Real(1);
    return m;
  }

  static SpectralMeasure point_mass(Real location) {
    SpectralMeasure m;
    m.kind_ = Kind::PointMass;
    m.atoms_ = {{location, Real(1)}};
    m.support_lo_ = m.support_hi_ = location;
    return m;
  }

  Kind kind() const { return kind_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  Real support_lo() const { return support_lo_; }
  Real support_hi() const { return support_hi_; }

  // k-th raw moment. Arcsine: odd moments vanish, even moments are the
  // central binomial values C(2j, j) / 4^j.
  Real moment(int k) const {
    if (k < 0) throw ParameterError("moment order must be >= 0");
    if (k == 0) return Real(1);
    switch (kind_) {
      case Kind::Arcsine: {
        if (k % 2 == 1) return Real(0);
        Real m = Real(1);
        for (int j = 1; j <= k / 2; ++j) m *= Real(2 * j - 1) / Real(2 * j);
        return m;
      }
      default: {
        Real sum = 0;
        for (const auto& a : atoms_) sum += a.weight * power(a.location, k);
        return sum;
      }
    }
  }

  // integral of t^numerator_power / (1 + g t)^power dH(t).
  // Discrete measures evaluate exactly; the arcsine law uses adaptive
  // Gauss-Chebyshev quadrature whose weight is exactly the arcsine density.
  Complex resolvent_integral(Complex g, int power, int numerator_power) const {
    if (power < 0 || numerator_power < 0)
      throw ParameterError("resolvent powers must be >= 0");
    switch (kind_) {
      case Kind::Arcsine: {
        check_arcsine_pole(g);
        if (power == 0) return Complex(moment(numerator_power), 0);
        if (power <= 3) return arcsine_resolvent_closed(g, power, numerator_power);
        auto integrand = [&](Real t) {
          return power_c(Complex(t, 0), numerator_power) /
                 power_c(Complex(1, 0) + g * t, power);
        };
        return detail::gauss_chebyshev_arcsine<Real>(integrand);
      }
      default: {
        Complex sum(0, 0);
        for (const auto& a : atoms_) {
          Complex denom = Complex(1, 0) + g * a.location;
          if (std::abs(denom) < Real(1e-12) * (Real(1) + std::abs(g) * std::abs(a.location)))
            throw SingularIntegralError("resolvent pole on an atom of the measure");
          sum += a.weight * power_c(Complex(a.location, 0), numerator_power) /
                 power_c(denom, power);
        }
        return sum;
      }
    }
  }

 private:
  static Real power(Real x, int k) {
    Real r = Real(1);
    for (int i = 0; i < k; ++i) r *= x;
    return r;
  }
  static Complex power_c(Complex x, int k) {
    Complex r(1, 0);
    for (int i = 0; i < k; ++i) r *= x;
    return r;
  }

  void check_arcsine_pole(Complex g) const {
    // The integrand pole sits at t = -1/g; it only meets (-1, 1) when g is
    // (numerically) real with |g| >= 1.
    if (std::abs(g) < Real(1e-14)) return;
    if (std::abs(g.imag()) <= Real(1e-14) * std::abs(g.real()) &&
        std::abs(Real(1) / g.real()) <= Real(1) + Real(1e-9))
      throw SingularIntegralError("resolvent pole inside the arcsine support");
  }

  // Exact arcsine resolvent integrals from the closed Stieltjes transform
  // int dH/(1+gt) = (1 - g^2)^{-1/2} (principal branch; its cut is exactly
  // the pole set, real |g| >= 1). Powers of the denominator follow from the
  // derivative ladder, numerator powers from t = ((1+gt) - 1)/g. A power
  // series takes over near g = 0 where the division is ill-conditioned.
  Complex arcsine_resolvent_closed(Complex g, int power, int numerator_power) const {
    if (std::abs(g) <= Real(0.25)) {
      // Odd arcsine moments vanish, so the truncation bound tracks the
      // coefficient magnitude binom * |g|^j rather than the term itself.
      Complex acc(0, 0);
      Complex gp(1, 0);
      Real binom = 1;
      Real bound = 1;
      const Real mag = std::abs(g);
      for (int j = 0; j <= 120; ++j) {
        if (j > 0) {
          binom *= Real(power + j - 1) / Real(j);
          gp *= -g;
          bound = binom * std::pow(mag, j);
        }
        acc += binom * gp * moment(numerator_power + j);
        if (j > 4 && bound < Real(1e-18) * (Real(1) + std::abs(acc))) break;
      }
      return acc;
    }
    const Complex one(1, 0);
    const Complex s = std::sqrt(one - g * g);
    std::array<Complex, 4> J;  // J[b] = int (1+gt)^{-b} dH
    J[0] = one;
    J[1] = one / s;
    J[2] = one / (s * s * s);
    J[3] = (one + g * g / Real(2)) / (s * s * s * s * s);
    // R(a, b) = (R(a-1, b-1) - R(a-1, b)) / g, R(0, b) = J[b].
    std::array<Complex, 4> row = J;
    for (int a = 1; a <= numerator_power; ++a) {
      std::array<Complex, 4> next;
      next[0] = (a % 2 == 0) ? Complex(moment(a), 0) : Complex(0, 0);
      for (int b = 1; b <= 3; ++b) next[b] = (row[b - 1] - row[b]) / g;
      row = next;
    }
    return row[static_cast<std::size_t>(power)];
  }

  Kind kind_ = Kind::PointMass;
  std::vector<Atom> atoms_;
  Real support_lo_ = 0;
  Real support_hi_ = 0;
};

// Sorted eigenvalues of a Hermitian matrix; the empirical spectral
// distribution places mass 1/p at each.
template <typename Real = double>
struct EmpiricalSpectrum {
  VectorX<Real> eigenvalues;  // ascending

  Real cdf(Real x) const {
    const auto* begin = eigenvalues.data();
    const auto* end = begin + eigenvalues.size();
    auto count = std::upper_bound(begin, end, x) - begin;
    return static_cast<Real>(count) / static_cast<Real>(eigenvalues.size());
  }

  SpectralMeasure<Real> measure() const {
    return SpectralMeasure<Real>::from_eigenvalues(eigenvalues);
  }
};

namespace detail {
template <typename Derived>
void require_hermitian(const Eigen::MatrixBase<Derived>& S) {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  if (S.rows() != S.cols()) throw DimensionError("matrix is not square");
  const Real scale = S.cwiseAbs().maxCoeff();
  const Real defect = (S - S.adjoint()).cwiseAbs().maxCoeff();
  if (defect > Real(1e-10) * std::max(scale, Real(1e-300)))
    throw DimensionError("matrix is not Hermitian within tolerance");
}
}  // namespace detail

template <typename Derived>
EmpiricalSpectrum<typename Eigen::NumTraits<typename Derived::Scalar>::Real> esd(
    const Eigen::MatrixBase<Derived>& S) {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  detail::require_hermitian(S);
  Eigen::SelfAdjointEigenSolver<MatrixX<typename Derived::Scalar>> solver(
      S, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("eigenvalue decomposition failed");
  EmpiricalSpectrum<Real> spectrum;
  spectrum.eigenvalues = solver.eigenvalues();
  return spectrum;
}

// sup over the empirical jump points of |F - G|; G is evaluated from the
// left through nextafter so point masses in G are handled correctly.
template <typename Real>
Real kolmogorov_distance(const EmpiricalSpectrum<Real>& F,
                         const std::function<Real(Real)>& G) {
  const Eigen::Index p = F.eigenvalues.size();
  if (p == 0) throw DimensionError("empty spectrum");
  Real sup = 0;
  for (Eigen::Index i = 0; i < p; ++i) {
    const Real x = F.eigenvalues[i];
    const Real right = std::abs(Real(i + 1) / Real(p) - G(x));
    const Real left = std::abs(Real(i) / Real(p) -
                               G(std::nextafter(x, -std::numeric_limits<Real>::infinity())));
    sup = std::max({sup, right, left});
  }
  return sup;
}

}  // namespace sepspec

#endif
