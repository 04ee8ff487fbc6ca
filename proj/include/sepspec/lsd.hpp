#ifndef SEPSPEC_LSD_HPP
#define SEPSPEC_LSD_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <type_traits>
#include <sstream>
#include <vector>

#include "sepspec/errors.hpp"
#include "sepspec/parallel.hpp"
#include "sepspec/spectra.hpp"

namespace sepspec {

// Solution of the three-equation system for (m(z), g1(z), g2(z)) at one
// point z in the upper half plane, inside the admissible set
// { Im m > 0, Im(z g1) > 0, Im g2 > 0 }.
template <typename Real = double>
struct StieltjesTriple {
  std::complex<Real> z;
  std::complex<Real> m;
  std::complex<Real> g1;
  std::complex<Real> g2;
  Real residual = 0;   // max defect of the three coupled equations
  int iterations = 0;  // total update steps spent, continuation included
};

template <typename Real = double>
struct SolveOptions {
  Real tol = Real(1e-13);        // relative stop on the two-equation residual
  int max_iterations = 10000;
  Real damping = Real(0.5);      // Picard relaxation factor
  int max_restarts = 5;          // perturbed restarts after a spurious root
  Real ladder_start = Real(1.0); // cold starts descend from this height
  Real ladder_factor = Real(0.7);
};

namespace detail {

template <typename Real>
struct StieltjesWork {
  using Complex = std::complex<Real>;
  const SpectralMeasure<Real>& H1;
  const SpectralMeasure<Real>& H2;
  Real c;

  // Defects of z g1 = -c int x/(1+g2 x) dH1 and z g2 = -int y/(1+g1 y) dH2.
  Real residual(Complex z, Complex g1, Complex g2, Complex* i1 = nullptr,
                Complex* i2 = nullptr) const {
    Complex I1 = H1.resolvent_integral(g2, 1, 1);
    Complex I2 = H2.resolvent_integral(g1, 1, 1);
    if (i1) *i1 = I1;
    if (i2) *i2 = I2;
    return std::max(std::abs(z * g1 + c * I1), std::abs(z * g2 + I2));
  }

  Real scale(Complex z, Complex g1, Complex g2) const {
    return Real(1) + std::abs(z * g1) + std::abs(z * g2);
  }

  // One damped alternating update (g2 first, then g1 with the fresh g2).
  void picard(Complex z, Complex& g1, Complex& g2, Real damping) const {
    Complex I2 = H2.resolvent_integral(g1, 1, 1);
    g2 = (Real(1) - damping) * g2 + damping * (-I2 / z);
    Complex I1 = H1.resolvent_integral(g2, 1, 1);
    g1 = (Real(1) - damping) * g1 + damping * (-c * I1 / z);
  }

  // Newton step on the 2x2 system; Jacobian [[z, -c d3],[-d4, z]].
  bool newton(Complex z, Complex& g1, Complex& g2, Real& res) const {
    Complex I1, I2;
    Real r0 = residual(z, g1, g2, &I1, &I2);
    Complex F1 = z * g1 + c * I1;
    Complex F2 = z * g2 + I2;
    Complex d3 = H1.resolvent_integral(g2, 2, 2);
    Complex d4 = H2.resolvent_integral(g1, 2, 2);
    Complex det = z * z - c * d3 * d4;
    if (std::abs(det) < Real(1e-14) * (std::abs(z * z) + std::abs(c * d3 * d4)))
      return false;
    Complex dg1 = (-z * F1 - c * d3 * F2) / det;
    Complex dg2 = (-z * F2 - d4 * F1) / det;
    Real step = 1;
    for (int k = 0; k < 5; ++k) {
      Complex t1 = g1 + step * dg1;
      Complex t2 = g2 + step * dg2;
      Real r;
      try {
        r = residual(z, t1, t2);
      } catch (const SingularIntegralError&) {
        step /= 2;
        continue;
      }
      if (r < r0) {
        g1 = t1;
        g2 = t2;
        res = r;
        return true;
      }
      step /= 2;
    }
    return false;
  }

  // Drive (g1, g2) to the fixed point at z from the given start.
  // Returns iterations used, or -1 on failure to converge.
  int iterate(Complex z, Complex& g1, Complex& g2, const SolveOptions<Real>& opts,
              int budget, Real* res_out) const {
    Real res = residual(z, g1, g2);
    int it = 0;
    int stall = 0;
    while (it < budget) {
      Real target = opts.tol * scale(z, g1, g2);
      if (res <= target) break;
      bool stepped = false;
      if (res < Real(0.1) * (Real(1) + std::abs(z))) stepped = newton(z, g1, g2, res);
      if (!stepped) {
        picard(z, g1, g2, opts.damping);
        Real next = residual(z, g1, g2);
        stall = (next >= res * Real(0.999999)) ? stall + 1 : 0;
        res = next;
        if (stall > 200) break;
      }
      ++it;
    }
    if (res_out) *res_out = res;
    return (res <= opts.tol * scale(z, g1, g2)) ? it : -1;
  }
};

}  // namespace detail

// Membership of the admissible solution set, with a small slack so that
// roundoff next to the real axis outside the support does not reject a
// legitimate root. The sign conditions on z g1 and g2 characterise the
// admissible branch only when H2 is nonnegative; for indefinite H2 the true
// branch violates them wherever Re z < 0, so there the universal condition
// Im m > 0 (m is the Stieltjes transform of a probability measure) remains
// and branch selection falls to the downward continuation.
template <typename Real>
bool in_solution_set(const StieltjesTriple<Real>& t, bool h2_nonnegative = true,
                     Real slack = Real(1e-12)) {
  const Real s_m = slack * (Real(1) + std::abs(t.m));
  if (!(t.m.imag() > -s_m)) return false;
  if (!h2_nonnegative) return true;
  const Real s_zg1 = slack * (Real(1) + std::abs(t.z * t.g1));
  const Real s_g2 = slack * (Real(1) + std::abs(t.g2));
  return (t.z * t.g1).imag() > -s_zg1 && t.g2.imag() > -s_g2;
}

// Defects of the three coupled equations at a solved triple.
template <typename Real>
std::array<Real, 3> system_residuals(const SpectralMeasure<Real>& H1,
                                     const SpectralMeasure<Real>& H2, Real c,
                                     const StieltjesTriple<Real>& t) {
  using Complex = std::complex<Real>;
  const Complex z = t.z;
  const Complex inv_z = Real(1) / z;
  Complex J2 = H2.resolvent_integral(t.g1, 1, 0);  // int 1/(1+g1 y) dH2
  Complex J1 = H1.resolvent_integral(t.g2, 1, 0);  // int 1/(1+g2 x) dH1
  Real r1 = std::abs(t.m + inv_z * (Real(1) - Real(1) / c) + inv_z / c * J2);
  Real r2 = std::abs(t.m + inv_z * J1);
  Real r3 = std::abs(t.m + inv_z + t.g1 * t.g2 / c);
  return {r1, r2, r3};
}

template <typename Real = double>
StieltjesTriple<Real> solve_triple(const SpectralMeasure<Real>& H1,
                                   const SpectralMeasure<Real>& H2, Real c,
                                   std::complex<Real> z,
                                   const std::type_identity_t<StieltjesTriple<Real>>* warm_start = nullptr,
                                   const SolveOptions<Real>& opts = {}) {
  using Complex = std::complex<Real>;
  if (z.imag() <= Real(0)) throw ParameterError("solve_triple requires Im z > 0");
  if (c <= Real(0)) throw ParameterError("solve_triple requires c > 0");

  detail::StieltjesWork<Real> work{H1, H2, c};

  auto finish = [&](Complex g1, Complex g2, int iterations) {
    StieltjesTriple<Real> t;
    auto assemble = [&]() {
      t.z = z;
      t.g1 = g1;
      t.g2 = g2;
      t.m = -H1.resolvent_integral(g2, 1, 0) / z;
      auto r = system_residuals(H1, H2, c, t);
      t.residual = std::max({r[0], r[1], r[2]});
    };
    assemble();
    // Near z = 0 the coupled-equation residual amplifies the remaining
    // iterate error by 1/|z|; polish with extra Newton steps until the
    // residual reaches its double-precision floor.
    for (int polish = 0; polish < 8 && t.residual > opts.tol * 10; ++polish) {
      const Real before = t.residual;
      Real ignored;
      if (!work.newton(z, g1, g2, ignored)) break;
      assemble();
      ++iterations;
      if (t.residual >= before * Real(0.5)) break;
    }
    t.iterations = iterations;
    return t;
  };

  const bool h2_nonnegative = H2.support_lo() >= Real(0);

  // One convergence attempt at z_at; throws when it fails or lands outside
  // the admissible set.
  auto attempt = [&](Complex z_at, Complex& g1, Complex& g2, int& spent) {
    Real res;
    int used = work.iterate(z_at, g1, g2, opts, opts.max_iterations, &res);
    std::ostringstream at;
    at << "z = (" << z_at.real() << ", " << z_at.imag() << "), residual " << res;
    if (used < 0) throw SolverError("no convergence at " + at.str());
    spent += used;
    StieltjesTriple<Real> probe;
    probe.z = z_at;
    probe.g1 = g1;
    probe.g2 = g2;
    probe.m = -H1.resolvent_integral(g2, 1, 0) / z_at;
    if (!in_solution_set(probe, h2_nonnegative))
      throw SpuriousRootError("converged outside the solution set at " + at.str());
  };

  int spent = 0;
  if (warm_start) {
    try {
      Complex g1 = warm_start->g1;
      Complex g2 = warm_start->g2;
      attempt(z, g1, g2, spent);
      return finish(g1, g2, spent);
    } catch (const Error&) {
      // fall through to the cold continuation path
    }
  }

  // The alternating map contracts once |z|^2 dominates c d3 d4, which at
  // small g is about c * m2(H1) * m2(H2). Cold starts descend from that
  // height so every rung stays on the admissible branch; a failed descent
  // restarts higher.
  const Real v_floor = Real(2) * std::sqrt(std::max(c, Real(1)) *
                                           std::max(H1.moment(2), Real(1e-8)) *
                                           std::max(H2.moment(2), Real(1e-8)));
  const Real v_start = std::max(opts.ladder_start, v_floor);

  std::string last_error;
  for (int restart = 0; restart <= opts.max_restarts; ++restart) {
    Real v = v_start * std::pow(Real(1.6), restart);
    try {
      Complex zh(z.real(), std::max(v, z.imag()));
      Complex g1 = -Real(1) / zh;
      Complex g2 = g1;
      attempt(zh, g1, g2, spent);
      while (zh.imag() > z.imag()) {
        v = std::max(v * opts.ladder_factor, z.imag());
        zh = Complex(z.real(), v);
        attempt(zh, g1, g2, spent);
      }
      return finish(g1, g2, spent);
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  throw SolverError("continuation failed after restarts; " + last_error);
}

// Evaluation on either side of the real axis through the reflection
// m(conj z) = conj(m(z)) valid for real spectral measures.
template <typename Real = double>
StieltjesTriple<Real> stieltjes_at(const SpectralMeasure<Real>& H1,
                                   const SpectralMeasure<Real>& H2, Real c,
                                   std::complex<Real> z,
                                   const std::type_identity_t<StieltjesTriple<Real>>* warm_start = nullptr,
                                   const SolveOptions<Real>& opts = {}) {
  if (z.imag() > Real(0)) return solve_triple(H1, H2, c, z, warm_start, opts);
  if (z.imag() == Real(0)) throw ParameterError("stieltjes_at requires Im z != 0");
  StieltjesTriple<Real> reflected_warm;
  const StieltjesTriple<Real>* warm = nullptr;
  if (warm_start) {
    reflected_warm = *warm_start;
    reflected_warm.z = std::conj(warm_start->z);
    reflected_warm.m = std::conj(warm_start->m);
    reflected_warm.g1 = std::conj(warm_start->g1);
    reflected_warm.g2 = std::conj(warm_start->g2);
    warm = &reflected_warm;
  }
  StieltjesTriple<Real> t = solve_triple(H1, H2, c, std::conj(z), warm, opts);
  t.z = z;
  t.m = std::conj(t.m);
  t.g1 = std::conj(t.g1);
  t.g2 = std::conj(t.g2);
  return t;
}

template <typename Real = double>
struct SupportEstimate {
  Real x_l;
  Real x_r;
};

// Interval certain to contain the limiting support, from the spectral-norm
// bounds of the two factors, widened by `margin` of its width on each side.
template <typename Real = double>
SupportEstimate<Real> estimate_support(Real c, Real s1, Real sn, Real lam_max,
                                       Real lam_min, Real margin = Real(0.05)) {
  if (s1 <= Real(0)) throw ParameterError("estimate_support requires s1 > 0");
  if (c <= Real(0)) throw ParameterError("estimate_support requires c > 0");
  const Real sqrt_c = std::sqrt(c);
  const Real upper_edge = (Real(1) + sqrt_c) * (Real(1) + sqrt_c);
  Real x_r = s1 * lam_max * upper_edge;
  Real x_l;
  if (sn >= Real(0)) {
    const Real lower_edge = (Real(1) - sqrt_c) * (Real(1) - sqrt_c);
    x_l = (c < Real(1)) ? sn * lam_min * lower_edge : Real(0);
  } else {
    x_l = sn * lam_max * upper_edge;
  }
  if (x_r <= x_l) x_r = x_l + Real(1);
  const Real width = x_r - x_l;
  return {x_l - margin * width, x_r + margin * width};
}

template <typename Real = double>
SupportEstimate<Real> estimate_support(const SpectralMeasure<Real>& H1,
                                       const SpectralMeasure<Real>& H2, Real c,
                                       Real margin = Real(0.05)) {
  return estimate_support(c, H2.support_hi(), H2.support_lo(), H1.support_hi(),
                          H1.support_lo(), margin);
}

// Density by Stieltjes inversion: f(x) = Im m(x + i v_min) / pi, each grid
// point reached by the solver's internal downward continuation.
template <typename Real = double>
std::vector<std::pair<Real, Real>> lsd_density(const SpectralMeasure<Real>& H1,
                                               const SpectralMeasure<Real>& H2, Real c,
                                               const std::vector<Real>& grid, Real v_min,
                                               int threads = 0,
                                               const SolveOptions<Real>& opts = {}) {
  if (v_min <= Real(0)) throw ParameterError("v_min must be positive");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw ParameterError("grid must be strictly increasing");
  const Real pi = Real(3.14159265358979323846264338328L);
  std::vector<std::pair<Real, Real>> out(grid.size());
  parallel_for(
      grid.size(),
      [&](std::size_t i) {
        try {
          auto t = solve_triple(H1, H2, c, std::complex<Real>(grid[i], v_min), nullptr, opts);
          out[i] = {grid[i], t.m.imag() / pi};
        } catch (const Error& e) {
          std::ostringstream msg;
          msg << "density evaluation failed at x = " << grid[i] << ": " << e.what();
          throw SolverError(msg.str());
        }
      },
      threads);
  return out;
}

// Tabulated density with its cumulative trapezoid integral.
template <typename Real = double>
struct DensityCurve {
  std::vector<Real> x;
  std::vector<Real> density;
  std::vector<Real> cdf;

  Real cdf_at(Real v) const {
    if (x.empty()) return Real(0);
    if (v <= x.front()) return Real(0);
    if (v >= x.back()) return cdf.back();
    auto it = std::upper_bound(x.begin(), x.end(), v);
    std::size_t hi = static_cast<std::size_t>(it - x.begin());
    std::size_t lo = hi - 1;
    Real t = (v - x[lo]) / (x[hi] - x[lo]);
    return cdf[lo] + t * (cdf[hi] - cdf[lo]);
  }

  Real total_mass() const { return cdf.empty() ? Real(0) : cdf.back(); }
};

template <typename Real = double>
DensityCurve<Real> lsd_cdf(const SpectralMeasure<Real>& H1, const SpectralMeasure<Real>& H2,
                           Real c, Real lo, Real hi, int points, Real v_min,
                           int threads = 0) {
  if (points < 2) throw ParameterError("need at least two grid points");
  std::vector<Real> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i)
    grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * Real(i) / Real(points - 1);
  auto fx = lsd_density(H1, H2, c, grid, v_min, threads);
  DensityCurve<Real> curve;
  curve.x = std::move(grid);
  curve.density.resize(curve.x.size());
  curve.cdf.resize(curve.x.size());
  Real acc = 0;
  for (std::size_t i = 0; i < curve.x.size(); ++i) {
    curve.density[i] = fx[i].second;
    if (i > 0)
      acc += (curve.x[i] - curve.x[i - 1]) * (curve.density[i] + curve.density[i - 1]) / 2;
    curve.cdf[i] = acc;
  }
  return curve;
}

}  // namespace sepspec

#endif
