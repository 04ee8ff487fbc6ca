#ifndef SEPSPEC_CLT_HPP
#define SEPSPEC_CLT_HPP

#include <array>
#include <type_traits>
#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "sepspec/errors.hpp"
#include "sepspec/lsd.hpp"
#include "sepspec/parallel.hpp"
#include "sepspec/spectra.hpp"

namespace sepspec {

namespace detail {

// Gauss-Legendre nodes and weights on [-1, 1] (Newton on the recurrence).
template <typename Real>
void gauss_legendre(int n, std::vector<Real>& nodes, std::vector<Real>& weights) {
  const Real pi = Real(3.14159265358979323846264338328L);
  nodes.assign(static_cast<std::size_t>(n), Real(0));
  weights.assign(static_cast<std::size_t>(n), Real(0));
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    Real x = std::cos(pi * (Real(i) + Real(0.75)) / (Real(n) + Real(0.5)));
    Real dp = 0;
    for (int it = 0; it < 100; ++it) {
      Real p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        Real p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1);
      Real dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < Real(1e-16)) break;
    }
    Real w = 2 / ((1 - x * x) * dp * dp);
    nodes[static_cast<std::size_t>(i)] = -x;
    nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    weights[static_cast<std::size_t>(i)] = w;
    weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
}

}  // namespace detail

// Closed positively oriented contour discretised into quadrature nodes with
// complex weights, so that  contour integral of F  ~  sum F(node) * weight.
template <typename Real = double>
struct Contour {
  using Complex = std::complex<Real>;
  enum class Kind { Rectangle, Circle };

  Kind kind = Kind::Rectangle;
  std::vector<Complex> nodes;
  std::vector<Complex> weights;

  // Rectangle parameters (valid when kind == Rectangle).
  Real x_l = 0, x_r = 0, v0 = 0;
  // Circle parameters (valid when kind == Circle).
  Complex center{};
  Real radius = 0;

  // Vertex polyline of the contour path, first point repeated at the end.
  std::vector<Complex> closed_polyline() const {
    if (kind == Kind::Rectangle)
      return {Complex(x_l, -v0), Complex(x_r, -v0), Complex(x_r, v0), Complex(x_l, v0),
              Complex(x_l, -v0)};
    std::vector<Complex> poly;
    const int segments = 64;
    const Real pi = Real(3.14159265358979323846264338328L);
    for (int k = 0; k <= segments; ++k) {
      Real a = 2 * pi * Real(k) / Real(segments);
      poly.push_back(center + radius * Complex(std::cos(a), std::sin(a)));
    }
    return poly;
  }
};

// Rectangle [x_l, x_r] x [-v0, v0], counterclockwise, Gauss-Legendre nodes
// per side.
template <typename Real = double>
Contour<Real> rectangle_contour(Real x_l, Real x_r, Real v0, int nodes_per_side = 512) {
  using Complex = std::complex<Real>;
  if (!(x_l < x_r) || v0 <= 0) throw ParameterError("degenerate rectangle contour");
  if (nodes_per_side < 2) throw ParameterError("need at least two nodes per side");
  std::vector<Real> t, w;
  detail::gauss_legendre<Real>(nodes_per_side, t, w);
  Contour<Real> c;
  c.kind = Contour<Real>::Kind::Rectangle;
  c.x_l = x_l;
  c.x_r = x_r;
  c.v0 = v0;
  const std::array<std::pair<Complex, Complex>, 4> sides = {{
      {Complex(x_l, -v0), Complex(x_r, -v0)},
      {Complex(x_r, -v0), Complex(x_r, v0)},
      {Complex(x_r, v0), Complex(x_l, v0)},
      {Complex(x_l, v0), Complex(x_l, -v0)},
  }};
  for (const auto& [a, b] : sides) {
    const Complex mid = (a + b) / Real(2);
    const Complex half = (b - a) / Real(2);
    for (int k = 0; k < nodes_per_side; ++k) {
      c.nodes.push_back(mid + half * t[static_cast<std::size_t>(k)]);
      c.weights.push_back(half * w[static_cast<std::size_t>(k)]);
    }
  }
  return c;
}

// Circle of given center and radius, counterclockwise, trapezoid rule in the
// angle (midpoint offsets keep nodes off the real axis for real centers).
template <typename Real = double>
Contour<Real> circle_contour(std::complex<Real> center, Real radius, int node_count = 2048) {
  using Complex = std::complex<Real>;
  if (radius <= 0 || node_count < 8) throw ParameterError("degenerate circle contour");
  const Real pi = Real(3.14159265358979323846264338328L);
  Contour<Real> c;
  c.kind = Contour<Real>::Kind::Circle;
  c.center = center;
  c.radius = radius;
  const Real step = 2 * pi / Real(node_count);
  for (int k = 0; k < node_count; ++k) {
    Real a = step * (Real(k) + Real(0.5));
    Complex e(std::cos(a), std::sin(a));
    c.nodes.push_back(center + radius * e);
    c.weights.push_back(Complex(0, 1) * radius * e * step);
  }
  return c;
}

// Contour scaled about a real midpoint; used to build the second,
// nonoverlapping covariance contour.
template <typename Real>
Contour<Real> scale_contour(const Contour<Real>& c, Real midpoint, Real factor) {
  if (c.kind == Contour<Real>::Kind::Rectangle)
    return rectangle_contour<Real>(midpoint + factor * (c.x_l - midpoint),
                                   midpoint + factor * (c.x_r - midpoint), factor * c.v0,
                                   static_cast<int>(c.nodes.size() / 4));
  return circle_contour<Real>(midpoint + factor * (c.center - midpoint),
                              factor * c.radius, static_cast<int>(c.nodes.size()));
}

// Resolvent-integral kernels of the CLT at one solved point.
template <typename Real = double>
struct CltKernels {
  std::complex<Real> d3, d4, d5, d6;
};

template <typename Real>
CltKernels<Real> kernels_at(const SpectralMeasure<Real>& H1, const SpectralMeasure<Real>& H2,
                            Real /*c*/, const StieltjesTriple<Real>& t) {
  CltKernels<Real> k;
  k.d3 = H1.resolvent_integral(t.g2, 2, 2);
  k.d4 = H2.resolvent_integral(t.g1, 2, 2);
  k.d5 = k.d4 * H1.resolvent_integral(t.g2, 3, 3) * H2.resolvent_integral(t.g1, 2, 1);
  k.d6 = k.d3 * H1.resolvent_integral(t.g2, 2, 1) * H2.resolvent_integral(t.g1, 3, 3);
  return k;
}

// Real-coefficient polynomial test function, evaluated by Horner.
template <typename Real = double>
struct Polynomial {
  std::vector<Real> coefficients;  // coefficients[k] multiplies x^k

  std::complex<Real> operator()(std::complex<Real> z) const {
    std::complex<Real> acc(0, 0);
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it)
      acc = acc * z + *it;
    return acc;
  }
  Real operator()(Real x) const {
    Real acc = 0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it)
      acc = acc * x + *it;
    return acc;
  }
  int degree() const {
    for (int k = static_cast<int>(coefficients.size()) - 1; k >= 0; --k)
      if (coefficients[static_cast<std::size_t>(k)] != Real(0)) return k;
    return 0;
  }
  static Polynomial monomial(int k, Real a = Real(1)) {
    Polynomial p;
    p.coefficients.assign(static_cast<std::size_t>(k) + 1, Real(0));
    p.coefficients.back() = a;
    return p;
  }
};

// Triples along a contour plus the four real-shifted points used by the
// finite-difference derivatives of d(z1, z2): z +- h and z +- h/2.
template <typename Real = double>
struct NodeStencil {
  StieltjesTriple<Real> at;
  std::array<StieltjesTriple<Real>, 4> shifted;  // +h, -h, +h/2, -h/2
  Real h = 0;
};

template <typename Real = double>
struct ContourSolution {
  std::vector<NodeStencil<Real>> stencils;
};

// Solves the system along the contour in traversal order: points in each
// half plane warm-start from their predecessor, lower-half points go through
// the conjugate reflection. Finite-difference companions reuse the node's
// own solution as the warm start.
template <typename Real = double>
ContourSolution<Real> solve_contour(const SpectralMeasure<Real>& H1,
                                    const SpectralMeasure<Real>& H2, Real c,
                                    const Contour<Real>& contour, bool with_fd,
                                    Real fd_scale = Real(1e-4),
                                    const SolveOptions<Real>& opts = {}) {
  using Complex = std::complex<Real>;
  ContourSolution<Real> out;
  out.stencils.resize(contour.nodes.size());

  const StieltjesTriple<Real>* prev_upper = nullptr;
  const StieltjesTriple<Real>* prev_lower = nullptr;

  auto solve_point = [&](Complex z, const StieltjesTriple<Real>* warm) {
    if (warm && std::abs(z - warm->z) < Real(0.5) * (Real(1) + std::abs(z))) {
      try {
        return stieltjes_at(H1, H2, c, z, warm, opts);
      } catch (const Error&) {
        // fall through to a cold solve
      }
    }
    return stieltjes_at(H1, H2, c, z, nullptr, opts);
  };

  for (std::size_t i = 0; i < contour.nodes.size(); ++i) {
    const Complex z = contour.nodes[i];
    NodeStencil<Real>& st = out.stencils[i];
    const StieltjesTriple<Real>* warm = (z.imag() > 0) ? prev_upper : prev_lower;
    st.at = solve_point(z, warm);
    if (z.imag() > 0)
      prev_upper = &st.at;
    else
      prev_lower = &st.at;
    if (with_fd) {
      st.h = fd_scale * std::abs(z);
      const std::array<Real, 4> offs = {st.h, -st.h, st.h / 2, -st.h / 2};
      for (std::size_t k = 0; k < 4; ++k)
        st.shifted[k] = solve_point(z + Complex(offs[k], 0), &st.at);
    }
  }
  return out;
}

namespace detail {

template <typename Real>
std::complex<Real> d_kernel(const StieltjesTriple<Real>& a, const StieltjesTriple<Real>& b) {
  using Complex = std::complex<Real>;
  const Complex den1 = a.g2 - b.g2;
  const Complex den2 = a.g1 - b.g1;
  if (std::abs(den1) < Real(1e-10) || std::abs(den2) < Real(1e-10))
    throw CoincidenceError("g1 or g2 coincide between contour points; enlarge separation");
  const Complex num1 = a.z * a.g1 - b.z * b.g1;
  const Complex num2 = a.z * a.g2 - b.z * b.g2;
  return num1 * num2 / (den1 * den2 * a.z * b.z);
}

// First partial in the stencil variable with one Richardson step:
// (4 D(h/2) - D(h)) / 3.
template <typename Real, typename Eval>
std::complex<Real> fd_first(const NodeStencil<Real>& s, Eval&& value_at) {
  const std::complex<Real> coarse = (value_at(s.shifted[0]) - value_at(s.shifted[1])) /
                                    std::complex<Real>(2 * s.h, 0);
  const std::complex<Real> fine = (value_at(s.shifted[2]) - value_at(s.shifted[3])) /
                                  std::complex<Real>(s.h, 0);
  return (Real(4) * fine - coarse) / Real(3);
}

}  // namespace detail

template <typename Real = double>
struct CltDiagnostics {
  Real imag_defect = 0;  // |imaginary part| of the contour integral
};

// Mean of the limiting Gaussian for the linear spectral statistic of f,
// by quadrature over a contour enclosing the support.
template <typename Real, typename F>
Real clt_mean(F&& f, const SpectralMeasure<Real>& H1, const SpectralMeasure<Real>& H2,
              Real c, Real alpha_x, Real kappa_x, const Contour<Real>& contour,
              std::type_identity_t<CltDiagnostics<Real>>* diag = nullptr,
              const std::type_identity_t<ContourSolution<Real>>* solution = nullptr,
              const SolveOptions<Real>& opts = {}) {
  using Complex = std::complex<Real>;
  ContourSolution<Real> local;
  if (!solution) {
    local = solve_contour(H1, H2, c, contour, /*with_fd=*/false, Real(1e-4), opts);
    solution = &local;
  }
  const Real pi = Real(3.14159265358979323846264338328L);
  Complex acc(0, 0);
  for (std::size_t i = 0; i < contour.nodes.size(); ++i) {
    const StieltjesTriple<Real>& t = solution->stencils[i].at;
    const Complex z = t.z;
    const CltKernels<Real> k = kernels_at(H1, H2, c, t);
    const Complex s = c * k.d3 * k.d4 / (z * z);
    if (std::abs(Complex(1, 0) - s) < Real(1e-8) ||
        (alpha_x != Real(0) && std::abs(Complex(1, 0) - alpha_x * s) < Real(1e-8)))
      throw NearSingularError("mean integrand nearly singular; contour too close to support");
    const Complex prefactor =
        (alpha_x / (Complex(1, 0) - alpha_x * s) + kappa_x) / (Complex(1, 0) - s);
    const Complex bracket = c * k.d3 * k.d4 / (z * z * z) -
                            c * c * k.d3 * k.d3 * k.d4 * k.d4 / (z * z * z * z * z) +
                            c * k.d5 / (z * z * z * z) + c * c * k.d6 / (z * z * z * z);
    acc += f(z) * prefactor * bracket * contour.weights[i];
  }
  const Complex integral = acc / Complex(0, 2 * pi);
  if (diag) diag->imag_defect = std::abs(integral.imag());
  return integral.real();
}

// Covariance of the limiting Gaussian pair (X_f, X_g) over two
// nonoverlapping contours. The z-antiderivatives are expanded analytically;
// the partial derivatives of d(z1, z2) come from Richardson-extrapolated
// central differences on the solved stencils.
template <typename Real, typename F, typename G>
Real clt_covariance(F&& f, G&& g, const SpectralMeasure<Real>& H1,
                    const SpectralMeasure<Real>& H2, Real c, Real alpha_x, Real kappa_x,
                    const Contour<Real>& contour1, const Contour<Real>& contour2,
                    std::type_identity_t<CltDiagnostics<Real>>* diag = nullptr,
                    const std::type_identity_t<ContourSolution<Real>>* solution1 = nullptr,
                    const std::type_identity_t<ContourSolution<Real>>* solution2 = nullptr,
                    const SolveOptions<Real>& opts = {}) {
  using Complex = std::complex<Real>;
  ContourSolution<Real> local1, local2;
  if (!solution1) {
    local1 = solve_contour(H1, H2, c, contour1, /*with_fd=*/true, Real(1e-4), opts);
    solution1 = &local1;
  }
  if (!solution2) {
    local2 = solve_contour(H1, H2, c, contour2, /*with_fd=*/true, Real(1e-4), opts);
    solution2 = &local2;
  }
  const Real pi = Real(3.14159265358979323846264338328L);
  const std::size_t n1 = contour1.nodes.size();
  const std::size_t n2 = contour2.nodes.size();

  std::vector<Complex> acc_per_i(n1, Complex(0, 0));
  parallel_for(n1, [&](std::size_t i) {
    const NodeStencil<Real>& si = solution1->stencils[i];
    const Complex fw = f(si.at.z) * contour1.weights[i];
    Complex acc(0, 0);
    for (std::size_t j = 0; j < n2; ++j) {
      const NodeStencil<Real>& sj = solution2->stencils[j];
      const Complex d00 = detail::d_kernel(si.at, sj.at);
      if (std::abs(Complex(1, 0) - d00) < Real(1e-8) ||
          (alpha_x != Real(0) && std::abs(Complex(1, 0) - alpha_x * d00) < Real(1e-8)))
        throw NearSingularError("covariance kernel nearly singular at a node pair");
      const Complex d1 = detail::fd_first(si, [&](const StieltjesTriple<Real>& a) {
        return detail::d_kernel(a, sj.at);
      });
      const Complex d2 = detail::fd_first(sj, [&](const StieltjesTriple<Real>& b) {
        return detail::d_kernel(si.at, b);
      });
      auto cross = [&](std::size_t a, std::size_t b, Real h1, Real h2) {
        return (detail::d_kernel(si.shifted[a], sj.shifted[b]) -
                detail::d_kernel(si.shifted[a], sj.shifted[b + 1]) -
                detail::d_kernel(si.shifted[a + 1], sj.shifted[b]) +
                detail::d_kernel(si.shifted[a + 1], sj.shifted[b + 1])) /
               Complex(4 * h1 * h2, 0);
      };
      const Complex coarse = cross(0, 0, si.h, sj.h);
      const Complex fine = cross(2, 2, si.h / 2, sj.h / 2);
      const Complex d12 = (Real(4) * fine - coarse) / Real(3);

      const Complex one(1, 0);
      const Complex q1 = one / (one - d00);
      const Complex qa = alpha_x / (one - alpha_x * d00);
      const Complex psi = (q1 * q1 + qa * qa) * d1 * d2 + (q1 + qa + kappa_x) * d12;
      acc += g(sj.at.z) * contour2.weights[j] * psi;
    }
    acc_per_i[i] = fw * acc;
  });
  Complex total(0, 0);
  for (const Complex& v : acc_per_i) total += v;
  const Complex value = -total / (4 * pi * pi);
  if (diag) diag->imag_defect = std::abs(value.imag());
  return value.real();
}

// Mean vector and covariance matrix for a family of polynomial statistics.
template <typename Real = double>
struct CltMoments {
  VectorX<Real> mean;
  MatrixX<Real> cov;
};

template <typename Real = double>
struct CltOptions {
  Real v0 = Real(0.5);
  int nodes_per_side = 512;
  Real margin = Real(0.05);
  Real separation = Real(1.15);
  Real fd_scale = Real(1e-4);
  SolveOptions<Real> solver{};
};

template <typename Real = double>
CltMoments<Real> clt_moments(const std::vector<Polynomial<Real>>& fs,
                             const SpectralMeasure<Real>& H1, const SpectralMeasure<Real>& H2,
                             Real c, Real alpha_x, Real kappa_x,
                             const CltOptions<Real>& options = {}) {
  const auto support = estimate_support(H1, H2, c, options.margin);
  Contour<Real> c1 =
      rectangle_contour<Real>(support.x_l, support.x_r, options.v0, options.nodes_per_side);
  const Real midpoint = (support.x_l + support.x_r) / 2;
  Contour<Real> c2 = scale_contour(c1, midpoint, options.separation);
  ContourSolution<Real> s1 =
      solve_contour(H1, H2, c, c1, /*with_fd=*/true, options.fd_scale, options.solver);
  ContourSolution<Real> s2 =
      solve_contour(H1, H2, c, c2, /*with_fd=*/true, options.fd_scale, options.solver);

  const int count = static_cast<int>(fs.size());
  CltMoments<Real> result;
  result.mean.resize(count);
  result.cov.resize(count, count);
  for (int a = 0; a < count; ++a)
    result.mean[a] = clt_mean(fs[static_cast<std::size_t>(a)], H1, H2, c, alpha_x, kappa_x,
                              c1, nullptr, &s1, options.solver);
  for (int a = 0; a < count; ++a)
    for (int b = a; b < count; ++b) {
      Real v = clt_covariance(fs[static_cast<std::size_t>(a)], fs[static_cast<std::size_t>(b)],
                              H1, H2, c, alpha_x, kappa_x, c1, c2, nullptr, &s1, &s2,
                              options.solver);
      result.cov(a, b) = v;
      result.cov(b, a) = v;
    }
  return result;
}

}  // namespace sepspec

#endif
