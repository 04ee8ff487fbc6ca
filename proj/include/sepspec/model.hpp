#ifndef SEPSPEC_MODEL_HPP
#define SEPSPEC_MODEL_HPP

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "sepspec/errors.hpp"
#include "sepspec/rng.hpp"
#include "sepspec/spectra.hpp"

namespace sepspec {

struct Dimensions {
  int p;   // observed dimension
  int n;   // sample size
  int m1;  // rows of X, >= p
  int m2;  // columns of X, >= n

  Dimensions(int p_, int n_, int m1_, int m2_) : p(p_), n(n_), m1(m1_), m2(m2_) {
    if (p < 1 || n < 1) throw DimensionError("p and n must be positive");
    if (m1 < p) throw DimensionError("m1 must be >= p");
    if (m2 < n) throw DimensionError("m2 must be >= n");
  }
  static Dimensions square(int p_, int n_) { return Dimensions(p_, n_, p_, n_); }

  double ratio() const { return static_cast<double>(p) / static_cast<double>(n); }
};

// Entry distribution with the two CLT-relevant parameters
// alpha_x = |E x^2|^2 and kappa_x = E|x|^4 - alpha_x - 2.
struct EntryLaw {
  enum class Kind { RealGaussian, ComplexGaussian, Rademacher, Custom };

  Kind kind = Kind::RealGaussian;
  double alpha_x = 1.0;
  double kappa_x = 0.0;
  // Custom laws supply a real sampler with mean 0 and variance 1.
  std::function<double(CounterRng&)> sampler;

  static EntryLaw real_gaussian() { return {Kind::RealGaussian, 1.0, 0.0, nullptr}; }
  static EntryLaw complex_gaussian() { return {Kind::ComplexGaussian, 0.0, 0.0, nullptr}; }
  // x = +-1: E x^2 = 1, E x^4 = 1, hence kappa = 1 - 1 - 2 = -2.
  static EntryLaw rademacher() { return {Kind::Rademacher, 1.0, -2.0, nullptr}; }
  static EntryLaw custom(double alpha, double kappa,
                         std::function<double(CounterRng&)> s) {
    if (kappa < -2.0 - 1e-12) throw ParameterError("kappa_x below the moment bound -2");
    return {Kind::Custom, alpha, kappa, std::move(s)};
  }

  bool is_complex() const { return kind == Kind::ComplexGaussian; }
};

namespace detail {

inline double draw_real(const EntryLaw& law, CounterRng& rng) {
  switch (law.kind) {
    case EntryLaw::Kind::RealGaussian:
      return rng.next_normal();
    case EntryLaw::Kind::Rademacher:
      return rng.next_rademacher();
    case EntryLaw::Kind::Custom:
      if (!law.sampler) throw ConfigError("custom entry law has no sampler");
      return law.sampler(rng);
    case EntryLaw::Kind::ComplexGaussian:
      throw ConfigError("complex Gaussian law cannot fill a real matrix");
  }
  throw ConfigError("unknown entry law");
}

template <typename Scalar>
struct EntryDrawer;

template <>
struct EntryDrawer<double> {
  static double draw(const EntryLaw& law, CounterRng& rng) { return draw_real(law, rng); }
};

template <>
struct EntryDrawer<std::complex<double>> {
  static std::complex<double> draw(const EntryLaw& law, CounterRng& rng) {
    if (law.kind == EntryLaw::Kind::ComplexGaussian) return rng.next_complex_normal();
    return {draw_real(law, rng), 0.0};
  }
};

}  // namespace detail

// i.i.d. matrix of law samples; deterministic in (seed, stream), filled
// column-major so the byte layout is reproducible.
template <typename Scalar = double>
MatrixX<Scalar> generate_entries(const EntryLaw& law, int rows, int cols,
                                 std::uint64_t seed, std::uint64_t stream = 0) {
  if (rows < 1 || cols < 1) throw DimensionError("matrix dimensions must be >= 1");
  CounterRng rng(seed, stream);
  MatrixX<Scalar> X(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) X(i, j) = detail::EntryDrawer<Scalar>::draw(law, rng);
  return X;
}

// The separable model S_n = (1/n) T1 X T2 X^* T1^*. Keeping rank(T2) of
// order n is the caller's responsibility; it is not enforced here.
template <typename Scalar = double>
struct SeparableModel {
  Dimensions dims;
  MatrixX<Scalar> T1;  // p x m1
  MatrixX<Scalar> T2;  // m2 x m2 Hermitian
  EntryLaw law;

  SeparableModel(Dimensions d, MatrixX<Scalar> t1, MatrixX<Scalar> t2, EntryLaw l)
      : dims(d), T1(std::move(t1)), T2(std::move(t2)), law(std::move(l)) {
    if (T1.rows() != dims.p || T1.cols() != dims.m1)
      throw DimensionError("T1 must be p x m1");
    if (T2.rows() != dims.m2 || T2.cols() != dims.m2)
      throw DimensionError("T2 must be m2 x m2");
    detail::require_hermitian(T2);
    if (!T1.allFinite() || !T2.allFinite())
      throw ParameterError("T1 and T2 must have finite entries");
  }

  MatrixX<Scalar> generate(std::uint64_t seed, std::uint64_t stream = 0) const {
    return generate_entries<Scalar>(law, dims.m1, dims.m2, seed, stream);
  }
};

template <typename Scalar>
MatrixX<Scalar> sample_covariance(const SeparableModel<Scalar>& model,
                                  const MatrixX<Scalar>& X) {
  if (X.rows() != model.dims.m1 || X.cols() != model.dims.m2)
    throw DimensionError("X must be m1 x m2");
  MatrixX<Scalar> B = model.T1 * X;  // p x m2
  MatrixX<Scalar> S = B * model.T2 * B.adjoint() / Scalar(model.dims.n);
  // Hermitian by construction up to rounding; symmetrise to keep solvers happy.
  S = ((S + S.adjoint()) / Scalar(2)).eval();
  return S;
}

// Symmetric PSD square root; diagonal inputs take the elementwise path.
inline MatrixX<double> sqrt_spd(const MatrixX<double>& A) {
  detail::require_hermitian(A);
  const double off = (A - MatrixX<double>(A.diagonal().asDiagonal())).cwiseAbs().maxCoeff();
  if (off == 0.0) {
    MatrixX<double> R = MatrixX<double>::Zero(A.rows(), A.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      if (A(i, i) < 0) throw ParameterError("matrix is not positive semidefinite");
      R(i, i) = std::sqrt(A(i, i));
    }
    return R;
  }
  Eigen::SelfAdjointEigenSolver<MatrixX<double>> solver(A);
  VectorX<double> d = solver.eigenvalues();
  const double floor = -1e-12 * std::max(1.0, d.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d[i] < floor) throw ParameterError("matrix is not positive semidefinite");
    d[i] = std::sqrt(std::max(d[i], 0.0));
  }
  return solver.eigenvectors() * d.asDiagonal() * solver.eigenvectors().transpose();
}

// p-dimensional linear process eps_i = Sigma0^{1/2} sum_k b_k x_{i-k} with
// scalar MA weights b_k.
struct LinearProcessSpec {
  MatrixX<double> sigma0_sqrt;
  std::vector<double> ma_coefficients;
  EntryLaw law;

  LinearProcessSpec(MatrixX<double> s, std::vector<double> ma, EntryLaw l)
      : sigma0_sqrt(std::move(s)), ma_coefficients(std::move(ma)), law(std::move(l)) {
    if (ma_coefficients.empty()) throw ConfigError("MA coefficient list is empty");
    if (sigma0_sqrt.rows() != sigma0_sqrt.cols())
      throw DimensionError("sigma0_sqrt must be square");
  }
};

// Columns eps_1..eps_n. The first len(b)-1 presample innovation columns are
// drawn as well, so eps_1 already has the stationary law.
inline MatrixX<double> generate_linear_process(const LinearProcessSpec& spec, int p, int n,
                                               std::uint64_t seed, std::uint64_t stream = 0) {
  if (spec.sigma0_sqrt.rows() != p) throw DimensionError("sigma0_sqrt does not match p");
  if (n < 1) throw DimensionError("n must be >= 1");
  const int order = static_cast<int>(spec.ma_coefficients.size());
  MatrixX<double> innovations =
      generate_entries<double>(spec.law, p, n + order - 1, seed, stream);
  MatrixX<double> filtered = MatrixX<double>::Zero(p, n);
  for (int k = 0; k < order; ++k)
    filtered += spec.ma_coefficients[static_cast<std::size_t>(k)] *
                innovations.middleCols(order - 1 - k, n);
  return spec.sigma0_sqrt * filtered;
}

// Sample autocovariance at lag tau with divisor n (not n - tau):
// (1/n) sum_{i=1}^{n-tau} eps_{i+tau} eps_i^T.
inline MatrixX<double> lag_autocovariance(const Eigen::Ref<const MatrixX<double>>& data,
                                          int tau) {
  const int n = static_cast<int>(data.cols());
  if (tau < 0 || tau >= n) throw InvalidLagError("lag must satisfy 0 <= tau < n");
  return data.rightCols(n - tau) * data.leftCols(n - tau).transpose() /
         static_cast<double>(n);
}

// Symmetric n x n matrix with 1/2 on the +-tau-th diagonals; the T2 of the
// white-noise statistic.
inline MatrixX<double> shift_matrix(int n, int tau) {
  if (tau < 1 || tau >= n) throw InvalidLagError("shift lag must satisfy 1 <= tau < n");
  MatrixX<double> T = MatrixX<double>::Zero(n, n);
  for (int i = 0; i + tau < n; ++i) {
    T(i, i + tau) = 0.5;
    T(i + tau, i) = 0.5;
  }
  return T;
}

// Model 1 diagonal: sigma_{0,ii} = 2 + (-1)^i alternating 1, 3 (1-based).
inline MatrixX<double> model1_sigma0(int p) {
  if (p < 1) throw DimensionError("p must be >= 1");
  MatrixX<double> S = MatrixX<double>::Zero(p, p);
  for (int i = 1; i <= p; ++i) S(i - 1, i - 1) = (i % 2 == 1) ? 1.0 : 3.0;
  return S;
}

// Exact spectral law of model1_sigma0(p): atoms at 1 and 3.
inline SpectralMeasure<double> model1_spectrum(int p) {
  const double ones = std::ceil(p / 2.0);
  const double threes = std::floor(p / 2.0);
  if (threes == 0) return SpectralMeasure<double>::point_mass(1.0);
  return SpectralMeasure<double>::discrete(
      {{1.0, ones / p}, {3.0, threes / p}});
}

inline LinearProcessSpec model1_process(int p, EntryLaw law = EntryLaw::real_gaussian()) {
  return LinearProcessSpec(sqrt_spd(model1_sigma0(p)), {1.0}, std::move(law));
}

inline LinearProcessSpec model2_process(int p, EntryLaw law = EntryLaw::real_gaussian()) {
  return LinearProcessSpec(sqrt_spd(model1_sigma0(p)), {1.0, 0.3, 0.1}, std::move(law));
}

}  // namespace sepspec

#endif
