#ifndef SEPSPEC_WHITENOISE_HPP
#define SEPSPEC_WHITENOISE_HPP

#include <cmath>
#include <string>
#include <vector>

#include "sepspec/errors.hpp"
#include "sepspec/model.hpp"

namespace sepspec {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.7071067811865475244); }
inline double normal_upper_pvalue(double z) { return 0.5 * std::erfc(z * 0.7071067811865475244); }

enum class Centering { FiniteN, Asymptotic };

// Source of the spectral moments m1 = int x dH1n, m2 = int x^2 dH1n of the
// population covariance used by the null parameters.
struct MomentSource {
  enum class Kind { Known, PlugIn };
  Kind kind = Kind::PlugIn;
  double m1 = 0;
  double m2 = 0;

  static MomentSource known(double m1, double m2) {
    if (m2 <= 0) throw ParameterError("known m2 must be positive");
    return {Kind::Known, m1, m2};
  }
  static MomentSource plug_in() { return {Kind::PlugIn, 0, 0}; }
};

struct TestConfig {
  int q = 1;                 // maximum lag
  double level = 0.05;
  MomentSource moments = MomentSource::plug_in();
  Centering centering = Centering::FiniteN;
  // Entry-law parameters of the innovations; defaults are the real Gaussian.
  double alpha_x = 1.0;
  double kappa_x = 0.0;
};

struct LagResult {
  int tau;
  double lambda_hat;
  double centering;
  double mu;
  double sigma2;
  double zscore;
  double pvalue;
};

struct WhiteNoiseReport {
  std::vector<LagResult> per_lag;
  bool decision = false;  // true = reject the white-noise null
  double level = 0.05;
  std::vector<std::string> warnings;
};

// Squared Frobenius norm of the symmetrised lag-tau sample autocovariance.
inline double lambda_hat(const Eigen::Ref<const MatrixX<double>>& data, int tau) {
  if (tau < 1 || tau >= data.cols()) throw InvalidLagError("lag must satisfy 1 <= tau < n");
  MatrixX<double> sigma_tau = lag_autocovariance(data, tau);
  MatrixX<double> xi = 0.5 * (sigma_tau + sigma_tau.transpose());
  return xi.squaredNorm();
}

struct NullParameters {
  double centering;
  double mu;
  double sigma2;
};

// Closed-form null parameters: centering (finite-n or asymptotic, which
// coincide when c is taken as p/n), the limit mean
// mu = c (alpha + kappa) / 2 * m2, and the limit variance
// sigma2 = c^2 (1 + alpha^2)/2 * m2^2 + (3/2) c^3 (kappa + 2) m1^2 m2.
inline NullParameters null_parameters(int p, int n, int tau, double m1, double m2,
                                      double alpha_x, double kappa_x,
                                      Centering centering = Centering::FiniteN) {
  if (m2 <= 0) throw ParameterError("m2 must be positive");
  if (n <= tau) throw ParameterError("need n > tau");
  const double c = static_cast<double>(p) / n;
  NullParameters out;
  if (centering == Centering::FiniteN)
    out.centering = (static_cast<double>(n - tau) / (2.0 * n)) * p * c * m1 * m1;
  else
    out.centering = (p * c / 2.0 - tau * c * c / 2.0) * m1 * m1;
  out.mu = c * (alpha_x + kappa_x) / 2.0 * m2;
  out.sigma2 = c * c * (1.0 + alpha_x * alpha_x) / 2.0 * m2 * m2 +
               1.5 * c * c * c * (kappa_x + 2.0) * m1 * m1 * m2;
  if (out.sigma2 <= 0) throw ParameterError("null variance is not positive");
  return out;
}

// Plug-in spectral moments from the lag-0 sample covariance; m2 carries the
// correction that is unbiased under Gaussian data.
inline std::pair<double, double> plug_in_moments(const Eigen::Ref<const MatrixX<double>>& data) {
  const int p = static_cast<int>(data.rows());
  const int n = static_cast<int>(data.cols());
  if (n < 2) throw DimensionError("plug-in moments need n >= 2");
  MatrixX<double> s0 = lag_autocovariance(data, 0);
  const double tr = s0.trace();
  const double tr2 = s0.squaredNorm();  // trace(S0^2) for symmetric S0
  const double m1 = tr / p;
  const double m2 = (tr2 - tr * tr / n) * n * n / ((n - 1.0) * (n + 2.0)) / p;
  return {m1, m2};
}

// Per-lag statistics for tau = 1..q with Bonferroni aggregation: reject when
// any one-sided upper p-value falls below level/q.
inline WhiteNoiseReport run_test(const Eigen::Ref<const MatrixX<double>>& data,
                                 const TestConfig& cfg) {
  const int p = static_cast<int>(data.rows());
  const int n = static_cast<int>(data.cols());
  if (cfg.q < 1) throw ParameterError("q must be >= 1");
  if (n <= cfg.q) throw ParameterError("need n > q");
  if (!(cfg.level > 0.0 && cfg.level < 1.0)) throw ParameterError("level must be in (0,1)");

  WhiteNoiseReport report;
  report.level = cfg.level;

  double m1 = cfg.moments.m1;
  double m2 = cfg.moments.m2;
  bool degenerate = false;
  if (cfg.moments.kind == MomentSource::Kind::PlugIn) {
    if (n <= p + 2)
      report.warnings.push_back("plug-in moments are ill-conditioned for n <= p + 2");
    auto [e1, e2] = plug_in_moments(data);
    m1 = e1;
    m2 = e2;
    if (m2 <= 0) {
      degenerate = true;
      report.warnings.push_back("plug-in m2 is not positive; z-scores degenerate to 0");
    }
  }

  for (int tau = 1; tau <= cfg.q; ++tau) {
    LagResult r;
    r.tau = tau;
    r.lambda_hat = lambda_hat(data, tau);
    if (degenerate) {
      r.centering = 0;
      r.mu = 0;
      r.sigma2 = 0;
      r.zscore = 0;
      r.pvalue = 1;
    } else {
      NullParameters np =
          null_parameters(p, n, tau, m1, m2, cfg.alpha_x, cfg.kappa_x, cfg.centering);
      r.centering = np.centering;
      r.mu = np.mu;
      r.sigma2 = np.sigma2;
      r.zscore = (r.lambda_hat - r.centering - r.mu) / std::sqrt(r.sigma2);
      r.pvalue = normal_upper_pvalue(r.zscore);
    }
    report.per_lag.push_back(r);
  }

  const double threshold = cfg.level / cfg.q;
  for (const auto& r : report.per_lag)
    if (r.pvalue < threshold) report.decision = true;
  return report;
}

}  // namespace sepspec

#endif
