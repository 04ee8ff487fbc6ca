#ifndef SEPSPEC_MONTECARLO_HPP
#define SEPSPEC_MONTECARLO_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sepspec/clt.hpp"
#include "sepspec/errors.hpp"
#include "sepspec/model.hpp"
#include "sepspec/parallel.hpp"
#include "sepspec/rng.hpp"
#include "sepspec/whitenoise.hpp"

namespace sepspec {

struct Cell {
  int p;
  int n;
  int q;
};

// Linear-process family that can be instantiated at any dimension p; the
// simulation grid varies p across cells, so the plan stores the recipe
// rather than one fixed-size process.
struct ProcessFamily {
  enum class Sigma0 { Model1, Identity, Custom };

  Sigma0 sigma0_kind = Sigma0::Model1;
  MatrixX<double> custom_sigma0;  // used when sigma0_kind == Custom
  std::vector<double> ma{1.0};
  EntryLaw law = EntryLaw::real_gaussian();

  static ProcessFamily model1() { return {}; }
  static ProcessFamily model2() {
    ProcessFamily f;
    f.ma = {1.0, 0.3, 0.1};
    return f;
  }

  MatrixX<double> sigma0(int p) const {
    switch (sigma0_kind) {
      case Sigma0::Model1:
        return model1_sigma0(p);
      case Sigma0::Identity:
        return MatrixX<double>::Identity(p, p);
      case Sigma0::Custom:
        if (custom_sigma0.rows() != p)
          throw DimensionError("custom sigma0 does not match the cell dimension");
        return custom_sigma0;
    }
    throw ConfigError("unknown sigma0 kind");
  }

  LinearProcessSpec instantiate(int p) const {
    return LinearProcessSpec(sqrt_spd(sigma0(p)), ma, law);
  }

  // Exact spectral moments of sigma0: m1 = tr/p, m2 = tr of the square / p.
  std::pair<double, double> h1_moments(int p) const {
    MatrixX<double> s = sigma0(p);
    return {s.trace() / p, s.squaredNorm() / p};
  }
};

struct SimulationPlan {
  std::vector<Cell> cells;
  ProcessFamily model;
  int replications = 1000;
  double level = 0.05;
  std::uint64_t base_seed = 1;
  MomentSource::Kind moments = MomentSource::Kind::Known;
  Centering centering = Centering::FiniteN;
};

struct TableRow {
  int p;
  int n;
  int q;
  double rate;
  int replications;
  double wilson_lo;
  double wilson_hi;
  bool ok;
  std::string message;
};

struct SimulationTable {
  std::vector<TableRow> rows;
};

// Wilson 95% score interval for a binomial proportion.
inline std::pair<double, double> wilson_interval(int successes, int total, double z = 1.96) {
  if (total < 1) throw ParameterError("wilson interval needs total >= 1");
  const double phat = static_cast<double>(successes) / total;
  const double z2n = z * z / total;
  const double denom = 1.0 + z2n;
  const double center = (phat + z2n / 2.0) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / total + z2n / (4.0 * total)) / denom;
  return {center - half, center + half};
}

// Runs the white-noise test on seeded replications over the (p, n, q) grid.
// Each replication's seed is derive_seed(base_seed, cell index, replication),
// so the table is reproducible and independent of scheduling.
inline SimulationTable run_plan(const SimulationPlan& plan, int threads = 0) {
  if (plan.replications < 1) throw ParameterError("replications must be >= 1");
  for (const auto& cell : plan.cells)
    if (cell.q < 1 || cell.n <= cell.q)
      throw ParameterError("every cell must satisfy 1 <= q < n");

  SimulationTable table;
  for (std::size_t cell_index = 0; cell_index < plan.cells.size(); ++cell_index) {
    const Cell& cell = plan.cells[cell_index];
    TableRow row{cell.p, cell.n, cell.q, 0.0, plan.replications, 0.0, 0.0, true, ""};
    try {
      const LinearProcessSpec spec = plan.model.instantiate(cell.p);
      TestConfig cfg;
      cfg.q = cell.q;
      cfg.level = plan.level;
      cfg.centering = plan.centering;
      cfg.alpha_x = plan.model.law.alpha_x;
      cfg.kappa_x = plan.model.law.kappa_x;
      if (plan.moments == MomentSource::Kind::Known) {
        auto [m1, m2] = plan.model.h1_moments(cell.p);
        cfg.moments = MomentSource::known(m1, m2);
      } else {
        cfg.moments = MomentSource::plug_in();
      }
      std::vector<char> rejected(static_cast<std::size_t>(plan.replications), 0);
      parallel_for(
          rejected.size(),
          [&](std::size_t rep) {
            const std::uint64_t seed = derive_seed(plan.base_seed, cell_index, rep);
            MatrixX<double> data = generate_linear_process(spec, cell.p, cell.n, seed);
            rejected[rep] = run_test(data, cfg).decision ? 1 : 0;
          },
          threads);
      int count = 0;
      for (char r : rejected) count += r;
      row.rate = static_cast<double>(count) / plan.replications;
      auto [lo, hi] = wilson_interval(count, plan.replications);
      row.wilson_lo = lo;
      row.wilson_hi = hi;
    } catch (const Error& e) {
      row.ok = false;
      row.rate = std::numeric_limits<double>::quiet_NaN();
      row.message = e.what();
    }
    table.rows.push_back(row);
  }
  return table;
}

struct LssMoments {
  double mean_hat;
  double var_hat;
  double centering;  // p * integral of f against the finite-n limit law
};

// Monte Carlo estimate of the mean and variance of the centred linear
// spectral statistic p [ int f d(ESD) - int f dF ], with the deterministic
// centering computed from the solved Stieltjes transform on a contour.
template <typename Scalar = double>
LssMoments empirical_lss_moments(const SeparableModel<Scalar>& model,
                                 const Polynomial<double>& f, int R,
                                 const SpectralMeasure<double>& H1,
                                 const SpectralMeasure<double>& H2, double c,
                                 std::uint64_t base_seed, int threads = 0,
                                 const CltOptions<double>& options = {}) {
  if (R < 2) throw ParameterError("need at least two replications");
  const auto support = estimate_support(H1, H2, c, options.margin);
  Contour<double> contour =
      rectangle_contour<double>(support.x_l, support.x_r, options.v0, options.nodes_per_side);
  ContourSolution<double> solution =
      solve_contour(H1, H2, c, contour, /*with_fd=*/false, options.fd_scale, options.solver);

  // integral of f dF = -(1/2 pi i) contour integral of f(z) m(z) dz.
  std::complex<double> acc(0, 0);
  for (std::size_t i = 0; i < contour.nodes.size(); ++i)
    acc += f(solution.stencils[i].at.z) * solution.stencils[i].at.m * contour.weights[i];
  const double pi = 3.14159265358979323846264338328;
  const double centering =
      model.dims.p * (-acc / std::complex<double>(0, 2 * pi)).real();

  std::vector<double> stats(static_cast<std::size_t>(R), 0.0);
  const bool quadratic = f.degree() <= 2;
  parallel_for(
      stats.size(),
      [&](std::size_t rep) {
        const std::uint64_t seed = derive_seed(base_seed, 0, rep, 1);
        MatrixX<Scalar> X = model.generate(seed);
        MatrixX<Scalar> S = sample_covariance(model, X);
        double lss = 0;
        if (quadratic) {
          std::vector<double> coef = f.coefficients;
          coef.resize(3, 0.0);
          lss = coef[0] * model.dims.p + coef[1] * std::real(std::complex<double>(S.trace())) +
                coef[2] * S.squaredNorm();
        } else {
          auto spectrum = esd(S);
          for (Eigen::Index k = 0; k < spectrum.eigenvalues.size(); ++k)
            lss += f(spectrum.eigenvalues[k]);
        }
        stats[rep] = lss - centering;
      },
      threads);

  double mean = 0;
  for (double s : stats) mean += s;
  mean /= R;
  double var = 0;
  for (double s : stats) var += (s - mean) * (s - mean);
  var /= (R - 1);
  return {mean, var, centering};
}

}  // namespace sepspec

#endif
