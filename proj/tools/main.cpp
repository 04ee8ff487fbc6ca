// Command-line surface: white-noise tests on CSV data, limiting spectral
// densities, CLT parameters, and Monte Carlo simulation plans.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "sepspec/clt.hpp"
#include "sepspec/config.hpp"
#include "sepspec/errors.hpp"
#include "sepspec/lsd.hpp"
#include "sepspec/montecarlo.hpp"
#include "sepspec/serialize.hpp"
#include "sepspec/version.hpp"
#include "sepspec/whitenoise.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitReject = 3;

struct GlobalFlags {
  std::uint64_t seed = 1;
  int threads = 0;
  double level = 0.05;
  bool level_set = false;
};

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw sepspec::ConfigError("cannot write file: " + out_path);
  out << text;
}

int run_test_command(const std::string& input, const GlobalFlags& global, int q,
                     double alpha, double kappa, double m1, double m2, bool have_moments,
                     const std::string& centering, bool header, bool transpose) {
  std::ifstream in(input);
  if (!in) {
    std::cerr << "error: cannot open data file: " << input << "\n";
    return kExitUsage;
  }
  sepspec::MatrixX<double> data = sepspec::parse_csv_matrix(in, header, transpose);

  sepspec::TestConfig cfg;
  cfg.q = q;
  cfg.level = global.level;
  cfg.alpha_x = alpha;
  cfg.kappa_x = kappa;
  cfg.moments = have_moments ? sepspec::MomentSource::known(m1, m2)
                             : sepspec::MomentSource::plug_in();
  if (centering == "asymptotic")
    cfg.centering = sepspec::Centering::Asymptotic;
  else if (centering != "finite-n")
    throw sepspec::ConfigError("centering must be finite-n or asymptotic");

  sepspec::WhiteNoiseReport report = sepspec::run_test(data, cfg);

  std::ostringstream canonical;
  canonical << "test input=" << input << " q=" << q << " level=" << global.level
            << " alpha=" << alpha << " kappa=" << kappa << " moments="
            << (have_moments ? "known" : "plugin") << " m1=" << m1 << " m2=" << m2
            << " centering=" << centering << " header=" << header
            << " transpose=" << transpose;
  sepspec::OrderedJson j;
  j["manifest"] = sepspec::make_manifest("test", canonical.str(), global.seed).to_json();
  j["report"] = sepspec::report_to_json(report);
  std::cout << j.dump(2) << "\n";
  return report.decision ? kExitReject : kExitOk;
}

int run_lsd_command(const std::string& config_path, const GlobalFlags& global,
                    const std::string& grid_spec, double vmin, const std::string& out_path) {
  sepspec::KeyValueConfig kv = sepspec::parse_key_value_file(config_path);
  sepspec::ModelConfig cfg = sepspec::parse_model_config(kv);
  auto H1 = cfg.h1();
  auto H2 = cfg.h2();
  const double c = cfg.ratio();

  std::vector<double> grid;
  if (grid_spec.empty()) {
    auto support = sepspec::estimate_support(H1, H2, c);
    const int count = 200;
    for (int i = 0; i < count; ++i)
      grid.push_back(support.x_l + (support.x_r - support.x_l) * i / (count - 1.0));
  } else {
    double lo, hi;
    int count;
    char colon1, colon2;
    std::istringstream ss(grid_spec);
    if (!(ss >> lo >> colon1 >> hi >> colon2 >> count) || colon1 != ':' || colon2 != ':' ||
        count < 2 || !(lo < hi))
      throw sepspec::ConfigError("--grid expects lo:hi:count with lo < hi and count >= 2");
    for (int i = 0; i < count; ++i) grid.push_back(lo + (hi - lo) * i / (count - 1.0));
  }

  auto density = sepspec::lsd_density(H1, H2, c, grid, vmin, global.threads);

  std::ostringstream canonical;
  canonical << kv.canonical_string() << "grid=" << grid_spec << " vmin=" << vmin;
  auto manifest = sepspec::make_manifest("lsd", canonical.str(), global.seed);
  std::ostringstream body;
  sepspec::write_density_csv(body, density, &manifest);
  emit(body.str(), out_path);
  return kExitOk;
}

int run_clt_params_command(const std::string& config_path, const GlobalFlags& global,
                           const std::string& f_text, double v0, int nodes_per_side) {
  sepspec::KeyValueConfig kv = sepspec::parse_key_value_file(config_path);
  sepspec::ModelConfig cfg = sepspec::parse_model_config(kv);
  sepspec::Polynomial<double> f = sepspec::parse_polynomial(f_text);

  sepspec::CltOptions<double> options;
  options.v0 = v0;
  options.nodes_per_side = nodes_per_side;
  auto moments = sepspec::clt_moments<double>({f}, cfg.h1(), cfg.h2(), cfg.ratio(),
                                              cfg.alpha_x, cfg.kappa_x, options);

  std::ostringstream canonical;
  canonical << kv.canonical_string() << "f=" << f_text << " v0=" << v0
            << " nodes=" << nodes_per_side;
  sepspec::OrderedJson j;
  j["manifest"] =
      sepspec::make_manifest("clt-params", canonical.str(), global.seed).to_json();
  j["f"] = f_text;
  j["mean"] = moments.mean[0];
  j["variance"] = moments.cov(0, 0);
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int run_simulate_command(const std::string& config_path, const GlobalFlags& global,
                         const std::string& out_path) {
  sepspec::KeyValueConfig kv = sepspec::parse_key_value_file(config_path);
  sepspec::PlanConfig plan_cfg = sepspec::parse_plan_config(kv);
  if (global.level_set) plan_cfg.plan.level = global.level;
  if (global.seed != 1) plan_cfg.plan.base_seed = global.seed;

  sepspec::SimulationTable table = sepspec::run_plan(plan_cfg.plan, global.threads);

  std::ostringstream canonical;
  canonical << kv.canonical_string() << "level=" << plan_cfg.plan.level
            << " seed=" << plan_cfg.plan.base_seed;
  auto manifest = sepspec::make_manifest("simulate", canonical.str(), plan_cfg.plan.base_seed);
  std::ostringstream body;
  sepspec::write_simulation_csv(body, table, &manifest);
  emit(body.str(), out_path);
  for (const auto& row : table.rows)
    if (!row.ok) return kExitData;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"separable sample covariance spectra and white-noise testing"};
  app.set_version_flag("--version", sepspec::kVersion);
  app.require_subcommand(1);

  GlobalFlags global;
  app.add_option("--seed", global.seed, "base seed for reproducibility metadata");
  app.add_option("--threads", global.threads,
                 "worker threads (0 = SEPSPEC_THREADS env or hardware)");
  app.add_option("--level", global.level, "test level in (0, 1)")
      ->check(CLI::Range(1e-12, 1.0))
      ->each([&](const std::string&) { global.level_set = true; });

  auto* test = app.add_subcommand("test", "white-noise test on a CSV data matrix");
  std::string test_input;
  int test_q = 1;
  double test_alpha = 1.0, test_kappa = 0.0, test_m1 = 0.0, test_m2 = 0.0;
  std::string test_centering = "finite-n";
  bool test_header = false, test_transpose = false;
  test->add_option("input", test_input, "CSV file, rows = variables, columns = time")
      ->required();
  test->add_option("--q", test_q, "maximum lag")->check(CLI::PositiveNumber);
  test->add_option("--alpha", test_alpha, "entry-law alpha_x");
  test->add_option("--kappa", test_kappa, "entry-law kappa_x");
  auto* m1_opt = test->add_option("--m1", test_m1, "known first spectral moment of Sigma0");
  auto* m2_opt = test->add_option("--m2", test_m2, "known second spectral moment of Sigma0");
  test->add_option("--centering", test_centering, "finite-n or asymptotic");
  test->add_flag("--header", test_header, "skip one header line");
  test->add_flag("--transpose", test_transpose, "columns = variables, rows = time");

  auto* lsd = app.add_subcommand("lsd", "limiting spectral density on a grid");
  std::string lsd_config, lsd_grid, lsd_out;
  double lsd_vmin = 1e-5;
  lsd->add_option("config", lsd_config, "model config file")->required();
  lsd->add_option("--grid", lsd_grid, "evaluation grid lo:hi:count");
  lsd->add_option("--vmin", lsd_vmin, "inversion height")->check(CLI::PositiveNumber);
  lsd->add_option("--out", lsd_out, "output CSV path (default stdout)");

  auto* clt = app.add_subcommand("clt-params", "CLT mean and variance of a statistic");
  std::string clt_config, clt_f = "x^2";
  double clt_v0 = 0.5;
  int clt_nodes = 512;
  clt->add_option("config", clt_config, "model config file")->required();
  clt->add_option("--f", clt_f, "polynomial statistic, e.g. \"x^2\"");
  clt->add_option("--v0", clt_v0, "contour half-height")->check(CLI::PositiveNumber);
  clt->add_option("--nodes", clt_nodes, "contour nodes per side")->check(CLI::PositiveNumber);

  auto* sim = app.add_subcommand("simulate", "run a simulation plan");
  std::string sim_config, sim_out;
  sim->add_option("config", sim_config, "plan config file")->required();
  sim->add_option("--out", sim_out, "output CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (test->parsed()) {
      const bool have_moments = m1_opt->count() > 0 || m2_opt->count() > 0;
      if (have_moments && (m1_opt->count() == 0 || m2_opt->count() == 0))
        throw sepspec::ConfigError("--m1 and --m2 must be given together");
      return run_test_command(test_input, global, test_q, test_alpha, test_kappa, test_m1,
                              test_m2, have_moments, test_centering, test_header,
                              test_transpose);
    }
    if (lsd->parsed()) return run_lsd_command(lsd_config, global, lsd_grid, lsd_vmin, lsd_out);
    if (clt->parsed())
      return run_clt_params_command(clt_config, global, clt_f, clt_v0, clt_nodes);
    if (sim->parsed()) return run_simulate_command(sim_config, global, sim_out);
  } catch (const sepspec::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const sepspec::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
