#ifndef SEPSPEC_CONFIG_HPP
#define SEPSPEC_CONFIG_HPP

#include <istream>
#include <map>
#include <string>
#include <vector>

#include "sepspec/clt.hpp"
#include "sepspec/model.hpp"
#include "sepspec/montecarlo.hpp"
#include "sepspec/spectra.hpp"

namespace sepspec {

// Parsed "[section] key = value" text; repeated keys accumulate in order.
struct KeyValueConfig {
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  std::vector<std::string> get_all(const std::string& section, const std::string& key) const;

  // Canonical text: sections sorted, key order preserved inside a section.
  std::string canonical_string() const;
};

KeyValueConfig parse_key_value_config(std::istream& in);
KeyValueConfig parse_key_value_file(const std::string& path);

// Factor specification for T1 (spatial) and T2 (temporal).
struct FactorSpec {
  enum class Kind { Identity, Diagonal, Model1, Shift, Arcsine, File };
  Kind kind = Kind::Identity;
  std::vector<double> values;  // diagonal entries, recycled to the dimension
  int tau = 1;                 // shift lag
  std::string path;            // matrix file
};

struct ModelConfig {
  int p = 0;
  int n = 0;
  FactorSpec t1;
  FactorSpec t2;
  EntryLaw::Kind law_kind = EntryLaw::Kind::RealGaussian;
  double alpha_x = 1.0;
  double kappa_x = 0.0;

  double ratio() const { return static_cast<double>(p) / n; }
  EntryLaw law() const;
  MatrixX<double> t1_matrix() const;
  MatrixX<double> t2_matrix() const;  // throws for the arcsine spec
  SpectralMeasure<double> h1() const;
  SpectralMeasure<double> h2() const;
  SeparableModel<double> model() const;
};

ModelConfig parse_model_config(const KeyValueConfig& kv);
ModelConfig parse_model_config_file(const std::string& path);

struct PlanConfig {
  SimulationPlan plan;
};

PlanConfig parse_plan_config(const KeyValueConfig& kv);
PlanConfig parse_plan_config_file(const std::string& path);

// Polynomial in x, e.g. "x^2", "2x^3 - 0.5x + 1".
Polynomial<double> parse_polynomial(const std::string& text);

}  // namespace sepspec

#endif
