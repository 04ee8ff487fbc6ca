#ifndef SEPSPEC_SERIALIZE_HPP
#define SEPSPEC_SERIALIZE_HPP

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "sepspec/montecarlo.hpp"
#include "sepspec/spectra.hpp"
#include "sepspec/whitenoise.hpp"

namespace sepspec {

using OrderedJson = nlohmann::ordered_json;

std::uint64_t fnv1a64(const std::string& text);
std::string hex64(std::uint64_t value);

// Reproducibility metadata attached to every CLI output.
struct RunManifest {
  std::string command;
  std::string config_digest;  // fnv1a64 of the canonicalised configuration
  std::uint64_t seed = 0;
  std::string tool_version;
  std::string timestamp;  // ISO-8601 UTC

  OrderedJson to_json() const;
  static RunManifest from_json(const OrderedJson& j);
};

RunManifest make_manifest(const std::string& command, const std::string& canonical_config,
                          std::uint64_t seed);

OrderedJson report_to_json(const WhiteNoiseReport& report);
WhiteNoiseReport report_from_json(const OrderedJson& j);

// Simulation tables as CSV; a "# manifest: {...}" comment line leads the
// file when a manifest is supplied.
void write_simulation_csv(std::ostream& out, const SimulationTable& table,
                          const RunManifest* manifest = nullptr);
SimulationTable read_simulation_csv(std::istream& in, RunManifest* manifest = nullptr);

// Two-column density CSV with 12 significant digits.
void write_density_csv(std::ostream& out, const std::vector<std::pair<double, double>>& rows,
                       const RunManifest* manifest = nullptr);
std::vector<std::pair<double, double>> read_density_csv(std::istream& in,
                                                        RunManifest* manifest = nullptr);

// Numeric CSV matrix (RFC-4180 numeric cells, '.' decimal separator).
MatrixX<double> parse_csv_matrix(std::istream& in, bool skip_header = false,
                                 bool transpose = false);
void write_csv_matrix(std::ostream& out, const MatrixX<double>& m);

}  // namespace sepspec

#endif
