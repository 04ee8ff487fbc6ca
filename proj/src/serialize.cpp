#include "sepspec/serialize.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <sstream>

#include "sepspec/errors.hpp"
#include "sepspec/version.hpp"

namespace sepspec {

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << value;
  return out.str();
}

OrderedJson RunManifest::to_json() const {
  OrderedJson j;
  j["command"] = command;
  j["config_digest"] = config_digest;
  j["seed"] = seed;
  j["tool_version"] = tool_version;
  j["timestamp"] = timestamp;
  return j;
}

RunManifest RunManifest::from_json(const OrderedJson& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.config_digest = j.at("config_digest").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.tool_version = j.at("tool_version").get<std::string>();
  m.timestamp = j.at("timestamp").get<std::string>();
  return m;
}

RunManifest make_manifest(const std::string& command, const std::string& canonical_config,
                          std::uint64_t seed) {
  RunManifest m;
  m.command = command;
  m.config_digest = hex64(fnv1a64(canonical_config));
  m.seed = seed;
  m.tool_version = kVersion;
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  m.timestamp = buf;
  return m;
}

OrderedJson report_to_json(const WhiteNoiseReport& report) {
  OrderedJson j;
  j["per_lag"] = OrderedJson::array();
  for (const auto& r : report.per_lag) {
    OrderedJson lag;
    lag["tau"] = r.tau;
    lag["lambda_hat"] = r.lambda_hat;
    lag["centering"] = r.centering;
    lag["mu"] = r.mu;
    lag["sigma2"] = r.sigma2;
    lag["zscore"] = r.zscore;
    lag["pvalue"] = r.pvalue;
    j["per_lag"].push_back(lag);
  }
  j["decision"] = report.decision;
  j["level"] = report.level;
  j["warnings"] = report.warnings;
  return j;
}

WhiteNoiseReport report_from_json(const OrderedJson& j) {
  WhiteNoiseReport report;
  for (const auto& lag : j.at("per_lag")) {
    LagResult r;
    r.tau = lag.at("tau").get<int>();
    r.lambda_hat = lag.at("lambda_hat").get<double>();
    r.centering = lag.at("centering").get<double>();
    r.mu = lag.at("mu").get<double>();
    r.sigma2 = lag.at("sigma2").get<double>();
    r.zscore = lag.at("zscore").get<double>();
    r.pvalue = lag.at("pvalue").get<double>();
    report.per_lag.push_back(r);
  }
  report.decision = j.at("decision").get<bool>();
  report.level = j.at("level").get<double>();
  report.warnings = j.at("warnings").get<std::vector<std::string>>();
  return report;
}

namespace {

void write_manifest_line(std::ostream& out, const RunManifest* manifest) {
  if (manifest) out << "# manifest: " << manifest->to_json().dump() << "\n";
}

bool read_manifest_line(std::istream& in, RunManifest* manifest) {
  if (in.peek() != '#') return false;
  std::string line;
  std::getline(in, line);
  const std::string tag = "# manifest: ";
  if (line.rfind(tag, 0) == 0 && manifest)
    *manifest = RunManifest::from_json(OrderedJson::parse(line.substr(tag.size())));
  return true;
}

}  // namespace

void write_simulation_csv(std::ostream& out, const SimulationTable& table,
                          const RunManifest* manifest) {
  write_manifest_line(out, manifest);
  out << "p,n,q,rate,replications,wilson_lo,wilson_hi,ok,message\n";
  out << std::setprecision(12);
  for (const auto& r : table.rows)
    out << r.p << ',' << r.n << ',' << r.q << ',' << r.rate << ',' << r.replications << ','
        << r.wilson_lo << ',' << r.wilson_hi << ',' << (r.ok ? 1 : 0) << ',' << r.message
        << "\n";
}

SimulationTable read_simulation_csv(std::istream& in, RunManifest* manifest) {
  read_manifest_line(in, manifest);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty simulation CSV");
  SimulationTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() < 8) throw DataError("bad simulation CSV row: " + line);
    TableRow r;
    r.p = std::stoi(fields[0]);
    r.n = std::stoi(fields[1]);
    r.q = std::stoi(fields[2]);
    r.rate = std::stod(fields[3]);
    r.replications = std::stoi(fields[4]);
    r.wilson_lo = std::stod(fields[5]);
    r.wilson_hi = std::stod(fields[6]);
    r.ok = fields[7] == "1";
    r.message = fields.size() > 8 ? fields[8] : "";
    table.rows.push_back(r);
  }
  return table;
}

void write_density_csv(std::ostream& out, const std::vector<std::pair<double, double>>& rows,
                       const RunManifest* manifest) {
  write_manifest_line(out, manifest);
  out << "x,density\n";
  out << std::setprecision(12);
  for (const auto& [x, f] : rows) out << x << ',' << f << "\n";
}

std::vector<std::pair<double, double>> read_density_csv(std::istream& in,
                                                        RunManifest* manifest) {
  read_manifest_line(in, manifest);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty density CSV");
  std::vector<std::pair<double, double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t comma = line.find(',');
    if (comma == std::string::npos) throw DataError("bad density CSV row: " + line);
    rows.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  return rows;
}

MatrixX<double> parse_csv_matrix(std::istream& in, bool skip_header, bool transpose) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  bool skipped = !skip_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!skipped) {
      skipped = true;
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      ++col;
      std::size_t a = cell.find_first_not_of(" \t");
      std::size_t b = cell.find_last_not_of(" \t");
      std::string body =
          (a == std::string::npos) ? std::string() : cell.substr(a, b - a + 1);
      try {
        std::size_t used = 0;
        double v = std::stod(body, &used);
        if (used != body.size()) throw std::invalid_argument(body);
        if (!std::isfinite(v)) throw std::invalid_argument(body);
        row.push_back(v);
      } catch (const std::exception&) {
        throw DataError("non-numeric cell at row " + std::to_string(line_no) + ", column " +
                        std::to_string(col) + ": '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw DataError("ragged CSV: row " + std::to_string(line_no) + " has " +
                      std::to_string(row.size()) + " columns");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("empty CSV matrix");
  MatrixX<double> m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  if (transpose) return m.transpose();
  return m;
}

void write_csv_matrix(std::ostream& out, const MatrixX<double>& m) {
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << "\n";
  }
}

}  // namespace sepspec
