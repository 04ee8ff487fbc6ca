#include "sepspec/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "sepspec/errors.hpp"
#include "sepspec/serialize.hpp"

namespace sepspec {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::string piece;
  std::stringstream ss(text);
  while (std::getline(ss, piece, ',')) {
    piece = trim(piece);
    if (piece.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(piece, &used));
      if (used != piece.size()) throw std::invalid_argument(piece);
    } catch (const std::exception&) {
      throw ConfigError("bad number in list: '" + piece + "'");
    }
  }
  return out;
}

double parse_number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad number for " + what + ": '" + text + "'");
  }
}

int parse_int(const std::string& text, const std::string& what) {
  double v = parse_number(text, what);
  int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) throw ConfigError(what + " must be an integer");
  return i;
}

}  // namespace

bool KeyValueConfig::has(const std::string& section, const std::string& key) const {
  auto it = sections.find(section);
  if (it == sections.end()) return false;
  for (const auto& [k, v] : it->second)
    if (k == key) return true;
  return false;
}

std::string KeyValueConfig::get(const std::string& section, const std::string& key) const {
  auto it = sections.find(section);
  if (it != sections.end())
    for (const auto& [k, v] : it->second)
      if (k == key) return v;
  throw ConfigError("missing config key [" + section + "] " + key);
}

std::string KeyValueConfig::get_or(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
  return has(section, key) ? get(section, key) : fallback;
}

std::vector<std::string> KeyValueConfig::get_all(const std::string& section,
                                                 const std::string& key) const {
  std::vector<std::string> out;
  auto it = sections.find(section);
  if (it != sections.end())
    for (const auto& [k, v] : it->second)
      if (k == key) out.push_back(v);
  return out;
}

std::string KeyValueConfig::canonical_string() const {
  std::ostringstream out;
  for (const auto& [name, entries] : sections) {
    out << '[' << name << "]\n";
    for (const auto& [k, v] : entries) out << k << '=' << v << '\n';
  }
  return out.str();
}

KeyValueConfig parse_key_value_config(std::istream& in) {
  KeyValueConfig cfg;
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("unterminated section header at line " + std::to_string(line_no));
      section = lower(trim(line.substr(1, line.size() - 2)));
      cfg.sections[section];
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value at line " + std::to_string(line_no));
    std::string key = lower(trim(line.substr(0, eq)));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key at line " + std::to_string(line_no));
    cfg.sections[section].emplace_back(key, value);
  }
  return cfg;
}

KeyValueConfig parse_key_value_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_key_value_config(in);
}

namespace {

FactorSpec parse_factor(const KeyValueConfig& kv, const std::string& section,
                        bool allow_temporal_kinds) {
  FactorSpec spec;
  const std::string kind = lower(kv.get_or(section, "kind", "identity"));
  if (kind == "identity") {
    spec.kind = FactorSpec::Kind::Identity;
  } else if (kind == "diagonal" || kind == "diagonal-list") {
    spec.kind = FactorSpec::Kind::Diagonal;
    spec.values = parse_number_list(kv.get(section, "values"));
    if (spec.values.empty()) throw ConfigError("[" + section + "] diagonal needs values");
  } else if (kind == "model1") {
    spec.kind = FactorSpec::Kind::Model1;
  } else if (kind == "shift" && allow_temporal_kinds) {
    spec.kind = FactorSpec::Kind::Shift;
    spec.tau = parse_int(kv.get_or(section, "tau", "1"), section + ".tau");
  } else if (kind == "arcsine" && allow_temporal_kinds) {
    spec.kind = FactorSpec::Kind::Arcsine;
  } else if (kind == "file") {
    spec.kind = FactorSpec::Kind::File;
    spec.path = kv.get(section, "path");
  } else {
    throw ConfigError("unknown factor kind '" + kind + "' in [" + section + "]");
  }
  return spec;
}

MatrixX<double> load_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open matrix file: " + path);
  return parse_csv_matrix(in);
}

MatrixX<double> diagonal_matrix(const std::vector<double>& values, int dim) {
  MatrixX<double> m = MatrixX<double>::Zero(dim, dim);
  for (int i = 0; i < dim; ++i)
    m(i, i) = values[static_cast<std::size_t>(i) % values.size()];
  return m;
}

SpectralMeasure<double> diagonal_squared_measure(const std::vector<double>& values, int dim) {
  VectorX<double> eig(dim);
  for (int i = 0; i < dim; ++i) {
    double v = values[static_cast<std::size_t>(i) % values.size()];
    eig[i] = v * v;
  }
  return SpectralMeasure<double>::from_eigenvalues(eig);
}

SpectralMeasure<double> diagonal_measure(const std::vector<double>& values, int dim) {
  VectorX<double> eig(dim);
  for (int i = 0; i < dim; ++i) eig[i] = values[static_cast<std::size_t>(i) % values.size()];
  return SpectralMeasure<double>::from_eigenvalues(eig);
}

}  // namespace

EntryLaw ModelConfig::law() const {
  switch (law_kind) {
    case EntryLaw::Kind::RealGaussian:
      return EntryLaw::real_gaussian();
    case EntryLaw::Kind::ComplexGaussian:
      return EntryLaw::complex_gaussian();
    case EntryLaw::Kind::Rademacher:
      return EntryLaw::rademacher();
    case EntryLaw::Kind::Custom:
      return EntryLaw{EntryLaw::Kind::Custom, alpha_x, kappa_x, nullptr};
  }
  throw ConfigError("unknown entry law");
}

MatrixX<double> ModelConfig::t1_matrix() const {
  switch (t1.kind) {
    case FactorSpec::Kind::Identity:
      return MatrixX<double>::Identity(p, p);
    case FactorSpec::Kind::Diagonal:
      return diagonal_matrix(t1.values, p);
    case FactorSpec::Kind::Model1:
      return sqrt_spd(model1_sigma0(p));
    case FactorSpec::Kind::File:
      return load_matrix_file(t1.path);
    default:
      throw ConfigError("t1 does not admit shift/arcsine kinds");
  }
}

MatrixX<double> ModelConfig::t2_matrix() const {
  switch (t2.kind) {
    case FactorSpec::Kind::Identity:
      return MatrixX<double>::Identity(n, n);
    case FactorSpec::Kind::Diagonal:
      return diagonal_matrix(t2.values, n);
    case FactorSpec::Kind::Shift:
      return shift_matrix(n, t2.tau);
    case FactorSpec::Kind::File:
      return load_matrix_file(t2.path);
    case FactorSpec::Kind::Arcsine:
      throw ConfigError("the arcsine spectrum has no finite matrix realisation");
    default:
      throw ConfigError("t2 does not admit the model1 kind");
  }
}

SpectralMeasure<double> ModelConfig::h1() const {
  switch (t1.kind) {
    case FactorSpec::Kind::Identity:
      return SpectralMeasure<double>::point_mass(1.0);
    case FactorSpec::Kind::Diagonal:
      return diagonal_squared_measure(t1.values, p);
    case FactorSpec::Kind::Model1:
      return model1_spectrum(p);
    case FactorSpec::Kind::File: {
      MatrixX<double> t = load_matrix_file(t1.path);
      return esd(MatrixX<double>(t * t.transpose())).measure();
    }
    default:
      throw ConfigError("t1 does not admit shift/arcsine kinds");
  }
}

SpectralMeasure<double> ModelConfig::h2() const {
  switch (t2.kind) {
    case FactorSpec::Kind::Identity:
      return SpectralMeasure<double>::point_mass(1.0);
    case FactorSpec::Kind::Diagonal:
      return diagonal_measure(t2.values, n);
    case FactorSpec::Kind::Shift:
      return esd(shift_matrix(n, t2.tau)).measure();
    case FactorSpec::Kind::Arcsine:
      return SpectralMeasure<double>::arcsine();
    case FactorSpec::Kind::File:
      return esd(load_matrix_file(t2.path)).measure();
    default:
      throw ConfigError("t2 does not admit the model1 kind");
  }
}

SeparableModel<double> ModelConfig::model() const {
  MatrixX<double> T1 = t1_matrix();
  MatrixX<double> T2 = t2_matrix();
  Dimensions dims(p, n, static_cast<int>(T1.cols()), static_cast<int>(T2.rows()));
  return SeparableModel<double>(dims, std::move(T1), std::move(T2), law());
}

ModelConfig parse_model_config(const KeyValueConfig& kv) {
  ModelConfig cfg;
  cfg.p = parse_int(kv.get("dims", "p"), "dims.p");
  cfg.n = parse_int(kv.get("dims", "n"), "dims.n");
  if (cfg.p < 1 || cfg.n < 1) throw ConfigError("dims must be positive");
  cfg.t1 = parse_factor(kv, "t1", /*allow_temporal_kinds=*/false);
  cfg.t2 = parse_factor(kv, "t2", /*allow_temporal_kinds=*/true);
  if (cfg.t2.kind == FactorSpec::Kind::Shift && (cfg.t2.tau < 1 || cfg.t2.tau >= cfg.n))
    throw ConfigError("shift tau must satisfy 1 <= tau < n");

  const std::string law = lower(kv.get_or("law", "kind", "real-gaussian"));
  if (law == "real-gaussian") {
    cfg.law_kind = EntryLaw::Kind::RealGaussian;
    cfg.alpha_x = 1.0;
    cfg.kappa_x = 0.0;
  } else if (law == "complex-gaussian") {
    cfg.law_kind = EntryLaw::Kind::ComplexGaussian;
    cfg.alpha_x = 0.0;
    cfg.kappa_x = 0.0;
  } else if (law == "rademacher") {
    cfg.law_kind = EntryLaw::Kind::Rademacher;
    cfg.alpha_x = 1.0;
    cfg.kappa_x = -2.0;
  } else if (law == "custom") {
    cfg.law_kind = EntryLaw::Kind::Custom;
    cfg.alpha_x = parse_number(kv.get("law", "alpha"), "law.alpha");
    cfg.kappa_x = parse_number(kv.get("law", "kappa"), "law.kappa");
  } else {
    throw ConfigError("unknown entry law '" + law + "'");
  }
  return cfg;
}

ModelConfig parse_model_config_file(const std::string& path) {
  return parse_model_config(parse_key_value_file(path));
}

PlanConfig parse_plan_config(const KeyValueConfig& kv) {
  PlanConfig out;
  SimulationPlan& plan = out.plan;
  plan.replications = parse_int(kv.get_or("plan", "replications", "1000"), "replications");
  plan.level = parse_number(kv.get_or("plan", "level", "0.05"), "level");
  plan.base_seed = static_cast<std::uint64_t>(
      parse_number(kv.get_or("plan", "seed", "1"), "seed"));
  const std::string moments = lower(kv.get_or("plan", "moments", "known"));
  if (moments == "known")
    plan.moments = MomentSource::Kind::Known;
  else if (moments == "plugin" || moments == "plug-in")
    plan.moments = MomentSource::Kind::PlugIn;
  else
    throw ConfigError("moments must be 'known' or 'plugin'");
  const std::string centering = lower(kv.get_or("plan", "centering", "finite-n"));
  if (centering == "finite-n")
    plan.centering = Centering::FiniteN;
  else if (centering == "asymptotic")
    plan.centering = Centering::Asymptotic;
  else
    throw ConfigError("centering must be 'finite-n' or 'asymptotic'");

  const std::string kind = lower(kv.get_or("model", "kind", "model1"));
  if (kind == "model1") {
    plan.model = ProcessFamily::model1();
  } else if (kind == "model2") {
    plan.model = ProcessFamily::model2();
  } else if (kind == "custom") {
    plan.model.ma = parse_number_list(kv.get_or("model", "ma", "1"));
    if (plan.model.ma.empty()) throw ConfigError("custom model needs MA coefficients");
    const std::string sigma0 = lower(kv.get_or("model", "sigma0", "model1"));
    if (sigma0 == "model1")
      plan.model.sigma0_kind = ProcessFamily::Sigma0::Model1;
    else if (sigma0 == "identity")
      plan.model.sigma0_kind = ProcessFamily::Sigma0::Identity;
    else
      throw ConfigError("sigma0 must be 'model1' or 'identity'");
  } else {
    throw ConfigError("model kind must be model1, model2, or custom");
  }
  const std::string law = lower(kv.get_or("model", "law", "real-gaussian"));
  if (law == "real-gaussian")
    plan.model.law = EntryLaw::real_gaussian();
  else if (law == "rademacher")
    plan.model.law = EntryLaw::rademacher();
  else
    throw ConfigError("plan law must be real-gaussian or rademacher");

  for (const std::string& cell : kv.get_all("cells", "cell")) {
    std::istringstream ss(cell);
    Cell c{0, 0, 0};
    if (!(ss >> c.p >> c.n >> c.q)) throw ConfigError("cell must be 'p n q': " + cell);
    std::string rest;
    if (ss >> rest) throw ConfigError("cell must be 'p n q': " + cell);
    if (c.p < 1 || c.n < 1 || c.q < 1 || c.q >= c.n)
      throw ConfigError("invalid cell (need p, n >= 1 and 1 <= q < n): " + cell);
    plan.cells.push_back(c);
  }
  if (plan.cells.empty()) throw ConfigError("plan has no cells");
  return out;
}

PlanConfig parse_plan_config_file(const std::string& path) {
  return parse_plan_config(parse_key_value_file(path));
}

Polynomial<double> parse_polynomial(const std::string& text) {
  // Terms of the form [coef][*][x[^power]] joined by + or -.
  Polynomial<double> poly;
  auto add_term = [&](double coef, int power) {
    if (power < 0) throw ConfigError("negative power in polynomial");
    if (static_cast<std::size_t>(power) >= poly.coefficients.size())
      poly.coefficients.resize(static_cast<std::size_t>(power) + 1, 0.0);
    poly.coefficients[static_cast<std::size_t>(power)] += coef;
  };

  std::string s;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(ch);
  if (s.empty()) throw ConfigError("empty polynomial");

  std::size_t i = 0;
  while (i < s.size()) {
    double sign = 1.0;
    while (i < s.size() && (s[i] == '+' || s[i] == '-')) {
      if (s[i] == '-') sign = -sign;
      ++i;
    }
    if (i >= s.size()) throw ConfigError("dangling sign in polynomial");
    double coef = 1.0;
    bool have_coef = false;
    if (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.') {
      std::size_t used = 0;
      try {
        coef = std::stod(s.substr(i), &used);
      } catch (const std::exception&) {
        throw ConfigError("bad coefficient in polynomial: " + text);
      }
      i += used;
      have_coef = true;
    }
    if (i < s.size() && s[i] == '*') ++i;
    int power = 0;
    if (i < s.size() && (s[i] == 'x' || s[i] == 'X')) {
      ++i;
      power = 1;
      if (i < s.size() && s[i] == '^') {
        ++i;
        std::size_t used = 0;
        try {
          power = std::stoi(s.substr(i), &used);
        } catch (const std::exception&) {
          throw ConfigError("bad power in polynomial: " + text);
        }
        i += used;
      }
    } else if (!have_coef) {
      throw ConfigError("expected coefficient or x in polynomial: " + text);
    }
    add_term(sign * coef, power);
  }
  if (poly.coefficients.empty()) poly.coefficients.push_back(0.0);
  return poly;
}

}  // namespace sepspec
