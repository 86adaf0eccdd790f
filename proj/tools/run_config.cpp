#include "run_config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace qprobe::cli {

const std::vector<KeySpec>& config_keys() {
  static const std::vector<KeySpec> keys = {
      {"beta", "2", "power-law exponent of the noise spectrum (>= 2)"},
      {"g", "1", "probe-environment coupling strength"},
      {"tau_c", "1", "environment memory time"},
      {"x", "nan", "sqrt(2N) g tau_c; when set, overrides g"},
      {"n_pulses", "20", "number of pi pulses N"},
      {"n_max", "100", "pulse budget for strategy"},
      {"harmonics", "1", "odd harmonics kept by the narrowband filter"},
      {"filter", "cpmg", "control filter: free | hahn | cpmg | narrowband"},
      {"route", "auto", "pulse-sequence evaluation: quadrature | lagsum | auto"},
      {"t", "1", "probing time"},
      {"at_optimum", "true", "crb: probe at the optimal time instead of t"},
      {"omega_min", "0", "lower end of the frequency grid"},
      {"omega_max", "10", "upper end of the frequency grid"},
      {"points", "201", "frequency grid points"},
      {"spacing", "lin", "frequency grid spacing: lin | log"},
      {"x_min", "0.1", "critical-scan: smallest sqrt(2N) g tau_c"},
      {"x_max", "10", "critical-scan: largest sqrt(2N) g tau_c"},
      {"x_points", "64", "critical-scan: grid points (log spaced)"},
      {"g_tau_min", "0.01", "strategy: smallest g tau_c"},
      {"g_tau_max", "10", "strategy: largest g tau_c"},
      {"g_tau_points", "32", "strategy: grid points (log spaced)"},
      {"near_critical", "1.35", "crb: also probe at t = near_critical * t0 (0 disables)"},
      {"shots", "10000", "crb: measurements per estimate"},
      {"trials", "400", "crb: independent estimates"},
      {"seed", "42", "crb: master random seed (also read from SEED)"},
      {"search_lo", "0.5", "crb: lower end of the tau_c search range, in units of tau_c"},
      {"search_hi", "2", "crb: upper end of the tau_c search range, in units of tau_c"},
      {"tol", "1e-07", "relative tolerance of attenuation integrals"},
      {"coarse_points", "240", "coarse time-scan points of the optimal-time search"},
      {"jobs", "1", "worker threads for scans"},
      {"format", "csv", "output format: csv | json"},
      {"output", "-", "output path, - for stdout"},
  };
  return keys;
}

ConfigMap default_config() {
  ConfigMap m;
  for (const auto& k : config_keys()) m[k.name] = k.default_value;
  return m;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool is_known(const std::string& key) {
  for (const auto& k : config_keys()) {
    if (k.name == key) return true;
  }
  return false;
}

double parse_double(const ConfigMap& m, const std::string& key) {
  const std::string& text = m.at(key);
  if (text == "nan" || text == "NaN") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError("config key '" + key + "': not a number: '" + text + "'");
  }
  return v;
}

long long parse_int(const ConfigMap& m, const std::string& key) {
  const std::string& text = m.at(key);
  long long v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError("config key '" + key + "': not an integer: '" + text + "'");
  }
  return v;
}

bool parse_bool(const ConfigMap& m, const std::string& key) {
  const std::string& text = m.at(key);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ValidationError("config key '" + key + "': not a boolean: '" + text + "'");
}

std::string one_of(const ConfigMap& m, const std::string& key,
                   std::initializer_list<const char*> allowed) {
  const std::string& text = m.at(key);
  for (const char* a : allowed) {
    if (text == a) return text;
  }
  throw ValidationError("config key '" + key + "': unsupported value '" + text + "'");
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

}  // namespace

ConfigMap parse_key_value(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ValidationError("config line " + std::to_string(line_no) + ": empty key");
    }
    out[key] = value;
  }
  return out;
}

ConfigMap parse_config_text(const std::string& text) {
  const std::string body = trim(text);
  if (body.empty() || body.front() != '{') return parse_key_value(text);

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
  const nlohmann::json* source = &doc;
  if (doc.contains("metadata") && doc["metadata"].contains("config")) {
    source = &doc["metadata"]["config"];
  }
  if (!source->is_object()) throw ValidationError("config: JSON config must be an object");
  ConfigMap out;
  for (const auto& [key, value] : source->items()) {
    out[key] = value.is_string() ? value.get<std::string>() : value.dump();
  }
  return out;
}

ConfigMap load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

void merge_config(ConfigMap& base, const ConfigMap& overrides) {
  for (const auto& [key, value] : overrides) {
    if (!is_known(key)) throw ValidationError("unknown config key '" + key + "'");
    base[key] = value;
  }
}

std::string format_config(const ConfigMap& config) {
  std::ostringstream os;
  for (const auto& k : config_keys()) {
    os << k.name << " = " << config.at(k.name) << "\n";
  }
  return os.str();
}

RunConfig to_run_config(const ConfigMap& m) {
  RunConfig c{};
  c.beta = parse_double(m, "beta");
  c.g = parse_double(m, "g");
  c.tau_c = parse_double(m, "tau_c");
  c.x = parse_double(m, "x");
  c.n_pulses = static_cast<int>(parse_int(m, "n_pulses"));
  c.n_max = static_cast<int>(parse_int(m, "n_max"));
  c.harmonics = static_cast<int>(parse_int(m, "harmonics"));
  c.filter = one_of(m, "filter", {"free", "hahn", "cpmg", "narrowband"});
  c.route = one_of(m, "route", {"quadrature", "lagsum", "auto"});
  c.t = parse_double(m, "t");
  c.at_optimum = parse_bool(m, "at_optimum");
  c.omega_min = parse_double(m, "omega_min");
  c.omega_max = parse_double(m, "omega_max");
  c.points = static_cast<int>(parse_int(m, "points"));
  c.spacing = one_of(m, "spacing", {"lin", "log"});
  c.x_min = parse_double(m, "x_min");
  c.x_max = parse_double(m, "x_max");
  c.x_points = static_cast<int>(parse_int(m, "x_points"));
  c.g_tau_min = parse_double(m, "g_tau_min");
  c.g_tau_max = parse_double(m, "g_tau_max");
  c.g_tau_points = static_cast<int>(parse_int(m, "g_tau_points"));
  c.near_critical = parse_double(m, "near_critical");
  const long long shots = parse_int(m, "shots");
  const long long trials = parse_int(m, "trials");
  const long long seed = parse_int(m, "seed");
  c.search_lo = parse_double(m, "search_lo");
  c.search_hi = parse_double(m, "search_hi");
  c.tol = parse_double(m, "tol");
  c.coarse_points = static_cast<int>(parse_int(m, "coarse_points"));
  c.jobs = static_cast<int>(parse_int(m, "jobs"));
  c.format = one_of(m, "format", {"csv", "json"});
  c.output = m.at("output");

  require(std::isfinite(c.beta) && c.beta >= 2.0, "beta must be >= 2");
  require(std::isfinite(c.g) && c.g > 0.0, "g must be > 0");
  require(std::isfinite(c.tau_c) && c.tau_c > 0.0, "tau_c must be > 0");
  require(std::isnan(c.x) || c.x > 0.0, "x must be > 0 when set");
  require(c.n_pulses >= 1, "n_pulses must be >= 1");
  require(c.n_max >= 1, "n_max must be >= 1");
  require(c.harmonics >= 1, "harmonics must be >= 1");
  require(std::isfinite(c.t) && c.t > 0.0, "t must be > 0");
  require(std::isfinite(c.omega_min) && std::isfinite(c.omega_max) && c.omega_min >= 0.0 &&
              c.omega_max >= c.omega_min,
          "frequency grid needs 0 <= omega_min <= omega_max");
  require(c.points >= 1, "points must be >= 1");
  require(c.points == 1 || c.omega_max > c.omega_min, "frequency grid needs omega_max > omega_min");
  require(c.spacing == "lin" || c.omega_min > 0.0, "log spacing needs omega_min > 0");
  require(c.x_min > 0.0 && c.x_max > c.x_min && c.x_points >= 2, "x grid needs 0 < x_min < x_max, >= 2 points");
  require(c.g_tau_min > 0.0 && c.g_tau_max > c.g_tau_min && c.g_tau_points >= 2,
          "g_tau grid needs 0 < g_tau_min < g_tau_max, >= 2 points");
  require(c.near_critical >= 0.0, "near_critical must be >= 0");
  require(shots >= 1, "shots must be >= 1");
  require(trials >= 100, "trials must be >= 100");
  require(seed >= 0, "seed must be a non-negative integer");
  require(c.search_lo > 0.0 && c.search_hi > c.search_lo, "search range needs 0 < search_lo < search_hi");
  require(c.tol > 0.0 && c.tol <= 1e-3, "tol must lie in (0, 1e-3]");
  require(c.coarse_points >= 200, "coarse_points must be >= 200");
  c.shots = static_cast<std::uint64_t>(shots);
  c.trials = static_cast<std::size_t>(trials);
  c.seed = static_cast<std::uint64_t>(seed);
  if (!std::isnan(c.x)) c.g = c.x / (std::sqrt(2.0 * c.n_pulses) * c.tau_c);
  return c;
}

}  // namespace qprobe::cli
