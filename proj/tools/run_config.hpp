#pragma once

// Resolved settings for one CLI run. Every key has a documented default; values
// are layered defaults < config file < environment (SEED) < command-line flags.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace qprobe::cli {

/// Raised for any user-input problem; maps to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KeySpec {
  std::string name;
  std::string default_value;
  std::string help;
};

/// Every recognised configuration key, in output order.
const std::vector<KeySpec>& config_keys();

using ConfigMap = std::map<std::string, std::string>;

ConfigMap default_config();

/// Parses the flat `key = value` format. Blank lines and `#` comments are ignored.
ConfigMap parse_key_value(const std::string& text);

/// Accepts either the flat format or a JSON document produced by this tool
/// (keys under metadata.config), detected by a leading '{'.
ConfigMap parse_config_text(const std::string& text);

ConfigMap load_config_file(const std::string& path);

/// Overlays `overrides` onto `base`; unknown keys raise ValidationError.
void merge_config(ConfigMap& base, const ConfigMap& overrides);

/// Flat key-value dump of every resolved value (itself a valid config file).
std::string format_config(const ConfigMap& config);

struct RunConfig {
  double beta;
  double g;
  double tau_c;
  double x;  // sqrt(2N) g tau_c; NaN when unset (then g is used)
  int n_pulses;
  int n_max;
  int harmonics;
  std::string filter;
  std::string route;
  double t;
  bool at_optimum;
  double omega_min;
  double omega_max;
  int points;
  std::string spacing;
  double x_min;
  double x_max;
  int x_points;
  double g_tau_min;
  double g_tau_max;
  int g_tau_points;
  double near_critical;
  std::uint64_t shots;
  std::size_t trials;
  std::uint64_t seed;
  double search_lo;
  double search_hi;
  double tol;
  int coarse_points;
  int jobs;
  std::string format;
  std::string output;
};

/// Typed view of a resolved map. Throws ValidationError on malformed or out-of-range values.
RunConfig to_run_config(const ConfigMap& config);

}  // namespace qprobe::cli
