#include "app.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include <qprobe/qprobe.hpp>

namespace qprobe::cli {

std::size_t Table::ok_rows() const {
  const auto status = columns.size() - 1;
  std::size_t ok = 0;
  for (const auto& row : rows) {
    if (std::get<std::string>(row[status]) == "ok") ++ok;
  }
  return ok;
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"spectrum",      "filter",        "attenuation",
                                                 "error-scan",    "optimal-time",  "critical-scan",
                                                 "strategy",      "crb"};
  return names;
}

bool is_execution_key(const std::string& key) { return key == "jobs" || key == "output"; }

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Route to_route(const std::string& name) {
  if (name == "quadrature") return Route::Quadrature;
  if (name == "lagsum") return Route::LagSum;
  return Route::Auto;
}

ControlFilter filter_from(const RunConfig& c, double t) {
  if (c.filter == "free") return ControlFilter::free_evolution(t);
  if (c.filter == "hahn") return ControlFilter::hahn(t);
  if (c.filter == "narrowband") return ControlFilter::narrowband(c.n_pulses, c.harmonics, t);
  return ControlFilter::cpmg(c.n_pulses, t);
}

ControlFamily family_from(const RunConfig& c) {
  if (c.filter == "free") return FreeFamily{};
  if (c.filter == "hahn") return CpmgFamily{1};
  if (c.filter == "narrowband") return NarrowbandFamily{c.n_pulses, c.harmonics};
  return CpmgFamily{c.n_pulses};
}

EstimationOptions options_from(const RunConfig& c) {
  EstimationOptions o;
  o.tol = c.tol;
  o.route = to_route(c.route);
  o.coarse_points = static_cast<std::size_t>(c.coarse_points);
  o.jobs = c.jobs;
  return o;
}

std::vector<double> frequency_grid(const RunConfig& c) {
  if (c.points == 1) return {c.omega_min};
  return c.spacing == "log" ? log_space(c.omega_min, c.omega_max, static_cast<std::size_t>(c.points))
                            : lin_space(c.omega_min, c.omega_max, static_cast<std::size_t>(c.points));
}

// Evaluates one row; a thrown exception becomes a row of NaNs with an error status.
using RowFn = std::function<std::vector<Cell>(std::size_t)>;

Table build_table(std::vector<std::string> columns, std::size_t n, int jobs, const RowFn& fn) {
  Table table;
  const std::size_t width = columns.size();
  columns.push_back("status");
  table.columns = std::move(columns);
  table.rows = parallel_map<std::vector<Cell>>(n, jobs, [&](std::size_t i) {
    std::vector<Cell> row;
    try {
      row = fn(i);
      row.emplace_back(std::string("ok"));
    } catch (const std::exception& e) {
      row.assign(width, Cell(kNaN));
      row.emplace_back(std::string("error: ") + e.what());
    }
    return row;
  });
  return table;
}

Table spectrum_table(const RunConfig& c) {
  const NoiseSpectrum spec(c.g, c.tau_c, c.beta);
  const auto grid = frequency_grid(c);
  return build_table({"omega", "G", "dG_dtau", "critical"}, grid.size(), 1, [&](std::size_t i) {
    const double w = grid[i];
    const double d = spectrum_dtau(spec, w);
    return std::vector<Cell>{w, spectrum_at(spec, w), d, static_cast<long long>(d == 0.0)};
  });
}

Table filter_table(const RunConfig& c) {
  const auto filter = filter_from(c, c.t);
  if (filter.is_narrowband()) {
    const auto lines = filter.lines();
    return build_table({"harmonic", "omega", "weight"}, lines.size(), 1, [&](std::size_t i) {
      return std::vector<Cell>{static_cast<long long>(2 * i + 1), lines[i].omega, lines[i].weight};
    });
  }
  const auto grid = frequency_grid(c);
  return build_table({"omega", "F"}, grid.size(), 1, [&](std::size_t i) {
    return std::vector<Cell>{grid[i], filter(grid[i])};
  });
}

Table attenuation_table(const RunConfig& c) {
  const NoiseSpectrum spec(c.g, c.tau_c, c.beta);
  return build_table({"t", "filter", "J", "dJ_dtau", "p_plus", "p_minus", "qfi", "eps", "method",
                      "abs_error"},
                     1, 1, [&](std::size_t) {
                       const auto filter = filter_from(c, c.t);
                       const auto r = attenuation(spec, filter, c.tol, to_route(c.route));
                       const auto p = probabilities(r.j);
                       const double info = fisher_information(r.j, r.dj_dtau);
                       return std::vector<Cell>{c.t,
                                                c.filter,
                                                r.j,
                                                r.dj_dtau,
                                                p.plus,
                                                p.minus,
                                                info,
                                                relative_error_from_qfi(c.tau_c, info),
                                                to_string(r.method),
                                                r.abs_error_estimate};
                     });
}

Table error_scan_table(const RunConfig& c) {
  const NoiseSpectrum spec(c.g, c.tau_c, c.beta);
  const auto grid = frequency_grid(c);
  const double w0 = critical_frequency(spec);
  return build_table({"omega_ctrl", "t", "J", "qfi", "eps", "critical"}, grid.size(), c.jobs,
                     [&](std::size_t i) {
                       const auto p = error_vs_control_scan(spec, c.n_pulses, {grid[i]},
                                                            GridKind::Frequency, c.harmonics)
                                          .front();
                       return std::vector<Cell>{p.omega_ctrl, p.t, p.j, p.qfi, p.eps,
                                                static_cast<long long>(grid[i] == w0)};
                     });
}

Table optimal_time_table(const RunConfig& c) {
  const NoiseSpectrum spec(c.g, c.tau_c, c.beta);
  return build_table({"family", "n_pulses", "t_opt", "eps_min", "t0", "t_opt_over_t0", "branch",
                      "basins"},
                     1, 1, [&](std::size_t) {
                       const auto family = family_from(c);
                       const auto o = optimal_time(spec, family, options_from(c));
                       return std::vector<Cell>{c.filter,
                                                static_cast<long long>(family_pulses(family)),
                                                o.t_opt,
                                                o.eps_min,
                                                o.t0,
                                                o.t_opt / o.t0,
                                                to_string(o.branch),
                                                static_cast<long long>(o.basins)};
                     });
}

Table critical_scan_table(const RunConfig& c) {
  const auto grid = log_space(c.x_min, c.x_max, static_cast<std::size_t>(c.x_points));
  auto options = options_from(c);
  options.jobs = 1;
  return build_table({"x", "g_tau", "eps_min", "t_opt", "t0", "t_opt_over_t0", "branch"},
                     grid.size(), c.jobs, [&](std::size_t i) {
                       const auto r = critical_scan(c.beta, c.n_pulses, {grid[i]}, options,
                                                    c.harmonics)
                                          .front();
                       return std::vector<Cell>{r.x,     r.g_tau,          r.eps_min,
                                                r.t_opt, r.t0,             r.t_opt / r.t0,
                                                to_string(r.branch)};
                     });
}

Table strategy_table(const RunConfig& c) {
  const auto grid = log_space(c.g_tau_min, c.g_tau_max, static_cast<std::size_t>(c.g_tau_points));
  auto options = options_from(c);
  options.jobs = 1;
  return build_table({"g_tau", "n_star", "eps_min", "t_opt", "eps_n1", "eps_nmax"}, grid.size(),
                     c.jobs, [&](std::size_t i) {
                       const auto s = strategy_select(grid[i], c.beta, c.n_max, options);
                       return std::vector<Cell>{grid[i],
                                                static_cast<long long>(s.n_star),
                                                s.eps_min,
                                                s.t_opt,
                                                s.eps_by_n.front(),
                                                s.eps_by_n.back()};
                     });
}

Table crb_table(const RunConfig& c) {
  const NoiseSpectrum spec(c.g, c.tau_c, c.beta);
  const auto family = family_from(c);
  const double t0 = reference_time(spec, family);

  struct Point {
    std::string label;
    double t;
  };
  std::vector<Point> points;
  if (c.at_optimum) {
    points.push_back({"optimum", optimal_time(spec, family, options_from(c)).t_opt});
  } else {
    points.push_back({"fixed", c.t});
  }
  if (c.near_critical > 0.0) points.push_back({"near_critical", c.near_critical * t0});

  const SearchRange range{c.search_lo * c.tau_c, c.search_hi * c.tau_c};
  return build_table({"point", "t", "t_over_t0", "shots", "trials", "empirical_rel_std",
                      "predicted_rel_err", "ratio", "relative_bias", "boundary_estimates"},
                     points.size(), 1, [&](std::size_t i) {
                       Protocol protocol;
                       protocol.g = c.g;
                       protocol.beta = c.beta;
                       protocol.filter = filter_from(c, points[i].t);
                       protocol.route = to_route(c.route);
                       protocol.tol = c.tol;
                       const auto r = crb_check(protocol, c.tau_c, c.shots, c.trials,
                                                substream_seed(c.seed, i), range, c.jobs);
                       return std::vector<Cell>{points[i].label,
                                                points[i].t,
                                                points[i].t / t0,
                                                static_cast<long long>(c.shots),
                                                static_cast<long long>(c.trials),
                                                r.empirical_rel_std,
                                                r.predicted_rel_err,
                                                r.ratio(),
                                                r.relative_bias,
                                                static_cast<long long>(r.boundary_estimates)};
                     });
}

std::string cell_text(const Cell& cell) {
  if (auto* d = std::get_if<double>(&cell)) return format_number(*d);
  if (auto* i = std::get_if<long long>(&cell)) return std::to_string(*i);
  return std::get<std::string>(cell);
}

nlohmann::json cell_json(const Cell& cell) {
  if (auto* d = std::get_if<double>(&cell)) {
    if (!std::isfinite(*d)) return format_number(*d);
    return std::strtod(format_number(*d).c_str(), nullptr);
  }
  if (auto* i = std::get_if<long long>(&cell)) return *i;
  return std::get<std::string>(cell);
}

}  // namespace

Table run_subcommand(const std::string& subcommand, const RunConfig& config) {
  if (subcommand == "spectrum") return spectrum_table(config);
  if (subcommand == "filter") return filter_table(config);
  if (subcommand == "attenuation") return attenuation_table(config);
  if (subcommand == "error-scan") return error_scan_table(config);
  if (subcommand == "optimal-time") return optimal_time_table(config);
  if (subcommand == "critical-scan") return critical_scan_table(config);
  if (subcommand == "strategy") return strategy_table(config);
  if (subcommand == "crb") return crb_table(config);
  throw ValidationError("unknown subcommand '" + subcommand + "'");
}

void write_csv(std::ostream& os, const std::string& subcommand, const ConfigMap& config,
               const Table& table) {
  os << "# tool = qprobe " << kVersion << "\n";
  os << "# subcommand = " << subcommand << "\n";
  for (const auto& k : config_keys()) {
    if (!is_execution_key(k.name)) os << "# " << k.name << " = " << config.at(k.name) << "\n";
  }
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    os << (i ? "," : "") << table.columns[i];
  }
  os << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::string text = cell_text(row[i]);
      if (text.find_first_of(",\"\n") != std::string::npos) {
        std::string quoted = "\"";
        for (char ch : text) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        text = quoted + "\"";
      }
      os << (i ? "," : "") << text;
    }
    os << "\n";
  }
}

void write_json(std::ostream& os, const std::string& subcommand, const ConfigMap& config,
                const Table& table) {
  nlohmann::ordered_json doc;
  doc["metadata"]["tool"] = "qprobe";
  doc["metadata"]["version"] = kVersion;
  doc["metadata"]["subcommand"] = subcommand;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& k : config_keys()) {
    if (!is_execution_key(k.name)) cfg[k.name] = config.at(k.name);
  }
  doc["metadata"]["config"] = cfg;
  doc["columns"] = table.columns;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json r = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) r[table.columns[i]] = cell_json(row[i]);
    rows.push_back(r);
  }
  doc["rows"] = rows;
  os << doc.dump(2) << "\n";
}

namespace {

std::string dashed(std::string key) {
  for (char& ch : key) {
    if (ch == '_') ch = '-';
  }
  return key;
}

struct Invocation {
  std::string config_path;
  bool print_config = false;
  std::map<std::string, std::string> flag_values;
};

void add_key_options(CLI::App& sub, Invocation& inv) {
  sub.add_option("-c,--config", inv.config_path, "flat key=value or JSON config file");
  sub.add_flag("--print-config", inv.print_config, "print the resolved configuration and exit");
  for (const auto& k : config_keys()) {
    sub.add_option("--" + dashed(k.name), inv.flag_values[k.name],
                   k.help + " [default: " + k.default_value + "]");
  }
}

int execute(const std::string& subcommand, CLI::App& sub, Invocation& inv, std::ostream& out) {
  ConfigMap resolved = default_config();
  if (!inv.config_path.empty()) merge_config(resolved, load_config_file(inv.config_path));
  if (const char* seed = std::getenv("SEED"); seed != nullptr && *seed != '\0') {
    resolved["seed"] = seed;
  }
  for (const auto& k : config_keys()) {
    if (sub.count("--" + dashed(k.name)) > 0) resolved[k.name] = inv.flag_values[k.name];
  }
  const RunConfig config = to_run_config(resolved);

  if (inv.print_config) {
    out << format_config(resolved);
    return kExitOk;
  }

  const Table table = run_subcommand(subcommand, config);

  std::ofstream file;
  std::ostream* sink = &out;
  if (config.output != "-") {
    file.open(config.output);
    if (!file) throw ValidationError("cannot open output file '" + config.output + "'");
    sink = &file;
  }
  if (config.format == "json") {
    write_json(*sink, subcommand, resolved, table);
  } else {
    write_csv(*sink, subcommand, resolved, table);
  }
  sink->flush();

  const std::size_t ok = table.ok_rows();
  if (ok * 10 < table.rows.size() * 9) return kExitPartialFailure;
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"qprobe: quantum-probe estimation of environment memory time"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::map<std::string, Invocation> invocations;
  std::map<std::string, CLI::App*> subs;
  for (const auto& name : subcommands()) {
    auto* sub = app.add_subcommand(name);
    add_key_options(*sub, invocations[name]);
    subs[name] = sub;
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  for (const auto& name : subcommands()) {
    if (!subs[name]->parsed()) continue;
    try {
      return execute(name, *subs[name], invocations[name], out);
    } catch (const ValidationError& e) {
      err << "error: " << e.what() << "\n";
      return kExitValidation;
    } catch (const std::exception& e) {
      err << "internal error: " << e.what() << "\n";
      return kExitInternal;
    }
  }
  return kExitValidation;
}

}  // namespace qprobe::cli
