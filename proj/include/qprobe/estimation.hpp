#pragma once

// Quantum Fisher information about tau_c, the Cramer-Rao relative error, and
// the scans built on them: optimal probing time, error versus control
// frequency, the critical scan in x = sqrt(2N) g tau_c, and pulse-budget
// strategy selection.
//
//   F_Q = exp(-2J) / (1 - exp(-2J)) * (dJ/dtau_c)^2 = (dJ/dtau_c)^2 / expm1(2J)
//   eps = 1 / (tau_c sqrt(F_Q))

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "qprobe/attenuation.hpp"
#include "qprobe/filters.hpp"
#include "qprobe/minimize.hpp"
#include "qprobe/parallel.hpp"
#include "qprobe/spectral.hpp"

namespace qprobe {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Branch { LongMemory, ShortMemory };

inline std::string to_string(Branch b) { return b == Branch::LongMemory ? "LM" : "SM"; }

/// Thrown when the relative error is infinite everywhere on the searched range.
class NoInformationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ErrorPoint {
  double t = 0.0;
  double omega_ctrl = 0.0;
  double qfi = 0.0;
  double eps = kInfinity;
  double j = 0.0;
};

struct CriticalScanRow {
  double x = 0.0;
  double g_tau = 0.0;
  double eps_min = kInfinity;
  double t_opt = 0.0;
  double t0 = 0.0;
  Branch branch = Branch::ShortMemory;
};

// ---------------------------------------------------------------------------
// Pointwise information

/// Fisher information from J and dJ/dtau_c. Exactly zero when dJ/dtau_c = 0 or J = 0.
inline double fisher_information(double j, double dj_dtau) {
  if (dj_dtau == 0.0 || !(j > 0.0)) return 0.0;
  const double contrast = std::expm1(2.0 * j);
  if (!std::isfinite(contrast)) return 0.0;
  return dj_dtau * dj_dtau / contrast;
}

/// Cramer-Rao relative error; +infinity when the information vanishes.
inline double relative_error_from_qfi(double tau_c, double qfi) {
  return qfi > 0.0 ? 1.0 / (tau_c * std::sqrt(qfi)) : kInfinity;
}

inline double qfi(const NoiseSpectrum& spec, const ControlFilter& filter,
                  double tol = kLibraryTolerance, Route route = Route::Auto) {
  if (!(filter.duration() > 0.0)) throw std::invalid_argument("qfi: t must be > 0");
  const auto r = attenuation(spec, filter, tol, route);
  return fisher_information(r.j, r.dj_dtau);
}

inline double relative_error(const NoiseSpectrum& spec, const ControlFilter& filter,
                             double tol = kLibraryTolerance, Route route = Route::Auto) {
  return relative_error_from_qfi(spec.tau_c(), qfi(spec, filter, tol, route));
}

/// h(J) = sqrt(exp(2J) - 1) / J: the relative error when |tau_c dJ/dtau_c| = J.
inline double contrast_factor(double j) { return std::sqrt(std::expm1(2.0 * j)) / j; }

struct UltimateBound {
  double j0;
  double eps0;
};

/// Minimum of h(J) over J > 0 by golden-section search.
inline UltimateBound ultimate_bound() {
  const auto m = golden_section(contrast_factor, 1e-3, 5.0, 1e-14);
  return {m.x, m.value};
}

// ---------------------------------------------------------------------------
// Control families: a protocol shape whose duration is scanned.

struct FreeFamily {};
struct CpmgFamily {
  int n_pulses = 1;
};
struct NarrowbandFamily {
  int n_pulses = 1;
  int harmonics = 1;
};
using ControlFamily = std::variant<FreeFamily, CpmgFamily, NarrowbandFamily>;

inline int family_pulses(const ControlFamily& family) {
  if (auto* c = std::get_if<CpmgFamily>(&family)) return c->n_pulses;
  if (auto* n = std::get_if<NarrowbandFamily>(&family)) return n->n_pulses;
  return 0;
}

inline ControlFilter make_filter(const ControlFamily& family, double t) {
  if (auto* c = std::get_if<CpmgFamily>(&family)) return ControlFilter::cpmg(c->n_pulses, t);
  if (auto* n = std::get_if<NarrowbandFamily>(&family)) {
    return ControlFilter::narrowband(n->n_pulses, n->harmonics, t);
  }
  return ControlFilter::free_evolution(t);
}

/// Time at which the control frequency pi N / t equals w0; tau_c for free evolution.
inline double reference_time(const NoiseSpectrum& spec, const ControlFamily& family) {
  const int n = family_pulses(family);
  if (n == 0) return spec.tau_c();
  return std::numbers::pi * n / critical_frequency(spec);
}

struct EstimationOptions {
  double tol = kScanTolerance;
  Route route = Route::Auto;
  std::size_t coarse_points = 240;
  int jobs = 1;
};

inline ErrorPoint error_point(const NoiseSpectrum& spec, const ControlFamily& family, double t,
                              const EstimationOptions& options = {}) {
  const auto filter = make_filter(family, t);
  const auto r = attenuation(spec, filter, options.tol, options.route);
  ErrorPoint p;
  p.t = t;
  p.omega_ctrl = filter.control_frequency();
  p.j = r.j;
  p.qfi = fisher_information(r.j, r.dj_dtau);
  p.eps = relative_error_from_qfi(spec.tau_c(), p.qfi);
  return p;
}

// ---------------------------------------------------------------------------
// Optimal probing time

struct TimeRange {
  double lo;
  double hi;
};

/// A range covering both the long-memory and short-memory optima of a family:
/// at least [1e-2, 1e3] tau_c, widened for weak coupling (short-memory decay
/// J ~ g^2 tau_c t needs t ~ 1/(g^2 tau_c)) and strong coupling.
inline TimeRange default_time_range(const NoiseSpectrum& spec, const ControlFamily& family) {
  const double tau = spec.tau_c();
  const double theta = spec.g_tau();
  const double n = family_pulses(family);
  const double lo = 1e-2 * tau * std::min(1.0, 1.0 / theta);
  const double hi = std::max(1e3 * tau, 100.0 * (1.0 + std::numbers::pi * n) * tau / (theta * theta));
  return {lo, hi};
}

struct OptimalTime {
  double t_opt = 0.0;
  double eps_min = kInfinity;
  double t0 = 0.0;
  Branch branch = Branch::ShortMemory;
  std::size_t basins = 0;
};

/// Global minimizer of the relative error over probing time.
///
/// Log-spaced coarse scan, golden-section refinement of every local basin in
/// log t, then the smallest error wins; values within tol of each other go to
/// the smaller t. Throws NoInformationError if every sample is infinite.
inline OptimalTime optimal_time(const NoiseSpectrum& spec, const ControlFamily& family,
                                TimeRange range, const EstimationOptions& options = {}) {
  const double tau = spec.tau_c();
  if (!(range.lo > 0.0 && range.lo <= 1e-2 * tau * (1.0 + 1e-12) &&
        range.hi >= 1e3 * tau * (1.0 - 1e-12))) {
    throw std::invalid_argument("optimal_time: t range must span at least [1e-2, 1e3] tau_c");
  }
  if (options.coarse_points < 200) {
    throw std::invalid_argument("optimal_time: coarse scan needs at least 200 points");
  }
  auto eps_at_log = [&](double log_t) { return error_point(spec, family, std::exp(log_t), options).eps; };

  std::vector<double> log_grid(options.coarse_points);
  const double a = std::log(range.lo);
  const double b = std::log(range.hi);
  for (std::size_t i = 0; i < log_grid.size(); ++i) {
    log_grid[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(log_grid.size() - 1);
  }
  std::vector<double> values(log_grid.size());
  for (std::size_t i = 0; i < log_grid.size(); ++i) values[i] = eps_at_log(log_grid[i]);

  const auto basins = refine_basins(eps_at_log, log_grid, values, 0.0, 1e-9);
  if (basins.empty()) {
    throw NoInformationError("optimal_time: relative error is infinite on the whole range");
  }
  Minimum best = basins.front();
  for (const auto& m : basins) {
    const bool clearly_better = m.value < best.value * (1.0 - options.tol);
    const bool tie = !clearly_better && m.value <= best.value * (1.0 + options.tol);
    if (clearly_better || (tie && m.x < best.x)) best = m;
  }

  OptimalTime out;
  out.t_opt = std::exp(best.x);
  out.eps_min = best.value;
  out.t0 = reference_time(spec, family);
  out.branch = out.t_opt < out.t0 ? Branch::LongMemory : Branch::ShortMemory;
  out.basins = basins.size();
  return out;
}

inline OptimalTime optimal_time(const NoiseSpectrum& spec, const ControlFamily& family,
                                const EstimationOptions& options = {}) {
  return optimal_time(spec, family, default_time_range(spec, family), options);
}

// ---------------------------------------------------------------------------
// Scans

enum class GridKind { Time, Frequency };

namespace detail {
inline void require_increasing(const std::vector<double>& grid, const char* who) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
      throw std::invalid_argument(std::string(who) + ": grid must be positive and strictly increasing");
    }
  }
}
}  // namespace detail

/// Relative error under the narrowband filter with w_ctrl = pi N / t tied, one
/// point per grid value. A frequency grid entry equal to w0 yields the +infinity sentinel.
inline std::vector<ErrorPoint> error_vs_control_scan(const NoiseSpectrum& spec, int n_pulses,
                                                     const std::vector<double>& grid,
                                                     GridKind kind = GridKind::Frequency,
                                                     int harmonics = 1) {
  detail::require_increasing(grid, "error_vs_control_scan");
  std::vector<ErrorPoint> rows;
  rows.reserve(grid.size());
  for (double v : grid) {
    const double omega = kind == GridKind::Frequency ? v : std::numbers::pi * n_pulses / v;
    const auto r = narrowband_attenuation(spec, n_pulses, harmonics, omega);
    ErrorPoint p;
    p.t = kind == GridKind::Time ? v : std::numbers::pi * n_pulses / omega;
    p.omega_ctrl = omega;
    p.j = r.j;
    p.qfi = fisher_information(r.j, r.dj_dtau);
    p.eps = relative_error_from_qfi(spec.tau_c(), p.qfi);
    rows.push_back(p);
  }
  return rows;
}

/// Coupling g (at tau_c = 1) for a given x = sqrt(2N) g tau_c.
inline double coupling_for_x(double x, int n_pulses) { return x / std::sqrt(2.0 * n_pulses); }

/// One optimal_time per x = sqrt(2N) g tau_c under the narrowband model (tau_c = 1).
inline std::vector<CriticalScanRow> critical_scan(double beta, int n_pulses,
                                                  const std::vector<double>& x_grid,
                                                  const EstimationOptions& options = {},
                                                  int harmonics = 1) {
  detail::require_increasing(x_grid, "critical_scan");
  const ControlFamily family = NarrowbandFamily{n_pulses, harmonics};
  return parallel_map<CriticalScanRow>(x_grid.size(), options.jobs, [&](std::size_t i) {
    const double x = x_grid[i];
    const NoiseSpectrum spec(coupling_for_x(x, n_pulses), 1.0, beta);
    const auto opt = optimal_time(spec, family, options);
    return CriticalScanRow{x, spec.g_tau(), opt.eps_min, opt.t_opt, opt.t0, opt.branch};
  });
}

/// Grid indices i where rows[i].branch != rows[i - 1].branch.
inline std::vector<std::size_t> branch_flips(const std::vector<CriticalScanRow>& rows) {
  std::vector<std::size_t> flips;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].branch != rows[i - 1].branch) flips.push_back(i);
  }
  return flips;
}

struct StrategyResult {
  int n_star = 1;
  double eps_min = kInfinity;
  double t_opt = 0.0;
  std::vector<double> eps_by_n;  // index N - 1
};

/// Best CPMG pulse count N in 1..N_max at a given g tau_c (tau_c = 1); ties go to smaller N.
inline StrategyResult strategy_select(double g_tau, double beta, int n_max,
                                      const EstimationOptions& options = {}) {
  if (n_max < 1) throw std::invalid_argument("strategy_select: N_max must be >= 1");
  const NoiseSpectrum spec(g_tau, 1.0, beta);
  const auto per_n = parallel_map<OptimalTime>(static_cast<std::size_t>(n_max), options.jobs,
                                               [&](std::size_t i) {
                                                 const ControlFamily family =
                                                     CpmgFamily{static_cast<int>(i) + 1};
                                                 return optimal_time(spec, family, options);
                                               });
  StrategyResult out;
  out.eps_by_n.reserve(per_n.size());
  for (std::size_t i = 0; i < per_n.size(); ++i) {
    const double e = per_n[i].eps_min;
    out.eps_by_n.push_back(e);
    if (e < out.eps_min * (1.0 - options.tol)) {
      out.eps_min = e;
      out.n_star = static_cast<int>(i) + 1;
      out.t_opt = per_n[i].t_opt;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fitting helper

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("loglog_slope: need matching samples, at least two");
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace qprobe
