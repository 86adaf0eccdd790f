#pragma once

// Attenuation factor J = integral F_t(w) G(w) dw of the probe coherence,
// its tau_c-derivative, and the resulting measurement probabilities.
//
// Three evaluation routes:
//   * Quadrature: adaptive Gauss-Kronrod over w with a rigorous power-law tail bound.
//   * Narrowband: sum of delta-filter lines, J = sum w_k G(k w_ctrl).
//   * LagSum: for a +-1 modulation with switching coefficients c_k at times t_k,
//       J = - sum_{k<l} c_k c_l W(t_l - t_k),
//     where W(d) is the free-evolution attenuation after time d. For beta = 2,
//     W(d) = g^2 tau_c^2 (d/tau_c - 1 + exp(-d/tau_c)) in closed form; other beta
//     evaluate W by quadrature (LagKernel).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qprobe/filters.hpp"
#include "qprobe/quadrature.hpp"
#include "qprobe/spectral.hpp"

namespace qprobe {

enum class Method { Quadrature, Narrowband, ClosedForm };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::Quadrature: return "quadrature";
    case Method::Narrowband: return "narrowband";
    case Method::ClosedForm: return "closed-form";
  }
  return "unknown";
}

/// Route for free-evolution and pulse-sequence filters. Auto picks the lag sum.
enum class Route { Quadrature, LagSum, Auto };

struct ProbeResult {
  double j = 0.0;
  double dj_dtau = 0.0;
  Method method = Method::ClosedForm;
  double abs_error_estimate = 0.0;
};

inline constexpr double kLibraryTolerance = 1e-9;
inline constexpr double kScanTolerance = 1e-7;

// ---------------------------------------------------------------------------
// Closed-form free decay (beta = 2)

/// g^2 tau_c^2 (t/tau_c - 1 + exp(-t/tau_c)): Ornstein-Uhlenbeck free dephasing.
inline double free_decay_closed_form(double g, double tau_c, double t) {
  if (!(g > 0.0 && tau_c > 0.0 && t >= 0.0)) {
    throw std::domain_error("free_decay_closed_form: need g > 0, tau_c > 0, t >= 0");
  }
  const double s = t / tau_c;
  double w;
  if (s < 5e-3) {
    w = s * s * (0.5 - s * (1.0 / 6.0 - s * (1.0 / 24.0 - s * (1.0 / 120.0 - s / 720.0))));
  } else {
    w = s + std::expm1(-s);
  }
  return g * g * tau_c * tau_c * w;
}

inline double free_decay_closed_form(const NoiseSpectrum& spec, double t) {
  if (spec.beta() != 2.0) {
    throw std::domain_error("free_decay_closed_form: exact only for beta = 2");
  }
  return free_decay_closed_form(spec.g(), spec.tau_c(), t);
}

/// d/dtau_c of free_decay_closed_form: g^2 tau_c (s - 2 + (2 + s) exp(-s)), s = t/tau_c.
inline double free_decay_closed_form_dtau(double g, double tau_c, double t) {
  if (!(g > 0.0 && tau_c > 0.0 && t >= 0.0)) {
    throw std::domain_error("free_decay_closed_form_dtau: need g > 0, tau_c > 0, t >= 0");
  }
  const double s = t / tau_c;
  double m;
  if (s < 5e-3) {
    m = s * s * s *
        (1.0 / 6.0 - s * (1.0 / 12.0 - s * (1.0 / 40.0 - s * (1.0 / 180.0 - s / 1008.0))));
  } else {
    m = s - 2.0 + (2.0 + s) * std::exp(-s);
  }
  return g * g * tau_c * m;
}

inline double free_decay_closed_form_dtau(const NoiseSpectrum& spec, double t) {
  if (spec.beta() != 2.0) {
    throw std::domain_error("free_decay_closed_form_dtau: exact only for beta = 2");
  }
  return free_decay_closed_form_dtau(spec.g(), spec.tau_c(), t);
}

// ---------------------------------------------------------------------------
// Measurement probabilities

struct Probabilities {
  double plus;
  double minus;
};

inline Probabilities probabilities(double j) {
  if (!(j >= 0.0)) throw std::domain_error("probabilities: attenuation must be >= 0");
  const double c = std::exp(-j);
  return {0.5 * (1.0 + c), 0.5 * (1.0 - c)};
}

// ---------------------------------------------------------------------------
// Lag kernel W(d) and dW/dtau_c

/// Free-evolution attenuation as a function of lag, for a fixed spectrum.
///
/// Dimensionless form: W(d) = g^2 tau_c^2 w(s), dW/dtau_c = g^2 tau_c m(s), s = d / tau_c,
///   w(s) = 2 int_0^inf  A/(1+u^b) (1 - cos us)/u^2 du,
///   m(s) = 2 int_0^inf  A(1-(b-1)u^b)/(1+u^b)^2 (1 - cos us)/u^2 du.
class LagKernel {
 public:
  explicit LagKernel(const NoiseSpectrum& spec, double rel_tol = 1e-12)
      : spec_(spec), rel_tol_(rel_tol) {}

  struct Value {
    double w;
    double dw_dtau;
    double abs_error;
  };

  Value operator()(double lag) const {
    const double g2 = spec_.g() * spec_.g();
    const double tau = spec_.tau_c();
    if (lag <= 0.0) return {0.0, 0.0, 0.0};
    if (spec_.beta() == 2.0) {
      return {free_decay_closed_form(spec_.g(), tau, lag),
              free_decay_closed_form_dtau(spec_.g(), tau, lag), 0.0};
    }
    const auto [w, m, err] = dimensionless(lag / tau);
    return {g2 * tau * tau * w, g2 * tau * m, g2 * tau * tau * err};
  }

 private:
  struct Dimensionless {
    double w;
    double m;
    double err;
  };

  Dimensionless dimensionless(double s) const {
    const double beta = spec_.beta();
    const double a = spec_.a_beta();
    const double u0 = std::pow(beta - 1.0, -1.0 / beta);
    auto phi = [&](double u) {
      const double p = std::pow(u, beta);
      if (!(p < 1e300)) return Values<2>{0.0, 0.0};
      const double den = 1.0 + p;
      return Values<2>{a / den, a * (1.0 - (beta - 1.0) * p) / (den * den)};
    };
    auto one_minus_cos_over_u2 = [&](double u) {
      const double x = u * s;
      if (x < 1e-4) return s * s * (0.5 - x * x / 24.0);
      const double h = std::sin(0.5 * x) / u;
      return 2.0 * h * h;
    };

    // Oscillatory head [0, U] with break points every half period pi / s. The
    // remainder int_U^inf phi cos(us)/u^2 is bounded by 2 |phi(U)| / (U^2 s);
    // U doubles until that bound is within tolerance.
    const double half_period = std::numbers::pi / s;
    const double step = std::min(half_period, 0.5);
    auto breaks_between = [&](double lo, double hi) {
      std::vector<double> breaks{lo};
      for (double x = lo + step; x < hi; x += step) breaks.push_back(x);
      breaks.push_back(hi);
      return breaks;
    };

    auto head_integrand = [&](double u) {
      const double k = one_minus_cos_over_u2(u);
      const auto f = phi(u);
      return Values<2>{2.0 * f[0] * k, 2.0 * f[1] * k};
    };
    const double rel = rel_tol_;
    auto target = [rel](const Values<2>& v) {
      const double scale = std::max(std::abs(v[0]), 1e-300);
      return Values<2>{rel * scale, rel * std::max(std::abs(v[1]), scale)};
    };
    auto osc_bound = [&](double upper) {
      const auto f = phi(upper);
      return 4.0 * std::max(std::abs(f[0]), std::abs(f[1])) / (upper * upper * s);
    };

    double upper = std::max({40.0, 100.0 / s, 4.0 * u0});
    auto head = integrate_adaptive<2>(head_integrand, breaks_between(0.0, upper), target);
    double w = head.value[0];
    double m = head.value[1];
    double err = head.abs_error[0];
    while (osc_bound(upper) > 0.1 * rel * std::abs(w) && upper < 1e7) {
      const double next = 2.0 * upper;
      const double w_now = w;
      const double m_now = m;
      auto ext_target = [&](const Values<2>&) {
        const double scale = std::max(std::abs(w_now), 1e-300);
        return Values<2>{0.5 * rel * scale, 0.5 * rel * std::max(std::abs(m_now), scale)};
      };
      const auto ext = integrate_adaptive<2>(head_integrand, breaks_between(upper, next), ext_target);
      w += ext.value[0];
      m += ext.value[1];
      err += ext.abs_error[0];
      upper = next;
    }

    // Non-oscillatory tail 2 int_U^inf phi/u^2 du = (2/U) int_0^1 phi(U/y) dy.
    auto tail_integrand = [&](double y) {
      if (y == 0.0) return Values<2>{0.0, 0.0};
      const auto f = phi(upper / y);
      return Values<2>{2.0 * f[0] / upper, 2.0 * f[1] / upper};
    };
    const std::vector<double> tail_breaks{0.0, 0.25, 0.5, 1.0};
    auto tail_target = [&](const Values<2>&) {
      const double scale = std::max(std::abs(w), 1e-300);
      return Values<2>{rel * scale, rel * scale};
    };
    const auto tail = integrate_adaptive<2>(tail_integrand, tail_breaks, tail_target);
    return {w + tail.value[0], m + tail.value[1], err + tail.abs_error[0] + osc_bound(upper)};
  }

  NoiseSpectrum spec_;
  double rel_tol_;
};

namespace detail {

// Collapses a switching function to coefficient sums per lag. CPMG switching
// times lie on the lattice h * {0, 1, 3, .., 2N-1, 2N} with h = t / (2N), so
// lags are integer multiples of h and only 2N + 1 kernel values are needed.
inline std::vector<std::pair<double, double>> lag_weights(const SwitchingFunction& sw,
                                                          std::optional<double> lattice) {
  std::vector<std::pair<double, double>> out;
  const std::size_t n = sw.times.size();
  if (lattice) {
    const double h = *lattice;
    std::vector<long long> index(n);
    for (std::size_t i = 0; i < n; ++i) index[i] = std::llround(sw.times[i] / h);
    std::vector<double> by_lag(static_cast<std::size_t>(index.back() + 1), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t l = k + 1; l < n; ++l) {
        by_lag[static_cast<std::size_t>(index[l] - index[k])] += sw.jumps[k] * sw.jumps[l];
      }
    }
    for (std::size_t m = 1; m < by_lag.size(); ++m) {
      if (by_lag[m] != 0.0) out.emplace_back(static_cast<double>(m) * h, by_lag[m]);
    }
    return out;
  }
  out.reserve(n * (n - 1) / 2);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = k + 1; l < n; ++l) {
      out.emplace_back(sw.times[l] - sw.times[k], sw.jumps[k] * sw.jumps[l]);
    }
  }
  return out;
}

inline std::optional<double> cpmg_lattice(const ControlFilter& filter) {
  const auto* seq = std::get_if<PulseSequence>(&filter.kind());
  const double t = filter.duration();
  if (seq == nullptr) return t / 2.0;  // free evolution: times {0, t}
  const int n = static_cast<int>(seq->pulse_times.size());
  if (n == 0) return t / 2.0;
  const auto ideal = cpmg_times(n, t);
  for (int i = 0; i < n; ++i) {
    if (std::abs(ideal[static_cast<std::size_t>(i)] - seq->pulse_times[static_cast<std::size_t>(i)]) >
        1e-12 * t) {
      return std::nullopt;
    }
  }
  return t / (2.0 * n);
}

inline ProbeResult narrowband_sum(const NoiseSpectrum& spec, const std::vector<SpectralLine>& lines) {
  ProbeResult r;
  r.method = Method::Narrowband;
  double magnitude = 0.0;
  for (const auto& line : lines) {
    const double gval = spectrum_at(spec, line.omega);
    r.j += line.weight * gval;
    r.dj_dtau += line.weight * spectrum_dtau(spec, line.omega);
    magnitude += line.weight * gval;
  }
  r.abs_error_estimate = 4.0 * std::numeric_limits<double>::epsilon() * magnitude;
  return r;
}

}  // namespace detail

/// Narrowband attenuation with the control frequency given directly (t = pi N / w_ctrl).
inline ProbeResult narrowband_attenuation(const NoiseSpectrum& spec, int n_pulses, int harmonics,
                                          double omega_ctrl) {
  if (n_pulses < 1 || harmonics < 1 || !(omega_ctrl > 0.0)) {
    throw std::invalid_argument("narrowband_attenuation: need N, K >= 1 and w_ctrl > 0");
  }
  const double t = std::numbers::pi * n_pulses / omega_ctrl;
  std::vector<SpectralLine> lines;
  for (int i = 0; i < harmonics; ++i) {
    const double k = 2.0 * i + 1.0;
    lines.push_back({k * omega_ctrl, 8.0 * t / (std::numbers::pi * k * k)});
  }
  return detail::narrowband_sum(spec, lines);
}

/// Exact time-domain evaluation for free evolution and pi-pulse sequences.
inline ProbeResult attenuation_lag_sum(const NoiseSpectrum& spec, const ControlFilter& filter,
                                       double kernel_tol = 1e-12) {
  if (filter.is_narrowband()) {
    throw std::invalid_argument("attenuation_lag_sum: narrowband filters have no time-domain form");
  }
  ProbeResult r;
  r.method = Method::ClosedForm;
  if (filter.duration() == 0.0) return r;
  const auto weights = detail::lag_weights(filter.switching(), detail::cpmg_lattice(filter));
  const LagKernel kernel(spec, kernel_tol);
  double magnitude = 0.0;
  double kernel_error = 0.0;
  for (const auto& [lag, c] : weights) {
    const auto w = kernel(lag);
    r.j -= c * w.w;
    r.dj_dtau -= c * w.dw_dtau;
    magnitude += std::abs(c * w.w);
    kernel_error += std::abs(c) * w.abs_error;
  }
  r.j = std::max(r.j, 0.0);
  r.abs_error_estimate =
      8.0 * std::numeric_limits<double>::epsilon() * magnitude + kernel_error;
  return r;
}

/// Adaptive spectral quadrature of J and dJ/dtau_c.
/// Throws QuadratureError if the panel budget is exhausted.
inline ProbeResult attenuation_quadrature(const NoiseSpectrum& spec, const ControlFilter& filter,
                                          double tol = kLibraryTolerance) {
  if (filter.is_narrowband()) {
    throw std::invalid_argument("attenuation_quadrature: use the narrowband route for delta filters");
  }
  ProbeResult r;
  r.method = Method::Quadrature;
  const double t = filter.duration();
  if (t == 0.0) return r;

  const double beta = spec.beta();
  const double tau = spec.tau_c();
  const double g2a = spec.g() * spec.g() * spec.a_beta();

  // |f~(w)| <= sum |c_k| / w, so F <= S^2 / (2 w^2) with S = 2N + 2.
  const double s_abs = 2.0 * filter.n_pulses() + 2.0;
  const double filter_bound = 0.5 * s_abs * s_abs;
  // Two-sided tails of F*G and F*|dG/dtau| above Omega, both ~ Omega^-(beta+1).
  auto tail_j = [&](double omega) {
    return 2.0 * filter_bound * g2a * std::pow(tau, 1.0 - beta) *
           std::pow(omega, -(beta + 1.0)) / (beta + 1.0);
  };
  auto tail_dj = [&](double omega) {
    return 2.0 * filter_bound * g2a * (beta - 1.0) * std::pow(tau, -beta) *
           std::pow(omega, -(beta + 1.0)) / (beta + 1.0);
  };

  auto integrand = [&](double omega) {
    const double f = filter(omega);
    return Values<2>{2.0 * f * spectrum_at(spec, omega), 2.0 * f * spectrum_dtau(spec, omega)};
  };
  auto target = [&](const Values<2>& v) {
    const double j_target = 0.5 * tol * std::abs(v[0]);
    const double d_target = 0.5 * tol * std::max(std::abs(v[1]), std::abs(v[0]) / tau);
    return Values<2>{j_target, d_target};
  };

  // Initial panels resolve every lobe of the filter (oscillation period ~ 2 pi / t).
  const double panel = std::min(std::numbers::pi / (4.0 * t), 0.5 / tau);
  auto make_breaks = [&](double lo, double hi) {
    std::vector<double> breaks{lo};
    const auto count = static_cast<std::size_t>(std::ceil((hi - lo) / panel));
    for (std::size_t i = 1; i < count; ++i) breaks.push_back(lo + panel * static_cast<double>(i));
    breaks.push_back(hi);
    return breaks;
  };

  double omega_hi = std::max(50.0 / tau, 8.0 * std::numbers::pi * (filter.n_pulses() + 1) / t);
  auto first = integrate_adaptive<2>(integrand, make_breaks(0.0, omega_hi), target);
  double j = first.value[0];
  double dj = first.value[1];
  double err_j = first.abs_error[0];

  for (int extension = 0; extension < 64; ++extension) {
    const double budget = 0.5 * tol * std::abs(j);
    const double d_budget = 0.5 * tol * std::max(std::abs(dj), std::abs(j) / tau);
    if (tail_j(omega_hi) <= budget && tail_dj(omega_hi) <= d_budget) break;
    const double need_j = std::pow(2.0 * filter_bound * g2a * std::pow(tau, 1.0 - beta) /
                                       ((beta + 1.0) * std::max(budget, 1e-300)),
                                   1.0 / (beta + 1.0));
    const double need_d =
        std::pow(2.0 * filter_bound * g2a * (beta - 1.0) * std::pow(tau, -beta) /
                     ((beta + 1.0) * std::max(d_budget, 1e-300)),
                 1.0 / (beta + 1.0));
    const double next = std::min(std::max({need_j, need_d, 2.0 * omega_hi}) * 1.01,
                                 omega_hi * 64.0);
    const double j_now = j;
    const double dj_now = dj;
    auto ext_target = [&](const Values<2>&) {
      return Values<2>{0.25 * tol * std::abs(j_now),
                       0.25 * tol * std::max(std::abs(dj_now), std::abs(j_now) / tau)};
    };
    const auto ext = integrate_adaptive<2>(integrand, make_breaks(omega_hi, next), ext_target);
    j += ext.value[0];
    dj += ext.value[1];
    err_j += ext.abs_error[0];
    omega_hi = next;
  }

  r.j = std::max(j, 0.0);
  r.dj_dtau = dj;
  r.abs_error_estimate = err_j + tail_j(omega_hi);
  return r;
}

/// J and dJ/dtau_c for any control filter. Narrowband filters always use the line sum.
inline ProbeResult attenuation(const NoiseSpectrum& spec, const ControlFilter& filter,
                               double tol = kLibraryTolerance, Route route = Route::Quadrature) {
  if (!(tol > 0.0 && tol <= 1e-3)) {
    throw std::invalid_argument("attenuation: tolerance must lie in (0, 1e-3]");
  }
  if (filter.duration() == 0.0) {
    ProbeResult r;
    r.method = filter.is_narrowband() ? Method::Narrowband
               : route == Route::Quadrature ? Method::Quadrature
                                            : Method::ClosedForm;
    return r;
  }
  if (filter.is_narrowband()) return detail::narrowband_sum(spec, filter.lines());
  if (route == Route::Quadrature) return attenuation_quadrature(spec, filter, tol);
  return attenuation_lag_sum(spec, filter);
}

}  // namespace qprobe
