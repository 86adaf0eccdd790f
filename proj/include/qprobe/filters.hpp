#pragma once

// Control filter functions F_t(w) for a dephasing qubit probe.
//
// A pi-pulse sequence flips the sign of the modulation f(t') = +-1 at every
// pulse. With f~(w) = integral_0^t f(t') exp(i w t') dt', the filter is
// F_t(w) = |f~(w)|^2 / 2, which for free evolution reduces to
// t^2 sinc^2(w t / 2) / 2.

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace qprobe {

struct FreeEvolution {};

struct PulseSequence {
  std::vector<double> pulse_times;
};

/// Idealized large-N control: delta filters at odd harmonics of w_ctrl = pi N / t.
/// harmonics = 1 is the single-frequency continuous-wave model.
struct NarrowbandDelta {
  int n_pulses = 1;
  int harmonics = 1;
};

using ControlKind = std::variant<FreeEvolution, PulseSequence, NarrowbandDelta>;

/// Point mass of a narrowband filter: J ~= sum weight * G(omega).
struct SpectralLine {
  double omega;
  double weight;
};

/// Sign-switching points of the modulation f(t'): f~(w) = (1 / (i w)) sum c_k exp(i w t_k).
struct SwitchingFunction {
  std::vector<double> times;
  std::vector<double> jumps;
};

namespace detail {

inline void validate_pulse_times(std::span<const double> pulse_times, double t) {
  if (!(std::isfinite(t) && t >= 0.0)) {
    throw std::invalid_argument("pulse sequence: duration must be finite and >= 0");
  }
  double previous = 0.0;
  for (double tp : pulse_times) {
    if (!(tp > previous && tp < t)) {
      throw std::invalid_argument(
          "pulse sequence: pulse times must be strictly increasing inside (0, t)");
    }
    previous = tp;
  }
}

inline double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

}  // namespace detail

/// Symmetric CPMG timing t_j = (j - 1/2) t / N, j = 1..N.
inline std::vector<double> cpmg_times(int n_pulses, double t) {
  if (n_pulses < 0) {
    throw std::invalid_argument("cpmg_times: number of pulses must be >= 0");
  }
  std::vector<double> times(static_cast<std::size_t>(n_pulses));
  for (int j = 1; j <= n_pulses; ++j) {
    times[static_cast<std::size_t>(j - 1)] = (j - 0.5) * t / n_pulses;
  }
  return times;
}

/// Free induction filter (t^2 / 2) sinc^2(w t / 2).
inline double free_filter(double t, double omega) {
  if (!(t >= 0.0)) {
    throw std::invalid_argument("free_filter: duration must be >= 0");
  }
  const double s = detail::sinc(0.5 * omega * t);
  return 0.5 * t * t * s * s;
}

inline SwitchingFunction switching_function(std::span<const double> pulse_times, double t) {
  detail::validate_pulse_times(pulse_times, t);
  SwitchingFunction sw;
  sw.times.reserve(pulse_times.size() + 2);
  sw.jumps.reserve(pulse_times.size() + 2);
  sw.times.push_back(0.0);
  sw.jumps.push_back(-1.0);
  double sign = 1.0;
  for (double tp : pulse_times) {
    sw.times.push_back(tp);
    sw.jumps.push_back(2.0 * sign);
    sign = -sign;
  }
  sw.times.push_back(t);
  sw.jumps.push_back(sign);
  return sw;
}

/// Filter of an ideal pi-pulse sequence, |f~(w)|^2 / 2.
///
/// For |w t| < 1e-6 the closed form loses all digits to cancellation; f~ is then
/// summed segment by segment with a second-order expansion of exp(i w t').
inline double sequence_filter(std::span<const double> pulse_times, double t, double omega) {
  detail::validate_pulse_times(pulse_times, t);
  if (t == 0.0) return 0.0;

  if (std::abs(omega * t) < 1e-6) {
    double re = 0.0;
    double im = 0.0;
    double a = 0.0;
    double sign = 1.0;
    auto add_segment = [&](double b) {
      const double l1 = b - a;
      const double l2 = (b * b - a * a) / 2.0;
      const double l3 = (b * b * b - a * a * a) / 6.0;
      re += sign * (l1 - omega * omega * l3);
      im += sign * omega * l2;
      a = b;
      sign = -sign;
    };
    for (double tp : pulse_times) add_segment(tp);
    add_segment(t);
    return 0.5 * (re * re + im * im);
  }

  // Up to |w t| ~ 1 the telescoped sum cancels to O((w t)^2) for DC-free sequences;
  // sum the segments instead, int_a^b e^{iwt'} = e^{iwa} l [sinc(wl) + i (wl/2) sinc^2(wl/2)].
  if (std::abs(omega * t) < 1.0) {
    double re = 0.0;
    double im = 0.0;
    double a = 0.0;
    double sign = 1.0;
    auto add_segment = [&](double b) {
      const double l = b - a;
      const double theta = omega * l;
      const double h = detail::sinc(0.5 * theta);
      const double seg_re = l * detail::sinc(theta);
      const double seg_im = l * 0.5 * theta * h * h;
      const double c = std::cos(omega * a);
      const double s = std::sin(omega * a);
      re += sign * (c * seg_re - s * seg_im);
      im += sign * (s * seg_re + c * seg_im);
      a = b;
      sign = -sign;
    };
    for (double tp : pulse_times) add_segment(tp);
    add_segment(t);
    return 0.5 * (re * re + im * im);
  }

  double sum_re = -1.0;
  double sum_im = 0.0;
  double sign = 1.0;
  for (double tp : pulse_times) {
    sum_re += 2.0 * sign * std::cos(omega * tp);
    sum_im += 2.0 * sign * std::sin(omega * tp);
    sign = -sign;
  }
  sum_re += sign * std::cos(omega * t);
  sum_im += sign * std::sin(omega * t);
  return 0.5 * (sum_re * sum_re + sum_im * sum_im) / (omega * omega);
}

/// Odd-harmonic delta lines k w_ctrl, k = 1, 3, .., 2K - 1, with weights 8 t / (pi k^2)
/// (square-wave Fourier series of CPMG with period 2 t / N).
inline std::vector<SpectralLine> narrowband_attenuation_terms(int n_pulses, int harmonics,
                                                              double t) {
  if (n_pulses < 1 || harmonics < 1) {
    throw std::invalid_argument("narrowband filter: N and K must be >= 1");
  }
  if (!(t > 0.0)) {
    throw std::invalid_argument("narrowband filter: duration must be > 0");
  }
  const double omega_ctrl = std::numbers::pi * n_pulses / t;
  std::vector<SpectralLine> lines;
  lines.reserve(static_cast<std::size_t>(harmonics));
  for (int i = 0; i < harmonics; ++i) {
    const double k = 2.0 * i + 1.0;
    lines.push_back({k * omega_ctrl, 8.0 * t / (std::numbers::pi * k * k)});
  }
  return lines;
}

/// A control protocol applied for a total probing time t.
class ControlFilter {
 public:
  static ControlFilter free_evolution(double t) { return ControlFilter(FreeEvolution{}, t); }

  static ControlFilter sequence(std::vector<double> pulse_times, double t) {
    detail::validate_pulse_times(pulse_times, t);
    return ControlFilter(PulseSequence{std::move(pulse_times)}, t);
  }

  static ControlFilter cpmg(int n_pulses, double t) {
    if (n_pulses < 1) throw std::invalid_argument("cpmg: N must be >= 1");
    return sequence(cpmg_times(n_pulses, t), t);
  }

  static ControlFilter hahn(double t) { return cpmg(1, t); }

  static ControlFilter narrowband(int n_pulses, int harmonics, double t) {
    if (n_pulses < 1 || harmonics < 1) {
      throw std::invalid_argument("narrowband filter: N and K must be >= 1");
    }
    return ControlFilter(NarrowbandDelta{n_pulses, harmonics}, t);
  }

  const ControlKind& kind() const noexcept { return kind_; }
  double duration() const noexcept { return t_; }

  bool is_narrowband() const noexcept { return std::holds_alternative<NarrowbandDelta>(kind_); }

  int n_pulses() const noexcept {
    if (auto* seq = std::get_if<PulseSequence>(&kind_)) {
      return static_cast<int>(seq->pulse_times.size());
    }
    if (auto* nb = std::get_if<NarrowbandDelta>(&kind_)) return nb->n_pulses;
    return 0;
  }

  /// pi N / t; zero for free evolution.
  double control_frequency() const noexcept {
    const int n = n_pulses();
    return n == 0 || t_ == 0.0 ? 0.0 : std::numbers::pi * n / t_;
  }

  /// Pointwise F_t(w). Narrowband filters are distributions and cannot be sampled.
  double operator()(double omega) const {
    return std::visit(
        [&](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, FreeEvolution>) {
            return free_filter(t_, omega);
          } else if constexpr (std::is_same_v<K, PulseSequence>) {
            return sequence_filter(k.pulse_times, t_, omega);
          } else {
            throw std::logic_error("narrowband delta filter has no pointwise value");
          }
        },
        kind_);
  }

  std::vector<SpectralLine> lines() const {
    auto* nb = std::get_if<NarrowbandDelta>(&kind_);
    if (nb == nullptr) throw std::logic_error("lines(): filter is not narrowband");
    return narrowband_attenuation_terms(nb->n_pulses, nb->harmonics, t_);
  }

  SwitchingFunction switching() const {
    if (auto* seq = std::get_if<PulseSequence>(&kind_)) {
      return switching_function(seq->pulse_times, t_);
    }
    if (std::holds_alternative<FreeEvolution>(kind_)) {
      return switching_function({}, t_);
    }
    throw std::logic_error("switching(): narrowband filter has no time-domain modulation");
  }

  std::string name() const {
    if (std::holds_alternative<FreeEvolution>(kind_)) return "free";
    if (is_narrowband()) return "narrowband";
    return n_pulses() == 1 ? "hahn" : "sequence";
  }

 private:
  ControlFilter(ControlKind kind, double t) : kind_(std::move(kind)), t_(t) {
    if (!(std::isfinite(t) && t >= 0.0)) {
      throw std::invalid_argument("ControlFilter: duration must be finite and >= 0");
    }
  }

  ControlKind kind_;
  double t_;
};

}  // namespace qprobe
