#pragma once

// Generalized Ornstein-Uhlenbeck noise spectra.
//
//   G(w) = g^2 * A(beta) * tau_c / (1 + |w|^beta * tau_c^beta)
//
// with A(beta) = beta * sin(pi/beta) / (2 pi), which normalizes the total
// noise power to the squared coupling: integral of G over the real line = g^2.

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

namespace qprobe {

/// Normalization factor A(beta) of the generalized Ornstein-Uhlenbeck family.
/// Throws std::domain_error for beta < 2 (or non-finite beta).
inline double normalization(double beta) {
  if (!std::isfinite(beta) || beta < 2.0) {
    throw std::domain_error("normalization: beta must be finite and >= 2");
  }
  return beta * std::sin(std::numbers::pi / beta) / (2.0 * std::numbers::pi);
}

/// Environment parameters x_B = [g, tau_c, beta] plus the derived A(beta).
class NoiseSpectrum {
 public:
  NoiseSpectrum(double g, double tau_c, double beta) : g_(g), tau_c_(tau_c), beta_(beta) {
    if (!(std::isfinite(g) && g > 0.0)) {
      throw std::domain_error("NoiseSpectrum: coupling g must be positive");
    }
    if (!(std::isfinite(tau_c) && tau_c > 0.0)) {
      throw std::domain_error("NoiseSpectrum: memory time tau_c must be positive");
    }
    a_beta_ = normalization(beta);
  }

  double g() const noexcept { return g_; }
  double tau_c() const noexcept { return tau_c_; }
  double beta() const noexcept { return beta_; }
  double a_beta() const noexcept { return a_beta_; }

  /// Dimensionless coupling g * tau_c.
  double g_tau() const noexcept { return g_ * tau_c_; }

  NoiseSpectrum with_tau_c(double tau_c) const { return {g_, tau_c, beta_}; }
  NoiseSpectrum with_g(double g) const { return {g, tau_c_, beta_}; }

  std::string describe() const {
    std::ostringstream os;
    os << "NoiseSpectrum{g=" << g_ << ", tau_c=" << tau_c_ << ", beta=" << beta_ << "}";
    return os.str();
  }

 private:
  double g_;
  double tau_c_;
  double beta_;
  double a_beta_;
};

namespace detail {

// |w * tau_c|^beta with the beta == 2 case kept exact.
inline double scaled_power(const NoiseSpectrum& spec, double omega) {
  const double u = std::abs(omega) * spec.tau_c();
  return spec.beta() == 2.0 ? u * u : std::pow(u, spec.beta());
}

}  // namespace detail

/// Spectral density G(omega). Even in omega, strictly positive.
inline double spectrum_at(const NoiseSpectrum& spec, double omega) {
  const double g2 = spec.g() * spec.g();
  return g2 * spec.a_beta() * spec.tau_c() / (1.0 + detail::scaled_power(spec, omega));
}

/// Critical frequency w0 = 1 / (tau_c (beta - 1)^(1/beta)), where dG/dtau_c = 0.
inline double critical_frequency(const NoiseSpectrum& spec) {
  return 1.0 / (spec.tau_c() * std::pow(spec.beta() - 1.0, 1.0 / spec.beta()));
}

/// Closed-form dG/dtau_c = g^2 A [1 + (1 - beta)|w tau_c|^beta] / (1 + |w tau_c|^beta)^2.
///
/// The numerator is evaluated as 1 - (|w|/w0)^beta, which is algebraically identical
/// and vanishes exactly when omega is the value returned by critical_frequency().
inline double spectrum_dtau(const NoiseSpectrum& spec, double omega) {
  const double p = detail::scaled_power(spec, omega);
  const double r = std::abs(omega) / critical_frequency(spec);
  const double numerator = r == 1.0 ? 0.0 : 1.0 - std::pow(r, spec.beta());
  const double g2 = spec.g() * spec.g();
  return g2 * spec.a_beta() * numerator / ((1.0 + p) * (1.0 + p));
}

}  // namespace qprobe
