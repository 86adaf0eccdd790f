#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>

#include <qprobe/spectral.hpp>

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using qprobe::NoiseSpectrum;

namespace {

// Total power by an independent double-exponential rule on [0, inf), doubled.
double total_power(const NoiseSpectrum& spec) {
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [&](double w) { return qprobe::spectrum_at(spec, w); };
  return 2.0 * integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-13);
}

}  // namespace

TEST_CASE("normalization integrates the spectrum to g squared", "[spectral]") {
  for (double g : {0.5, 1.0, 2.0}) {
    for (double tau : {0.1, 1.0, 10.0}) {
      for (double beta : {2.0, 3.0, 4.0, 6.0}) {
        const NoiseSpectrum spec(g, tau, beta);
        INFO("g=" << g << " tau=" << tau << " beta=" << beta);
        CHECK_THAT(total_power(spec), WithinRel(g * g, 1e-6));
      }
    }
  }
}

TEST_CASE("normalization closed values and limits", "[spectral]") {
  CHECK_THAT(qprobe::normalization(2.0), WithinRel(1.0 / std::numbers::pi, 1e-15));
  CHECK_THAT(qprobe::normalization(4.0), WithinRel(std::sqrt(2.0) / std::numbers::pi, 1e-15));
  CHECK_THAT(qprobe::normalization(1e7), WithinRel(0.5, 1e-12));
  CHECK(qprobe::normalization(3.0) == qprobe::normalization(3.0));
  CHECK_THROWS_AS(qprobe::normalization(1.5), std::domain_error);
  CHECK_THROWS_AS(NoiseSpectrum(1.0, 1.0, 1.99), std::domain_error);
  CHECK_THROWS_AS(NoiseSpectrum(0.0, 1.0, 2.0), std::domain_error);
  CHECK_THROWS_AS(NoiseSpectrum(1.0, -1.0, 2.0), std::domain_error);
}

TEST_CASE("spectrum values", "[spectral]") {
  const NoiseSpectrum spec(1.0, 1.0, 2.0);
  const double a2 = 1.0 / std::numbers::pi;
  CHECK_THAT(qprobe::spectrum_at(spec, 0.0), WithinRel(a2, 1e-15));
  CHECK_THAT(qprobe::spectrum_at(spec, 1.0), WithinRel(a2 / 2.0, 1e-15));
  CHECK_THAT(qprobe::spectrum_at(spec, 100.0), WithinRel(a2 / 10001.0, 1e-15));
  CHECK_THAT(qprobe::spectrum_at(spec, 100.0), WithinRel(a2 * std::pow(100.0, -2.0), 1e-4));
  CHECK(qprobe::spectrum_at(spec, -3.7) == qprobe::spectrum_at(spec, 3.7));

  const NoiseSpectrum odd(1.3, 0.7, 3.0);
  CHECK(qprobe::spectrum_at(odd, -2.0) == qprobe::spectrum_at(odd, 2.0));
  double prev = qprobe::spectrum_at(odd, 0.0);
  for (int i = 1; i < 400; ++i) {
    const double v = qprobe::spectrum_at(odd, 0.05 * i);
    CHECK(v > 0.0);
    CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("critical frequency", "[spectral]") {
  CHECK(qprobe::critical_frequency(NoiseSpectrum(1.0, 1.0, 2.0)) == 1.0);
  CHECK_THAT(qprobe::critical_frequency(NoiseSpectrum(1.0, 2.0, 2.0)), WithinRel(0.5, 1e-15));
  CHECK_THAT(qprobe::critical_frequency(NoiseSpectrum(1.0, 1.0, 4.0)),
             WithinRel(std::pow(3.0, -0.25), 1e-15));
  for (double beta : {2.0, 2.5, 3.0, 4.0, 6.0}) {
    for (double tau : {0.1, 1.0, 3.3}) {
      const NoiseSpectrum spec(1.7, tau, beta);
      CHECK(qprobe::spectrum_dtau(spec, qprobe::critical_frequency(spec)) == 0.0);
    }
  }
}

TEST_CASE("spectrum derivative in tau_c", "[spectral]") {
  const NoiseSpectrum base(1.0, 1.0, 2.0);
  CHECK_THAT(qprobe::spectrum_dtau(base, 0.0), WithinRel(1.0 / std::numbers::pi, 1e-15));
  CHECK(qprobe::spectrum_dtau(base, 1.0) == 0.0);

  for (double beta : {2.0, 3.0, 4.0, 6.0}) {
    for (double tau : {0.3, 1.0, 4.0}) {
      const NoiseSpectrum spec(0.8, tau, beta);
      const double w0 = qprobe::critical_frequency(spec);
      const double h = 1e-6 * tau;
      for (double r : {0.0, 0.1, 0.5, 0.9, 0.99, 1.01, 1.1, 2.0, 5.0, 30.0}) {
        const double w = r * w0;
        const double d = qprobe::spectrum_dtau(spec, w);
        INFO("beta=" << beta << " tau=" << tau << " w/w0=" << r);
        CHECK((d > 0.0) == (r < 1.0));
        CHECK((d < 0.0) == (r > 1.0));
        const double fd = (qprobe::spectrum_at(spec.with_tau_c(tau + h), w) -
                           qprobe::spectrum_at(spec.with_tau_c(tau - h), w)) /
                          (2.0 * h);
        if (std::abs(d) > 1e-12) CHECK_THAT(d, WithinRel(fd, 1e-6));
      }
    }
  }
}

TEST_CASE("derivative crosses zero linearly at w0", "[spectral]") {
  const NoiseSpectrum spec(1.0, 1.5, 4.0);
  const double w0 = qprobe::critical_frequency(spec);
  for (double delta : {1e-3, 1e-4, 1e-5}) {
    const double up = qprobe::spectrum_dtau(spec, w0 + delta * w0);
    const double down = qprobe::spectrum_dtau(spec, w0 - delta * w0);
    CHECK(up < 0.0);
    CHECK(down > 0.0);
    CHECK_THAT(-up / down, WithinAbs(1.0, 5.0 * delta));
    const double slope_ratio = qprobe::spectrum_dtau(spec, w0 + 0.5 * delta * w0) / up;
    CHECK_THAT(slope_ratio, WithinAbs(0.5, 5.0 * delta));
  }
}

TEST_CASE("scale covariance", "[spectral]") {
  for (double beta : {2.0, 3.0, 6.0}) {
    const NoiseSpectrum spec(1.2, 0.9, beta);
    for (double lambda : {0.5, 2.0}) {
      for (double w : {0.0, 0.3, 1.0, 7.5}) {
        const double lhs = qprobe::spectrum_at(spec, w) * lambda;
        const double rhs = qprobe::spectrum_at(spec.with_tau_c(lambda * spec.tau_c()), w / lambda);
        CHECK_THAT(rhs, WithinRel(lhs, 1e-14));
      }
    }
  }
}
