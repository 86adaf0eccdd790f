#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include <qprobe/filters.hpp>

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using qprobe::ControlFilter;

namespace {

using boost::math::quadrature::gauss;

// |int_0^t f(t') e^{i w t'} dt'|^2 / 2 with f = +-1 switching at the pulses, summed
// exactly segment by segment in long double.
double filter_oracle(const std::vector<double>& pulses, double t, double omega) {
  using C = std::complex<long double>;
  const long double w = omega;
  C total = 0.0L;
  long double a = 0.0L;
  long double sign = 1.0L;
  auto segment = [&](long double b) {
    total += sign * (std::exp(C(0.0L, w * b)) - std::exp(C(0.0L, w * a))) / C(0.0L, w);
    a = b;
    sign = -sign;
  };
  for (double p : pulses) segment(p);
  segment(t);
  return static_cast<double>(0.5L * std::norm(total));
}

// Area of F over the real line: fixed Gauss panels on [0, W] plus the mean tail
// sum(c_k^2) / (2 W), doubled for the negative half-line.
double filter_area(const ControlFilter& filter, double panel, double cutoff) {
  double area = 0.0;
  for (double a = 0.0; a < cutoff; a += panel) {
    area += gauss<double, 20>::integrate([&](double w) { return filter(w); }, a, a + panel);
  }
  double jumps2 = 0.0;
  for (double c : filter.switching().jumps) jumps2 += c * c;
  area += jumps2 / (2.0 * cutoff);
  return 2.0 * area;
}

}  // namespace

TEST_CASE("free filter values", "[filters]") {
  CHECK_THAT(qprobe::free_filter(2.0, 0.0), WithinRel(2.0, 1e-15));
  CHECK_THAT(qprobe::free_filter(2.0, std::numbers::pi), WithinAbs(0.0, 1e-15));
  CHECK_THAT(qprobe::free_filter(1.0, 1.0), WithinRel(0.459697694131860, 1e-13));
  CHECK(qprobe::free_filter(0.0, 3.0) == 0.0);
  CHECK_THROWS_AS(qprobe::free_filter(-1.0, 1.0), std::invalid_argument);

  // Time-domain definition by direct quadrature of cos and sin.
  for (double t : {0.5, 1.0, 3.0}) {
    for (double w : {0.2, 1.0, 4.5}) {
      const double re = gauss<double, 30>::integrate([&](double s) { return std::cos(w * s); }, 0.0, t);
      const double im = gauss<double, 30>::integrate([&](double s) { return std::sin(w * s); }, 0.0, t);
      CHECK_THAT(qprobe::free_filter(t, w), WithinRel(0.5 * (re * re + im * im), 1e-12));
    }
  }
}

TEST_CASE("empty sequence reduces to free evolution", "[filters]") {
  for (double t : {0.3, 1.0, 7.0}) {
    for (double w : {0.0, 1e-9, 0.4, 2.0, 50.0}) {
      CHECK_THAT(qprobe::sequence_filter({}, t, w), WithinRel(qprobe::free_filter(t, w), 1e-12));
    }
  }
}

TEST_CASE("hahn echo closed form", "[filters]") {
  for (double t : {0.5, 2.0, 9.0}) {
    const auto hahn = ControlFilter::hahn(t);
    CHECK(hahn(0.0) == 0.0);
    for (double w : {0.01, 0.5, 1.0, 3.0, 17.0}) {
      const double s = std::sin(w * t / 4.0);
      CHECK_THAT(hahn(w), WithinRel(8.0 * s * s * s * s / (w * w), 1e-10));
    }
  }
}

TEST_CASE("sequence filter matches the time-domain oracle", "[filters]") {
  const std::vector<std::vector<double>> sequences = {
      {0.5}, {0.25, 0.75}, {0.1, 0.35, 0.4, 0.9}, qprobe::cpmg_times(7, 1.0)};
  for (const auto& pulses : sequences) {
    for (double w : {0.05, 0.9, 3.0, 22.0, 140.0}) {
      const double expected = filter_oracle(pulses, 1.0, w);
      CHECK_THAT(qprobe::sequence_filter(pulses, 1.0, w), WithinAbs(expected, 1e-12 + 1e-10 * expected));
    }
  }
}

TEST_CASE("cpmg timing and dc blocking", "[filters]") {
  const auto times = qprobe::cpmg_times(4, 8.0);
  REQUIRE(times.size() == 4);
  CHECK_THAT(times[0], WithinRel(1.0, 1e-15));
  CHECK_THAT(times[3], WithinRel(7.0, 1e-15));
  for (int n = 1; n <= 12; ++n) {
    for (double t : {0.7, 5.0}) {
      CHECK_THAT(ControlFilter::cpmg(n, t)(0.0), WithinAbs(0.0, 1e-24));
    }
  }
}

TEST_CASE("small-frequency fallback is continuous", "[filters]") {
  const std::vector<double> pulses = {0.3, 0.5};
  for (double t : {1.0, 4.0}) {
    std::vector<double> scaled;
    for (double p : pulses) scaled.push_back(p * t);
    const double w = 1e-8 / t;
    CHECK_THAT(qprobe::sequence_filter(scaled, t, w), WithinRel(filter_oracle(scaled, t, w), 1e-6));
    const double below = qprobe::sequence_filter(scaled, t, 0.999e-6 / t);
    const double above = qprobe::sequence_filter(scaled, t, 1.001e-6 / t);
    CHECK_THAT(below, WithinRel(above, 1e-6));
  }
  // Zero-DC sequences must also join smoothly: F ~ w^2 there.
  const auto cpmg = ControlFilter::cpmg(3, 2.0);
  const double lo = cpmg(0.999e-6 / 2.0);
  const double hi = cpmg(1.001e-6 / 2.0);
  CHECK_THAT(hi / lo, WithinRel(std::pow(1.001 / 0.999, 2.0), 1e-3));
}

TEST_CASE("filters are nonnegative", "[filters]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> pulses;
    const int n = 1 + trial % 9;
    for (int i = 0; i < n; ++i) pulses.push_back(unit(rng));
    std::sort(pulses.begin(), pulses.end());
    for (int k = 0; k < 40; ++k) {
      CHECK(qprobe::sequence_filter(pulses, 1.0, 30.0 * unit(rng)) >= 0.0);
    }
  }
}

TEST_CASE("filter area equals pi t", "[filters]") {
  for (double t : {0.5, 2.0}) {
    const double cutoff = 2.0e4 / t;
    const double panel = 0.25 / t;
    CHECK_THAT(filter_area(ControlFilter::free_evolution(t), panel, cutoff),
               WithinRel(std::numbers::pi * t, 1e-6));
    CHECK_THAT(filter_area(ControlFilter::hahn(t), panel, cutoff), WithinRel(std::numbers::pi * t, 1e-6));
    CHECK_THAT(filter_area(ControlFilter::cpmg(5, t), panel / 5.0, cutoff),
               WithinRel(std::numbers::pi * t, 1e-6));
    CHECK_THAT(filter_area(ControlFilter::sequence({0.1 * t, 0.45 * t, 0.5 * t}, t), panel / 5.0, cutoff),
               WithinRel(std::numbers::pi * t, 1e-6));
  }
}

TEST_CASE("cpmg filter peaks at the control frequency", "[filters]") {
  const int n = 20;
  const double omega_ctrl = 2.5;
  const double t = n * std::numbers::pi / omega_ctrl;
  const auto cpmg = ControlFilter::cpmg(n, t);
  // The scan spans the first ten odd harmonics; at finite N the main lobe
  // sits about 0.2% below the control frequency.
  const int points = 10000;
  const double w_max = 20.0 * omega_ctrl;
  const double step = w_max / (points - 1);
  int best = 0;
  double best_value = -1.0;
  for (int i = 0; i < points; ++i) {
    const double v = cpmg(i * step);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  CHECK(std::abs(best * step / omega_ctrl - 1.0) < 5e-3);
  CHECK(cpmg.control_frequency() == Catch::Approx(omega_ctrl).epsilon(1e-15));
}

TEST_CASE("invalid pulse sequences are rejected", "[filters]") {
  CHECK_THROWS_AS(ControlFilter::sequence({0.5, 0.2}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ControlFilter::sequence({0.2, 0.2}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ControlFilter::sequence({0.0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ControlFilter::sequence({1.0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ControlFilter::cpmg(0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ControlFilter::narrowband(0, 1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ControlFilter::narrowband(3, 1, 1.0)(0.5), std::logic_error);
}

TEST_CASE("narrowband lines", "[filters]") {
  const auto one = qprobe::narrowband_attenuation_terms(1, 1, 2.0);
  REQUIRE(one.size() == 1);
  CHECK_THAT(one[0].omega, WithinRel(std::numbers::pi / 2.0, 1e-15));
  CHECK_THAT(one[0].weight, WithinRel(16.0 / std::numbers::pi, 1e-15));

  const auto two = qprobe::narrowband_attenuation_terms(6, 2, 3.0);
  REQUIRE(two.size() == 2);
  CHECK_THAT(two[0].weight / two[1].weight, WithinRel(9.0, 1e-14));
  CHECK_THAT(two[1].omega / two[0].omega, WithinRel(3.0, 1e-14));
  CHECK_THAT(two[0].omega, WithinRel(6.0 * std::numbers::pi / 3.0, 1e-15));

  const auto nb = ControlFilter::narrowband(6, 2, 3.0);
  CHECK(nb.is_narrowband());
  CHECK(nb.lines().size() == 2);
  CHECK_THROWS_AS(qprobe::narrowband_attenuation_terms(1, 0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(qprobe::narrowband_attenuation_terms(1, 1, 0.0), std::invalid_argument);
}
