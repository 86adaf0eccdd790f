#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature for vector-valued
// integrands. The panel with the largest scaled error is bisected until every
// component meets its own target, so one pass integrates J and dJ/dtau_c
// from shared filter evaluations.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qprobe {

template <std::size_t Dim>
using Values = std::array<double, Dim>;

template <std::size_t Dim>
struct QuadratureResult {
  Values<Dim> value{};
  Values<Dim> abs_error{};
  std::size_t evaluations = 0;
  std::size_t panels = 0;
  bool converged = false;
};

/// Thrown when subdivision hits its panel limit; carries the best estimate.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double best_estimate, double achieved_error)
      : std::runtime_error(what), best_estimate_(best_estimate), achieved_error_(achieved_error) {}

  double best_estimate() const noexcept { return best_estimate_; }
  double achieved_error() const noexcept { return achieved_error_; }

 private:
  double best_estimate_;
  double achieved_error_;
};

namespace detail {

// Kronrod abscissae (descending) with Kronrod and embedded Gauss weights.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <std::size_t Dim>
struct Panel {
  double a;
  double b;
  Values<Dim> value;
  Values<Dim> error;
  double priority;

  bool operator<(const Panel& other) const { return priority < other.priority; }
};

template <std::size_t Dim, class F>
Panel<Dim> gk15(const F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  Values<Dim> kronrod{};
  Values<Dim> gauss{};
  const Values<Dim> fc = f(center);
  for (std::size_t d = 0; d < Dim; ++d) {
    kronrod[d] = kWgk[7] * fc[d];
    gauss[d] = kWg[3] * fc[d];
  }
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const Values<Dim> lo = f(center - dx);
    const Values<Dim> hi = f(center + dx);
    for (std::size_t d = 0; d < Dim; ++d) {
      const double pair = lo[d] + hi[d];
      kronrod[d] += kWgk[j] * pair;
      if (j % 2 == 1) gauss[d] += kWg[j / 2] * pair;
    }
  }
  Panel<Dim> p{a, b, {}, {}, 0.0};
  for (std::size_t d = 0; d < Dim; ++d) {
    p.value[d] = kronrod[d] * half;
    p.error[d] = std::abs((kronrod[d] - gauss[d]) * half);
  }
  return p;
}

}  // namespace detail

struct QuadratureOptions {
  std::size_t max_panels = 2'000'000;
};

/// Integrates f over consecutive intervals [breaks[i], breaks[i+1]].
///
/// target(value) returns the per-component absolute error allowed for the
/// current running estimate; integration stops once the summed error of every
/// component is within target. Throws QuadratureError when max_panels is reached.
template <std::size_t Dim, class F, class Target>
QuadratureResult<Dim> integrate_adaptive(const F& f, std::span<const double> breaks,
                                         const Target& target, QuadratureOptions options = {}) {
  if (breaks.size() < 2) {
    throw std::invalid_argument("integrate_adaptive: need at least two break points");
  }
  std::vector<detail::Panel<Dim>> panels;
  panels.reserve(breaks.size() * 2);
  QuadratureResult<Dim> result;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    panels.push_back(detail::gk15<Dim>(f, breaks[i], breaks[i + 1]));
    result.evaluations += 15;
  }

  auto totals = [&](Values<Dim>& value, Values<Dim>& error) {
    value.fill(0.0);
    error.fill(0.0);
    for (const auto& p : panels) {
      for (std::size_t d = 0; d < Dim; ++d) {
        value[d] += p.value[d];
        error[d] += p.error[d];
      }
    }
  };

  Values<Dim> value{};
  Values<Dim> error{};
  totals(value, error);
  Values<Dim> tol = target(value);

  auto scaled = [&](const detail::Panel<Dim>& p) {
    double worst = 0.0;
    for (std::size_t d = 0; d < Dim; ++d) {
      const double denom = tol[d] > 0.0 ? tol[d] : std::numeric_limits<double>::min();
      worst = std::max(worst, p.error[d] / denom);
    }
    return worst;
  };
  auto done = [&] {
    for (std::size_t d = 0; d < Dim; ++d) {
      if (!(error[d] <= tol[d])) return false;
    }
    return true;
  };

  std::priority_queue<detail::Panel<Dim>> heap;
  for (auto& p : panels) {
    p.priority = scaled(p);
    heap.push(p);
  }

  std::size_t refresh = 0;
  while (!done()) {
    if (heap.size() >= options.max_panels) {
      result.value = value;
      result.abs_error = error;
      result.panels = heap.size();
      throw QuadratureError("adaptive quadrature did not converge within the panel limit",
                            value[0], error[0]);
    }
    const detail::Panel<Dim> worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      throw QuadratureError("adaptive quadrature exhausted floating-point resolution", value[0],
                            error[0]);
    }
    auto left = detail::gk15<Dim>(f, worst.a, mid);
    auto right = detail::gk15<Dim>(f, mid, worst.b);
    result.evaluations += 30;
    for (std::size_t d = 0; d < Dim; ++d) {
      value[d] += left.value[d] + right.value[d] - worst.value[d];
      error[d] += left.error[d] + right.error[d] - worst.error[d];
    }
    left.priority = scaled(left);
    right.priority = scaled(right);
    heap.push(left);
    heap.push(right);

    // Running sums drift; recompute them and the targets periodically.
    if (++refresh % 4096 == 0) {
      panels.clear();
      auto copy = heap;
      while (!copy.empty()) {
        panels.push_back(copy.top());
        copy.pop();
      }
      totals(value, error);
    }
    tol = target(value);
  }

  result.value = value;
  result.abs_error = error;
  result.panels = heap.size();
  result.converged = true;
  return result;
}

/// Scalar convenience wrapper with a relative tolerance and an absolute floor.
template <class F>
QuadratureResult<1> integrate(const F& f, double a, double b, double rel_tol,
                              double abs_tol = 0.0, std::size_t initial_panels = 1) {
  std::vector<double> breaks(initial_panels + 1);
  for (std::size_t i = 0; i <= initial_panels; ++i) {
    breaks[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(initial_panels);
  }
  breaks.back() = b;
  auto wrapped = [&](double x) { return Values<1>{f(x)}; };
  auto target = [&](const Values<1>& v) {
    return Values<1>{std::max(rel_tol * std::abs(v[0]), abs_tol)};
  };
  return integrate_adaptive<1>(wrapped, breaks, target);
}

}  // namespace qprobe
