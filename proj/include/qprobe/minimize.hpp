#pragma once

// One-dimensional minimization: golden-section search and a coarse-grid
// basin enumerator that refines every strict local minimum.

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace qprobe {

struct Minimum {
  double x = 0.0;
  double value = std::numeric_limits<double>::infinity();
};

/// Golden-section search for a minimum of f on [a, b].
/// Stops when the bracket is narrower than x_tol * (|a| + |b|) + abs_tol or after max_iter steps.
template <class F>
Minimum golden_section(const F& f, double a, double b, double x_tol = 1e-10, int max_iter = 200,
                       double abs_tol = 0.0) {
  constexpr double inv_phi = 0.618033988749894848204586834365638;  // 1 / golden ratio
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < max_iter; ++i) {
    if (std::abs(b - a) <= x_tol * (std::abs(a) + std::abs(b)) + abs_tol) break;
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? Minimum{c, fc} : Minimum{d, fd};
}

/// Indices of strict-or-plateau local minima of a sampled curve (endpoints included).
/// Infinite samples never qualify.
inline std::vector<std::size_t> local_minima(std::span<const double> values) {
  std::vector<std::size_t> out;
  const std::size_t n = values.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(values[i])) continue;
    const bool left_ok = i == 0 || values[i] < values[i - 1];
    const bool right_ok = i + 1 == n || values[i] <= values[i + 1];
    if (left_ok && right_ok) out.push_back(i);
  }
  return out;
}

/// All refined basins of f sampled on an increasing grid.
///
/// Each local minimum of the samples is refined by golden-section on the
/// bracket formed by its grid neighbours; the sample itself is kept if refinement
/// does worse (flat or noisy basins).
template <class F>
std::vector<Minimum> refine_basins(const F& f, std::span<const double> grid,
                                   std::span<const double> values, double x_tol = 1e-10,
                                   double abs_tol = 0.0) {
  std::vector<Minimum> basins;
  for (std::size_t i : local_minima(values)) {
    const double lo = grid[i == 0 ? 0 : i - 1];
    const double hi = grid[i + 1 == grid.size() ? i : i + 1];
    Minimum best{grid[i], values[i]};
    if (hi > lo) {
      const Minimum refined = golden_section(f, lo, hi, x_tol, 200, abs_tol);
      if (refined.value < best.value) best = refined;
    }
    basins.push_back(best);
  }
  return basins;
}

/// Log-spaced grid of n points from lo to hi (inclusive).
inline std::vector<double> log_space(double lo, double hi, std::size_t n) {
  std::vector<double> grid(n);
  if (n == 1) {
    grid[0] = lo;
    return grid;
  }
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

inline std::vector<double> lin_space(double lo, double hi, std::size_t n) {
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  if (n > 1) grid.back() = hi;
  return grid;
}

}  // namespace qprobe
