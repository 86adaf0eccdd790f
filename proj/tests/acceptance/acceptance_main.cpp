// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <qprobe/qprobe.hpp>

using namespace qprobe;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::abs(b); }

double free_decay_brute_force(double g, double tau, double t) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  auto inner = [&](double t1) {
    auto k = [&](double t2) { return std::exp(-std::abs(t1 - t2) / tau); };
    return GK::integrate(k, 0.0, t1, 15, 1e-12) + GK::integrate(k, t1, t, 15, 1e-12);
  };
  return 0.5 * g * g * GK::integrate(inner, 0.0, t, 15, 1e-11);
}

void criterion_free_decay(Outcome& o) {
  const auto start = Clock::now();
  double worst_quad = 0.0;
  double worst_oracle = 0.0;
  for (double g : {0.5, 1.0, 2.0}) {
    for (double tau : {0.5, 1.0, 2.0}) {
      for (double t : {0.1, 1.0, 10.0}) {
        const double closed = free_decay_closed_form(g, tau, t);
        const auto q = attenuation(NoiseSpectrum(g, tau, 2.0), ControlFilter::free_evolution(t),
                                   kLibraryTolerance, Route::Quadrature);
        worst_quad = std::max(worst_quad, rel_diff(q.j, closed));
        worst_oracle = std::max(worst_oracle, rel_diff(closed, free_decay_brute_force(g, tau, t)));
      }
    }
  }
  const double elapsed = seconds_since(start);
  o.detail << "max rel(quadrature, closed form) = " << worst_quad
           << ", max rel(closed form, 2-D integral) = " << worst_oracle << ", " << elapsed << " s";
  o.require(worst_quad <= 1e-6, "quadrature within 1e-6");
  o.require(worst_oracle <= 1e-8, "closed form within 1e-8");
  o.require(elapsed < 10.0, "runtime < 10 s");
}

void criterion_critical_frequency(Outcome& o) {
  double worst = 0.0;
  const double tau = 1.7;
  for (double beta : {2.0, 3.0, 4.0, 6.0}) {
    const NoiseSpectrum spec(0.6, tau, beta);
    auto dj = [&](double w) { return narrowband_attenuation(spec, 20, 1, w).dj_dtau; };
    boost::math::tools::eps_tolerance<double> tol(50);
    std::uintmax_t iterations = 200;
    const auto root = boost::math::tools::toms748_solve(dj, 0.1 / tau, 10.0 / tau, tol, iterations);
    const double located = 0.5 * (root.first + root.second);
    const double expected = 1.0 / (tau * std::pow(beta - 1.0, 1.0 / beta));
    worst = std::max(worst, rel_diff(located, expected));
  }
  o.detail << "max rel(located zero, formula) = " << worst << " over beta in {2,3,4,6}";
  o.require(worst <= 1e-6, "zero within 1e-6");
}

void criterion_divergence(Outcome& o) {
  const auto start = Clock::now();
  const int n = 20;
  const NoiseSpectrum spec(coupling_for_x(1.0, n), 1.0, 2.0);
  const double w0 = critical_frequency(spec);
  for (double side : {-1.0, 1.0}) {
    std::vector<double> grid;
    for (int i = 0; i < 41; ++i) grid.push_back(w0 * (1.0 + side * std::pow(10.0, -3.0 + i / 40.0)));
    if (side < 0) std::reverse(grid.begin(), grid.end());
    const auto rows = error_vs_control_scan(spec, n, grid);
    std::vector<double> dist, eps;
    for (const auto& r : rows) {
      dist.push_back(std::abs(r.omega_ctrl - w0));
      eps.push_back(r.eps);
    }
    const double slope = loglog_slope(dist, eps);
    o.detail << (side < 0 ? "lower" : "upper") << " flank slope = " << slope << ", ";
    o.require(std::abs(slope + 1.0) <= 0.05, "slope -1 +- 0.05");
  }
  const double elapsed = seconds_since(start);
  o.detail << elapsed << " s";
  o.require(elapsed < 60.0, "runtime < 1 min");
}

void criterion_critical_point(Outcome& o) {
  const auto start = Clock::now();
  const auto rows = critical_scan(2.0, 20, log_space(0.1, 10.0, 64));
  const double elapsed = seconds_since(start);
  const auto flips = branch_flips(rows);
  o.detail << flips.size() << " flip(s)";
  o.require(flips.size() == 1, "exactly one flip");
  if (flips.size() == 1) {
    const auto i = flips.front();
    const auto& a = rows[i - 1];
    const auto& b = rows[i];
    const double r_a = a.t_opt / a.t0;
    const double r_b = b.t_opt / b.t0;
    o.detail << " between x = " << a.x << " (" << to_string(a.branch) << ", t_opt/t0 = " << r_a
             << ") and x = " << b.x << " (" << to_string(b.branch) << ", t_opt/t0 = " << r_b
             << "), eps_min " << a.eps_min << " -> " << b.eps_min;
    o.require(a.x >= 0.85 && b.x <= 1.15, "flip inside [0.85, 1.15]");
    o.require(std::max(r_a / r_b, r_b / r_a) > 2.0, "t_opt/t0 jumps > 2x");
    o.require(rel_diff(b.eps_min, a.eps_min) < 0.10, "eps_min continuous within 10%");
  }
  bool ordered = true;
  for (const auto& r : rows) {
    if (r.branch == Branch::LongMemory && !(r.t_opt < r.t0)) ordered = false;
    if (r.branch == Branch::ShortMemory && !(r.t_opt > r.t0)) ordered = false;
  }
  o.require(ordered, "t_opt^LM < t0 < t_opt^SM");
  o.detail << ", " << elapsed << " s";
  o.require(elapsed < 300.0, "runtime < 5 min");
}

void criterion_scaling_laws(Outcome& o) {
  for (double beta : {2.0, 4.0}) {
    const NoiseSpectrum spec(1.0, 1.0, beta);
    const int n = 20;
    const double t0 = std::numbers::pi * n / critical_frequency(spec);
    std::vector<double> t_lm, j_lm, t_sm, j_sm;
    for (int i = 0; i <= 20; ++i) {
      const double f = std::pow(10.0, i / 20.0);
      t_lm.push_back(0.01 * f * t0);
      j_lm.push_back(attenuation(spec, ControlFilter::narrowband(n, 1, t_lm.back())).j);
      t_sm.push_back(10.0 * f * t0);
      j_sm.push_back(attenuation(spec, ControlFilter::narrowband(n, 1, t_sm.back())).j);
    }
    const double lm = loglog_slope(t_lm, j_lm);
    const double sm = loglog_slope(t_sm, j_sm);
    o.detail << "beta=" << beta << ": LM slope " << lm << ", SM slope " << sm << "; ";
    o.require(rel_diff(lm, beta + 1.0) <= 0.02, "LM slope beta+1 within 2%");
    o.require(rel_diff(sm, 1.0) <= 0.02, "SM slope 1 within 2%");
  }
}

void criterion_ultimate_bound(Outcome& o) {
  const auto b = ultimate_bound();
  o.detail << "eps0 = " << b.eps0 << " at J0 = " << b.j0;
  o.require(std::abs(b.eps0 - 2.48) <= 0.01, "eps0 = 2.48 +- 0.01");
  o.require(std::abs(b.j0 - 0.80) <= 0.02, "J0 = 0.80 +- 0.02");
}

void criterion_strategy(Outcome& o) {
  const auto start = Clock::now();
  const double eps0 = ultimate_bound().eps0;
  const auto grid = log_space(0.01, 10.0, 32);
  for (int n_max : {10, 100}) {
    std::vector<int> n_star;
    double eps_last = 0.0;
    for (double g : grid) {
      const auto s = strategy_select(g, 2.0, n_max);
      n_star.push_back(s.n_star);
      eps_last = s.eps_by_n.back();
    }
    int switches = 0;
    bool endpoints_only = true;
    std::size_t at = 0;
    for (std::size_t i = 0; i < n_star.size(); ++i) {
      if (n_star[i] != 1 && n_star[i] != n_max) endpoints_only = false;
      if (i > 0 && n_star[i] != n_star[i - 1]) {
        ++switches;
        at = i;
      }
    }
    o.detail << "N_max=" << n_max << ": " << switches << " switch(es)";
    if (switches == 1) o.detail << " between g tau_c = " << grid[at - 1] << " and " << grid[at];
    o.detail << ", eps(N_max) at g tau_c = " << grid.back() << " is " << eps_last << " (" << eps_last / eps0
             << " eps0); ";
    o.require(n_star.front() == 1 && n_star.back() == n_max, "from N*=1 to N*=N_max");
    o.require(switches == 1 && endpoints_only, "exactly one switch");
    o.require(std::abs(eps_last / eps0 - 1.0) <= 0.25, "N_max curve within 25% of eps0");
  }
  const double elapsed = seconds_since(start);
  o.detail << elapsed << " s";
  o.require(elapsed < 600.0, "runtime < 10 min");
}

void criterion_crb(Outcome& o) {
  const auto start = Clock::now();
  const int n = 20;
  const SearchRange range{0.5, 2.0};
  auto protocol_at = [&](double x, double t) {
    Protocol p;
    p.g = coupling_for_x(x, n);
    p.filter = ControlFilter::cpmg(n, t);
    return p;
  };
  const NoiseSpectrum good(coupling_for_x(3.0, n), 1.0, 2.0);
  const double t_opt = optimal_time(good, CpmgFamily{n}).t_opt;
  const auto well = crb_check(protocol_at(3.0, t_opt), 1.0, 10000, 400, 42, range);

  const double t0 = reference_time(good, CpmgFamily{n});
  const auto near = crb_check(protocol_at(1.0, 1.35 * t0), 1.0, 10000, 400, 42, range);
  const double elapsed = seconds_since(start);
  o.detail << "x=3, t=t_opt=" << t_opt << ": empirical/predicted = " << well.ratio()
           << "; x=1, t=1.35 t0=" << 1.35 * t0 << ": ratio = " << near.ratio() << "; " << elapsed << " s";
  o.require(well.ratio() >= 0.9 && well.ratio() <= 1.15, "ratio in [0.9, 1.15]");
  o.require(near.ratio() > 2.0, "near-critical ratio > 2");
  o.require(elapsed < 900.0, "runtime < 15 min");
}

void criterion_sign_contrast(Outcome& o) {
  int free_positive = 0;
  for (int i = 0; i < 20; ++i) {
    for (int k = 0; k < 20; ++k) {
      const double t = 0.05 * std::pow(10.0, 3.0 * i / 19.0);
      const double tau = 0.05 * std::pow(10.0, 3.0 * k / 19.0);
      const auto r = attenuation(NoiseSpectrum(1.0, tau, 2.0), ControlFilter::free_evolution(t),
                                 kLibraryTolerance, Route::Quadrature);
      if (r.dj_dtau > 0.0) ++free_positive;
    }
  }
  int sign_ok = 0;
  int samples = 0;
  for (double beta : {2.0, 3.0, 4.0, 6.0}) {
    const NoiseSpectrum spec(1.0, 1.0, beta);
    const double w0 = critical_frequency(spec);
    for (double r : {0.2, 0.5, 0.9, 0.99, 1.01, 1.1, 2.0, 5.0}) {
      const double dj = narrowband_attenuation(spec, 20, 1, r * w0).dj_dtau;
      ++samples;
      if ((r < 1.0 && dj > 0.0) || (r > 1.0 && dj < 0.0)) ++sign_ok;
    }
  }
  o.detail << "free dJ/dtau > 0 at " << free_positive << "/400 grid points; controlled sign matches "
           << "sign(w0 - w_ctrl) at " << sign_ok << "/" << samples << " points";
  o.require(free_positive == 400, "free derivative positive everywhere");
  o.require(sign_ok == samples, "controlled derivative flips sign at w0");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "free-decay oracle equivalence", criterion_free_decay},
      {2, "critical frequency", criterion_critical_frequency},
      {3, "error divergence exponent", criterion_divergence},
      {4, "critical point location", criterion_critical_point},
      {5, "scaling laws", criterion_scaling_laws},
      {6, "ultimate bound", criterion_ultimate_bound},
      {7, "strategy crossover", criterion_strategy},
      {8, "CRB saturation", criterion_crb},
      {9, "free-vs-controlled contrast", criterion_sign_contrast},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
