#pragma once

// Finite-shot validation of the Cramer-Rao machinery: simulate binomial
// +/- outcomes of the sigma_x measurement and recover tau_c by maximum
// likelihood.
//
// Random numbers come from std::mt19937_64, whose output sequence is fixed by
// the C++ standard. Uniform doubles, binomial and normal variates are derived
// here rather than through <random> distributions, whose algorithms are
// implementation-defined.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "qprobe/attenuation.hpp"
#include "qprobe/estimation.hpp"
#include "qprobe/minimize.hpp"
#include "qprobe/parallel.hpp"

namespace qprobe {

// ---------------------------------------------------------------------------
// Random source

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent seed for substream `index` of a master seed.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal by Box-Muller.
  double normal() {
    double u1 = uniform();
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

/// Binomial(M, p) sampler. Inverse CDF over a precomputed table for M <= 1e5,
/// normal approximation above.
class BinomialSampler {
 public:
  static constexpr std::uint64_t kExactLimit = 100'000;

  BinomialSampler(std::uint64_t shots, double p) : shots_(shots), p_(p) {
    if (shots == 0) throw std::invalid_argument("BinomialSampler: shots must be >= 1");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("BinomialSampler: p must lie in [0, 1]");
    if (p == 0.0 || p == 1.0 || shots > kExactLimit) return;

    // pmf by recurrence outward from the mode, truncated where it drops below
    // 1e-20 of the peak; the table is normalized by its own sum.
    const double n = static_cast<double>(shots);
    const auto mode = static_cast<std::uint64_t>(std::floor((n + 1.0) * p_));
    const std::uint64_t m = std::min(mode, shots);
    const double ratio_up = p_ / (1.0 - p_);
    std::vector<double> up{1.0};
    for (std::uint64_t k = m; k < shots; ++k) {
      const double next = up.back() * ratio_up * (n - static_cast<double>(k)) / (static_cast<double>(k) + 1.0);
      if (next < 1e-20) break;
      up.push_back(next);
    }
    std::vector<double> down;
    double current = 1.0;
    for (std::uint64_t k = m; k > 0; --k) {
      current *= (static_cast<double>(k) / (n - static_cast<double>(k) + 1.0)) / ratio_up;
      if (current < 1e-20) break;
      down.push_back(current);
    }
    first_ = m - down.size();
    cdf_.reserve(down.size() + up.size());
    double total = 0.0;
    for (auto it = down.rbegin(); it != down.rend(); ++it) {
      total += *it;
      cdf_.push_back(total);
    }
    for (double v : up) {
      total += v;
      cdf_.push_back(total);
    }
    for (double& c : cdf_) c /= total;
    cdf_.back() = 1.0;
  }

  std::uint64_t operator()(Rng& rng) const {
    if (p_ == 0.0) return 0;
    if (p_ == 1.0) return shots_;
    if (shots_ > kExactLimit) {
      const double n = static_cast<double>(shots_);
      const double k = std::round(n * p_ + std::sqrt(n * p_ * (1.0 - p_)) * rng.normal());
      return static_cast<std::uint64_t>(std::clamp(k, 0.0, n));
    }
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto offset = static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(
        it - cdf_.begin(), static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
    return first_ + offset;
  }

 private:
  std::uint64_t shots_;
  double p_;
  std::uint64_t first_ = 0;
  std::vector<double> cdf_;
};

// ---------------------------------------------------------------------------
// Protocol and records

/// Measurement setting with everything known except tau_c.
struct Protocol {
  double g = 1.0;
  double beta = 2.0;
  ControlFilter filter = ControlFilter::free_evolution(1.0);
  Route route = Route::Auto;
  double tol = kScanTolerance;

  NoiseSpectrum spectrum(double tau_c) const { return {g, tau_c, beta}; }

  double p_plus(double tau_c) const {
    const auto r = attenuation(spectrum(tau_c), filter, tol, route);
    return probabilities(r.j).plus;
  }
};

struct MeasurementRecord {
  std::uint64_t shots = 0;
  std::uint64_t plus_count = 0;
  Protocol protocol;
  std::uint64_t seed = 0;
};

inline MeasurementRecord simulate_with(const Protocol& protocol, const BinomialSampler& sampler,
                                       std::uint64_t shots, std::uint64_t seed) {
  Rng rng(seed);
  return {shots, sampler(rng), protocol, seed};
}

/// Draws plus_count ~ Binomial(shots, p_plus(true_tau_c)). Pure function of its arguments.
inline MeasurementRecord simulate(const Protocol& protocol, double true_tau_c, std::uint64_t shots,
                                  std::uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("simulate: shots must be >= 1");
  const BinomialSampler sampler(shots, protocol.p_plus(true_tau_c));
  return simulate_with(protocol, sampler, shots, seed);
}

// ---------------------------------------------------------------------------
// Maximum likelihood

struct SearchRange {
  double lo;
  double hi;
};

struct MleResult {
  double tau = 0.0;
  double log_likelihood = -std::numeric_limits<double>::infinity();
  std::size_t candidates = 0;
  bool boundary = false;
  std::string warning;
};

inline double binomial_log_likelihood(std::uint64_t plus, std::uint64_t shots, double p) {
  const double k = static_cast<double>(plus);
  const double rest = static_cast<double>(shots - plus);
  const double neg_inf = -std::numeric_limits<double>::infinity();
  double ll = 0.0;
  if (k > 0.0) ll += p > 0.0 ? k * std::log(p) : neg_inf;
  if (rest > 0.0) ll += p < 1.0 ? rest * std::log1p(-p) : neg_inf;
  return ll;
}

/// p_plus(tau_c) cached on a log-spaced grid over the search range.
class LikelihoodProfile {
 public:
  LikelihoodProfile(Protocol protocol, SearchRange range, std::size_t points = 256)
      : protocol_(std::move(protocol)), range_(range) {
    if (!(range.lo > 0.0 && range.hi > range.lo)) {
      throw std::invalid_argument("LikelihoodProfile: need 0 < lo < hi");
    }
    log_tau_.resize(points);
    p_.resize(points);
    const double a = std::log(range.lo);
    const double b = std::log(range.hi);
    for (std::size_t i = 0; i < points; ++i) {
      log_tau_[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1);
      p_[i] = protocol_.p_plus(std::exp(log_tau_[i]));
    }
  }

  const Protocol& protocol() const noexcept { return protocol_; }
  SearchRange range() const noexcept { return range_; }

  /// Argmax of the binomial likelihood. Every local maximum on the grid is
  /// refined; the likelihood depends on tau_c only through p_plus, so distinct
  /// preimages of the observed frequency tie exactly. Ties are broken by a fair
  /// coin drawn from tie_seed.
  MleResult estimate(std::uint64_t plus, std::uint64_t shots, std::uint64_t tie_seed) const {
    if (shots == 0 || plus > shots) throw std::invalid_argument("mle: invalid record counts");
    auto neg_ll = [&](double log_tau) {
      return -binomial_log_likelihood(plus, shots, protocol_.p_plus(std::exp(log_tau)));
    };
    std::vector<double> values(p_.size());
    for (std::size_t i = 0; i < p_.size(); ++i) {
      values[i] = -binomial_log_likelihood(plus, shots, p_[i]);
      if (std::isinf(values[i])) values[i] = std::numeric_limits<double>::max();
    }
    const auto basins = refine_basins(neg_ll, log_tau_, values, 0.0, 1e-10);

    MleResult out;
    out.candidates = basins.size();
    if (basins.empty()) {
      out.tau = std::exp(log_tau_.front());
      out.boundary = true;
      out.warning = "likelihood vanishes on the whole search range";
      return out;
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& m : basins) best = std::min(best, m.value);
    const double tie_window = 1e-9 * std::max(1.0, std::abs(best));
    std::vector<Minimum> tied;
    for (const auto& m : basins) {
      if (m.value <= best + tie_window) tied.push_back(m);
    }
    const std::size_t pick =
        tied.size() == 1 ? 0 : static_cast<std::size_t>(splitmix64(tie_seed) % tied.size());
    out.tau = std::exp(tied[pick].x);
    out.log_likelihood = -tied[pick].value;

    const double edge = 1e-6;
    if (tied[pick].x - log_tau_.front() < edge || log_tau_.back() - tied[pick].x < edge) {
      out.boundary = true;
      out.warning = "estimate on the search-range boundary";
    }
    if (plus == shots || 2 * plus <= shots) {
      out.boundary = true;
      out.warning = "observed frequency outside the attainable range of p_plus";
    }
    return out;
  }

 private:
  Protocol protocol_;
  SearchRange range_;
  std::vector<double> log_tau_;
  std::vector<double> p_;
};

inline MleResult mle_tau(const MeasurementRecord& record, SearchRange range) {
  const LikelihoodProfile profile(record.protocol, range);
  return profile.estimate(record.plus_count, record.shots, record.seed);
}

// ---------------------------------------------------------------------------
// Cramer-Rao check

struct CrbReport {
  double empirical_rel_std = 0.0;
  double predicted_rel_err = 0.0;
  double mean_estimate = 0.0;
  double relative_bias = 0.0;
  std::size_t boundary_estimates = 0;
  std::size_t n_trials = 0;

  double ratio() const { return empirical_rel_std / predicted_rel_err; }
};

/// n_trials independent simulate + MLE rounds. Trial i uses substream_seed(seed, i),
/// so the report is a pure function of the arguments regardless of `jobs`.
inline CrbReport crb_check(const Protocol& protocol, double true_tau_c, std::uint64_t shots,
                           std::size_t n_trials, std::uint64_t seed, SearchRange range,
                           int jobs = 1) {
  if (n_trials < 100) throw std::invalid_argument("crb_check: n_trials must be >= 100");
  if (shots < 1) throw std::invalid_argument("crb_check: shots must be >= 1");

  const auto truth = attenuation(protocol.spectrum(true_tau_c), protocol.filter, protocol.tol,
                                 protocol.route);
  const double info = fisher_information(truth.j, truth.dj_dtau);
  const BinomialSampler sampler(shots, probabilities(truth.j).plus);
  const LikelihoodProfile profile(protocol, range);

  const auto estimates = parallel_map<MleResult>(n_trials, jobs, [&](std::size_t i) {
    const std::uint64_t trial_seed = substream_seed(seed, i);
    const auto record = simulate_with(protocol, sampler, shots, trial_seed);
    return profile.estimate(record.plus_count, record.shots, trial_seed);
  });

  CrbReport report;
  report.n_trials = n_trials;
  double mean = 0.0;
  for (const auto& e : estimates) {
    mean += e.tau;
    if (e.boundary) ++report.boundary_estimates;
  }
  mean /= static_cast<double>(n_trials);
  double var = 0.0;
  for (const auto& e : estimates) var += (e.tau - mean) * (e.tau - mean);
  var /= static_cast<double>(n_trials - 1);

  report.mean_estimate = mean;
  report.relative_bias = (mean - true_tau_c) / true_tau_c;
  report.empirical_rel_std = std::sqrt(var) / true_tau_c;
  report.predicted_rel_err =
      info > 0.0 ? 1.0 / (true_tau_c * std::sqrt(static_cast<double>(shots) * info)) : kInfinity;
  return report;
}

}  // namespace qprobe
