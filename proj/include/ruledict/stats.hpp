#pragma once

// Binomial null-model tests: pmf, 95% confidence intervals, and the
// promote / repel / neutral decision shared by every miner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace ruledict {

enum class Polarity { promotes, repels, neutral };

inline std::string_view to_string(Polarity p) {
  switch (p) {
    case Polarity::promotes:
      return "promotes";
    case Polarity::repels:
      return "repels";
    case Polarity::neutral:
      return "neutral";
  }
  return "";
}

inline Polarity polarity_from_string(std::string_view s) {
  if (s == "promotes") return Polarity::promotes;
  if (s == "repels") return Polarity::repels;
  if (s == "neutral") return Polarity::neutral;
  throw std::invalid_argument("unknown polarity: " + std::string(s));
}

enum class CiMethod { exact, normal_approx };

struct ConfidenceInterval {
  std::uint64_t k0 = 0;
  std::uint64_t k1 = 0;
  CiMethod method = CiMethod::exact;

  bool operator==(const ConfidenceInterval&) const = default;
};

/// Knobs of the binomial test. Exact intervals are used up to
/// `exact_max_trials` trials, the normal approximation above that.
struct TestParams {
  double level = 0.95;
  std::uint64_t exact_max_trials = 15;
};

inline double log_binom_pmf(std::uint64_t k, std::uint64_t m, double p) {
  if (k > m) throw std::domain_error("binomial pmf: k > m");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("binomial pmf: p outside [0, 1]");
  if (p == 0.0) return k == 0 ? 0.0 : -INFINITY;
  if (p == 1.0) return k == m ? 0.0 : -INFINITY;
  const double mm = static_cast<double>(m);
  const double kk = static_cast<double>(k);
  // The grouping keeps pmf(j) and pmf(m - j) bit-identical at p = 1/2.
  const double log_choose =
      std::lgamma(mm + 1.0) - (std::lgamma(kk + 1.0) + std::lgamma(mm - kk + 1.0));
  const double log_q = p >= 0.5 ? std::log(1.0 - p) : std::log1p(-p);
  return log_choose + (kk * std::log(p) + (mm - kk) * log_q);
}

inline double binom_pmf(std::uint64_t k, std::uint64_t m, double p) {
  return std::exp(log_binom_pmf(k, m, p));
}

/// Shortest-prefix interval: sort pmf(j; m, p) for j = 0..m in descending
/// order (ties admit the smaller j first) and keep the fewest leading values
/// whose mass reaches `level`. Unimodality makes the kept set contiguous.
inline ConfidenceInterval ci_exact(std::uint64_t m, double p, double level = 0.95) {
  std::vector<double> pmf(m + 1);
  for (std::uint64_t j = 0; j <= m; ++j) pmf[j] = binom_pmf(j, m, p);
  std::vector<std::uint64_t> order(m + 1);
  std::iota(order.begin(), order.end(), std::uint64_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint64_t a, std::uint64_t b) { return pmf[a] > pmf[b]; });
  long double mass = 0.0L;
  std::uint64_t lo = order.front();
  std::uint64_t hi = order.front();
  for (std::uint64_t j : order) {
    lo = std::min(lo, j);
    hi = std::max(hi, j);
    mass += pmf[j];
    if (mass >= level) break;
  }
  return {lo, hi, CiMethod::exact};
}

/// Normal approximation: [round(mu - 2 sigma), round(mu + 2 sigma)] clamped
/// to [0, m], rounding half away from zero.
inline ConfidenceInterval ci_approx(std::uint64_t m, double p) {
  const double mu = static_cast<double>(m) * p;
  const double sigma = std::sqrt(static_cast<double>(m) * p * (1.0 - p));
  auto clamp_round = [m](double x) -> std::uint64_t {
    const double r = std::round(x);
    if (r <= 0.0) return 0;
    if (r >= static_cast<double>(m)) return m;
    return static_cast<std::uint64_t>(r);
  };
  return {clamp_round(mu - 2.0 * sigma), clamp_round(mu + 2.0 * sigma),
          CiMethod::normal_approx};
}

inline ConfidenceInterval ci(std::uint64_t m, double p, const TestParams& params = {}) {
  if (m <= params.exact_max_trials) return ci_exact(m, p, params.level);
  return ci_approx(m, p);
}

inline Polarity classify(std::uint64_t k, const ConfidenceInterval& interval) {
  if (k > interval.k1) return Polarity::promotes;
  if (k < interval.k0) return Polarity::repels;
  return Polarity::neutral;
}

/// Tests k successes out of m trials against the null success rate p.
inline Polarity binomial_test(std::uint64_t k, std::uint64_t m, double p,
                              const TestParams& params = {}) {
  return classify(k, ci(m, p, params));
}

}  // namespace ruledict
