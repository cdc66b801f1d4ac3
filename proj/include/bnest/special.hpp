#pragma once

// Log-domain special functions used by the likelihood and the lemma checks.
// Everything here is deterministic and reentrant (no use of the global
// signgam written by ::lgamma).

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

namespace bnest {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log Gamma(x) for x > 0. Stirling series for x >= 15, upward recurrence
/// below that. Absolute error is a few ulps of max(1, |log Gamma(x)|).
double log_gamma(double x);

/// log Gamma(x + delta) - log Gamma(x), stable when both arguments are large
/// (the naive difference loses all digits once x reaches ~1e12).
double log_gamma_ratio(double x, double delta);

/// log of the falling factorial (x)_j = x (x-1) ... (x-j+1); requires x-j+1 > 0.
double log_falling(double x, std::int64_t j);

/// log C(n, v) for real n >= v >= 0 and integer v.
double log_choose(double n, std::int64_t v);

/// log(exp(a) + exp(b)) with -inf handled.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

double log_sum_exp(std::span<const double> xs);

/// Running log-sum-exp; rescales on a new maximum so the stored sum stays O(1).
class LogSumAccumulator {
 public:
  void add(double log_term) {
    if (log_term == kNegInf) return;
    if (log_term > max_) {
      sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
      max_ = log_term;
    } else {
      sum_ += std::exp(log_term - max_);
    }
  }

  double value() const { return max_ == kNegInf ? kNegInf : max_ + std::log(sum_); }
  double max() const { return max_; }

 private:
  double max_ = kNegInf;
  double sum_ = 0.0;
};

/// Binomial pmf/cdf helpers evaluated in log domain.
double log_binomial_pmf(std::int64_t x, std::int64_t n, double p);
/// P(X <= x) for X ~ Bin(n, p), by direct summation (n up to a few thousand).
double binomial_cdf(std::int64_t x, std::int64_t n, double p);
/// P(X >= x), summed over the upper tail so small tails keep full precision.
double binomial_upper_tail(std::int64_t x, std::int64_t n, double p);

}  // namespace bnest
