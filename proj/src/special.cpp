#include "bnest/special.hpp"

#include <algorithm>
#include <numbers>

#include "bnest/error.hpp"

namespace bnest {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)
constexpr double kStirlingCutoff = 15.0;

// Stirling correction sum_{k} B_{2k} / (2k (2k-1) x^{2k-1}).
double stirling_correction(double x) {
  const double r = 1.0 / x;
  const double r2 = r * r;
  return r * (1.0 / 12.0 +
              r2 * (-1.0 / 360.0 +
                    r2 * (1.0 / 1260.0 +
                          r2 * (-1.0 / 1680.0 +
                                r2 * (1.0 / 1188.0 +
                                      r2 * (-691.0 / 360360.0 + r2 * (1.0 / 156.0)))))));
}

double log_gamma_stirling(double x) {
  return (x - 0.5) * std::log(x) - x + kHalfLog2Pi + stirling_correction(x);
}

}  // namespace

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::InvalidPrior: return "invalid prior";
    case ErrorKind::PriorSupportTooSmall: return "prior support too small";
    case ErrorKind::NonConvergentTail: return "non-convergent tail";
    case ErrorKind::InadmissiblePrior: return "inadmissible improper prior";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Io: return "i/o error";
  }
  return "error";
}

double log_gamma(double x) {
  if (!(x > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "log_gamma: argument must be positive");
  }
  if (std::isinf(x)) return x;
  if (x >= kStirlingCutoff) return log_gamma_stirling(x);
  // Shift up: Gamma(x) = Gamma(x + m) / (x (x+1) ... (x+m-1)).
  double prod = 1.0;
  double y = x;
  while (y < kStirlingCutoff) {
    prod *= y;
    y += 1.0;
  }
  return log_gamma_stirling(y) - std::log(prod);
}

double log_gamma_ratio(double x, double delta) {
  const double y = x + delta;
  if (!(x > 0.0) || !(y > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "log_gamma_ratio: arguments must be positive");
  }
  if (delta == 0.0) return 0.0;
  if (x < 30.0 || y < 30.0) return log_gamma(y) - log_gamma(x);
  // (y - 1/2) log y - (x - 1/2) log x - delta, rewritten around log x so the
  // O(x log x) parts cancel analytically.
  const double main = delta * std::log(x) + (y - 0.5) * std::log1p(delta / x) - delta;
  return main + (stirling_correction(y) - stirling_correction(x));
}

double log_falling(double x, std::int64_t j) {
  if (j < 0) throw Error(ErrorKind::InvalidArgument, "log_falling: negative order");
  if (j == 0) return 0.0;
  const double low = x - static_cast<double>(j) + 1.0;
  if (!(low > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "log_falling: non-positive factor");
  }
  if (j <= 16) {
    double s = 0.0;
    for (std::int64_t i = 0; i < j; ++i) s += std::log(x - static_cast<double>(i));
    return s;
  }
  return log_gamma_ratio(low, static_cast<double>(j));
}

double log_choose(double n, std::int64_t v) {
  if (v < 0 || static_cast<double>(v) > n) return kNegInf;
  if (v == 0) return 0.0;
  return log_falling(n, v) - log_gamma(static_cast<double>(v) + 1.0);
}

double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

double log_binomial_pmf(std::int64_t x, std::int64_t n, double p) {
  if (x < 0 || x > n) return kNegInf;
  if (p <= 0.0) return x == 0 ? 0.0 : kNegInf;
  if (p >= 1.0) return x == n ? 0.0 : kNegInf;
  return log_choose(static_cast<double>(n), x) + static_cast<double>(x) * std::log(p) +
         static_cast<double>(n - x) * std::log1p(-p);
}

double binomial_cdf(std::int64_t x, std::int64_t n, double p) {
  if (x < 0) return 0.0;
  if (x >= n) return 1.0;
  LogSumAccumulator acc;
  for (std::int64_t i = 0; i <= x; ++i) acc.add(log_binomial_pmf(i, n, p));
  return std::min(1.0, std::exp(acc.value()));
}

double binomial_upper_tail(std::int64_t x, std::int64_t n, double p) {
  if (x <= 0) return 1.0;
  if (x > n) return 0.0;
  LogSumAccumulator acc;
  for (std::int64_t i = x; i <= n; ++i) acc.add(log_binomial_pmf(i, n, p));
  return std::min(1.0, std::exp(acc.value()));
}

}  // namespace bnest
