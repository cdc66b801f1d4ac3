#pragma once

// Exact and log-domain numeric checks of the deterministic inequalities used
// in the contraction proof: binomial moment and variance bounds, tail bounds
// for the sample maximum, and the falling-factorial estimates for the
// likelihood derivative terms.
//
// Every comparison lhs <= rhs allows a margin of 1e-9 * |rhs|; comparisons of
// logarithms allow 1e-9 absolute, i.e. 1e-9 relative on the original scale.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace bnest {

using BigInt = boost::multiprecision::cpp_int;

inline constexpr double kCheckMargin = 1e-9;

/// lhs <= rhs up to the relative margin.
bool leq_with_margin(long double lhs, long double rhs);
/// log_lhs <= log_rhs up to the margin (either side may be -inf).
bool log_leq_with_margin(long double log_lhs, long double log_rhs);

struct BellTable {
  /// values[r - 1] = B_r.
  std::vector<BigInt> values;

  const BigInt& at(std::int64_t r) const { return values.at(static_cast<std::size_t>(r - 1)); }
};

/// B_1..B_{r_max} through the Bell triangle, in arbitrary precision.
BellTable bell_numbers(std::int64_t r_max);

struct BoundCheck {
  long double lhs = 0.0L;
  long double rhs = 0.0L;
  bool holds = true;
};

/// E[X^r] for X ~ Bin(n, p) against B_r max(np, (np)^r).
BoundCheck check_moment_bound(std::int64_t n, double p, std::int64_t r);

struct FallingFactorialCheck {
  /// (c m)^j <= (m)_j <= m^j.
  bool sandwich_holds = true;
  /// m^j (n)_j / (n^j (m)_j) >= 1 + (n - m) / (n m); only evaluated for n >= m, j > 1.
  std::optional<bool> ratio_holds;
};

FallingFactorialCheck check_falling_factorial(double m, double n, std::int64_t j, double c = 0.0);

/// First (m, j) on {2..m_max} x {1..m} where (c m)^j > (m)_j, if any.
std::optional<std::pair<std::int64_t, std::int64_t>> falling_factorial_counterexample(double c,
                                                                                      std::int64_t m_max);

struct MonotonicityCheck {
  bool decreasing = true;
  bool ratio_bound_holds = true;
};

/// f(a) = Gamma(kn - s + b) Gamma(s + a) / Gamma(kn + a + b) along a_grid, and
/// f(floor a) / f(ceil a) <= (1 + ceil a + b) kn at each grid point.
MonotonicityCheck check_monotonicity_a(std::int64_t k, std::int64_t n, std::int64_t s, double b,
                                       std::vector<double> a_grid);

struct SeriesCheck {
  bool precondition_met = true;
  std::string unmet;
  std::int64_t cases = 0;
  /// Indices j that violated the inequality.
  std::vector<std::int64_t> failed_j;

  bool holds() const { return failed_j.empty(); }
};

/// |u_j - u~_j| <= j sqrt(lambda log k / k) (c / m)^j for j <= j_max, with
/// c = 2 e^2 (3 lambda + a + 1) unless given.
SeriesCheck check_uj_deviation(std::int64_t k, std::int64_t n, double p, double m, std::int64_t s, double a,
                               double b, double lambda, std::int64_t j_max, double c = 0.0);

struct UtildeCheck {
  /// |u~_j| <= (c1 / m)^j, c1 = 6 e^2 (lambda + a).
  SeriesCheck magnitude;
  /// u~_j <= (np/m)^j + j c2^j / k for j <= m, c2 = 3np + 2a + 2.
  SeriesCheck upper;
  /// n > m: t_j - u~_j >= (np/m)^j (n - m) / (n m) - j c2^j / k for 1 < j <= m.
  SeriesCheck above;
  /// n < m: t_2 - u~_2 <= -c (m - n) / (n m^3) and t_j - u~_j <= 0.
  SeriesCheck below;
};

UtildeCheck check_utilde_bounds(std::int64_t k, std::int64_t n, double p, double m, double a, double b,
                                double lambda, std::int64_t j_max);

/// Var[(X)_j] for X ~ Bin(n, p) against (2 j np (np + 2))^j, compared in log domain
/// (lhs and rhs hold the logarithms).
BoundCheck check_variance_bound(std::int64_t n, double p, std::int64_t j);

struct MaxTailCheck {
  /// P(M_k < min(l, n)) <= exp(-d_k); requires l > max(1, 4np).
  std::optional<BoundCheck> lower_tail;
  std::string lower_tail_unmet;
  /// P(M_k <= 2 log k) >= (1 - k^-2)^k; requires k >= exp(3np).
  std::optional<BoundCheck> upper_tail;
  std::string upper_tail_unmet;
};

/// Both sides are log probabilities.
MaxTailCheck check_max_tail_bounds(std::int64_t n, double p, std::int64_t k, double l);

struct Violation {
  std::string params;
  std::string detail;
};

struct LemmaReport {
  std::string lemma;
  std::int64_t cases_run = 0;
  std::int64_t skipped = 0;
  std::vector<Violation> violations;
};

/// Runs every check over its fixed default grid.
std::vector<LemmaReport> run_default_sweep(unsigned threads = 0);

}  // namespace bnest
