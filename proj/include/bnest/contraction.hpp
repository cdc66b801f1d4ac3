#pragma once

// Empirical posterior contraction along sequences (n_k, p_k) with n_k p_k
// bounded, plus the prior growth check, admissible truncation bounds and the
// sample-maximum probe.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bnest/core.hpp"

namespace bnest {

struct SequenceSpec {
  double lambda = 2.0;
  double mu = 1.0;
  /// n_k grows like (k / log k)^exponent.
  double exponent = 1.0 / 6.0;
  std::vector<std::int64_t> k_grid{1000, 10000, 100000};
  std::int64_t reps = 200;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  /// When positive, lambda is replaced by lambda * log(k)^lambda_log_power.
  double lambda_log_power = 0.0;

  void validate() const;
  double lambda_at(std::int64_t k) const;
  /// n_k = max(1, round(lambda_k (k / log k)^exponent)), ties rounded up.
  std::int64_t n_at(std::int64_t k) const;
  /// p_k = mu / n_k; throws InvalidArgument when it exceeds 1.
  double p_at(std::int64_t k) const;
};

/// True when 1/lambda <= n p <= lambda and, for exponent <= 1/6,
/// n <= lambda (k / log k)^(1/6).
bool in_parameter_class(std::int64_t n, double p, std::int64_t k, double lambda);

struct ContractionPoint {
  std::int64_t k = 0;
  std::int64_t n_k = 0;
  double p_k = 0.0;
  double mean_miss_mass = 0.0;
  double mc_stderr = 0.0;
  std::int64_t failures = 0;
  /// Whether (n_k, p_k) satisfies the class inequalities at this k; rounding
  /// can push n_k just above lambda (k / log k)^(1/6).
  bool in_class = true;
};

struct ContractionCurve {
  std::vector<ContractionPoint> points;
};

/// Truncation used by the contraction lab: the miss mass only needs absolute
/// accuracy far coarser than the posterior default.
inline constexpr double kContractionTailTol = 1e-9;

ContractionCurve contraction_curve(const SequenceSpec& spec, const BetaPrior& beta, const NPriorSpec& nprior,
                                   const TruncationPolicy& trunc = TruncationPolicy{kContractionTailTol});
void write_contraction_csv(std::ostream& os, const ContractionCurve& curve);

struct PriorConditionReport {
  bool holds = true;
  std::optional<std::int64_t> first_violator;
  std::int64_t checked = 0;
};

/// Checks Pi_N(n) >= beta_c exp(-alpha n^2) for n in [n_lo, n_hi], in log domain.
PriorConditionReport check_prior_condition(const NPriorSpec& nprior, double alpha, double beta_c,
                                           std::int64_t n_lo, std::int64_t n_hi);

struct TkBounds {
  double t_min = 0.0;
  /// log t_max; +inf when t_max is doubly exponential and overflows.
  double log_t_max = 0.0;
  /// log log t_max, always finite; only meaningful when gamma = 1.
  std::optional<double> log_log_t_max;
  bool t_max_finite_double = true;
};

/// t_min = lambda (k / log k)^(1/6); t_max = (exp(alpha k^(1/3)) / beta_c)^(1/(1-gamma))
/// for gamma < 1 and exp(exp(alpha k^(1/3)) / beta_c) for gamma = 1.
TkBounds tk_bounds(double gamma, std::int64_t k, double lambda, double alpha, double beta_c);

enum class MaxRegime { Consistent, Inconsistent, Critical };
std::string to_string(MaxRegime r);

struct MaxProbeResult {
  double exact_prob = 0.0;
  double mc_prob = 0.0;
  double mc_stderr = 0.0;
  /// n log n - log k.
  double margin = 0.0;
  MaxRegime regime = MaxRegime::Critical;
};

/// P(M_k = n) = 1 - (1 - p^n)^k in closed form and by `reps` simulated maxima.
/// The regime is Critical when |margin| <= critical_band.
MaxProbeResult max_consistency_probe(std::int64_t n, double p, std::int64_t k, std::int64_t reps,
                                     std::uint64_t seed, double critical_band = 1.0, unsigned threads = 0);

/// 1 - (1 - p^n)^k evaluated stably.
double max_equals_n_prob(std::int64_t n, double p, std::int64_t k);

struct MaxThreshold {
  /// P(X > n/2) when strict, else P(X >= n/2).
  double tail_prob = 0.0;
  /// Smallest k with 1 - (1 - tail_prob)^k >= target.
  double k_min = 0.0;
};

MaxThreshold max_half_threshold(std::int64_t n, double p, bool strict, double target = 0.5);

}  // namespace bnest
