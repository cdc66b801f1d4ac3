#pragma once

// Beta-binomial likelihood of the population size n and the marginal
// posterior over N with P integrated out analytically.

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace bnest {

/// Observed counts X_1..X_k with cached k, S_k and M_k.
class Sample {
 public:
  /// Throws Error(InvalidArgument) for an empty list or a negative count.
  explicit Sample(std::vector<std::int64_t> counts);

  std::span<const std::int64_t> counts() const { return counts_; }
  std::int64_t k() const { return static_cast<std::int64_t>(counts_.size()); }
  std::int64_t sum() const { return sum_; }
  std::int64_t max() const { return max_; }

  /// (value, multiplicity) pairs for the positive values, ascending.
  std::span<const std::pair<std::int64_t, std::int64_t>> histogram() const { return histogram_; }

 private:
  std::vector<std::int64_t> counts_;
  std::vector<std::pair<std::int64_t, std::int64_t>> histogram_;
  std::int64_t sum_ = 0;
  std::int64_t max_ = 0;
};

struct BetaPrior {
  double a = 1.0;
  double b = 1.0;

  void validate() const;
};

/// b = a / p_hat - a, so that the Beta(a, b) prior has mean p_hat.
double b_from_p_hat(double a, double p_hat);

/// Prior weight n^-gamma on {1, 2, ...}; improper for gamma <= 1.
struct PowerLaw {
  double gamma = 0.0;
};
/// n^-gamma restricted to {1..t_k}.
struct TruncatedPowerLaw {
  double gamma = 0.0;
  std::int64_t t_k = 1;
};
/// Uniform on {1..n0_max}.
struct UniformRange {
  std::int64_t n0_max = 1;
};
struct PoissonPrior {
  double mu = 1.0;
};
/// Arbitrary positive weights on a finite set of n.
struct TablePrior {
  std::map<std::int64_t, double> weights;
};

struct NPriorSpec {
  std::variant<PowerLaw, TruncatedPowerLaw, UniformRange, PoissonPrior, TablePrior> family =
      PowerLaw{};
  /// Constant added to every log weight. Posteriors do not depend on it.
  double log_scale = 0.0;

  void validate() const;
  /// log Pi_N(n) up to the common constant; -inf outside the support.
  double log_weight(std::int64_t n) const;
  /// Continuous extension of log_weight for the tail integrals; only defined
  /// for the parametric families.
  std::optional<double> log_weight_continuous(double x) const;
  std::int64_t support_min() const;
  std::optional<std::int64_t> support_max() const;
  /// Polynomial decay exponent of the prior weight (+inf for faster decay).
  double decay_exponent() const;
  bool is_proper() const;
  std::string describe() const;
};

struct TruncationPolicy {
  double tail_tol = 1e-12;
  std::int64_t n_cap = 1'000'000;
  /// Accept a + gamma <= 1 power-law priors; the posterior is then flagged
  /// as non-normalizable.
  bool allow_nonintegrable = false;

  void validate() const;
};

struct PosteriorN {
  std::int64_t support_start = 1;
  std::vector<double> log_weights;
  std::vector<double> probs;
  double log_normalizer = 0.0;
  std::int64_t truncated_at = 1;
  /// Estimated mass beyond truncated_at relative to the included mass.
  double tail_bound = 0.0;
  bool normalizable = true;

  /// Posterior probability of n (0 outside the stored support).
  double prob(std::int64_t n) const;
  std::int64_t size() const { return static_cast<std::int64_t>(probs.size()); }
};

/// log L_{a,b}(n) evaluated for real n >= M_k through log-gamma ratios.
class BetaBinomialLikelihood {
 public:
  BetaBinomialLikelihood(const Sample& sample, const BetaPrior& prior);

  /// -inf for n < M_k.
  double log_at(double n) const;
  std::int64_t max_count() const { return max_; }
  double a() const { return a_; }

 private:
  std::vector<std::pair<std::int64_t, std::int64_t>> histogram_;
  double k_;
  double s_;
  double a_;
  double b_;
  double log_gamma_s_a_;
  std::int64_t max_;
};

double log_beta_binomial_likelihood(const Sample& sample, std::int64_t n, const BetaPrior& prior);

/// Throws InadmissiblePrior when the posterior does not exist and the policy
/// does not allow it; returns true when the override is in effect.
bool check_admissible(const BetaPrior& beta, const NPriorSpec& nprior, const TruncationPolicy& trunc);

/// First n at which the posterior is evaluated: max(M_k, support_min, 1).
std::int64_t support_start(const Sample& sample, const NPriorSpec& nprior);

PosteriorN posterior_n(const Sample& sample, const BetaPrior& beta, const NPriorSpec& nprior,
                       const TruncationPolicy& trunc = {});

/// Pi(N != n_true | X^k).
double posterior_miss_mass(const PosteriorN& post, std::int64_t n_true);

}  // namespace bnest
