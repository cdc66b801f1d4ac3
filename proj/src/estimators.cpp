#include "bnest/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bnest/error.hpp"
#include "bnest/special.hpp"
#include "summation.hpp"

namespace bnest {

namespace {

std::string format_number(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

// Direct summation is continued at least this far before the tail is
// replaced by its integral.
constexpr std::int64_t kMinDirectTerms = 2048;

EstimateResult mode_on_range(const Sample& sample, const BetaPrior& beta, std::int64_t upper) {
  beta.validate();
  if (upper < 1) throw Error(ErrorKind::InvalidArgument, "upper support bound must be positive");
  const std::int64_t start = std::max<std::int64_t>(sample.max(), 1);
  if (start > upper) {
    throw Error(ErrorKind::PriorSupportTooSmall,
                "prior support too small: sample maximum " + std::to_string(sample.max()) +
                    " exceeds support maximum " + std::to_string(upper));
  }
  const BetaBinomialLikelihood lik(sample, beta);
  PosteriorN post;
  post.support_start = start;
  post.truncated_at = upper;
  post.log_weights.reserve(static_cast<std::size_t>(upper - start + 1));
  LogSumAccumulator acc;
  std::int64_t best = start;
  double best_lw = kNegInf;
  for (std::int64_t n = start; n <= upper; ++n) {
    const double lw = lik.log_at(static_cast<double>(n));
    post.log_weights.push_back(lw);
    acc.add(lw);
    if (lw > best_lw) {
      best_lw = lw;
      best = n;
    }
  }
  post.log_normalizer = acc.value();
  post.probs.resize(post.log_weights.size());
  for (std::size_t i = 0; i < post.probs.size(); ++i) {
    post.probs[i] = std::exp(post.log_weights[i] - post.log_normalizer);
  }

  EstimateResult out;
  out.value = static_cast<double>(best);
  out.rounded = best;
  out.diagnostics.support_start = start;
  out.diagnostics.truncated_at = upper;
  out.diagnostics.degenerate = sample.max() == 0;
  out.diagnostics.at_support_boundary = best == upper;
  out.posterior = std::move(post);
  return out;
}

}  // namespace

EstimatorSpec EstimatorSpec::scale(double gamma, BetaPrior beta, TruncationPolicy trunc) {
  return EstimatorSpec{ScaleKind{gamma}, beta, trunc};
}

EstimatorSpec EstimatorSpec::dge(std::int64_t n0_max, BetaPrior beta) {
  return EstimatorSpec{DgeKind{n0_max}, beta, {}};
}

EstimatorSpec EstimatorSpec::raftery(TruncationPolicy trunc) {
  return EstimatorSpec{RafteryKind{}, BetaPrior{1.0, 1.0}, trunc};
}

EstimatorSpec EstimatorSpec::map(std::int64_t t_k, BetaPrior beta) {
  return EstimatorSpec{MapKind{t_k}, beta, {}};
}

EstimatorSpec EstimatorSpec::sample_max() { return EstimatorSpec{SampleMaxKind{}, {}, {}}; }

EstimatorSpec EstimatorSpec::normalized() const {
  EstimatorSpec out = *this;
  if (std::holds_alternative<RafteryKind>(kind)) out.beta = BetaPrior{1.0, 1.0};
  return out;
}

std::string EstimatorSpec::label() const {
  return std::visit(
      [](const auto& k) -> std::string {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, ScaleKind>) {
          return "SE(" + format_number(k.gamma) + ")";
        } else if constexpr (std::is_same_v<T, DgeKind>) {
          return "DGE(" + std::to_string(k.n0_max) + ")";
        } else if constexpr (std::is_same_v<T, RafteryKind>) {
          return "RE";
        } else if constexpr (std::is_same_v<T, MapKind>) {
          return "MAP(" + std::to_string(k.t_k) + ")";
        } else {
          return "MAX";
        }
      },
      kind);
}

std::int64_t round_half_up(double x) { return static_cast<std::int64_t>(std::floor(x + 0.5)); }

EstimateResult scale_estimate(const Sample& sample, const BetaPrior& beta, double gamma,
                              const TruncationPolicy& trunc) {
  return scale_estimate(sample, beta, NPriorSpec{PowerLaw{gamma}}, trunc);
}

EstimateResult scale_estimate(const Sample& sample, const BetaPrior& beta, const NPriorSpec& nprior,
                              const TruncationPolicy& trunc) {
  trunc.validate();
  const bool override_used = check_admissible(beta, nprior, trunc);
  const std::int64_t start = support_start(sample, nprior);
  const auto smax = nprior.support_max();
  if (smax && start > *smax) {
    throw Error(ErrorKind::PriorSupportTooSmall,
                "prior support too small: sample maximum " + std::to_string(sample.max()) +
                    " exceeds prior support maximum " + std::to_string(*smax));
  }

  const BetaBinomialLikelihood lik(sample, beta);
  // Terms of E[1/N] and E[1/N^2] (unnormalized) decay like n^-(a+gamma+1)
  // and n^-(a+gamma+2).
  const double q1 = beta.a + nprior.decay_exponent() + 1.0;
  const double q2 = q1 + 1.0;
  const std::int64_t min_stop = 2 * std::max<std::int64_t>(sample.max(), 10);
  const std::int64_t switch_at = std::min(trunc.n_cap, std::max(kMinDirectTerms, 8 * start));
  const double log_small = std::log(trunc.tail_tol * 1e-3);
  const bool continuous = nprior.log_weight_continuous(static_cast<double>(start)).has_value();

  auto term1 = [&](double x, double log_prior) {
    return log_prior == kNegInf ? kNegInf : lik.log_at(x) + log_prior - std::log(x);
  };

  LogSumAccumulator sum1;
  LogSumAccumulator sum2;
  double prev1 = kNegInf;
  double prev2 = kNegInf;
  EstimateResult out;
  out.diagnostics.support_start = start;
  out.diagnostics.nonintegrable_override = override_used;
  out.diagnostics.degenerate = sample.max() == 0;

  for (std::int64_t n = start;; ++n) {
    const double x = static_cast<double>(n);
    const double t1 = term1(x, nprior.log_weight(n));
    const double t2 = t1 == kNegInf ? kNegInf : t1 - std::log(x);
    sum1.add(t1);
    sum2.add(t2);
    out.diagnostics.truncated_at = n;

    if (smax && n == *smax) {
      out.diagnostics.tail_bound = 0.0;
      break;
    }
    if (n >= min_stop && t1 != kNegInf && t1 < sum1.max() + log_small && t2 < sum2.max() + log_small) {
      const double tail1 = detail::relative_tail_estimate(prev1, t1, n, q1, sum1.value());
      const double tail2 = detail::relative_tail_estimate(prev2, t2, n, q2, sum2.value());
      if (tail1 < trunc.tail_tol && tail2 < trunc.tail_tol) {
        out.diagnostics.tail_bound = std::max(tail1, tail2);
        break;
      }
    }
    const bool decreasing = t1 != kNegInf && t1 < prev1 && t2 < prev2;
    if (n >= switch_at && continuous && decreasing) {
      // Replace the rest of both sums by midpoint-rule integrals of the
      // continuous extension, with the first Euler-Maclaurin correction.
      const double upper = smax ? static_cast<double>(*smax) + 0.5 : detail::kInf;
      const auto log_f1 = [&](double y) { return term1(y, *nprior.log_weight_continuous(y)); };
      const auto log_f2 = [&](double y) { return log_f1(y) - std::log(y); };
      const auto i1 = detail::log_tail_integral(log_f1, x + 0.5, upper);
      const auto i2 = detail::log_tail_integral(log_f2, x + 0.5, upper);
      if (!i1.converged || !i2.converged) {
        throw Error(ErrorKind::NonConvergentTail, "tail integral of the scale-estimator sums diverges");
      }
      const double next1 = log_f1(x + 1.0);
      const double next2 = log_f2(x + 1.0);
      auto corrected = [](double log_integral, double cur, double next) {
        // integral + f'(x + 1/2) / 24 with f' ~ f(n + 1) - f(n) < 0
        const double log_corr = cur + std::log(-std::expm1(next - cur)) - std::log(24.0);
        return log_integral + std::log1p(-std::exp(log_corr - log_integral));
      };
      const double tail1 = corrected(i1.log_value, t1, next1);
      const double tail2 = corrected(i2.log_value, t2, next2);
      sum1.add(tail1);
      sum2.add(tail2);
      out.diagnostics.tail_integral_share = std::exp(tail2 - sum2.value());
      out.diagnostics.tail_bound = 0.0;
      break;
    }
    if (n >= trunc.n_cap) {
      const double tail1 = detail::relative_tail_estimate(prev1, t1, n, q1, sum1.value());
      const double tail2 = detail::relative_tail_estimate(prev2, t2, n, q2, sum2.value());
      out.diagnostics.tail_bound = std::max(tail1, tail2);
      if (!(out.diagnostics.tail_bound < trunc.tail_tol)) {
        std::ostringstream os;
        os << "scale-estimator sums did not converge before n_cap=" << trunc.n_cap;
        throw Error(ErrorKind::NonConvergentTail, os.str());
      }
      break;
    }
    prev1 = t1;
    prev2 = t2;
  }

  if (sum2.value() == kNegInf) {
    throw Error(ErrorKind::PriorSupportTooSmall, "prior assigns no weight at or above the sample maximum");
  }
  out.value = std::exp(sum1.value() - sum2.value());
  out.rounded = round_half_up(out.value);
  return out;
}

EstimateResult dge_estimate(const Sample& sample, const BetaPrior& beta, std::int64_t n0_max) {
  return mode_on_range(sample, beta, n0_max);
}

EstimateResult map_estimate(const Sample& sample, const BetaPrior& beta, std::int64_t t_k) {
  return mode_on_range(sample, beta, t_k);
}

EstimateResult sample_max(const Sample& sample) {
  EstimateResult out;
  out.value = static_cast<double>(sample.max());
  out.rounded = sample.max();
  out.diagnostics.support_start = sample.max();
  out.diagnostics.truncated_at = sample.max();
  out.diagnostics.degenerate = sample.max() == 0;
  return out;
}

EstimateResult estimate(const Sample& sample, const EstimatorSpec& raw) {
  const EstimatorSpec spec = raw.normalized();
  return std::visit(
      [&](const auto& k) -> EstimateResult {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, ScaleKind>) {
          return scale_estimate(sample, spec.beta, k.gamma, spec.trunc);
        } else if constexpr (std::is_same_v<T, DgeKind>) {
          return dge_estimate(sample, spec.beta, k.n0_max);
        } else if constexpr (std::is_same_v<T, RafteryKind>) {
          return scale_estimate(sample, spec.beta, 1.0, spec.trunc);
        } else if constexpr (std::is_same_v<T, MapKind>) {
          return map_estimate(sample, spec.beta, k.t_k);
        } else {
          return sample_max(sample);
        }
      },
      spec.kind);
}

PosteriorSummary posterior_summaries(const PosteriorN& post, double level) {
  if (post.probs.empty()) throw Error(ErrorKind::InvalidArgument, "empty posterior");
  if (!(level > 0.0 && level <= 1.0)) throw Error(ErrorKind::InvalidArgument, "level must lie in (0, 1]");
  PosteriorSummary s;
  s.level = level;
  const std::size_t size = post.probs.size();
  const auto at = [&](std::size_t i) { return post.support_start + static_cast<std::int64_t>(i); };

  double cdf = 0.0;
  bool median_set = false;
  double best = -1.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double p = post.probs[i];
    s.mean += static_cast<double>(at(i)) * p;
    cdf += p;
    if (!median_set && cdf >= 0.5) {
      s.median = at(i);
      median_set = true;
    }
    if (p > best) {
      best = p;
      s.mode = at(i);
    }
  }
  if (!median_set) s.median = at(size - 1);

  // Shortest window [lo, hi] with mass >= level; ties keep the larger mass.
  const double target = level - 1e-12;
  std::size_t lo = 0;
  double window = 0.0;
  std::size_t best_len = size + 1;
  for (std::size_t hi = 0; hi < size; ++hi) {
    window += post.probs[hi];
    while (lo < hi && window - post.probs[lo] >= target) {
      window -= post.probs[lo];
      ++lo;
    }
    if (window >= target) {
      const std::size_t len = hi - lo + 1;
      if (len < best_len || (len == best_len && window > s.ci_mass)) {
        best_len = len;
        s.ci_low = at(lo);
        s.ci_high = at(hi);
        s.ci_mass = window;
      }
    }
  }
  if (best_len == size + 1) {
    s.ci_low = at(0);
    s.ci_high = at(size - 1);
    s.ci_mass = cdf;
  }
  return s;
}

}  // namespace bnest
