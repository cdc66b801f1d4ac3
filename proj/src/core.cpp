#include "bnest/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bnest/error.hpp"
#include "bnest/special.hpp"
#include "summation.hpp"

namespace bnest {

Sample::Sample(std::vector<std::int64_t> counts) : counts_(std::move(counts)) {
  if (counts_.empty()) throw Error(ErrorKind::InvalidArgument, "sample must contain at least one count");
  std::map<std::int64_t, std::int64_t> hist;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    const auto x = counts_[i];
    if (x < 0) {
      throw Error(ErrorKind::InvalidArgument,
                  "negative count " + std::to_string(x) + " at position " + std::to_string(i));
    }
    sum_ += x;
    max_ = std::max(max_, x);
    if (x > 0) ++hist[x];
  }
  histogram_.assign(hist.begin(), hist.end());
}

void BetaPrior::validate() const {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw Error(ErrorKind::InvalidPrior, "beta prior needs a > 0 and b > 0");
  }
}

double b_from_p_hat(double a, double p_hat) {
  if (!(p_hat > 0.0 && p_hat <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "p_hat must lie in (0, 1]");
  }
  return a / p_hat - a;
}

void NPriorSpec::validate() const {
  std::visit(
      [](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, PowerLaw>) {
          if (!(f.gamma >= 0.0)) throw Error(ErrorKind::InvalidPrior, "power-law gamma must be >= 0");
        } else if constexpr (std::is_same_v<T, TruncatedPowerLaw>) {
          if (!(f.gamma >= 0.0 && f.gamma <= 1.0)) {
            throw Error(ErrorKind::InvalidPrior, "truncated power-law gamma must lie in [0, 1]");
          }
          if (f.t_k < 1) throw Error(ErrorKind::InvalidPrior, "t_k must be positive");
        } else if constexpr (std::is_same_v<T, UniformRange>) {
          if (f.n0_max < 1) throw Error(ErrorKind::InvalidPrior, "n0_max must be positive");
        } else if constexpr (std::is_same_v<T, PoissonPrior>) {
          if (!(f.mu > 0.0)) throw Error(ErrorKind::InvalidPrior, "Poisson mean must be positive");
        } else {
          if (f.weights.empty()) throw Error(ErrorKind::InvalidPrior, "table prior is empty");
          for (const auto& [n, w] : f.weights) {
            if (n < 1 || !(w > 0.0) || !std::isfinite(w)) {
              throw Error(ErrorKind::InvalidPrior, "table prior needs n >= 1 and positive finite weights");
            }
          }
        }
      },
      family);
}

double NPriorSpec::log_weight(std::int64_t n) const {
  if (n < 1) return kNegInf;
  const double x = static_cast<double>(n);
  const double base = std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, PowerLaw>) {
          return -f.gamma * std::log(x);
        } else if constexpr (std::is_same_v<T, TruncatedPowerLaw>) {
          return n <= f.t_k ? -f.gamma * std::log(x) : kNegInf;
        } else if constexpr (std::is_same_v<T, UniformRange>) {
          return n <= f.n0_max ? 0.0 : kNegInf;
        } else if constexpr (std::is_same_v<T, PoissonPrior>) {
          return x * std::log(f.mu) - f.mu - log_gamma(x + 1.0);
        } else {
          const auto it = f.weights.find(n);
          return it == f.weights.end() ? kNegInf : std::log(it->second);
        }
      },
      family);
  return base == kNegInf ? base : base + log_scale;
}

std::optional<double> NPriorSpec::log_weight_continuous(double x) const {
  return std::visit(
      [&](const auto& f) -> std::optional<double> {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, PowerLaw> || std::is_same_v<T, TruncatedPowerLaw>) {
          return -f.gamma * std::log(x) + log_scale;
        } else if constexpr (std::is_same_v<T, UniformRange>) {
          return log_scale;
        } else if constexpr (std::is_same_v<T, PoissonPrior>) {
          return x * std::log(f.mu) - f.mu - log_gamma(x + 1.0) + log_scale;
        } else {
          return std::nullopt;
        }
      },
      family);
}

std::int64_t NPriorSpec::support_min() const {
  if (const auto* t = std::get_if<TablePrior>(&family)) {
    return t->weights.empty() ? 1 : t->weights.begin()->first;
  }
  return 1;
}

std::optional<std::int64_t> NPriorSpec::support_max() const {
  return std::visit(
      [](const auto& f) -> std::optional<std::int64_t> {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TruncatedPowerLaw>) {
          return f.t_k;
        } else if constexpr (std::is_same_v<T, UniformRange>) {
          return f.n0_max;
        } else if constexpr (std::is_same_v<T, TablePrior>) {
          return f.weights.empty() ? std::int64_t{1} : f.weights.rbegin()->first;
        } else {
          return std::nullopt;
        }
      },
      family);
}

double NPriorSpec::decay_exponent() const {
  if (const auto* p = std::get_if<PowerLaw>(&family)) return p->gamma;
  if (const auto* p = std::get_if<TruncatedPowerLaw>(&family)) return p->gamma;
  if (std::holds_alternative<UniformRange>(family)) return 0.0;
  return detail::kInf;
}

bool NPriorSpec::is_proper() const {
  if (const auto* p = std::get_if<PowerLaw>(&family)) return p->gamma > 1.0;
  return true;
}

std::string NPriorSpec::describe() const {
  std::ostringstream os;
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, PowerLaw>) {
          os << "power-law(gamma=" << f.gamma << ")";
        } else if constexpr (std::is_same_v<T, TruncatedPowerLaw>) {
          os << "truncated-power-law(gamma=" << f.gamma << ", t_k=" << f.t_k << ")";
        } else if constexpr (std::is_same_v<T, UniformRange>) {
          os << "uniform(1.." << f.n0_max << ")";
        } else if constexpr (std::is_same_v<T, PoissonPrior>) {
          os << "poisson(mu=" << f.mu << ")";
        } else {
          os << "table(" << f.weights.size() << " points)";
        }
      },
      family);
  return os.str();
}

void TruncationPolicy::validate() const {
  if (!(tail_tol > 0.0 && tail_tol < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "tail_tol must lie in (0, 1)");
  }
  if (n_cap < 1) throw Error(ErrorKind::InvalidArgument, "n_cap must be positive");
}

double PosteriorN::prob(std::int64_t n) const {
  const std::int64_t i = n - support_start;
  if (i < 0 || i >= size()) return 0.0;
  return probs[static_cast<std::size_t>(i)];
}

BetaBinomialLikelihood::BetaBinomialLikelihood(const Sample& sample, const BetaPrior& prior)
    : histogram_(sample.histogram().begin(), sample.histogram().end()),
      k_(static_cast<double>(sample.k())),
      s_(static_cast<double>(sample.sum())),
      a_(prior.a),
      b_(prior.b),
      max_(sample.max()) {
  prior.validate();
  log_gamma_s_a_ = log_gamma(s_ + a_);
}

double BetaBinomialLikelihood::log_at(double n) const {
  if (n < static_cast<double>(max_) || !(n > 0.0)) return kNegInf;
  double acc = 0.0;
  for (const auto& [value, mult] : histogram_) acc += static_cast<double>(mult) * log_choose(n, value);
  // log Gamma(kn - S + b) + log Gamma(S + a) - log Gamma(kn + a + b)
  return acc + log_gamma_s_a_ - log_gamma_ratio(k_ * n - s_ + b_, s_ + a_);
}

double log_beta_binomial_likelihood(const Sample& sample, std::int64_t n, const BetaPrior& prior) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be >= 1");
  prior.validate();
  if (n < sample.max()) return kNegInf;
  return BetaBinomialLikelihood(sample, prior).log_at(static_cast<double>(n));
}

bool check_admissible(const BetaPrior& beta, const NPriorSpec& nprior, const TruncationPolicy& trunc) {
  beta.validate();
  nprior.validate();
  if (const auto* p = std::get_if<PowerLaw>(&nprior.family)) {
    if (!(beta.a + p->gamma > 1.0)) {
      if (trunc.allow_nonintegrable) return true;
      std::ostringstream os;
      os << "posterior does not exist for a + gamma <= 1 (a=" << beta.a << ", gamma=" << p->gamma
         << "); pass allow_nonintegrable to override";
      throw Error(ErrorKind::InadmissiblePrior, os.str());
    }
  }
  return false;
}

std::int64_t support_start(const Sample& sample, const NPriorSpec& nprior) {
  return std::max({sample.max(), nprior.support_min(), std::int64_t{1}});
}

PosteriorN posterior_n(const Sample& sample, const BetaPrior& beta, const NPriorSpec& nprior,
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
  const double q_asym = beta.a + nprior.decay_exponent();
  const std::int64_t min_stop = 2 * std::max<std::int64_t>(sample.max(), 10);
  const double log_small = std::log(trunc.tail_tol * 1e-3);

  PosteriorN post;
  post.support_start = start;
  LogSumAccumulator acc;
  double prev = kNegInf;
  bool done = false;
  for (std::int64_t n = start;; ++n) {
    const double lp = nprior.log_weight(n);
    const double lw = lp == kNegInf ? kNegInf : lik.log_at(static_cast<double>(n)) + lp;
    post.log_weights.push_back(lw);
    acc.add(lw);
    post.truncated_at = n;

    if (smax && n == *smax) {
      post.tail_bound = 0.0;
      done = true;
    } else if (n >= min_stop && lw != kNegInf && lw < acc.max() + log_small) {
      const double tail = detail::relative_tail_estimate(prev, lw, n, q_asym, acc.value());
      if (tail < trunc.tail_tol) {
        post.tail_bound = tail;
        done = true;
      }
    }
    if (!done && n >= trunc.n_cap) {
      const double tail = detail::relative_tail_estimate(prev, lw, n, q_asym, acc.value());
      post.tail_bound = tail;
      if (!(tail < trunc.tail_tol)) {
        if (!override_used) {
          std::ostringstream os;
          os << "posterior tail did not converge before n_cap=" << trunc.n_cap
             << " (estimated remaining mass " << tail << ")";
          throw Error(ErrorKind::NonConvergentTail, os.str());
        }
        post.normalizable = false;
      }
      done = true;
    }
    if (done) break;
    prev = lw;
  }

  if (acc.value() == kNegInf) {
    throw Error(ErrorKind::PriorSupportTooSmall, "prior assigns no weight at or above the sample maximum");
  }
  if (override_used) post.normalizable = false;
  post.log_normalizer = acc.value();
  post.probs.resize(post.log_weights.size());
  for (std::size_t i = 0; i < post.probs.size(); ++i) {
    post.probs[i] = std::exp(post.log_weights[i] - post.log_normalizer);
  }
  return post;
}

double posterior_miss_mass(const PosteriorN& post, std::int64_t n_true) {
  return std::clamp(1.0 - post.prob(n_true), 0.0, 1.0);
}

}  // namespace bnest
