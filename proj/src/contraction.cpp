#include "bnest/contraction.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "bnest/error.hpp"
#include "bnest/parallel.hpp"
#include "bnest/rng.hpp"
#include "bnest/special.hpp"

namespace bnest {

namespace {

double k_over_log_k(std::int64_t k) {
  const double x = static_cast<double>(k);
  return x / std::log(x);
}

}  // namespace

void SequenceSpec::validate() const {
  if (!(lambda > 1.0)) throw Error(ErrorKind::InvalidArgument, "lambda must exceed 1");
  if (!(mu > 0.0)) throw Error(ErrorKind::InvalidArgument, "mu must be positive");
  if (!(exponent > 0.0 && exponent <= 0.5)) throw Error(ErrorKind::InvalidArgument, "exponent must lie in (0, 1/2]");
  if (k_grid.empty()) throw Error(ErrorKind::InvalidArgument, "k_grid is empty");
  for (std::size_t i = 0; i < k_grid.size(); ++i) {
    if (k_grid[i] < 3) throw Error(ErrorKind::InvalidArgument, "k_grid entries must be at least 3");
    if (i > 0 && k_grid[i] <= k_grid[i - 1]) throw Error(ErrorKind::InvalidArgument, "k_grid must be increasing");
  }
  if (reps < 1) throw Error(ErrorKind::InvalidArgument, "reps must be positive");
  if (lambda_log_power < 0.0) throw Error(ErrorKind::InvalidArgument, "lambda_log_power must be non-negative");
  for (auto k : k_grid) p_at(k);
}

double SequenceSpec::lambda_at(std::int64_t k) const {
  if (lambda_log_power <= 0.0) return lambda;
  return lambda * std::pow(std::log(static_cast<double>(k)), lambda_log_power);
}

std::int64_t SequenceSpec::n_at(std::int64_t k) const {
  const double raw = lambda_at(k) * std::pow(k_over_log_k(k), exponent);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(raw + 0.5)));
}

double SequenceSpec::p_at(std::int64_t k) const {
  const double p = mu / static_cast<double>(n_at(k));
  if (p > 1.0) {
    throw Error(ErrorKind::InvalidArgument,
                "p_k = mu / n_k exceeds 1 at k = " + std::to_string(k) + "; decrease mu");
  }
  return p;
}

bool in_parameter_class(std::int64_t n, double p, std::int64_t k, double lambda) {
  const double np = static_cast<double>(n) * p;
  if (np < 1.0 / lambda || np > lambda) return false;
  return static_cast<double>(n) <= lambda * std::pow(k_over_log_k(k), 1.0 / 6.0);
}

ContractionCurve contraction_curve(const SequenceSpec& spec, const BetaPrior& beta, const NPriorSpec& nprior,
                                   const TruncationPolicy& trunc) {
  spec.validate();
  beta.validate();
  nprior.validate();
  trunc.validate();
  check_admissible(beta, nprior, trunc);

  ContractionCurve curve;
  const std::size_t reps = static_cast<std::size_t>(spec.reps);
  for (std::size_t g = 0; g < spec.k_grid.size(); ++g) {
    const std::int64_t k = spec.k_grid[g];
    ContractionPoint pt;
    pt.k = k;
    pt.n_k = spec.n_at(k);
    pt.p_k = spec.p_at(k);
    pt.in_class = in_parameter_class(pt.n_k, pt.p_k, k, spec.lambda_at(k));

    std::vector<double> miss(reps, std::numeric_limits<double>::quiet_NaN());
    parallel_for(reps, spec.threads, [&](std::size_t r) {
      Rng rng = Rng::substream(spec.seed, {stream::kSample, static_cast<std::uint64_t>(k), r});
      std::vector<std::int64_t> xs(static_cast<std::size_t>(k));
      for (auto& x : xs) x = binomial_sampler(pt.n_k, pt.p_k, rng);
      try {
        miss[r] = posterior_miss_mass(posterior_n(Sample(std::move(xs)), beta, nprior, trunc), pt.n_k);
      } catch (const Error&) {
        // counted as a failure below
      }
    });

    double sum = 0.0;
    double sum_sq = 0.0;
    std::int64_t ok = 0;
    for (double m : miss) {
      if (std::isnan(m)) {
        ++pt.failures;
        continue;
      }
      ++ok;
      sum += m;
      sum_sq += m * m;
    }
    if (ok == 0) {
      pt.mean_miss_mass = pt.mc_stderr = std::numeric_limits<double>::quiet_NaN();
    } else {
      const double n = static_cast<double>(ok);
      pt.mean_miss_mass = sum / n;
      const double var = ok > 1 ? std::max(0.0, (sum_sq - n * pt.mean_miss_mass * pt.mean_miss_mass) / (n - 1.0)) : 0.0;
      pt.mc_stderr = std::sqrt(var / n);
    }
    curve.points.push_back(pt);
  }
  return curve;
}

void write_contraction_csv(std::ostream& os, const ContractionCurve& curve) {
  os << "k,n_k,p_k,miss_mass,stderr,failures,in_class\n";
  os << std::setprecision(17);
  for (const auto& p : curve.points) {
    os << p.k << ',' << p.n_k << ',' << p.p_k << ',' << p.mean_miss_mass << ',' << p.mc_stderr << ','
       << p.failures << ',' << (p.in_class ? 1 : 0) << '\n';
  }
}

PriorConditionReport check_prior_condition(const NPriorSpec& nprior, double alpha, double beta_c,
                                           std::int64_t n_lo, std::int64_t n_hi) {
  if (!(alpha > 0.0 && beta_c > 0.0)) throw Error(ErrorKind::InvalidArgument, "alpha and beta must be positive");
  if (n_lo < 1 || n_hi < n_lo) throw Error(ErrorKind::InvalidArgument, "invalid n range");
  nprior.validate();
  PriorConditionReport rep;
  const double log_beta = std::log(beta_c);
  for (std::int64_t n = n_lo; n <= n_hi; ++n) {
    ++rep.checked;
    const double x = static_cast<double>(n);
    const double bound = log_beta - alpha * x * x;
    if (!(nprior.log_weight(n) >= bound)) {
      rep.holds = false;
      rep.first_violator = n;
      break;
    }
  }
  return rep;
}

TkBounds tk_bounds(double gamma, std::int64_t k, double lambda, double alpha, double beta_c) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(ErrorKind::InvalidArgument, "gamma must lie in [0, 1]");
  if (k < 2) throw Error(ErrorKind::InvalidArgument, "k must be at least 2");
  if (!(lambda > 0.0 && alpha > 0.0 && beta_c > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "lambda, alpha and beta must be positive");
  }
  TkBounds out;
  out.t_min = lambda * std::pow(k_over_log_k(k), 1.0 / 6.0);
  const double inner = alpha * std::cbrt(static_cast<double>(k)) - std::log(beta_c);
  if (gamma < 1.0) {
    out.log_t_max = inner / (1.0 - gamma);
  } else {
    out.log_log_t_max = inner;
    out.log_t_max = std::exp(inner);
  }
  out.t_max_finite_double = std::isfinite(out.log_t_max) && out.log_t_max < std::log(std::numeric_limits<double>::max());
  return out;
}

std::string to_string(MaxRegime r) {
  switch (r) {
    case MaxRegime::Consistent:
      return "consistent";
    case MaxRegime::Inconsistent:
      return "inconsistent";
    case MaxRegime::Critical:
      return "critical";
  }
  return "critical";
}

double max_equals_n_prob(std::int64_t n, double p, std::int64_t k) {
  if (n < 1 || k < 1) throw Error(ErrorKind::InvalidArgument, "n and k must be positive");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::InvalidArgument, "p must lie in [0, 1]");
  if (p == 1.0) return 1.0;
  if (p == 0.0) return 0.0;
  const double pn = std::exp(static_cast<double>(n) * std::log(p));
  return -std::expm1(static_cast<double>(k) * std::log1p(-pn));
}

MaxProbeResult max_consistency_probe(std::int64_t n, double p, std::int64_t k, std::int64_t reps,
                                     std::uint64_t seed, double critical_band, unsigned threads) {
  if (reps < 1) throw Error(ErrorKind::InvalidArgument, "reps must be positive");
  MaxProbeResult res;
  res.exact_prob = max_equals_n_prob(n, p, k);
  const double x = static_cast<double>(n);
  res.margin = x * std::log(x) - std::log(static_cast<double>(k));
  if (std::abs(res.margin) <= critical_band) {
    res.regime = MaxRegime::Critical;
  } else {
    res.regime = res.margin < 0.0 ? MaxRegime::Consistent : MaxRegime::Inconsistent;
  }

  std::vector<char> hit(static_cast<std::size_t>(reps), 0);
  parallel_for(hit.size(), threads, [&](std::size_t r) {
    Rng rng = Rng::substream(seed, {stream::kSample, r});
    // The event M_k = n is decided by the first draw equal to n.
    for (std::int64_t i = 0; i < k; ++i) {
      if (binomial_sampler(n, p, rng) == n) {
        hit[r] = 1;
        return;
      }
    }
  });
  std::int64_t hits = 0;
  for (char h : hit) hits += h;
  const double m = static_cast<double>(reps);
  res.mc_prob = static_cast<double>(hits) / m;
  res.mc_stderr = std::sqrt(res.exact_prob * (1.0 - res.exact_prob) / m);
  return res;
}

MaxThreshold max_half_threshold(std::int64_t n, double p, bool strict, double target) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be positive");
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::InvalidArgument, "p must lie in (0, 1)");
  if (!(target > 0.0 && target < 1.0)) throw Error(ErrorKind::InvalidArgument, "target must lie in (0, 1)");
  // Smallest integer x with x > n/2 (strict) or x >= n/2.
  const std::int64_t t = strict ? n / 2 + 1 : (n + 1) / 2;
  MaxThreshold out;
  out.tail_prob = binomial_upper_tail(t, n, p);
  out.k_min = std::ceil(std::log1p(-target) / std::log1p(-out.tail_prob));
  return out;
}

}  // namespace bnest
