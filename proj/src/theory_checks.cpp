#include "bnest/theory_checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "bnest/error.hpp"
#include "bnest/parallel.hpp"
#include "bnest/special.hpp"

namespace bnest {

namespace {

using ld = long double;

constexpr ld kE2 = static_cast<ld>(std::numbers::e) * static_cast<ld>(std::numbers::e);
constexpr ld kLdNegInf = -std::numeric_limits<ld>::infinity();

/// pmf[x] = P(X = x) for X ~ Bin(n, p), by the ratio recurrence.
std::vector<ld> binomial_pmf_table(std::int64_t n, double p) {
  std::vector<ld> pmf(static_cast<std::size_t>(n + 1), 0.0L);
  if (p <= 0.0) {
    pmf[0] = 1.0L;
    return pmf;
  }
  if (p >= 1.0) {
    pmf[static_cast<std::size_t>(n)] = 1.0L;
    return pmf;
  }
  const ld lp = static_cast<ld>(p);
  const ld log_q = std::log1p(-lp);
  const ld odds = lp / (1.0L - lp);
  // Start from the mode so the recurrence never underflows before the bulk.
  const std::int64_t mode = std::min<std::int64_t>(n, static_cast<std::int64_t>(std::floor((n + 1) * lp)));
  ld log_mode = 0.0L;
  for (std::int64_t i = 1; i <= mode; ++i) log_mode += std::log(static_cast<ld>(n - mode + i) / static_cast<ld>(i));
  log_mode += static_cast<ld>(mode) * std::log(lp) + static_cast<ld>(n - mode) * log_q;
  pmf[static_cast<std::size_t>(mode)] = std::exp(log_mode);
  for (std::int64_t x = mode; x < n; ++x) {
    pmf[static_cast<std::size_t>(x + 1)] =
        pmf[static_cast<std::size_t>(x)] * static_cast<ld>(n - x) / static_cast<ld>(x + 1) * odds;
  }
  for (std::int64_t x = mode; x > 0; --x) {
    pmf[static_cast<std::size_t>(x - 1)] =
        pmf[static_cast<std::size_t>(x)] * static_cast<ld>(x) / static_cast<ld>(n - x + 1) / odds;
  }
  return pmf;
}

/// Falling factorial (x)_j as a sign and log magnitude; sign 0 when a factor vanishes.
struct SignedLog {
  int sign = 1;
  ld log_abs = 0.0L;
};

SignedLog signed_log_falling(ld x, std::int64_t j) {
  SignedLog out;
  for (std::int64_t i = 0; i < j; ++i) {
    const ld f = x - static_cast<ld>(i);
    if (f == 0.0L) return {0, kLdNegInf};
    if (f < 0.0L) out.sign = -out.sign;
    out.log_abs += std::log(std::abs(f));
  }
  return out;
}

/// Ratio (num)_j / (den)_j of falling factorials as a signed long double.
ld falling_ratio(ld num, ld den, std::int64_t j) {
  const auto a = signed_log_falling(num, j);
  const auto b = signed_log_falling(den, j);
  if (a.sign == 0) return 0.0L;
  return static_cast<ld>(a.sign * b.sign) * std::exp(a.log_abs - b.log_abs);
}

/// lhs >= rhs where lhs is a difference of terms of magnitude up to `scale`.
bool geq_with_scale(ld lhs, ld rhs, ld scale) {
  return lhs >= rhs - static_cast<ld>(kCheckMargin) * std::max({std::abs(lhs), std::abs(rhs), scale});
}

std::string format_params(std::initializer_list<std::pair<const char*, ld>> kv) {
  std::ostringstream os;
  os.precision(12);
  bool first = true;
  for (const auto& [k, v] : kv) {
    if (!first) os << ", ";
    os << k << '=' << static_cast<double>(v);
    first = false;
  }
  return os.str();
}

std::string format_check(const BoundCheck& c) {
  std::ostringstream os;
  os.precision(17);
  os << "lhs=" << static_cast<double>(c.lhs) << " rhs=" << static_cast<double>(c.rhs);
  return os.str();
}

ld log_falling_positive(ld x, std::int64_t j) {
  ld s = 0.0L;
  for (std::int64_t i = 0; i < j; ++i) s += std::log(x - static_cast<ld>(i));
  return s;
}

}  // namespace

bool leq_with_margin(long double lhs, long double rhs) {
  return lhs <= rhs + static_cast<ld>(kCheckMargin) * std::abs(rhs);
}

bool log_leq_with_margin(long double log_lhs, long double log_rhs) {
  if (log_lhs == kLdNegInf) return true;
  if (log_rhs == kLdNegInf) return false;
  return log_lhs <= log_rhs + static_cast<ld>(kCheckMargin);
}

BellTable bell_numbers(std::int64_t r_max) {
  if (r_max < 1) throw Error(ErrorKind::InvalidArgument, "r_max must be at least 1");
  BellTable t;
  // Bell triangle: each row starts with the last entry of the previous row,
  // and B_r is the last entry of row r - 1.
  std::vector<BigInt> row{1};
  for (std::int64_t r = 1; r <= r_max; ++r) {
    t.values.push_back(row.back());
    std::vector<BigInt> next{row.back()};
    next.reserve(row.size() + 1);
    for (const auto& v : row) next.push_back(next.back() + v);
    row = std::move(next);
  }
  return t;
}

BoundCheck check_moment_bound(std::int64_t n, double p, std::int64_t r) {
  if (n < 1 || r < 1) throw Error(ErrorKind::InvalidArgument, "n and r must be positive");
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::InvalidArgument, "p must lie in (0, 1)");
  const auto pmf = binomial_pmf_table(n, p);
  BoundCheck c;
  for (std::int64_t x = 1; x <= n; ++x) {
    c.lhs += std::pow(static_cast<ld>(x), static_cast<ld>(r)) * pmf[static_cast<std::size_t>(x)];
  }
  const ld np = static_cast<ld>(n) * static_cast<ld>(p);
  const ld bell = bell_numbers(r).at(r).convert_to<ld>();
  c.rhs = bell * std::max(np, std::pow(np, static_cast<ld>(r)));
  c.holds = leq_with_margin(c.lhs, c.rhs);
  return c;
}

FallingFactorialCheck check_falling_factorial(double m, double n, std::int64_t j, double c) {
  if (!(m > 1.0 && n > 1.0)) throw Error(ErrorKind::InvalidArgument, "m and n must exceed 1");
  if (j < 1 || static_cast<double>(j) > std::min(m, n)) {
    throw Error(ErrorKind::InvalidArgument, "j must lie in [1, min(m, n)]");
  }
  const ld cc = c > 0.0 ? static_cast<ld>(c) : 1.0L / kE2;
  const ld lm = static_cast<ld>(m);
  const ld ln = static_cast<ld>(n);
  const ld jj = static_cast<ld>(j);
  FallingFactorialCheck out;
  const ld log_fm = log_falling_positive(lm, j);
  out.sandwich_holds = log_leq_with_margin(jj * std::log(cc * lm), log_fm) && log_leq_with_margin(log_fm, jj * std::log(lm));
  if (n >= m && j > 1) {
    ld log_ratio = 0.0L;
    for (std::int64_t i = 0; i < j; ++i) {
      const ld fi = static_cast<ld>(i);
      log_ratio += std::log(lm * (ln - fi)) - std::log((lm - fi) * ln);
    }
    out.ratio_holds = log_leq_with_margin(std::log1p((ln - lm) / (ln * lm)), log_ratio);
  }
  return out;
}

std::optional<std::pair<std::int64_t, std::int64_t>> falling_factorial_counterexample(double c,
                                                                                      std::int64_t m_max) {
  const ld lc = static_cast<ld>(c);
  for (std::int64_t m = 2; m <= m_max; ++m) {
    const ld lm = static_cast<ld>(m);
    ld log_fm = 0.0L;
    for (std::int64_t j = 1; j <= m; ++j) {
      log_fm += std::log(lm - static_cast<ld>(j - 1));
      if (static_cast<ld>(j) * std::log(lc * lm) > log_fm) return std::pair{m, j};
    }
  }
  return std::nullopt;
}

MonotonicityCheck check_monotonicity_a(std::int64_t k, std::int64_t n, std::int64_t s, double b,
                                       std::vector<double> a_grid) {
  if (k < 1 || n < 1) throw Error(ErrorKind::InvalidArgument, "k and n must be positive");
  if (s < 2 || s > k * n) throw Error(ErrorKind::InvalidArgument, "s must lie in [2, kn]");
  if (!(b > 0.0)) throw Error(ErrorKind::InvalidArgument, "b must be positive");
  for (double a : a_grid) {
    if (!(a >= 0.0)) throw Error(ErrorKind::InvalidArgument, "a must be non-negative");
  }
  std::sort(a_grid.begin(), a_grid.end());
  const double kn = static_cast<double>(k * n);
  const double sd = static_cast<double>(s);
  auto log_f = [&](double a) {
    return static_cast<ld>(log_gamma(kn - sd + b)) + static_cast<ld>(log_gamma(sd + a)) -
           static_cast<ld>(log_gamma(kn + a + b));
  };
  MonotonicityCheck out;
  for (std::size_t i = 1; i < a_grid.size(); ++i) {
    const ld prev = log_f(a_grid[i - 1]);
    const ld cur = log_f(a_grid[i]);
    if (cur > prev + static_cast<ld>(kCheckMargin) * std::max(1.0L, std::abs(prev))) out.decreasing = false;
  }
  for (double a : a_grid) {
    const double lo = std::floor(a);
    const double hi = std::ceil(a);
    const ld log_ratio = log_f(lo) - log_f(hi);
    const ld bound = std::log(static_cast<ld>((1.0 + hi + b) * kn));
    if (!log_leq_with_margin(log_ratio, bound)) out.ratio_bound_holds = false;
  }
  return out;
}

SeriesCheck check_uj_deviation(std::int64_t k, std::int64_t n, double p, double m, std::int64_t s, double a,
                               double b, double lambda, std::int64_t j_max, double c) {
  SeriesCheck out;
  const ld lk = static_cast<ld>(k);
  const ld knp = lk * static_cast<ld>(n) * static_cast<ld>(p);
  const ld np = static_cast<ld>(n) * static_cast<ld>(p);
  auto unmet = [&](std::string why) {
    out.precondition_met = false;
    out.unmet = std::move(why);
    return out;
  };
  if (k < 2) return unmet("k < 2");
  if (!(m > 0.0) || static_cast<ld>(k) * static_cast<ld>(m) < static_cast<ld>(s)) return unmet("km < s");
  if (s < 1) return unmet("s < 1");
  if (!(a >= 0.0 && b > 0.0)) return unmet("a < 0 or b <= 0");
  if (lambda < static_cast<double>(n) * p) return unmet("lambda < np");
  if (std::abs(static_cast<ld>(s) - knp) > std::sqrt(static_cast<ld>(lambda) * lk * std::log(lk))) {
    return unmet("|s - knp| > sqrt(lambda k log k)");
  }
  if (static_cast<ld>(j_max) > static_cast<ld>(s) + static_cast<ld>(a)) return unmet("j_max > s + a");

  const ld cc = c > 0.0 ? static_cast<ld>(c) : 2.0L * kE2 * (3.0L * static_cast<ld>(lambda) + static_cast<ld>(a) + 1.0L);
  const ld sa = static_cast<ld>(s) + static_cast<ld>(a);
  const ld ta = knp + static_cast<ld>(a);
  const ld den = lk * static_cast<ld>(m) + static_cast<ld>(a) + static_cast<ld>(b) - 1.0L;
  const ld log_scale = 0.5L * std::log(static_cast<ld>(lambda) * std::log(lk) / lk);

  ld log_u = 0.0L;
  SignedLog rho;  // u~_j / u_j
  for (std::int64_t j = 1; j <= j_max; ++j) {
    const ld i = static_cast<ld>(j - 1);
    log_u += std::log(sa - i) - std::log(den - i);
    const ld f = ta - i;
    if (f == 0.0L) {
      rho.sign = 0;
    } else if (rho.sign != 0) {
      if (f < 0.0L) rho.sign = -rho.sign;
      rho.log_abs += std::log(std::abs(f)) - std::log(sa - i);
    }
    ld one_minus_rho;
    if (rho.sign == 0) {
      one_minus_rho = 1.0L;
    } else if (rho.sign > 0) {
      one_minus_rho = std::abs(std::expm1(rho.log_abs));
    } else {
      one_minus_rho = 1.0L + std::exp(rho.log_abs);
    }
    const ld log_lhs = one_minus_rho == 0.0L ? kLdNegInf : log_u + std::log(one_minus_rho);
    const ld log_rhs = std::log(static_cast<ld>(j)) + log_scale + static_cast<ld>(j) * std::log(cc / static_cast<ld>(m));
    ++out.cases;
    if (!log_leq_with_margin(log_lhs, log_rhs)) out.failed_j.push_back(j);
  }
  return out;
}

UtildeCheck check_utilde_bounds(std::int64_t k, std::int64_t n, double p, double m, double a, double b,
                                double lambda, std::int64_t j_max) {
  UtildeCheck out;
  const ld lk = static_cast<ld>(k);
  const ld ln = static_cast<ld>(n);
  const ld lm = static_cast<ld>(m);
  const ld la = static_cast<ld>(a);
  const ld lb = static_cast<ld>(b);
  const ld ll = static_cast<ld>(lambda);
  const ld np = ln * static_cast<ld>(p);
  const ld ta = lk * np + la;
  const ld den = lk * lm + la + lb - 1.0L;

  auto mark_all = [&](std::string why) {
    for (SeriesCheck* s : {&out.magnitude, &out.upper, &out.above, &out.below}) {
      s->precondition_met = false;
      s->unmet = why;
    }
    return out;
  };
  if (k < 2) return mark_all("k < 2");
  if (!(m > 0.0 && p > 0.0 && p < 1.0 && a >= 0.0 && b > 0.0)) return mark_all("parameter out of range");

  auto utilde = [&](std::int64_t j) { return falling_ratio(ta, den, j); };
  auto t_j = [&](std::int64_t j) {
    const auto num = signed_log_falling(ln, j);
    if (num.sign == 0) return 0.0L;
    return std::exp(num.log_abs + static_cast<ld>(j) * std::log(static_cast<ld>(p)) - log_falling_positive(lm, j));
  };

  // |u~_j| <= (c1/m)^j for j <= 2 k lambda + a.
  if (lambda < static_cast<double>(n) * p) {
    out.magnitude.precondition_met = false;
    out.magnitude.unmet = "lambda < np";
  } else {
    const ld c1 = 6.0L * kE2 * (ll + la);
    const ld j_cap = std::min(static_cast<ld>(j_max), std::floor(2.0L * lk * ll + la));
    for (std::int64_t j = 1; static_cast<ld>(j) <= j_cap; ++j) {
      if (den - static_cast<ld>(j - 1) <= 0.0L) break;
      const auto num = signed_log_falling(ta, j);
      const ld log_lhs = num.sign == 0 ? kLdNegInf : num.log_abs - log_falling_positive(den, j);
      ++out.magnitude.cases;
      if (!log_leq_with_margin(log_lhs, static_cast<ld>(j) * std::log(c1 / lm))) out.magnitude.failed_j.push_back(j);
    }
  }

  const ld c2 = 3.0L * np + 2.0L * la + 2.0L;
  const std::int64_t j_le_m = std::min<std::int64_t>(j_max, static_cast<std::int64_t>(std::floor(m)));
  auto slack = [&](std::int64_t j) { return static_cast<ld>(j) * std::pow(c2, static_cast<ld>(j)) / lk; };

  // u~_j <= (np/m)^j + j c2^j / k for j <= m.
  for (std::int64_t j = 1; j <= j_le_m; ++j) {
    const ld lhs = utilde(j);
    const ld rhs = std::pow(np / lm, static_cast<ld>(j)) + slack(j);
    ++out.upper.cases;
    if (!leq_with_margin(lhs, rhs)) out.upper.failed_j.push_back(j);
  }

  // n > m: t_j - u~_j >= (np/m)^j (n - m)/(n m) - j c2^j / k for 1 < j <= m.
  if (!(ln > lm)) {
    out.above.precondition_met = false;
    out.above.unmet = "n <= m";
  } else {
    for (std::int64_t j = 2; j <= j_le_m; ++j) {
      const ld t = t_j(j);
      const ld u = utilde(j);
      const ld rhs = std::pow(np / lm, static_cast<ld>(j)) * (ln - lm) / (ln * lm) - slack(j);
      ++out.above.cases;
      if (!geq_with_scale(t - u, rhs, std::max(std::abs(t), std::abs(u)))) out.above.failed_j.push_back(j);
    }
  }

  // n < m: t_2 - u~_2 <= -c (m - n)/(n m^3) and t_j - u~_j <= 0 for 2 <= j <= min(m, knp + a).
  const ld k0 = std::pow(1.0L + 1.0L / np, 2.0L) * std::pow(2.0L * ll * (la + lb + 1.0L), 4.0L);
  if (!(ln < lm)) {
    out.below.precondition_met = false;
    out.below.unmet = "n >= m";
  } else if (ln > ll * std::pow(lk, 0.25L)) {
    out.below.precondition_met = false;
    out.below.unmet = "n > lambda k^(1/4)";
  } else if (lk < k0) {
    out.below.precondition_met = false;
    out.below.unmet = "k below (1 + 1/np)^2 (2 lambda (a + b + 1))^4";
  } else if (j_le_m < 2) {
    out.below.precondition_met = false;
    out.below.unmet = "m < 2";
  } else {
    const ld c = 0.5L * std::pow(np / (la + lb + 1.0L), 2.0L);
    const ld t2 = t_j(2);
    const ld u2 = utilde(2);
    ++out.below.cases;
    const ld rhs2 = -c * (lm - ln) / (ln * lm * lm * lm);
    if (!geq_with_scale(rhs2, t2 - u2, std::max(std::abs(t2), std::abs(u2)))) out.below.failed_j.push_back(2);
    const std::int64_t j_top = std::min<std::int64_t>(j_le_m, static_cast<std::int64_t>(std::floor(ta)));
    for (std::int64_t j = 3; j <= j_top; ++j) {
      const ld t = t_j(j);
      const ld u = utilde(j);
      ++out.below.cases;
      if (!geq_with_scale(0.0L, t - u, std::max(std::abs(t), std::abs(u)))) out.below.failed_j.push_back(j);
    }
  }
  return out;
}

BoundCheck check_variance_bound(std::int64_t n, double p, std::int64_t j) {
  if (n < 1 || j < 1 || j > n) throw Error(ErrorKind::InvalidArgument, "need 1 <= j <= n");
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::InvalidArgument, "p must lie in (0, 1)");
  const auto pmf = binomial_pmf_table(n, p);
  const ld lp = static_cast<ld>(p);
  const ld mean = std::exp(log_falling_positive(static_cast<ld>(n), j) + static_cast<ld>(j) * std::log(lp));
  ld var = 0.0L;
  for (std::int64_t x = 0; x <= n; ++x) {
    const ld fx = x < j ? 0.0L : std::exp(log_falling_positive(static_cast<ld>(x), j));
    const ld d = fx - mean;
    var += pmf[static_cast<std::size_t>(x)] * d * d;
  }
  const ld np = static_cast<ld>(n) * lp;
  BoundCheck c;
  c.lhs = var > 0.0L ? std::log(var) : kLdNegInf;
  c.rhs = static_cast<ld>(j) * std::log(2.0L * static_cast<ld>(j) * np * (np + 2.0L));
  c.holds = log_leq_with_margin(c.lhs, c.rhs);
  return c;
}

MaxTailCheck check_max_tail_bounds(std::int64_t n, double p, std::int64_t k, double l) {
  if (n < 1 || k < 2) throw Error(ErrorKind::InvalidArgument, "need n >= 1 and k >= 2");
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::InvalidArgument, "p must lie in (0, 1)");
  const auto pmf = binomial_pmf_table(n, p);
  const ld lk = static_cast<ld>(k);
  const ld np = static_cast<ld>(n) * static_cast<ld>(p);
  auto log_cdf_pow_k = [&](std::int64_t x) {
    // k log P(X <= x), summing the smaller side for accuracy.
    if (x < 0) return kLdNegInf;
    if (x >= n) return 0.0L;
    ld upper = 0.0L;
    for (std::int64_t y = x + 1; y <= n; ++y) upper += pmf[static_cast<std::size_t>(y)];
    return lk * std::log1p(-upper);
  };

  MaxTailCheck out;
  const ld ll = static_cast<ld>(l);
  if (!(ll > std::max(1.0L, 4.0L * np))) {
    out.lower_tail_unmet = "l <= max(1, 4np)";
  } else {
    const ld t = std::min(ll, static_cast<ld>(n));
    const auto below = static_cast<std::int64_t>(std::ceil(t)) - 1;  // M_k < t  <=>  M_k <= ceil(t) - 1
    const ld log_d1 = std::log(lk) - ll * std::log(ll / np);
    const ld log_d2 = std::log(lk) + std::log(np) - std::log(8.0L * std::numbers::pi_v<ld>) - 2.0L * std::log(ll) - ll * ll / np;
    BoundCheck c;
    c.lhs = log_cdf_pow_k(below);
    c.rhs = -std::exp(std::min(log_d1, log_d2));
    c.holds = log_leq_with_margin(c.lhs, c.rhs);
    out.lower_tail = c;
  }
  if (lk < std::exp(3.0L * np)) {
    out.upper_tail_unmet = "k < exp(3np)";
  } else {
    const auto x = static_cast<std::int64_t>(std::floor(2.0L * std::log(lk)));
    BoundCheck c;
    c.lhs = log_cdf_pow_k(x);
    c.rhs = lk * std::log1p(-1.0L / (lk * lk));
    c.holds = log_leq_with_margin(c.rhs, c.lhs);
    out.upper_tail = c;
  }
  return out;
}

namespace {

void add_series(LemmaReport& rep, const SeriesCheck& s, const std::string& params) {
  if (!s.precondition_met) {
    ++rep.skipped;
    return;
  }
  rep.cases_run += s.cases;
  for (auto j : s.failed_j) rep.violations.push_back({params, "fails at j=" + std::to_string(j)});
}

LemmaReport sweep_bell() {
  LemmaReport rep{"bell_numbers", 0, 0, {}};
  const auto t = bell_numbers(21);
  // Recurrence B_{r+1} = sum_j C(r, j) B_j with B_0 = 1.
  for (std::int64_t r = 1; r <= 20; ++r) {
    BigInt rec = 1;  // j = 0 term
    BigInt binom = 1;
    for (std::int64_t j = 1; j <= r; ++j) {
      binom = binom * (r - j + 1) / j;
      rec += binom * t.at(j);
    }
    ++rep.cases_run;
    if (rec != t.at(r + 1)) rep.violations.push_back({"r=" + std::to_string(r), "recurrence mismatch"});
    ++rep.cases_run;
    if (!(t.at(r + 1) > t.at(r))) rep.violations.push_back({"r=" + std::to_string(r), "not increasing"});
    ++rep.cases_run;
    if (t.at(r) > boost::multiprecision::pow(BigInt(r), static_cast<unsigned>(r))) {
      rep.violations.push_back({"r=" + std::to_string(r), "B_r > r^r"});
    }
  }
  return rep;
}

LemmaReport sweep_moment() {
  LemmaReport rep{"moment_bound", 0, 0, {}};
  for (std::int64_t n : {1, 2, 5, 10, 20, 50, 100, 200}) {
    for (double p : {0.01, 0.05, 0.1, 0.3, 0.5, 0.9, 0.99}) {
      for (std::int64_t r = 1; r <= 12; ++r) {
        const auto c = check_moment_bound(n, p, r);
        ++rep.cases_run;
        if (!c.holds) rep.violations.push_back({format_params({{"n", n}, {"p", p}, {"r", r}}), format_check(c)});
      }
    }
  }
  return rep;
}

LemmaReport sweep_falling() {
  LemmaReport rep{"falling_factorial", 0, 0, {}};
  std::vector<double> values;
  for (int v = 2; v <= 60; ++v) values.push_back(v);
  for (double v : {1.5, 2.5, 7.3, 15.75, 33.2}) values.push_back(v);
  for (double m : values) {
    for (double n : values) {
      const auto j_top = static_cast<std::int64_t>(std::floor(std::min(m, n)));
      for (std::int64_t j = 1; j <= j_top; ++j) {
        const auto c = check_falling_factorial(m, n, j);
        ++rep.cases_run;
        const auto params = format_params({{"m", m}, {"n", n}, {"j", j}});
        if (!c.sandwich_holds) rep.violations.push_back({params, "(m/e^2)^j <= (m)_j <= m^j fails"});
        if (c.ratio_holds && !*c.ratio_holds) rep.violations.push_back({params, "ratio bound fails"});
      }
    }
  }
  return rep;
}

LemmaReport sweep_monotonicity() {
  LemmaReport rep{"monotonicity_a", 0, 0, {}};
  const std::vector<double> a_grid{0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.7, 5.0, 10.0};
  for (std::int64_t k : {1, 2, 3, 5, 10, 100}) {
    for (std::int64_t n : {1, 2, 4, 10, 25}) {
      const std::int64_t kn = k * n;
      if (kn < 2) continue;
      for (std::int64_t s : {std::int64_t{2}, (kn + 2) / 2, kn}) {
        for (double b : {0.5, 1.0, 3.0}) {
          const auto c = check_monotonicity_a(k, n, s, b, a_grid);
          ++rep.cases_run;
          const auto params = format_params({{"k", k}, {"n", n}, {"s", s}, {"b", b}});
          if (!c.decreasing) rep.violations.push_back({params, "f not decreasing in a"});
          if (!c.ratio_bound_holds) rep.violations.push_back({params, "floor/ceil ratio exceeds c k n"});
        }
      }
    }
  }
  return rep;
}

LemmaReport sweep_uj() {
  LemmaReport rep{"uj_deviation", 0, 0, {}};
  for (std::int64_t k : {10, 100, 1000}) {
    for (std::int64_t n : {5, 10, 20}) {
      for (double p : {0.05, 0.1, 0.3}) {
        const double np = static_cast<double>(n) * p;
        for (double lambda : {std::max(1.0, np), 2.0 * std::max(1.0, np)}) {
          const double knp = static_cast<double>(k) * np;
          const auto t = static_cast<std::int64_t>(std::floor(std::sqrt(lambda * static_cast<double>(k) * std::log(static_cast<double>(k)))));
          const auto centre = static_cast<std::int64_t>(std::llround(knp));
          for (std::int64_t delta : {-t, -t / 2, std::int64_t{0}, t / 2, t}) {
            const std::int64_t s = centre + delta;
            if (s < 1 || std::abs(static_cast<double>(s) - knp) > std::sqrt(lambda * static_cast<double>(k) * std::log(static_cast<double>(k)))) continue;
            for (double m : {1.5, 2.0, 5.0, 8.0, 20.0, 40.0}) {
              for (double a : {0.0, 1.0, 2.5}) {
                for (double b : {0.5, 1.0}) {
                  const auto j_max = std::min<std::int64_t>(30, static_cast<std::int64_t>(std::floor(static_cast<double>(s) + a)));
                  const auto c = check_uj_deviation(k, n, p, m, s, a, b, lambda, j_max);
                  add_series(rep, c, format_params({{"k", k}, {"n", n}, {"p", p}, {"m", m}, {"s", s}, {"a", a}, {"b", b}, {"lambda", lambda}}));
                }
              }
            }
          }
        }
      }
    }
  }
  return rep;
}

void sweep_utilde(LemmaReport& magnitude, LemmaReport& above_below) {
  for (std::int64_t k : {100, 10000, 100000000}) {
    for (std::int64_t n = 5; n <= 40; ++n) {
      for (std::int64_t m = 5; m <= 40; ++m) {
        for (double p : {0.05, 0.2}) {
          for (double a : {1.0, 2.0}) {
            const double b = 1.0;
            const double lambda = std::max(1.0, static_cast<double>(n) * p);
            const auto c = check_utilde_bounds(k, n, p, static_cast<double>(m), a, b, lambda, m);
            const auto params = format_params({{"k", k}, {"n", n}, {"p", p}, {"m", m}, {"a", a}, {"b", b}, {"lambda", lambda}});
            add_series(magnitude, c.magnitude, params + " |u~_j| bound");
            add_series(magnitude, c.upper, params + " u~_j upper bound");
            add_series(above_below, c.above, params + " n > m");
            add_series(above_below, c.below, params + " n < m");
          }
        }
      }
    }
  }
}

LemmaReport sweep_variance() {
  LemmaReport rep{"variance_bound", 0, 0, {}};
  for (std::int64_t n : {1, 2, 5, 10, 20, 60, 100}) {
    for (double p : {0.05, 0.3, 0.5, 0.9}) {
      for (std::int64_t j = 1; j <= n; ++j) {
        if (j > 12 && j != n && n > 20) continue;
        const auto c = check_variance_bound(n, p, j);
        ++rep.cases_run;
        if (!c.holds) rep.violations.push_back({format_params({{"n", n}, {"p", p}, {"j", j}}), format_check(c)});
      }
    }
  }
  return rep;
}

void sweep_max_tail(LemmaReport& lower, LemmaReport& upper) {
  for (std::int64_t n : {5, 10, 30, 100}) {
    for (double p : {0.01, 0.05, 0.1, 0.2, 0.3}) {
      for (std::int64_t k : {10, 100, 1000, 10000, 1000000}) {
        for (double l : {1.5, 2.0, 3.0, 5.0, 7.0, 10.0, 20.0}) {
          const auto c = check_max_tail_bounds(n, p, k, l);
          const auto params = format_params({{"n", n}, {"p", p}, {"k", k}, {"l", l}});
          if (c.lower_tail) {
            ++lower.cases_run;
            if (!c.lower_tail->holds) lower.violations.push_back({params, format_check(*c.lower_tail)});
          } else {
            ++lower.skipped;
          }
          // The second bound does not involve l; evaluate it once per (n, p, k).
          if (l != 1.5) continue;
          if (c.upper_tail) {
            ++upper.cases_run;
            if (!c.upper_tail->holds) upper.violations.push_back({params, format_check(*c.upper_tail)});
          } else {
            ++upper.skipped;
          }
        }
      }
    }
  }
}

}  // namespace

std::vector<LemmaReport> run_default_sweep(unsigned threads) {
  std::vector<LemmaReport> reports(10);
  std::vector<std::function<void()>> jobs{
      [&] { reports[0] = sweep_bell(); },
      [&] { reports[1] = sweep_moment(); },
      [&] { reports[2] = sweep_falling(); },
      [&] { reports[3] = sweep_monotonicity(); },
      [&] { reports[4] = sweep_uj(); },
      [&] {
        reports[5].lemma = "utilde_bounds";
        reports[6].lemma = "utilde_t_difference";
        sweep_utilde(reports[5], reports[6]);
      },
      [&] { reports[7] = sweep_variance(); },
      [&] {
        reports[8].lemma = "max_lower_tail";
        reports[9].lemma = "max_upper_tail";
        sweep_max_tail(reports[8], reports[9]);
      },
  };
  parallel_for(jobs.size(), threads, [&](std::size_t i) { jobs[i](); });
  return reports;
}

}  // namespace bnest
