#pragma once

// Reference computations that share no code with the library: exact rational
// likelihoods, Gauss-Kronrod quadrature of the Beta integral and long-double
// brute-force sums using the C library's lgammal.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_int.hpp>

namespace oracle {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

inline cpp_int factorial(std::int64_t n) {
  cpp_int r = 1;
  for (std::int64_t i = 2; i <= n; ++i) r *= i;
  return r;
}

inline cpp_int choose(std::int64_t n, std::int64_t x) {
  if (x < 0 || x > n) return 0;
  return factorial(n) / (factorial(x) * factorial(n - x));
}

/// prod C(n, x_i) (kn - S + b - 1)! (S + a - 1)! / (kn + a + b - 1)! for integer a, b >= 1.
inline cpp_rational exact_likelihood(const std::vector<std::int64_t>& xs, std::int64_t n, std::int64_t a,
                                     std::int64_t b) {
  const std::int64_t k = static_cast<std::int64_t>(xs.size());
  std::int64_t s = 0;
  cpp_int num = 1;
  for (auto x : xs) {
    if (x > n) return 0;
    s += x;
    num *= choose(n, x);
  }
  num *= factorial(k * n - s + b - 1) * factorial(s + a - 1);
  return cpp_rational(num, factorial(k * n + a + b - 1));
}

inline double to_double(const cpp_rational& r) { return static_cast<double>(r); }

/// prod C(n, x_i) * integral_0^1 t^(S + a - 1) (1 - t)^(kn - S + b - 1) dt / B(a, b)
/// with B(1, 1) = 1; only a = b = 1 is needed by the tests.
inline long double quadrature_likelihood_uniform(const std::vector<std::int64_t>& xs, std::int64_t n) {
  const std::int64_t k = static_cast<std::int64_t>(xs.size());
  std::int64_t s = 0;
  long double comb = 1.0L;
  for (auto x : xs) {
    s += x;
    comb *= static_cast<long double>(static_cast<double>(choose(n, x)));
  }
  const auto f = [&](long double t) {
    return std::pow(t, static_cast<long double>(s)) * std::pow(1.0L - t, static_cast<long double>(k * n - s));
  };
  const long double integral =
      boost::math::quadrature::gauss_kronrod<long double, 61>::integrate(f, 0.0L, 1.0L, 15, 1e-16L);
  return comb * integral;
}

/// log L_{a,b}(n) in long double through lgammal.
inline long double log_likelihood_ld(const std::vector<std::int64_t>& xs, std::int64_t n, long double a,
                                     long double b) {
  const long double k = static_cast<long double>(xs.size());
  long double s = 0.0L;
  long double out = 0.0L;
  const long double nn = static_cast<long double>(n);
  for (auto x : xs) {
    if (x > n) return -INFINITY;
    const long double xx = static_cast<long double>(x);
    s += xx;
    out += std::lgamma(nn + 1.0L) - std::lgamma(xx + 1.0L) - std::lgamma(nn - xx + 1.0L);
  }
  return out + std::lgamma(k * nn - s + b) + std::lgamma(s + a) - std::lgamma(k * nn + a + b);
}

/// Unnormalized posterior weights L(n) n^-gamma for n in [lo, hi] in long double.
inline std::vector<long double> brute_weights(const std::vector<std::int64_t>& xs, long double a, long double b,
                                              long double gamma, std::int64_t lo, std::int64_t hi) {
  std::vector<long double> w;
  w.reserve(static_cast<std::size_t>(hi - lo + 1));
  for (std::int64_t n = lo; n <= hi; ++n) {
    w.push_back(std::exp(log_likelihood_ld(xs, n, a, b) - gamma * std::log(static_cast<long double>(n))));
  }
  return w;
}

/// Exhaustive argmax of the exact likelihood over [lo, hi], smallest n on ties.
inline std::int64_t exact_argmax(const std::vector<std::int64_t>& xs, std::int64_t a, std::int64_t b,
                                 std::int64_t lo, std::int64_t hi) {
  std::int64_t best = lo;
  cpp_rational best_val = exact_likelihood(xs, lo, a, b);
  for (std::int64_t n = lo + 1; n <= hi; ++n) {
    const cpp_rational v = exact_likelihood(xs, n, a, b);
    if (v > best_val) {
      best_val = v;
      best = n;
    }
  }
  return best;
}

/// Exact Bin(n, p) pmf by direct multiplication in long double.
inline long double binomial_pmf(std::int64_t x, std::int64_t n, long double p) {
  return static_cast<long double>(static_cast<double>(choose(n, x))) * std::pow(p, static_cast<long double>(x)) *
         std::pow(1.0L - p, static_cast<long double>(n - x));
}

}  // namespace oracle
