#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bnest/theory_checks.hpp"
#include "oracles.hpp"

using namespace bnest;

TEST_CASE("Bell numbers") {
  const BellTable t = bell_numbers(25);
  CHECK(t.at(1) == 1);
  CHECK(t.at(2) == 2);
  CHECK(t.at(3) == 5);
  CHECK(t.at(4) == 15);
  CHECK(t.at(5) == 52);
  // B_{r+1} = sum_j C(r, j) B_j with B_0 = 1.
  for (std::int64_t r = 1; r < 25; ++r) {
    BigInt sum = 1;
    for (std::int64_t j = 1; j <= r; ++j) sum += oracle::choose(r, j) * t.at(j);
    CHECK(t.at(r + 1) == sum);
    CHECK(t.at(r + 1) > t.at(r));
  }
  for (std::int64_t r = 1; r <= 20; ++r) CHECK(t.at(r) <= boost::multiprecision::pow(BigInt(r), unsigned(r)));
  CHECK(t.at(25) == BigInt("4638590332229999353"));
}

TEST_CASE("binomial moment bound") {
  const BoundCheck one = check_moment_bound(12, 0.3, 1);
  CHECK(one.lhs == doctest::Approx(3.6).epsilon(1e-14));
  CHECK(one.rhs == doctest::Approx(3.6).epsilon(1e-14));
  CHECK(one.holds);
  const BoundCheck two = check_moment_bound(10, 0.5, 2);
  CHECK(two.lhs == doctest::Approx(27.5).epsilon(1e-14));
  CHECK(two.rhs == doctest::Approx(50.0).epsilon(1e-14));
  CHECK(two.holds);
  for (std::int64_t n : {5, 20, 100}) {
    for (double p : {0.05, 0.3, 0.9}) {
      for (std::int64_t r = 2; r <= 8; ++r) {
        const BoundCheck c = check_moment_bound(n, p, r);
        long double want = 0.0L;
        for (std::int64_t x = 0; x <= n; ++x) want += std::pow((long double)x, (long double)r) * oracle::binomial_pmf(x, n, p);
        CHECK(std::abs(c.lhs - want) / want <= 1e-12L);
        CHECK(c.holds);
      }
    }
  }
}

TEST_CASE("falling factorial bounds") {
  const FallingFactorialCheck j1 = check_falling_factorial(9.0, 12.0, 1);
  CHECK(j1.sandwich_holds);
  CHECK_FALSE(j1.ratio_holds.has_value());
  for (std::int64_t m = 2; m <= 60; ++m) {
    for (std::int64_t n = 2; n <= 60; ++n) {
      for (std::int64_t j = 1; j <= std::min(m, n); ++j) {
        const FallingFactorialCheck c = check_falling_factorial(double(m), double(n), j);
        CHECK(c.sandwich_holds);
        if (c.ratio_holds) CHECK(*c.ratio_holds);
      }
    }
  }
  CHECK_FALSE(falling_factorial_counterexample(std::exp(-2.0), 60).has_value());
  CHECK_FALSE(falling_factorial_counterexample(1.01 * std::exp(-2.0), 60).has_value());
  const auto ce = falling_factorial_counterexample(0.4, 60);
  REQUIRE(ce.has_value());
  CHECK(ce->second == ce->first);
}

TEST_CASE("monotonicity in a") {
  const MonotonicityCheck c = check_monotonicity_a(3, 4, 5, 1.0, {0.0, 0.5, 1.0, 2.0, 5.0});
  CHECK(c.decreasing);
  CHECK(c.ratio_bound_holds);
  CHECK(check_monotonicity_a(3, 4, 12, 1.0, {0.0, 0.5, 1.0, 2.0, 5.0}).decreasing);
  const MonotonicityCheck single = check_monotonicity_a(3, 4, 5, 1.0, {2.5});
  CHECK(single.decreasing);
}

TEST_CASE("u_j deviation") {
  const SeriesCheck exact = check_uj_deviation(100, 10, 0.1, 8.0, 100, 1.0, 1.0, 1.0, 10);
  CHECK(exact.precondition_met);
  CHECK(exact.holds());
  CHECK(exact.cases == 10);
  const SeriesCheck off = check_uj_deviation(100, 10, 0.1, 8.0, 108, 1.0, 1.0, 1.0, 10);
  CHECK(off.precondition_met);
  CHECK(off.holds());
  const auto edge = static_cast<std::int64_t>(std::floor(std::sqrt(100.0 * std::log(100.0))));
  const SeriesCheck boundary = check_uj_deviation(100, 10, 0.1, 8.0, 100 + edge, 1.0, 1.0, 1.0, 10);
  CHECK(boundary.precondition_met);
  CHECK(boundary.holds());
  const SeriesCheck far = check_uj_deviation(100, 10, 0.1, 8.0, 100 + edge + 1, 1.0, 1.0, 1.0, 10);
  CHECK_FALSE(far.precondition_met);
}

TEST_CASE("u-tilde bounds") {
  const UtildeCheck c = check_utilde_bounds(100, 5, 0.2, 8.0, 1.0, 1.0, 1.0, 5);
  CHECK(c.magnitude.precondition_met);
  CHECK(c.magnitude.holds());
  CHECK(c.upper.holds());
  CHECK_FALSE(c.below.precondition_met);
  CHECK_FALSE(c.above.precondition_met);
  for (std::int64_t k : {100, 10000}) {
    for (std::int64_t n : {5, 12, 25, 40}) {
      for (std::int64_t m : {5, 12, 25, 40}) {
        for (double p : {0.05, 0.2}) {
          const double lambda = std::max(1.0, double(n) * p);
          const UtildeCheck u = check_utilde_bounds(k, n, p, double(m), 1.0, 1.0, lambda, std::min<std::int64_t>(m, 8));
          CHECK(u.magnitude.holds());
          CHECK(u.upper.holds());
          CHECK(u.above.holds());
          CHECK(u.below.holds());
        }
      }
    }
  }
}

TEST_CASE("variance of falling factorials") {
  const BoundCheck one = check_variance_bound(20, 0.3, 1);
  CHECK(std::exp(one.lhs) == doctest::Approx(20 * 0.3 * 0.7).epsilon(1e-12));
  CHECK(one.holds);
  for (std::int64_t n : {5, 20, 60}) {
    for (double p : {0.05, 0.3}) {
      for (std::int64_t j = 1; j <= 5; ++j) CHECK(check_variance_bound(n, p, j).holds);
    }
  }
  CHECK(check_variance_bound(30, 0.9, 30).holds);
}

TEST_CASE("sample maximum tail bounds") {
  const MaxTailCheck big_l = check_max_tail_bounds(6, 0.3, 50, 10.0);
  REQUIRE(big_l.lower_tail.has_value());
  CHECK(big_l.lower_tail->lhs == doctest::Approx(50.0 * std::log1p(-std::pow(0.3, 6))).epsilon(1e-12));
  const MaxTailCheck c = check_max_tail_bounds(30, 0.05, 10000, 7.0);
  REQUIRE(c.lower_tail.has_value());
  CHECK(c.lower_tail->holds);
  const MaxTailCheck guard = check_max_tail_bounds(30, 0.3, 100, 40.0);
  CHECK_FALSE(guard.upper_tail.has_value());
  CHECK_FALSE(guard.upper_tail_unmet.empty());
}

TEST_CASE("default sweep finds no violations") {
  const auto reports = run_default_sweep();
  CHECK(reports.size() == 10);
  for (const auto& r : reports) {
    INFO(r.lemma);
    CHECK(r.cases_run > 0);
    CHECK(r.violations.empty());
  }
}
