#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bnest/contraction.hpp"
#include "bnest/error.hpp"
#include "bnest/special.hpp"
#include "oracles.hpp"

using namespace bnest;

TEST_CASE("sequence values and class membership") {
  SequenceSpec spec;
  // 2 (1000 / log 1000)^(1/6) = 4.58, rounded to 5.
  CHECK(spec.n_at(1000) == 5);
  CHECK(spec.n_at(10000) == 6);
  CHECK(spec.n_at(100000) == 9);
  CHECK(spec.p_at(1000) == doctest::Approx(0.2));
  CHECK_FALSE(in_parameter_class(5, 0.2, 1000, 2.0));
  CHECK(in_parameter_class(6, 1.0 / 6.0, 10000, 2.0));
  CHECK_FALSE(in_parameter_class(6, 0.5, 10000, 2.0));

  SequenceSpec bad;
  bad.mu = 20.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = SequenceSpec{};
  bad.k_grid = {1000, 100};
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("sample all equal to n concentrates the posterior") {
  SequenceSpec spec;
  spec.k_grid = {100};
  spec.reps = 5;
  spec.mu = static_cast<double>(spec.n_at(100));
  const ContractionCurve c = contraction_curve(spec, {1.0, 1.0}, NPriorSpec{PowerLaw{2.0}});
  REQUIRE(c.points.size() == 1);
  CHECK(c.points[0].p_k == 1.0);
  CHECK(c.points[0].mean_miss_mass < 0.5);
}

TEST_CASE("a prior supported only at n_k gives zero miss mass") {
  SequenceSpec spec;
  spec.k_grid = {200};
  spec.reps = 8;
  TablePrior table;
  table.weights = {{spec.n_at(200), 1.0}};
  const ContractionCurve c = contraction_curve(spec, {1.0, 1.0}, NPriorSpec{table});
  CHECK(c.points[0].mean_miss_mass == 0.0);
  CHECK(c.points[0].failures == 0);
}

TEST_CASE("contraction curve is deterministic across thread counts") {
  SequenceSpec spec;
  spec.k_grid = {300, 3000};
  spec.reps = 12;
  spec.threads = 1;
  std::ostringstream a;
  write_contraction_csv(a, contraction_curve(spec, {1.0, 1.0}, NPriorSpec{PowerLaw{2.0}}));
  spec.threads = 4;
  std::ostringstream b;
  write_contraction_csv(b, contraction_curve(spec, {1.0, 1.0}, NPriorSpec{PowerLaw{2.0}}));
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("k,n_k,p_k,miss_mass,stderr,failures,in_class\n", 0) == 0);
}

TEST_CASE("prior growth condition") {
  CHECK(check_prior_condition(NPriorSpec{PowerLaw{2.0}}, 1.0, 0.1, 1, 100).holds);
  TablePrior gap;
  for (std::int64_t n = 1; n <= 20; ++n) {
    if (n != 7) gap.weights[n] = 1.0;
  }
  const PriorConditionReport r = check_prior_condition(NPriorSpec{gap}, 1.0, 0.1, 1, 20);
  CHECK_FALSE(r.holds);
  REQUIRE(r.first_violator.has_value());
  CHECK(*r.first_violator == 7);
  CHECK(check_prior_condition(NPriorSpec{PoissonPrior{5.0}}, 1.0, 0.01, 1, 50).holds);
}

TEST_CASE("truncation point bounds") {
  const TkBounds b = tk_bounds(0.0, 8, 1.0, 1.0, 1.0);
  CHECK(b.t_min == doctest::Approx(std::pow(8.0 / std::log(8.0), 1.0 / 6.0)).epsilon(1e-14));
  CHECK(b.t_min == doctest::Approx(1.25177).epsilon(1e-5));
  CHECK(b.log_t_max == doctest::Approx(2.0).epsilon(1e-14));
  const TkBounds g1 = tk_bounds(1.0, 1000, 2.0, 0.5, 0.25);
  REQUIRE(g1.log_log_t_max.has_value());
  CHECK(*g1.log_log_t_max == doctest::Approx(0.5 * 10.0 - std::log(0.25)).epsilon(1e-14));
  const TkBounds half = tk_bounds(0.5, 27, 1.0, 1.0, 1.0);
  CHECK(half.log_t_max == doctest::Approx(6.0).epsilon(1e-14));
  double previous = 0.0;
  for (std::int64_t k = 3; k <= 100000; k *= 3) {
    const double t = tk_bounds(0.0, k, 1.0, 1.0, 1.0).t_min;
    CHECK(t > previous);
    previous = t;
  }
  CHECK_THROWS_AS(tk_bounds(1.5, 8, 1.0, 1.0, 1.0), Error);
}

TEST_CASE("sample maximum probability") {
  CHECK(max_equals_n_prob(7, 1.0, 3) == 1.0);
  CHECK(max_equals_n_prob(10, 0.1, 3635) == doctest::Approx(-std::expm1(3635.0 * std::log1p(-1e-10))).epsilon(1e-12));
  CHECK(max_equals_n_prob(10, 0.1, 3635) == doctest::Approx(3.635e-7).epsilon(1e-6));
  CHECK(max_equals_n_prob(4, 0.3, 100) < max_equals_n_prob(4, 0.3, 200));
  CHECK(max_equals_n_prob(4, 0.3, 100) < max_equals_n_prob(4, 0.4, 100));

  const MaxProbeResult r = max_consistency_probe(3, 1.0 / 3.0, 300, 20000, 5);
  CHECK(std::abs(r.mc_prob - r.exact_prob) <= 4.0 * std::sqrt(r.exact_prob * (1 - r.exact_prob) / 20000.0));
  CHECK(r.regime == MaxRegime::Consistent);
  CHECK(max_consistency_probe(6, 1.0 / 6.0, 1000, 100, 1).regime == MaxRegime::Inconsistent);
  CHECK(max_consistency_probe(3, 0.5, 27, 100, 1).regime == MaxRegime::Critical);
}

TEST_CASE("majority-tail sample sizes against the exact tail oracle") {
  for (std::int64_t n : {10, 20}) {
    for (bool strict : {true, false}) {
      const MaxThreshold t = max_half_threshold(n, 0.1, strict);
      const std::int64_t start = strict ? n / 2 + 1 : (n + 1) / 2;
      long double tail = 0.0L;
      for (std::int64_t x = n; x >= start; --x) tail += oracle::binomial_pmf(x, n, 0.1L);
      CHECK(t.tail_prob == doctest::Approx(static_cast<double>(tail)).epsilon(1e-12));
      const double k = t.k_min;
      CHECK(-std::expm1(k * std::log1p(-t.tail_prob)) >= 0.5);
      CHECK(-std::expm1((k - 1.0) * std::log1p(-t.tail_prob)) < 0.5);
    }
  }
  CHECK(max_half_threshold(10, 0.1, true).k_min == 4719);
  CHECK(max_half_threshold(20, 0.1, true).k_min == 977833);
  CHECK(max_half_threshold(10, 0.1, false).k_min == 424);
  CHECK(max_half_threshold(20, 0.1, false).k_min == 96932);
  // Only the strict reading exceeds the quoted 900,000.
  CHECK(max_half_threshold(20, 0.1, true).k_min > 900000);
}
