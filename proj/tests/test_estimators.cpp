#include <doctest.h>

#include <cmath>

#include "bnest/error.hpp"
#include "bnest/estimators.hpp"
#include "bnest/montecarlo.hpp"
#include "oracles.hpp"

using namespace bnest;

namespace {

bool throws_kind(ErrorKind kind, const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind() == kind;
  }
  return false;
}

}  // namespace

TEST_CASE("round half up") {
  CHECK(round_half_up(2.5) == 3);
  CHECK(round_half_up(2.49) == 2);
  CHECK(round_half_up(15.4) == 15);
  CHECK(round_half_up(5.6) == 6);
}

TEST_CASE("scale estimate under a point-mass prior returns that point") {
  const Sample s({3, 1, 6, 2});
  const EstimateResult r = scale_estimate(s, {2.0, 5.0}, NPriorSpec{UniformRange{6}});
  CHECK(r.value == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(r.rounded == 6);
}

TEST_CASE("scale estimate for counts 1,2 matches brute-force sums") {
  long double s1 = 0.0L;
  long double s2 = 0.0L;
  for (std::int64_t n = 1'000'000; n >= 2; --n) {
    const long double x = static_cast<long double>(n);
    const long double w = 3.0L / (4.0L * x * (4.0L * x * x - 1.0L));
    s1 += w / x;
    s2 += w / (x * x);
  }
  const double want = static_cast<double>(s1 / s2);
  const EstimateResult r = scale_estimate(Sample({1, 2}), {1.0, 1.0}, 2.0, TruncationPolicy{1e-10});
  CHECK(std::abs(r.value - want) / want <= 1e-8);
}

TEST_CASE("scale estimate matches long-double sums on a larger sample") {
  const std::vector<std::int64_t> xs{0, 1, 0, 2, 1, 0, 0, 1, 3, 0, 2, 1};
  for (double gamma : {0.5, 1.0, 2.0}) {
    const auto w = oracle::brute_weights(xs, 2.0L, 20.0L, gamma, 3, 400000);
    long double s1 = 0.0L;
    long double s2 = 0.0L;
    for (std::size_t i = w.size(); i-- > 0;) {
      const long double n = static_cast<long double>(i + 3);
      s1 += w[i] / n;
      s2 += w[i] / (n * n);
    }
    const double want = static_cast<double>(s1 / s2);
    const EstimateResult r = scale_estimate(Sample(xs), {2.0, 20.0}, gamma);
    CHECK(std::abs(r.value - want) / want <= 1e-8);
    CHECK(r.value >= static_cast<double>(r.diagnostics.support_start));
    CHECK(r.value <= static_cast<double>(r.diagnostics.truncated_at));
  }
}

TEST_CASE("scaling the N prior leaves the scale estimate unchanged") {
  const Sample s({1, 0, 2, 0, 1, 1});
  for (double gamma : {0.5, 1.0, 2.0}) {
    NPriorSpec base{PowerLaw{gamma}};
    NPriorSpec scaled{PowerLaw{gamma}};
    scaled.log_scale = 17.25;
    const double v1 = scale_estimate(s, {2.0, 10.0}, base).value;
    const double v2 = scale_estimate(s, {2.0, 10.0}, scaled).value;
    CHECK(std::abs(v1 - v2) / v1 <= 1e-10);
  }
}

TEST_CASE("DGE errors when the maximum exceeds the prior bound") {
  CHECK(throws_kind(ErrorKind::PriorSupportTooSmall, [] { dge_estimate(Sample({7, 2}), {1.0, 1.0}, 5); }));
}

TEST_CASE("DGE and MAP equal the exhaustive exact-likelihood argmax") {
  const std::vector<std::int64_t> xs{1, 2};
  const EstimateResult r = dge_estimate(Sample(xs), {1.0, 1.0}, 50);
  CHECK(r.rounded == oracle::exact_argmax(xs, 1, 1, 2, 50));
  CHECK(r.value == static_cast<double>(r.rounded));

  const std::vector<std::int64_t> ys{0, 0, 1};
  CHECK(map_estimate(Sample(ys), {1.0, 1.0}, 100).rounded == oracle::exact_argmax(ys, 1, 1, 1, 100));

  const std::vector<std::vector<std::int64_t>> samples{{3, 1, 4, 1, 5}, {2, 2, 2}, {0, 1, 0, 0, 2, 1}, {6, 0, 1}};
  for (const auto& zs : samples) {
    for (std::int64_t a = 1; a <= 3; ++a) {
      for (std::int64_t b = 1; b <= 4; b += 3) {
        const Sample s(zs);
        const std::int64_t lo = std::max<std::int64_t>(s.max(), 1);
        const std::int64_t want = oracle::exact_argmax(zs, a, b, lo, 60);
        CHECK(dge_estimate(s, {double(a), double(b)}, 60).rounded == want);
        CHECK(map_estimate(s, {double(a), double(b)}, 60).rounded == want);
      }
    }
  }
}

TEST_CASE("MAP mode is locally optimal") {
  const Sample s({0, 2, 1, 1, 0, 3});
  const BetaPrior beta{2.0, 8.0};
  const std::int64_t m = map_estimate(s, beta, 200).rounded;
  const double here = log_beta_binomial_likelihood(s, m, beta);
  CHECK(here >= log_beta_binomial_likelihood(s, m + 1, beta));
  if (m > s.max()) CHECK(here >= log_beta_binomial_likelihood(s, m - 1, beta));
}

TEST_CASE("DGE mode never decreases as the bound grows") {
  const Sample s({0, 1, 0, 0, 1, 0, 2});
  std::int64_t previous = 0;
  for (std::int64_t n0 : {2, 3, 5, 8, 13, 21, 50, 500}) {
    const std::int64_t m = dge_estimate(s, {1.0, 1.0}, n0).rounded;
    CHECK(m >= previous);
    previous = m;
  }
}

TEST_CASE("sample maximum") {
  CHECK(sample_max(Sample({3, 1, 4, 1, 5})).value == 5.0);
  CHECK(sample_max(Sample({7})).rounded == 7);
  const EstimateResult z = sample_max(Sample({0, 0}));
  CHECK(z.value == 0.0);
  CHECK(z.diagnostics.degenerate);
}

TEST_CASE("Raftery is bit-identical to SE(1) with a = b = 1") {
  const Sample s({2, 0, 1, 3, 1, 0, 2});
  const EstimateResult re = estimate(s, EstimatorSpec::raftery());
  const EstimateResult se = estimate(s, EstimatorSpec::scale(1.0, {1.0, 1.0}));
  CHECK(re.value == se.value);
  CHECK(EstimatorSpec::raftery().label() == "RE");
  EstimatorSpec spec = EstimatorSpec::raftery();
  spec.beta = {5.0, 7.0};
  CHECK(spec.normalized().beta.a == 1.0);
  CHECK(spec.normalized().beta.b == 1.0);
}

TEST_CASE("estimator labels") {
  CHECK(EstimatorSpec::scale(0.5, {}).label() == "SE(0.5)");
  CHECK(EstimatorSpec::dge(500, {}).label() == "DGE(500)");
  CHECK(EstimatorSpec::sample_max().label() == "MAX");
}

TEST_CASE("posterior summaries") {
  PosteriorN point;
  point.support_start = 5;
  point.probs = {1.0};
  point.log_weights = {0.0};
  point.truncated_at = 5;
  const PosteriorSummary p = posterior_summaries(point, 0.9);
  CHECK(p.mean == 5.0);
  CHECK(p.median == 5);
  CHECK(p.mode == 5);
  CHECK(p.ci_low == 5);
  CHECK(p.ci_high == 5);

  PosteriorN two;
  two.support_start = 4;
  two.probs = {0.5, 0.0, 0.5};
  two.log_weights = {0.0, -INFINITY, 0.0};
  two.truncated_at = 6;
  const PosteriorSummary t = posterior_summaries(two, 0.5);
  CHECK(t.mean == doctest::Approx(5.0));
  CHECK(t.mode == 4);
}

TEST_CASE("posterior summaries for counts 1,2 match the summation oracle") {
  long double total = 0.0L;
  long double first = 0.0L;
  for (std::int64_t n = 1'000'000; n >= 2; --n) {
    const long double x = static_cast<long double>(n);
    const long double w = 3.0L / (4.0L * x * (4.0L * x * x - 1.0L));
    total += w;
    first += x * w;
  }
  const PosteriorN post = posterior_n(Sample({1, 2}), {1.0, 1.0}, NPriorSpec{PowerLaw{2.0}}, TruncationPolicy{1e-10});
  const PosteriorSummary s = posterior_summaries(post, 0.95);
  CHECK(s.mode == 2);
  CHECK(s.median == 2);
  // The mean converges slowly (weights ~ n^-3), so compare the truncated sums.
  CHECK(std::abs(s.mean - static_cast<double>(first / total)) / s.mean <= 1e-4);
  CHECK(s.ci_mass >= 0.95);
}

TEST_CASE("resolve_estimators applies p_hat except to Raftery") {
  const auto specs = resolve_estimators({EstimatorSpec::scale(1.0, {2.0, 1.0}), EstimatorSpec::raftery()}, 0.0339);
  CHECK(specs[0].beta.b == doctest::Approx(2.0 / 0.0339 - 2.0).epsilon(1e-15));
  CHECK(specs[1].beta.b == 1.0);
}
