#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "bnest/error.hpp"
#include "bnest/fluoro.hpp"
#include "bnest/montecarlo.hpp"

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

std::string error_text(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

const BetaPrior kOriginPrior{2.0, 2.0 / 0.0339 - 2.0};

}  // namespace

TEST_CASE("on-probability from traces") {
  CHECK(estimate_p_on({BlinkTrace{std::vector<bool>(10, true)}}) == 1.0);
  CHECK(estimate_p_on({BlinkTrace{{true, false, false, false}}, BlinkTrace{{false, true, false, false}}}) == 0.25);
  CHECK(throws_kind(ErrorKind::InvalidArgument, [] { estimate_p_on({}); }));
  CHECK(throws_kind(ErrorKind::InvalidArgument, [] { estimate_p_on({BlinkTrace{}}); }));
  const auto traces = synth_blink_traces(BlinkSynthConfig{});
  CHECK(traces.size() == 500);
  CHECK(std::abs(estimate_p_on(traces) - 0.0339) <= 0.004);
}

TEST_CASE("per-frame estimation delegates to the estimator") {
  CountTable t;
  t.frames = {10, 20};
  t.counts = {{0, 1}, {0, 3}, {0, 0}, {0, 2}};
  const EstimateResult zero = estimate_nt(t, 10, EstimatorSpec::sample_max());
  CHECK(zero.value == 0.0);
  CHECK(zero.diagnostics.degenerate);
  const auto spec = EstimatorSpec::scale(0.5, kOriginPrior);
  CHECK(estimate_nt(t, 20, spec).value == estimate(Sample({1, 3, 0, 2}), spec).value);
  CountTable shuffled = t;
  std::reverse(shuffled.counts.begin(), shuffled.counts.end());
  CHECK(estimate_nt(shuffled, 20, spec).value == estimate_nt(t, 20, spec).value);
  CHECK(throws_kind(ErrorKind::InvalidArgument, [&] { estimate_nt(t, 30, spec); }));
}

TEST_CASE("per-frame estimate lies in the calibrated band") {
  ScenarioConfig cal;
  cal.n0 = 12;
  cal.k = 94;
  cal.p0 = 0.0339;
  cal.reps = 1000;
  cal.seed = 77;
  cal.estimators = {EstimatorSpec::scale(0.5, kOriginPrior)};
  const ScenarioReport r = run_scenario(cal);
  const auto& vals = r.values[0];
  const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / double(vals.size());
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / double(vals.size() - 1));

  SynthConfig cfg;
  cfg.n_anchor = 12;
  cfg.b = 0.0;
  cfg.frames = {0};
  cfg.seed = 5;
  const SynthDataset d = synth_dataset(cfg);
  const double est = estimate_nt(d.table, 0, cal.estimators[0]).value;
  CHECK(std::abs(est - mean) <= 3.0 * sd);
}

TEST_CASE("noiseless bleaching data is recovered") {
  std::vector<FramePoint> pts;
  for (std::int64_t t = 1500; t <= 9000; t += 1500) pts.push_back({t, 16.0 * std::pow(1.0 - 1.5e-4, double(t))});
  const BleachFit fit = fit_bleach(pts);
  CHECK(std::abs(fit.n0_hat - 16.0) / 16.0 <= 1e-10);
  CHECK(std::abs(fit.b_hat - 1.5e-4) / 1.5e-4 <= 1e-10);
  CHECK(fit.n0_rounded == 16);
  CHECK(fit.frames_used == 6);
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  for (double r : fit.residuals) CHECK(std::abs(r) <= 1e-12);
}

TEST_CASE("two-point fit equals the closed form") {
  const BleachFit fit = fit_bleach({{1000, 12.0}, {4000, 7.0}});
  const double slope = (std::log(7.0) - std::log(12.0)) / 3000.0;
  CHECK(fit.b_hat == doctest::Approx(1.0 - std::exp(slope)).epsilon(1e-12));
  CHECK(fit.n0_hat == doctest::Approx(12.0 * std::exp(-1000.0 * slope)).epsilon(1e-12));
}

TEST_CASE("shifting frames changes only the intercept") {
  const std::vector<FramePoint> a{{1500, 11.0}, {3000, 9.5}, {4500, 8.1}, {6000, 7.7}};
  std::vector<FramePoint> b = a;
  for (auto& p : b) p.t += 700;
  CHECK(fit_bleach(a).b_hat == doctest::Approx(fit_bleach(b).b_hat).epsilon(1e-12));
}

TEST_CASE("fit edge cases") {
  const BleachFit up = fit_bleach({{100, 5.0}, {200, 6.0}});
  CHECK(up.b_hat == 0.0);
  CHECK(up.b_at_boundary);
  const BleachFit dropped = fit_bleach({{100, 5.0}, {200, 0.0}, {300, 4.0}});
  CHECK(dropped.frames_used == 2);
  CHECK(dropped.warnings.size() == 1);
  CHECK(throws_kind(ErrorKind::InvalidArgument, [] { fit_bleach({{100, 5.0}, {200, -1.0}}); }));
  CHECK(throws_kind(ErrorKind::InvalidArgument, [] { fit_bleach({{100, 5.0}}); }));
}

TEST_CASE("synthetic data without bleaching") {
  SynthConfig cfg;
  cfg.b = 0.0;
  cfg.n_rois = 4000;
  const SynthDataset d = synth_dataset(cfg);
  for (const auto& row : d.alive) {
    for (auto a : row) CHECK(a == 15);
  }
  const auto col = d.table.column(1500);
  const double mean = std::accumulate(col.begin(), col.end(), 0.0) / double(col.size());
  const double se = std::sqrt(15 * 0.0339 * (1 - 0.0339) / double(col.size()));
  CHECK(std::abs(mean - 15 * 0.0339) <= 4.0 * se);

  cfg.p_on = 1.0;
  cfg.occupancy_p = 0.6;
  cfg.n_rois = 50;
  const SynthDataset e = synth_dataset(cfg);
  for (std::size_t r = 0; r < e.table.counts.size(); ++r) {
    for (auto c : e.table.counts[r]) CHECK(c == e.initial[r]);
  }
}

TEST_CASE("synthetic survival follows (1 - b)^t") {
  for (bool exact : {false, true}) {
    SynthConfig cfg;
    cfg.n_rois = 10000;
    cfg.n_anchor = 15;
    cfg.b = 1.5e-4;
    cfg.frame_exact = exact;
    cfg.frames = exact ? std::vector<std::int64_t>{500, 1000, 2000} : cfg.frames;
    const SynthDataset d = synth_dataset(cfg);
    const double total = 15.0 * double(cfg.n_rois);
    for (std::size_t f = 0; f < cfg.frames.size(); ++f) {
      double alive = 0.0;
      for (const auto& row : d.alive) alive += double(row[f]);
      const double q = std::pow(1.0 - cfg.b, double(cfg.frames[f]));
      const double se = std::sqrt(q * (1.0 - q) / total);
      CHECK(std::abs(alive / total - q) <= 3.0 * se);
    }
    for (const auto& row : d.alive) CHECK(std::is_sorted(row.rbegin(), row.rend()));
  }
}

TEST_CASE("count table parsing") {
  std::istringstream ok("roi,t_10,t_20\nA,1,0\nB,3,2\n");
  const CountTable t = read_count_table(ok);
  CHECK(t.frames == std::vector<std::int64_t>{10, 20});
  CHECK(t.roi_ids == std::vector<std::string>{"A", "B"});
  CHECK(t.counts == std::vector<std::vector<std::int64_t>>{{1, 0}, {3, 2}});

  std::ostringstream out;
  write_count_table(out, t);
  std::istringstream back(out.str());
  const CountTable t2 = read_count_table(back);
  CHECK(t2.frames == t.frames);
  CHECK(t2.roi_ids == t.roi_ids);
  CHECK(t2.counts == t.counts);

  const std::string neg = error_text([] {
    std::istringstream in("roi,t_10,t_20\nA,1,0\nB,3,-2\n");
    read_count_table(in);
  });
  CHECK(neg.find("line 3") != std::string::npos);
  CHECK(neg.find("t_20") != std::string::npos);
  CHECK(neg.find("negative") != std::string::npos);

  CHECK(throws_kind(ErrorKind::Parse, [] {
    std::istringstream in("roi,t_10,t_10\nA,1,0\n");
    read_count_table(in);
  }));
  CHECK(throws_kind(ErrorKind::Parse, [] {
    std::istringstream in("roi,t_10,t_20\nA,1\n");
    read_count_table(in);
  }));
  CHECK(throws_kind(ErrorKind::Parse, [] {
    std::istringstream in("roi,t_10,t_20\nA,1,x\n");
    read_count_table(in);
  }));
  CHECK(throws_kind(ErrorKind::InvalidArgument, [] {
    std::istringstream in("roi,t_20,t_10\nA,1,2\n");
    read_count_table(in);
  }));
  CHECK(throws_kind(ErrorKind::Io, [] { ingest_counts("/nonexistent/table.csv"); }));
}

TEST_CASE("frame lists") {
  CHECK(parse_frame_list("1500:9000:1500") == std::vector<std::int64_t>{1500, 3000, 4500, 6000, 7500, 9000});
  CHECK(parse_frame_list("5, 10,20") == std::vector<std::int64_t>{5, 10, 20});
  CHECK(throws_kind(ErrorKind::Parse, [] { parse_frame_list("1:2"); }));
  CHECK(throws_kind(ErrorKind::Parse, [] { parse_frame_list("1:10:0"); }));
}

TEST_CASE("pipeline output does not depend on thread count") {
  SynthConfig cfg;
  cfg.seed = 4;
  const SynthDataset d = synth_dataset(cfg);
  const auto spec = EstimatorSpec::scale(0.5, kOriginPrior);
  BleachPipelineOptions one;
  one.threads = 1;
  BleachPipelineOptions many;
  many.threads = 6;
  const BleachFit a = run_bleach_pipeline(d.table, spec, one);
  const BleachFit b = run_bleach_pipeline(d.table, spec, many);
  CHECK(a.n0_hat == b.n0_hat);
  CHECK(a.b_hat == b.b_hat);
}
