#include "bnest/montecarlo.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "bnest/error.hpp"
#include "bnest/parallel.hpp"
#include "bnest/rng.hpp"

namespace bnest {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void validate_estimators(const std::vector<EstimatorSpec>& specs) {
  if (specs.empty()) throw Error(ErrorKind::InvalidArgument, "at least one estimator is required");
  for (const auto& s : specs) {
    if (s.uses_beta()) s.normalized().beta.validate();
    s.trunc.validate();
  }
}

double safe_estimate(const Sample& sample, const EstimatorSpec& spec) {
  try {
    return estimate(sample, spec).value;
  } catch (const Error&) {
    return kNaN;
  }
}

}  // namespace

void ScenarioConfig::validate() const {
  if (n0 < 1) throw Error(ErrorKind::InvalidArgument, "n0 must be positive");
  if (!(p0 > 0.0 && p0 <= 1.0)) throw Error(ErrorKind::InvalidArgument, "p0 must lie in (0, 1]");
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be positive");
  if (reps < 1) throw Error(ErrorKind::InvalidArgument, "reps must be positive");
  if (p_hat && !(*p_hat > 0.0 && *p_hat <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "p_hat must lie in (0, 1]");
  }
  validate_estimators(resolve_estimators(estimators, p_hat));
}

const EstimatorStats& ScenarioReport::row(const std::string& label) const {
  for (const auto& r : rows) {
    if (r.label == label) return r;
  }
  throw Error(ErrorKind::InvalidArgument, "no estimator labelled " + label);
}

std::vector<EstimatorSpec> resolve_estimators(const std::vector<EstimatorSpec>& specs,
                                              std::optional<double> p_hat) {
  std::vector<EstimatorSpec> out;
  out.reserve(specs.size());
  for (const auto& s : specs) {
    EstimatorSpec r = s.normalized();
    if (p_hat && r.uses_beta() && !std::holds_alternative<RafteryKind>(r.kind)) {
      r.beta.b = b_from_p_hat(r.beta.a, *p_hat);
    }
    out.push_back(r);
  }
  return out;
}

std::vector<std::int64_t> draw_iid_sample(std::int64_t n0, double p0, std::int64_t k,
                                          std::uint64_t seed, std::int64_t rep) {
  Rng rng = Rng::substream(seed, {stream::kSample, static_cast<std::uint64_t>(rep)});
  std::vector<std::int64_t> xs(static_cast<std::size_t>(k));
  for (auto& x : xs) x = binomial_sampler(n0, p0, rng);
  return xs;
}

EstimatorStats summarize_estimates(const std::string& label, const std::vector<double>& values,
                                   double n0) {
  EstimatorStats st;
  st.label = label;
  double sum = 0.0;
  double sum_sq = 0.0;
  double sum_err = 0.0;
  double sum_err_sq = 0.0;
  for (double v : values) {
    if (std::isnan(v)) {
      ++st.failures;
      continue;
    }
    ++st.successes;
    const double rel = v / n0 - 1.0;
    const double err = rel * rel;
    sum += v;
    sum_sq += v * v;
    sum_err += err;
    sum_err_sq += err * err;
  }
  if (st.successes == 0) {
    st.rmse = st.bias = st.mean = kNaN;
    st.mc_stderr_rmse = st.mc_stderr_bias = kNaN;
    return st;
  }
  const double m = static_cast<double>(st.successes);
  st.mean = sum / m;
  st.bias = st.mean - n0;
  st.rmse = sum_err / m;
  if (st.successes > 1) {
    const double var_v = std::max(0.0, (sum_sq - m * st.mean * st.mean) / (m - 1.0));
    const double var_e = std::max(0.0, (sum_err_sq - m * st.rmse * st.rmse) / (m - 1.0));
    st.mc_stderr_bias = std::sqrt(var_v / m);
    st.mc_stderr_rmse = std::sqrt(var_e / m);
  }
  return st;
}

ScenarioReport run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto specs = resolve_estimators(cfg.estimators, cfg.p_hat);
  const std::size_t reps = static_cast<std::size_t>(cfg.reps);
  ScenarioReport report;
  report.values.assign(specs.size(), std::vector<double>(reps, kNaN));

  parallel_for(reps, cfg.threads, [&](std::size_t r) {
    const Sample sample(draw_iid_sample(cfg.n0, cfg.p0, cfg.k, cfg.seed, static_cast<std::int64_t>(r)));
    for (std::size_t e = 0; e < specs.size(); ++e) report.values[e][r] = safe_estimate(sample, specs[e]);
  });

  for (std::size_t e = 0; e < specs.size(); ++e) {
    report.rows.push_back(summarize_estimates(specs[e].label(), report.values[e], static_cast<double>(cfg.n0)));
  }
  return report;
}

void RobustnessConfig::validate() const {
  if (n_tilde < 1) throw Error(ErrorKind::InvalidArgument, "n_tilde must be positive");
  if (!(p_tilde > 0.0 && p_tilde <= 1.0)) throw Error(ErrorKind::InvalidArgument, "p_tilde must lie in (0, 1]");
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be positive");
  if (reps < 1) throw Error(ErrorKind::InvalidArgument, "reps must be positive");
  if (!(beta_p_a > 0.0 && beta_p_b > 0.0)) throw Error(ErrorKind::InvalidArgument, "Beta(a, b) for p0 needs a, b > 0");
  if (n0() < 1) throw Error(ErrorKind::InvalidArgument, "n_tilde * p_tilde rounds to zero");
  validate_estimators(resolve_estimators(estimators, std::nullopt));
}

std::int64_t RobustnessConfig::n0() const {
  return round_half_up(static_cast<double>(n_tilde) * p_tilde);
}

const RobustnessRow& RobustnessReport::row(const std::string& label) const {
  for (const auto& r : rows) {
    if (r.label == label) return r;
  }
  throw Error(ErrorKind::InvalidArgument, "no estimator labelled " + label);
}

RobustnessReport run_robustness(const RobustnessConfig& cfg) {
  cfg.validate();
  const auto specs = resolve_estimators(cfg.estimators, std::nullopt);
  const std::size_t reps = static_cast<std::size_t>(cfg.reps);
  const std::int64_t n0 = cfg.n0();
  std::vector<std::vector<double>> varying(specs.size(), std::vector<double>(reps, kNaN));
  std::vector<std::vector<double>> iid(specs.size(), std::vector<double>(reps, kNaN));

  parallel_for(reps, cfg.threads, [&](std::size_t r) {
    const auto rep = static_cast<std::uint64_t>(r);
    Rng p_rng = Rng::substream(cfg.seed, {stream::kSuccess, rep});
    const double p0 = beta_variate(cfg.beta_p_a, cfg.beta_p_b, p_rng);
    Rng n_rng = Rng::substream(cfg.seed, {stream::kPopulation, rep});
    std::vector<std::int64_t> xs_var(static_cast<std::size_t>(cfg.k));
    std::vector<std::int64_t> xs_iid(static_cast<std::size_t>(cfg.k));
    for (std::size_t i = 0; i < xs_var.size(); ++i) {
      const std::int64_t n_i = binomial_sampler(cfg.n_tilde, cfg.p_tilde, n_rng);
      Rng x_rng = Rng::substream(cfg.seed, {stream::kSample, rep, static_cast<std::uint64_t>(i)});
      Rng x_rng_iid = x_rng;
      xs_var[i] = binomial_sampler(n_i, p0, x_rng);
      xs_iid[i] = binomial_sampler(n0, p0, x_rng_iid);
    }
    const Sample s_var(std::move(xs_var));
    const Sample s_iid(std::move(xs_iid));
    for (std::size_t e = 0; e < specs.size(); ++e) {
      varying[e][r] = safe_estimate(s_var, specs[e]);
      iid[e][r] = safe_estimate(s_iid, specs[e]);
    }
  });

  RobustnessReport report;
  report.n0 = n0;
  for (std::size_t e = 0; e < specs.size(); ++e) {
    const auto sv = summarize_estimates(specs[e].label(), varying[e], static_cast<double>(n0));
    const auto si = summarize_estimates(specs[e].label(), iid[e], static_cast<double>(n0));
    RobustnessRow row;
    row.label = specs[e].label();
    row.rmse_varying = sv.rmse;
    row.rmse_iid = si.rmse;
    row.ratio = sv.rmse == si.rmse ? 1.0 : sv.rmse / si.rmse;
    row.failures_varying = sv.failures;
    row.failures_iid = si.failures;
    report.rows.push_back(row);
  }
  return report;
}

void write_scenario_csv(std::ostream& os, const ScenarioReport& report) {
  os << "estimator,rmse,bias,mean,mc_stderr_rmse,mc_stderr_bias,successes,failures\n";
  os << std::setprecision(17);
  for (const auto& r : report.rows) {
    os << r.label << ',' << r.rmse << ',' << r.bias << ',' << r.mean << ',' << r.mc_stderr_rmse << ','
       << r.mc_stderr_bias << ',' << r.successes << ',' << r.failures << '\n';
  }
}

void write_scenario_table(std::ostream& os, const ScenarioReport& report) {
  os << std::left << std::setw(12) << "estimator" << std::right << std::setw(10) << "RMSE" << std::setw(10)
     << "(se)" << std::setw(10) << "bias" << std::setw(10) << "(se)" << std::setw(8) << "fail" << '\n';
  os << std::fixed;
  for (const auto& r : report.rows) {
    os << std::left << std::setw(12) << r.label << std::right << std::setprecision(4) << std::setw(10) << r.rmse
       << std::setw(10) << r.mc_stderr_rmse << std::setprecision(3) << std::setw(10) << r.bias << std::setw(10)
       << r.mc_stderr_bias << std::setw(8) << r.failures << '\n';
  }
  os.unsetf(std::ios::floatfield);
}

void write_robustness_csv(std::ostream& os, const RobustnessReport& report) {
  os << "estimator,n0,rmse_varying,rmse_iid,ratio,failures_varying,failures_iid\n";
  os << std::setprecision(17);
  for (const auto& r : report.rows) {
    os << r.label << ',' << report.n0 << ',' << r.rmse_varying << ',' << r.rmse_iid << ',' << r.ratio << ','
       << r.failures_varying << ',' << r.failures_iid << '\n';
  }
}

}  // namespace bnest
