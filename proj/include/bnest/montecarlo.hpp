#pragma once

// Seeded Monte Carlo evaluation of the estimators: RMSE / bias scenario runs
// and the varying-n robustness comparison.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bnest/estimators.hpp"

namespace bnest {

struct ScenarioConfig {
  std::int64_t n0 = 15;
  double p0 = 0.0339;
  std::int64_t k = 94;
  std::int64_t reps = 1000;
  std::vector<EstimatorSpec> estimators;
  /// When set, every Beta prior (except Raftery's) gets b = a / p_hat - a.
  std::optional<double> p_hat;
  std::uint64_t seed = 1;
  unsigned threads = 0;

  void validate() const;
};

struct EstimatorStats {
  std::string label;
  double rmse = 0.0;  // mean of (n_hat / n0 - 1)^2
  double bias = 0.0;  // mean(n_hat) - n0
  double mean = 0.0;
  double mc_stderr_rmse = 0.0;
  double mc_stderr_bias = 0.0;
  std::int64_t successes = 0;
  std::int64_t failures = 0;
};

struct ScenarioReport {
  std::vector<EstimatorStats> rows;
  /// values[e][r]: estimate of estimator e on replication r (NaN on failure).
  std::vector<std::vector<double>> values;

  const EstimatorStats& row(const std::string& label) const;
};

/// Estimators with the scenario's p_hat applied and Raftery aliasing resolved.
std::vector<EstimatorSpec> resolve_estimators(const std::vector<EstimatorSpec>& specs,
                                              std::optional<double> p_hat);

/// Draws k i.i.d. Bin(n0, p0) counts for replication `rep`.
std::vector<std::int64_t> draw_iid_sample(std::int64_t n0, double p0, std::int64_t k,
                                          std::uint64_t seed, std::int64_t rep);

ScenarioReport run_scenario(const ScenarioConfig& cfg);

/// Reduces per-replication estimates (NaN = failure) against the true n0.
EstimatorStats summarize_estimates(const std::string& label, const std::vector<double>& values,
                                   double n0);

struct RobustnessConfig {
  std::int64_t n_tilde = 8;
  double p_tilde = 0.7;
  std::int64_t k = 100;
  std::int64_t reps = 1000;
  double beta_p_a = 2.0;
  double beta_p_b = 38.0;
  std::vector<EstimatorSpec> estimators;
  std::uint64_t seed = 1;
  unsigned threads = 0;

  void validate() const;
  /// Constant population used by the i.i.d. arm: nearest integer to n_tilde * p_tilde.
  std::int64_t n0() const;
};

struct RobustnessRow {
  std::string label;
  double rmse_varying = 0.0;
  double rmse_iid = 0.0;
  double ratio = 0.0;
  std::int64_t failures_varying = 0;
  std::int64_t failures_iid = 0;
};

struct RobustnessReport {
  std::int64_t n0 = 0;
  std::vector<RobustnessRow> rows;

  const RobustnessRow& row(const std::string& label) const;
};

/// Per replication: p0 ~ Beta(beta_p_a, beta_p_b); varying arm X_i ~ Bin(n_i, p0)
/// with n_i ~ Bin(n_tilde, p_tilde); i.i.d. arm X_i ~ Bin(n0, p0). Observation i
/// of both arms is drawn from the same substream (common random numbers).
RobustnessReport run_robustness(const RobustnessConfig& cfg);

void write_scenario_csv(std::ostream& os, const ScenarioReport& report);
void write_scenario_table(std::ostream& os, const ScenarioReport& report);
void write_robustness_csv(std::ostream& os, const RobustnessReport& report);

}  // namespace bnest
