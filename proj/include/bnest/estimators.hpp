#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "bnest/core.hpp"

namespace bnest {

struct ScaleKind {
  double gamma = 1.0;
};
struct DgeKind {
  std::int64_t n0_max = 500;
};
struct RafteryKind {};
struct MapKind {
  std::int64_t t_k = 1000;
};
struct SampleMaxKind {};

using EstimatorKind = std::variant<ScaleKind, DgeKind, RafteryKind, MapKind, SampleMaxKind>;

/// An estimator together with its Beta prior and truncation policy.
///
/// Raftery is SE(1) with a = b = 1; constructing it through `raftery()` or
/// `normalized()` pins the prior so both spellings run the same computation.
struct EstimatorSpec {
  EstimatorKind kind = ScaleKind{};
  BetaPrior beta{};
  TruncationPolicy trunc{};

  static EstimatorSpec scale(double gamma, BetaPrior beta, TruncationPolicy trunc = {});
  static EstimatorSpec dge(std::int64_t n0_max, BetaPrior beta);
  static EstimatorSpec raftery(TruncationPolicy trunc = {});
  static EstimatorSpec map(std::int64_t t_k, BetaPrior beta);
  static EstimatorSpec sample_max();

  /// Copy with the Raftery aliasing applied.
  EstimatorSpec normalized() const;
  /// Short label such as "SE(0.5)", "DGE(500)", "RE", "MAP(100)", "MAX".
  std::string label() const;
  bool uses_beta() const { return !std::holds_alternative<SampleMaxKind>(kind); }
};

struct EstimateDiagnostics {
  std::int64_t support_start = 0;
  /// Last n summed term by term (the mode search bound for DGE/MAP).
  std::int64_t truncated_at = 0;
  /// Estimated relative mass left out of both sums.
  double tail_bound = 0.0;
  /// Share of the E[1/N^2] sum contributed by the continuous tail integral.
  double tail_integral_share = 0.0;
  bool degenerate = false;
  bool at_support_boundary = false;
  bool nonintegrable_override = false;
};

struct EstimateResult {
  double value = 0.0;
  std::int64_t rounded = 0;
  std::optional<PosteriorN> posterior;
  EstimateDiagnostics diagnostics;
};

/// Nearest integer, ties rounded up.
std::int64_t round_half_up(double x);

/// SE(gamma): E[1/N | X] / E[1/N^2 | X] under Pi_N(n) ∝ n^-gamma.
EstimateResult scale_estimate(const Sample& sample, const BetaPrior& beta, double gamma,
                              const TruncationPolicy& trunc = {});
/// The same ratio under an arbitrary prior on N.
EstimateResult scale_estimate(const Sample& sample, const BetaPrior& beta, const NPriorSpec& nprior,
                              const TruncationPolicy& trunc = {});

/// Posterior mode under a uniform prior on {1..n0_max}; ties go to the smallest n.
EstimateResult dge_estimate(const Sample& sample, const BetaPrior& beta, std::int64_t n0_max);
/// Maximizer of the beta-binomial likelihood over {M_k..t_k}.
EstimateResult map_estimate(const Sample& sample, const BetaPrior& beta, std::int64_t t_k);
EstimateResult sample_max(const Sample& sample);

EstimateResult estimate(const Sample& sample, const EstimatorSpec& spec);

struct PosteriorSummary {
  double mean = 0.0;
  std::int64_t median = 0;
  std::int64_t mode = 0;
  double level = 0.0;
  std::int64_t ci_low = 0;
  std::int64_t ci_high = 0;
  double ci_mass = 0.0;
};

/// Mean, median, mode (smallest n on ties) and the shortest contiguous
/// interval holding at least `level` of the mass.
PosteriorSummary posterior_summaries(const PosteriorN& post, double level = 0.95);

}  // namespace bnest
