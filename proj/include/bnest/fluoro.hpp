#pragma once

// Fluorophore counting with bleaching: on-probability from blink traces,
// per-frame population estimates, the log-linear bleaching fit
// n_t = n_0 (1 - B)^t and matched synthetic data.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bnest/estimators.hpp"

namespace bnest {

/// Per-ROI counts at a set of frames; counts[roi][f] is the count at frames[f].
struct CountTable {
  std::vector<std::int64_t> frames;
  std::vector<std::string> roi_ids;
  std::vector<std::vector<std::int64_t>> counts;

  /// Throws InvalidArgument on ragged rows, negative counts or non-increasing frames.
  void validate() const;
  std::size_t n_rois() const { return counts.size(); }
  std::size_t frame_index(std::int64_t frame) const;
  std::vector<std::int64_t> column(std::int64_t frame) const;
};

/// CSV with header `roi,t_<f1>,t_<f2>,...` and one integer row per ROI.
CountTable read_count_table(std::istream& is);
CountTable ingest_counts(const std::string& path);
void write_count_table(std::ostream& os, const CountTable& table);

/// On/off state per frame up to the last frame before bleaching.
struct BlinkTrace {
  std::vector<bool> on;
};

/// Mean over traces of (#on frames / trace length).
double estimate_p_on(const std::vector<BlinkTrace>& traces);

struct BlinkSynthConfig {
  std::int64_t n_traces = 500;
  /// Stationary on-probability of the two-state chain.
  double p_on = 0.0339;
  /// Per-frame on -> off switching probability.
  double off_rate = 0.5;
  /// Per-frame bleaching probability; a trace ends at the frame before bleaching.
  double bleach = 1e-3;
  std::uint64_t seed = 1;
};

/// Two-state Markov traces started from the stationary distribution.
std::vector<BlinkTrace> synth_blink_traces(const BlinkSynthConfig& cfg);

/// Applies `spec` to the column of counts at `frame`.
EstimateResult estimate_nt(const CountTable& table, std::int64_t frame, const EstimatorSpec& spec);

struct FramePoint {
  std::int64_t t = 0;
  double n_t_hat = 0.0;
};

struct BleachFit {
  double n0_hat = 0.0;
  std::int64_t n0_rounded = 0;
  double b_hat = 0.0;
  /// True when the fitted slope was non-negative and b_hat was clamped to 0.
  bool b_at_boundary = false;
  std::vector<FramePoint> per_frame;
  std::vector<double> residuals;
  double r_squared = 0.0;
  std::int64_t frames_used = 0;
  std::vector<std::string> warnings;
};

/// Least squares of log n_t_hat on t. Points with non-positive or non-finite
/// estimates are dropped with a warning. `weights`, when non-empty, must have
/// one entry per point.
BleachFit fit_bleach(const std::vector<FramePoint>& per_frame, const std::vector<double>& weights = {});

struct BleachPipelineOptions {
  /// Weight each frame by its estimate (log n_hat has variance roughly 1/n).
  bool weighted = false;
  unsigned threads = 0;
};

/// Estimates every frame of the table and fits the bleaching model. Frames
/// whose estimator fails are dropped with a warning.
BleachFit run_bleach_pipeline(const CountTable& table, const EstimatorSpec& spec,
                              const BleachPipelineOptions& opts = {});

struct SynthConfig {
  std::int64_t n_anchor = 15;
  /// n_i(0) ~ Bin(n_anchor, occupancy_p) per ROI.
  double occupancy_p = 1.0;
  std::int64_t n_rois = 94;
  double b = 1.5e-4;
  double p_on = 0.0339;
  std::vector<std::int64_t> frames{1500, 3000, 4500, 6000, 7500, 9000};
  std::uint64_t seed = 1;
  /// Simulate bleaching frame by frame instead of one binomial thinning per gap.
  bool frame_exact = false;

  void validate() const;
};

struct SynthDataset {
  CountTable table;
  /// alive[roi][f]: surviving fluorophores at frames[f].
  std::vector<std::vector<std::int64_t>> alive;
  std::vector<std::int64_t> initial;
};

SynthDataset synth_dataset(const SynthConfig& cfg);

/// Parses "start:stop:step" (inclusive stop) or a comma-separated list.
std::vector<std::int64_t> parse_frame_list(const std::string& text);

}  // namespace bnest
