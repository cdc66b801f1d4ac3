#include "bnest/fluoro.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "bnest/error.hpp"
#include "bnest/parallel.hpp"
#include "bnest/rng.hpp"

namespace bnest {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<std::int64_t> parse_int(const std::string& s) {
  std::int64_t v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
  return v;
}

}  // namespace

void CountTable::validate() const {
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (frames[f] < 0) throw Error(ErrorKind::InvalidArgument, "frame indices must be non-negative");
    if (f > 0 && frames[f] <= frames[f - 1]) {
      throw Error(ErrorKind::InvalidArgument, "frame indices must be strictly increasing");
    }
  }
  if (!roi_ids.empty() && roi_ids.size() != counts.size()) {
    throw Error(ErrorKind::InvalidArgument, "roi_ids and counts differ in length");
  }
  for (std::size_t r = 0; r < counts.size(); ++r) {
    if (counts[r].size() != frames.size()) {
      throw Error(ErrorKind::InvalidArgument, "row " + std::to_string(r + 1) + " has " +
                                                  std::to_string(counts[r].size()) + " counts, expected " +
                                                  std::to_string(frames.size()));
    }
    for (std::size_t f = 0; f < frames.size(); ++f) {
      if (counts[r][f] < 0) {
        throw Error(ErrorKind::InvalidArgument, "negative count at row " + std::to_string(r + 1) + ", column t_" +
                                                    std::to_string(frames[f]));
      }
    }
  }
}

std::size_t CountTable::frame_index(std::int64_t frame) const {
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (frames[f] == frame) return f;
  }
  throw Error(ErrorKind::InvalidArgument, "frame " + std::to_string(frame) + " is not in the table");
}

std::vector<std::int64_t> CountTable::column(std::int64_t frame) const {
  const std::size_t f = frame_index(frame);
  std::vector<std::int64_t> out;
  out.reserve(counts.size());
  for (const auto& row : counts) out.push_back(row[f]);
  return out;
}

CountTable read_count_table(std::istream& is) {
  CountTable t;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (!have_header) {
      if (cells.empty() || cells[0] != "roi") {
        throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": header must start with 'roi'");
      }
      std::set<std::int64_t> seen;
      for (std::size_t c = 1; c < cells.size(); ++c) {
        const auto& name = cells[c];
        const auto frame = name.rfind("t_", 0) == 0 ? parse_int(name.substr(2)) : std::nullopt;
        if (!frame) {
          throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": bad frame column '" + name + "'");
        }
        if (!seen.insert(*frame).second) {
          throw Error(ErrorKind::Parse, "duplicate frame column '" + name + "'");
        }
        t.frames.push_back(*frame);
      }
      have_header = true;
      continue;
    }
    if (cells.size() != t.frames.size() + 1) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(t.frames.size() + 1) + " fields, found " +
                                        std::to_string(cells.size()));
    }
    std::vector<std::int64_t> row;
    row.reserve(t.frames.size());
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const auto v = parse_int(cells[c]);
      const std::string where = "line " + std::to_string(line_no) + " (roi " + cells[0] + "), column t_" +
                                std::to_string(t.frames[c - 1]);
      if (!v) throw Error(ErrorKind::Parse, where + ": '" + cells[c] + "' is not an integer");
      if (*v < 0) throw Error(ErrorKind::Parse, where + ": negative count " + cells[c]);
      row.push_back(*v);
    }
    t.roi_ids.push_back(cells[0]);
    t.counts.push_back(std::move(row));
  }
  if (!have_header) throw Error(ErrorKind::Parse, "count table is empty");
  t.validate();
  return t;
}

CountTable ingest_counts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  return read_count_table(in);
}

void write_count_table(std::ostream& os, const CountTable& table) {
  table.validate();
  os << "roi";
  for (auto f : table.frames) os << ",t_" << f;
  os << '\n';
  for (std::size_t r = 0; r < table.counts.size(); ++r) {
    os << (table.roi_ids.empty() ? std::to_string(r + 1) : table.roi_ids[r]);
    for (auto v : table.counts[r]) os << ',' << v;
    os << '\n';
  }
}

double estimate_p_on(const std::vector<BlinkTrace>& traces) {
  if (traces.empty()) throw Error(ErrorKind::InvalidArgument, "no blink traces");
  double sum = 0.0;
  for (const auto& tr : traces) {
    if (tr.on.empty()) throw Error(ErrorKind::InvalidArgument, "empty blink trace");
    std::size_t on = 0;
    for (bool b : tr.on) on += b ? 1 : 0;
    sum += static_cast<double>(on) / static_cast<double>(tr.on.size());
  }
  return sum / static_cast<double>(traces.size());
}

std::vector<BlinkTrace> synth_blink_traces(const BlinkSynthConfig& cfg) {
  if (cfg.n_traces < 1) throw Error(ErrorKind::InvalidArgument, "n_traces must be positive");
  if (!(cfg.p_on > 0.0 && cfg.p_on < 1.0)) throw Error(ErrorKind::InvalidArgument, "p_on must lie in (0, 1)");
  if (!(cfg.off_rate > 0.0 && cfg.off_rate <= 1.0)) throw Error(ErrorKind::InvalidArgument, "off_rate must lie in (0, 1]");
  if (!(cfg.bleach > 0.0 && cfg.bleach < 1.0)) throw Error(ErrorKind::InvalidArgument, "bleach must lie in (0, 1)");
  // Stationary on-probability on_rate / (on_rate + off_rate) = p_on.
  const double on_rate = cfg.off_rate * cfg.p_on / (1.0 - cfg.p_on);
  if (on_rate > 1.0) throw Error(ErrorKind::InvalidArgument, "p_on too large for the given off_rate");
  std::vector<BlinkTrace> traces(static_cast<std::size_t>(cfg.n_traces));
  for (std::size_t i = 0; i < traces.size(); ++i) {
    Rng rng = Rng::substream(cfg.seed, {stream::kTrace, i});
    bool on = rng.uniform() < cfg.p_on;
    auto& tr = traces[i].on;
    do {
      tr.push_back(on);
      on = on ? rng.uniform() >= cfg.off_rate : rng.uniform() < on_rate;
    } while (rng.uniform() >= cfg.bleach);
  }
  return traces;
}

EstimateResult estimate_nt(const CountTable& table, std::int64_t frame, const EstimatorSpec& spec) {
  return estimate(Sample(table.column(frame)), spec);
}

BleachFit fit_bleach(const std::vector<FramePoint>& per_frame, const std::vector<double>& weights) {
  if (!weights.empty() && weights.size() != per_frame.size()) {
    throw Error(ErrorKind::InvalidArgument, "weights must match the number of frames");
  }
  BleachFit fit;
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> ws;
  for (std::size_t i = 0; i < per_frame.size(); ++i) {
    const auto& pt = per_frame[i];
    const double w = weights.empty() ? 1.0 : weights[i];
    if (!(pt.n_t_hat > 0.0) || !std::isfinite(pt.n_t_hat)) {
      fit.warnings.push_back("frame " + std::to_string(pt.t) + " dropped: non-positive estimate");
      continue;
    }
    if (!(w > 0.0) || !std::isfinite(w)) {
      fit.warnings.push_back("frame " + std::to_string(pt.t) + " dropped: non-positive weight");
      continue;
    }
    fit.per_frame.push_back(pt);
    xs.push_back(static_cast<double>(pt.t));
    ys.push_back(std::log(pt.n_t_hat));
    ws.push_back(w);
  }
  if (xs.size() < 2) throw Error(ErrorKind::InvalidArgument, "need at least two frames with positive estimates");

  double sw = 0.0;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sw += ws[i];
    mx += ws[i] * xs[i];
    my += ws[i] * ys[i];
  }
  mx /= sw;
  my /= sw;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += ws[i] * dx * dx;
    sxy += ws[i] * dx * dy;
    syy += ws[i] * dy * dy;
  }
  if (sxx == 0.0) throw Error(ErrorKind::InvalidArgument, "all frames share the same index");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;

  fit.frames_used = static_cast<std::int64_t>(xs.size());
  fit.n0_hat = std::exp(intercept);
  fit.n0_rounded = round_half_up(fit.n0_hat);
  if (slope >= 0.0) {
    fit.b_hat = 0.0;
    fit.b_at_boundary = true;
    fit.warnings.push_back("non-negative slope: no bleaching detected, B clamped to 0");
  } else {
    fit.b_hat = -std::expm1(slope);
  }
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (intercept + slope * xs[i]);
    fit.residuals.push_back(r);
    ss_res += ws[i] * r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

BleachFit run_bleach_pipeline(const CountTable& table, const EstimatorSpec& spec, const BleachPipelineOptions& opts) {
  table.validate();
  const std::size_t nf = table.frames.size();
  std::vector<double> values(nf, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> errors(nf);
  parallel_for(nf, opts.threads, [&](std::size_t f) {
    try {
      values[f] = estimate_nt(table, table.frames[f], spec).value;
    } catch (const Error& e) {
      errors[f] = e.what();
    }
  });
  std::vector<FramePoint> points;
  std::vector<double> weights;
  std::vector<std::string> warnings;
  for (std::size_t f = 0; f < nf; ++f) {
    if (!errors[f].empty()) {
      warnings.push_back("frame " + std::to_string(table.frames[f]) + " dropped: " + errors[f]);
      continue;
    }
    points.push_back({table.frames[f], values[f]});
    weights.push_back(opts.weighted ? std::max(values[f], 0.0) : 1.0);
  }
  BleachFit fit = fit_bleach(points, weights);
  warnings.insert(warnings.end(), fit.warnings.begin(), fit.warnings.end());
  fit.warnings = std::move(warnings);
  return fit;
}

void SynthConfig::validate() const {
  if (n_anchor < 0) throw Error(ErrorKind::InvalidArgument, "n_anchor must be non-negative");
  if (!(occupancy_p >= 0.0 && occupancy_p <= 1.0)) throw Error(ErrorKind::InvalidArgument, "occupancy_p must lie in [0, 1]");
  if (n_rois < 1) throw Error(ErrorKind::InvalidArgument, "n_rois must be positive");
  if (!(b >= 0.0 && b <= 1.0)) throw Error(ErrorKind::InvalidArgument, "b must lie in [0, 1]");
  if (!(p_on >= 0.0 && p_on <= 1.0)) throw Error(ErrorKind::InvalidArgument, "p_on must lie in [0, 1]");
  if (frames.empty()) throw Error(ErrorKind::InvalidArgument, "at least one frame is required");
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (frames[f] < 0 || (f > 0 && frames[f] <= frames[f - 1])) {
      throw Error(ErrorKind::InvalidArgument, "frames must be non-negative and strictly increasing");
    }
  }
}

SynthDataset synth_dataset(const SynthConfig& cfg) {
  cfg.validate();
  SynthDataset out;
  const std::size_t nr = static_cast<std::size_t>(cfg.n_rois);
  const std::size_t nf = cfg.frames.size();
  out.table.frames = cfg.frames;
  out.table.counts.assign(nr, std::vector<std::int64_t>(nf, 0));
  out.alive.assign(nr, std::vector<std::int64_t>(nf, 0));
  out.initial.assign(nr, 0);
  const double log_survive = std::log1p(-cfg.b);
  for (std::size_t r = 0; r < nr; ++r) {
    out.table.roi_ids.push_back(std::to_string(r + 1));
    Rng pop = Rng::substream(cfg.seed, {stream::kPopulation, r});
    Rng bleach = Rng::substream(cfg.seed, {stream::kBleach, r});
    Rng obs = Rng::substream(cfg.seed, {stream::kSample, r});
    std::int64_t alive = binomial_sampler(cfg.n_anchor, cfg.occupancy_p, pop);
    out.initial[r] = alive;
    std::int64_t prev = 0;
    for (std::size_t f = 0; f < nf; ++f) {
      const std::int64_t dt = cfg.frames[f] - prev;
      if (cfg.frame_exact) {
        for (std::int64_t s = 0; s < dt && alive > 0; ++s) alive -= binomial_sampler(alive, cfg.b, bleach);
      } else if (dt > 0) {
        alive = binomial_sampler(alive, std::exp(static_cast<double>(dt) * log_survive), bleach);
      }
      prev = cfg.frames[f];
      out.alive[r][f] = alive;
      out.table.counts[r][f] = binomial_sampler(alive, cfg.p_on, obs);
    }
  }
  return out;
}

std::vector<std::int64_t> parse_frame_list(const std::string& text) {
  std::vector<std::int64_t> out;
  const std::string s = trim(text);
  if (s.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream ss(s);
    while (std::getline(ss, part, ':')) parts.push_back(trim(part));
    if (parts.size() != 3) throw Error(ErrorKind::Parse, "frame range must be start:stop:step");
    const auto start = parse_int(parts[0]);
    const auto stop = parse_int(parts[1]);
    const auto step = parse_int(parts[2]);
    if (!start || !stop || !step || *step <= 0) throw Error(ErrorKind::Parse, "bad frame range '" + text + "'");
    for (std::int64_t f = *start; f <= *stop; f += *step) out.push_back(f);
  } else {
    for (const auto& cell : split_csv_line(s)) {
      const auto v = parse_int(cell);
      if (!v) throw Error(ErrorKind::Parse, "bad frame index '" + cell + "'");
      out.push_back(*v);
    }
  }
  if (out.empty()) throw Error(ErrorKind::Parse, "empty frame list");
  return out;
}

}  // namespace bnest
