#include "cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "bnest/contraction.hpp"
#include "bnest/core.hpp"
#include "bnest/error.hpp"
#include "bnest/fluoro.hpp"
#include "bnest/io.hpp"
#include "bnest/montecarlo.hpp"
#include "bnest/parallel.hpp"
#include "bnest/theory_checks.hpp"

#ifndef BNEST_VERSION
#define BNEST_VERSION "0.0.0"
#endif

namespace bnest::cli {

namespace {

// ---- typed access to config values -------------------------------------

double get_num(const json& j, const std::string& key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) throw UsageError("config field '" + key + "' must be a number");
  return it->get<double>();
}

std::optional<double> get_opt_num(const json& j, const std::string& key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return get_num(j, key);
}

std::int64_t get_int(const json& j, const std::string& key) {
  const auto it = j.find(key);
  if (it != j.end() && it->is_number_integer()) return it->get<std::int64_t>();
  if (it != j.end() && it->is_number_float()) {
    const double v = it->get<double>();
    if (std::isfinite(v) && std::floor(v) == v && std::fabs(v) < 9.0e18) return static_cast<std::int64_t>(v);
  }
  throw UsageError("config field '" + key + "' must be an integer");
}

std::uint64_t get_seed(const json& j, const std::string& key) {
  const auto it = j.find(key);
  if (it != j.end() && it->is_number_unsigned()) return it->get<std::uint64_t>();
  const std::int64_t v = get_int(j, key);
  if (v < 0) throw UsageError("config field '" + key + "' must be non-negative");
  return static_cast<std::uint64_t>(v);
}

bool get_bool(const json& j, const std::string& key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_boolean()) throw UsageError("config field '" + key + "' must be true or false");
  return it->get<bool>();
}

std::string get_str(const json& j, const std::string& key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw UsageError("config field '" + key + "' must be a string");
  return it->get<std::string>();
}

std::vector<std::int64_t> get_int_list(const json& j, const std::string& key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_array()) throw UsageError("config field '" + key + "' must be an array of integers");
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < it->size(); ++i) {
    json one{{"v", (*it)[i]}};
    try {
      out.push_back(get_int(one, "v"));
    } catch (const UsageError&) {
      throw UsageError("config field '" + key + "' must be an array of integers");
    }
  }
  return out;
}

double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw UsageError(what + ": '" + text + "' is not a number");
  }
  return v;
}

std::int64_t parse_integer(const std::string& text, const std::string& what) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw UsageError(what + ": '" + text + "' is not an integer");
  }
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(text);
  while (std::getline(ss, cur, sep)) {
    const auto first = cur.find_first_not_of(" \t");
    const auto last = cur.find_last_not_of(" \t");
    if (first != std::string::npos) out.push_back(cur.substr(first, last - first + 1));
  }
  return out;
}

// ---- estimators -----------------------------------------------------------

const char* type_name(const EstimatorKind& kind) {
  if (std::holds_alternative<ScaleKind>(kind)) return "se";
  if (std::holds_alternative<DgeKind>(kind)) return "dge";
  if (std::holds_alternative<RafteryKind>(kind)) return "re";
  if (std::holds_alternative<MapKind>(kind)) return "map";
  return "max";
}

/// Fills prior and truncation fields an estimator entry leaves out.
json complete_estimator(json entry, const json& shared) {
  if (entry.is_string()) entry = parse_estimator_token(entry.get<std::string>());
  if (!entry.is_object()) throw UsageError("estimator entries must be objects or strings like \"se:0.5\"");
  for (const char* key : {"a", "b", "tail_tol", "n_cap", "allow_nonintegrable"}) {
    if (!entry.contains(key) && shared.contains(key)) entry[key] = shared[key];
  }
  try {
    return to_json(estimator_from_json(entry));
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

json estimator_list_from_flag(const std::string& text) {
  json out = json::array();
  for (const auto& token : split(text, ',')) out.push_back(parse_estimator_token(token));
  if (out.empty()) throw UsageError("--estimators needs at least one entry");
  return out;
}

/// Accepts an array of entries or one comma-separated token string.
json complete_estimator_list(const json& cfg) {
  const json& raw = cfg.at("estimators");
  const json entries = raw.is_string() ? estimator_list_from_flag(raw.get<std::string>()) : raw;
  if (!entries.is_array() || entries.empty()) throw UsageError("estimators must be a non-empty list");
  json list = json::array();
  for (const auto& e : entries) list.push_back(complete_estimator(e, cfg));
  return list;
}

std::string estimator_list_to_flag(const json& list) {
  std::string out;
  for (const auto& e : list) {
    if (!out.empty()) out += ',';
    out += e.value("type", std::string{"?"});
    for (const char* key : {"gamma", "n0_max", "t_k"}) {
      if (e.contains(key)) out += ":" + e[key].dump();
    }
  }
  return out;
}

/// Beta prior for the flat estimator keys, with p_hat overriding b.
json resolve_flat_prior(json cfg) {
  const double a = get_num(cfg, "a");
  if (const auto p_hat = get_opt_num(cfg, "p_hat")) {
    try {
      cfg["b"] = b_from_p_hat(a, *p_hat);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  if (cfg["b"].is_null()) throw UsageError("config field 'b' must be set (or give p_hat)");
  get_num(cfg, "b");
  return cfg;
}

json flat_estimator_entry(const json& cfg) {
  const std::string type = get_str(cfg, "estimator");
  json entry{{"type", type}};
  if (type == "se") entry["gamma"] = cfg["gamma"];
  if (type == "dge") entry["n0_max"] = cfg["n0_max"];
  if (type == "map") entry["t_k"] = cfg["t_k"];
  return complete_estimator(entry, cfg);
}

// ---- output helpers -------------------------------------------------------

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json diagnostics_json(const EstimateDiagnostics& d) {
  return json{{"support_start", d.support_start},
              {"truncated_at", d.truncated_at},
              {"tail_bound", d.tail_bound},
              {"tail_integral_share", d.tail_integral_share},
              {"degenerate", d.degenerate},
              {"at_support_boundary", d.at_support_boundary},
              {"nonintegrable_override", d.nonintegrable_override}};
}

json summary_json(const PosteriorN& post, double level) {
  const PosteriorSummary s = posterior_summaries(post, level);
  return json{{"mean", s.mean},
              {"median", s.median},
              {"mode", s.mode},
              {"level", s.level},
              {"ci_low", s.ci_low},
              {"ci_high", s.ci_high},
              {"ci_mass", s.ci_mass},
              {"truncated_at", post.truncated_at},
              {"tail_bound", post.tail_bound},
              {"normalizable", post.normalizable}};
}

Sample load_sample(const json& cfg) {
  const std::string path = get_str(cfg, "counts");
  const std::string values = get_str(cfg, "values");
  return Sample(path.empty() ? parse_counts(values) : read_counts_file(path));
}

void require_one_source(const json& cfg) {
  const bool has_path = !get_str(cfg, "counts").empty();
  const bool has_values = !get_str(cfg, "values").empty();
  if (has_path == has_values) throw UsageError("give exactly one of --counts FILE or --values LIST");
}

NPriorSpec n_prior_from(const json& cfg) {
  const std::string family = get_str(cfg, "prior");
  NPriorSpec spec;
  if (family == "powerlaw") {
    spec.family = PowerLaw{get_num(cfg, "gamma")};
  } else if (family == "truncated") {
    spec.family = TruncatedPowerLaw{get_num(cfg, "gamma"), get_int(cfg, "t_k")};
  } else if (family == "uniform") {
    spec.family = UniformRange{get_int(cfg, "n0_max")};
  } else if (family == "poisson") {
    spec.family = PoissonPrior{get_num(cfg, "mu")};
  } else {
    throw UsageError("prior must be powerlaw, truncated, uniform or poisson");
  }
  return spec;
}

TruncationPolicy trunc_from(const json& cfg) {
  TruncationPolicy t;
  t.tail_tol = get_num(cfg, "tail_tol");
  t.n_cap = get_int(cfg, "n_cap");
  if (cfg.contains("allow_nonintegrable")) t.allow_nonintegrable = get_bool(cfg, "allow_nonintegrable");
  return t;
}

std::vector<EstimatorSpec> estimators_from(const json& cfg) {
  std::vector<EstimatorSpec> out;
  for (const auto& e : cfg.at("estimators")) out.push_back(estimator_from_json(e));
  return out;
}

CountTable select_frames(const CountTable& table, const std::vector<std::int64_t>& frames) {
  CountTable sub;
  sub.roi_ids = table.roi_ids;
  sub.counts.assign(table.counts.size(), {});
  for (auto f : frames) {
    const std::size_t idx = table.frame_index(f);
    sub.frames.push_back(f);
    for (std::size_t r = 0; r < table.counts.size(); ++r) sub.counts[r].push_back(table.counts[r][idx]);
  }
  return sub;
}

std::vector<BlinkTrace> read_traces(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::vector<BlinkTrace> traces;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    BlinkTrace tr;
    for (char c : line) {
      if (c == '1') {
        tr.on.push_back(true);
      } else if (c == '0') {
        tr.on.push_back(false);
      } else if (c != ',' && c != ' ' && c != '\t' && c != '\r') {
        throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": unexpected character '" +
                                          std::string(1, c) + "' in blink trace");
      }
    }
    if (!tr.on.empty()) traces.push_back(std::move(tr));
  }
  return traces;
}

// ---- subcommand table ------------------------------------------------------

struct Command {
  std::string name;
  std::string description;
  std::function<json()> defaults;
  std::map<std::string, std::string> help;
  std::function<json(json)> resolve;
  std::function<Output(const json&, unsigned, std::ostream&)> run;
};

json estimator_flat_defaults(const std::string& type, double gamma, double a, json b, json p_hat) {
  return json{{"estimator", type},  {"gamma", gamma},   {"n0_max", 500},      {"t_k", 1000},
              {"a", a},             {"b", std::move(b)}, {"p_hat", std::move(p_hat)},
              {"tail_tol", 1e-12},  {"n_cap", 1000000}, {"allow_nonintegrable", false}};
}

const std::map<std::string, std::string>& common_help() {
  static const std::map<std::string, std::string> h{
      {"counts", "path of a one-column count file"},
      {"values", "inline counts, e.g. \"1,0,2\""},
      {"estimator", "se | dge | re | map | max"},
      {"estimators", "comma list of se:GAMMA, dge:N0MAX, re, map:TK, max"},
      {"gamma", "prior exponent for n^-gamma"},
      {"n0_max", "DGE uniform prior upper bound"},
      {"t_k", "MAP search bound / truncated power-law bound"},
      {"a", "Beta prior a for p"},
      {"b", "Beta prior b for p (null: set from p_hat)"},
      {"p_hat", "when set, b = a / p_hat - a"},
      {"tail_tol", "relative tail mass allowed beyond truncation"},
      {"n_cap", "hard cap on the posterior support"},
      {"allow_nonintegrable", "accept a + gamma <= 1"},
      {"seed", "master seed"},
      {"reps", "Monte Carlo replications"},
      {"k", "sample size"},
      {"level", "posterior interval mass"},
      {"prior", "N prior: powerlaw | truncated | uniform | poisson"},
      {"mu", "Poisson prior mean"},
      {"format", "csv | table"},
      {"frames", "frame list, start:stop:step or comma list"},
  };
  return h;
}

std::vector<Command> build_commands() {
  std::vector<Command> cmds;

  cmds.push_back({"estimate", "Estimate n from one sample; prints JSON",
                  [] {
                    json d{{"counts", ""}, {"values", ""}};
                    d.update(estimator_flat_defaults("se", 1.0, 1.0, 1.0, nullptr));
                    d["level"] = 0.95;
                    return d;
                  },
                  {},
                  [](json cfg) {
                    require_one_source(cfg);
                    cfg = resolve_flat_prior(std::move(cfg));
                    cfg["spec"] = flat_estimator_entry(cfg);
                    get_num(cfg, "level");
                    return cfg;
                  },
                  [](const json& cfg, unsigned, std::ostream&) {
                    const Sample sample = load_sample(cfg);
                    const EstimatorSpec spec = estimator_from_json(cfg["spec"]);
                    const EstimateResult r = estimate(sample, spec);
                    json out{{"estimator", spec.label()},
                             {"spec", cfg["spec"]},
                             {"k", sample.k()},
                             {"sum", sample.sum()},
                             {"max", sample.max()},
                             {"value", r.value},
                             {"rounded", r.rounded},
                             {"diagnostics", diagnostics_json(r.diagnostics)}};
                    if (r.posterior) out["posterior"] = summary_json(*r.posterior, get_num(cfg, "level"));
                    return Output{dump(out)};
                  }});

  cmds.push_back({"posterior", "Posterior over N for one sample; prints CSV n,prob,log_weight",
                  [] {
                    return json{{"counts", ""},       {"values", ""},   {"prior", "powerlaw"},
                                {"gamma", 1.0},       {"t_k", 1000},    {"n0_max", 500},
                                {"mu", 10.0},         {"a", 1.0},       {"b", 1.0},
                                {"p_hat", nullptr},   {"tail_tol", 1e-12}, {"n_cap", 1000000},
                                {"allow_nonintegrable", false}, {"level", 0.95}};
                  },
                  {},
                  [](json cfg) {
                    require_one_source(cfg);
                    cfg = resolve_flat_prior(std::move(cfg));
                    try {
                      n_prior_from(cfg).validate();
                      trunc_from(cfg).validate();
                      BetaPrior{get_num(cfg, "a"), get_num(cfg, "b")}.validate();
                    } catch (const Error& e) {
                      throw UsageError(e.what());
                    }
                    get_num(cfg, "level");
                    return cfg;
                  },
                  [](const json& cfg, unsigned, std::ostream& log) {
                    const Sample sample = load_sample(cfg);
                    const PosteriorN post = posterior_n(sample, BetaPrior{get_num(cfg, "a"), get_num(cfg, "b")},
                                                        n_prior_from(cfg), trunc_from(cfg));
                    log << summary_json(post, get_num(cfg, "level")).dump() << '\n';
                    std::ostringstream os;
                    write_posterior_csv(os, post);
                    return Output{os.str()};
                  }});

  cmds.push_back({"simulate", "Monte Carlo RMSE / bias of estimators; prints CSV",
                  [] {
                    return json{{"n0", 15},
                                {"p0", 0.0339},
                                {"k", 94},
                                {"reps", 1000},
                                {"seed", 1},
                                {"estimators", estimator_list_from_flag("dge:500,se:0")},
                                {"a", 2.0},
                                {"b", nullptr},
                                {"p_hat", nullptr},
                                {"tail_tol", 1e-12},
                                {"n_cap", 1000000},
                                {"allow_nonintegrable", false},
                                {"format", "csv"}};
                  },
                  {{"n0", "true population size"},
                   {"p0", "true success probability"},
                   {"b", "Beta prior b for p (null: a / p_hat - a, with p_hat defaulting to p0)"}},
                  [](json cfg) {
                    const double a = get_num(cfg, "a");
                    const double p_ref = get_opt_num(cfg, "p_hat").value_or(get_num(cfg, "p0"));
                    if (cfg["b"].is_null() || !cfg["p_hat"].is_null()) {
                      try {
                        cfg["b"] = b_from_p_hat(a, p_ref);
                      } catch (const Error& e) {
                        throw UsageError(e.what());
                      }
                    }
                    cfg["estimators"] = complete_estimator_list(cfg);
                    const std::string format = get_str(cfg, "format");
                    if (format != "csv" && format != "table") throw UsageError("format must be csv or table");
                    ScenarioConfig sc;
                    sc.n0 = get_int(cfg, "n0");
                    sc.p0 = get_num(cfg, "p0");
                    sc.k = get_int(cfg, "k");
                    sc.reps = get_int(cfg, "reps");
                    sc.seed = get_seed(cfg, "seed");
                    sc.estimators = estimators_from(cfg);
                    try {
                      sc.validate();
                    } catch (const Error& e) {
                      throw UsageError(e.what());
                    }
                    return cfg;
                  },
                  [](const json& cfg, unsigned threads, std::ostream&) {
                    ScenarioConfig sc;
                    sc.n0 = get_int(cfg, "n0");
                    sc.p0 = get_num(cfg, "p0");
                    sc.k = get_int(cfg, "k");
                    sc.reps = get_int(cfg, "reps");
                    sc.seed = get_seed(cfg, "seed");
                    sc.estimators = estimators_from(cfg);
                    sc.threads = threads;
                    const ScenarioReport report = run_scenario(sc);
                    std::ostringstream os;
                    if (get_str(cfg, "format") == "table") {
                      write_scenario_table(os, report);
                    } else {
                      write_scenario_csv(os, report);
                    }
                    return Output{os.str()};
                  }});

  cmds.push_back({"robustness", "RMSE ratio of varying-n to i.i.d. samples; prints CSV",
                  [] {
                    return json{{"n_tilde", 8},
                                {"p_tilde", 0.7},
                                {"k", 100},
                                {"reps", 1000},
                                {"beta_p_a", 2.0},
                                {"beta_p_b", 38.0},
                                {"seed", 1},
                                {"estimators", estimator_list_from_flag("se:0.5,se:1,se:2,dge:500")},
                                {"a", 2.0},
                                {"b", 38.0},
                                {"tail_tol", 1e-12},
                                {"n_cap", 1000000},
                                {"allow_nonintegrable", false}};
                  },
                  {{"n_tilde", "population of the binomial that draws each n_i"},
                   {"p_tilde", "success probability of the binomial that draws each n_i"},
                   {"beta_p_a", "p0 ~ Beta(beta_p_a, beta_p_b) per replication"},
                   {"beta_p_b", "p0 ~ Beta(beta_p_a, beta_p_b) per replication"}},
                  [](json cfg) {
                    cfg["estimators"] = complete_estimator_list(cfg);
                    RobustnessConfig rc;
                    rc.n_tilde = get_int(cfg, "n_tilde");
                    rc.p_tilde = get_num(cfg, "p_tilde");
                    rc.k = get_int(cfg, "k");
                    rc.reps = get_int(cfg, "reps");
                    rc.beta_p_a = get_num(cfg, "beta_p_a");
                    rc.beta_p_b = get_num(cfg, "beta_p_b");
                    rc.seed = get_seed(cfg, "seed");
                    rc.estimators = estimators_from(cfg);
                    try {
                      rc.validate();
                    } catch (const Error& e) {
                      throw UsageError(e.what());
                    }
                    return cfg;
                  },
                  [](const json& cfg, unsigned threads, std::ostream&) {
                    RobustnessConfig rc;
                    rc.n_tilde = get_int(cfg, "n_tilde");
                    rc.p_tilde = get_num(cfg, "p_tilde");
                    rc.k = get_int(cfg, "k");
                    rc.reps = get_int(cfg, "reps");
                    rc.beta_p_a = get_num(cfg, "beta_p_a");
                    rc.beta_p_b = get_num(cfg, "beta_p_b");
                    rc.seed = get_seed(cfg, "seed");
                    rc.estimators = estimators_from(cfg);
                    rc.threads = threads;
                    std::ostringstream os;
                    write_robustness_csv(os, run_robustness(rc));
                    return Output{os.str()};
                  }});

  cmds.push_back({"contract", "Posterior miss-mass along a contraction sequence; prints CSV",
                  [] {
                    return json{{"lambda", 2.0},
                                {"mu", 1.0},
                                {"exponent", 1.0 / 6.0},
                                {"k_grid", json::array({1000, 10000, 100000})},
                                {"reps", 200},
                                {"seed", 1},
                                {"lambda_log_power", 0.0},
                                {"gamma", 2.0},
                                {"a", 1.0},
                                {"b", 1.0},
                                {"tail_tol", kContractionTailTol},
                                {"n_cap", 1000000}};
                  },
                  {{"lambda", "class constant: 1/lambda <= n p <= lambda"},
                   {"mu", "n_k p_k = mu along the sequence"},
                   {"exponent", "n_k grows like (k / log k)^exponent"},
                   {"k_grid", "sample sizes, comma list"},
                   {"lambda_log_power", "when positive, lambda_k = lambda log(k)^power"},
                   {"gamma", "power-law prior exponent for N"}},
                  [](json cfg) {
                    SequenceSpec s;
                    s.lambda = get_num(cfg, "lambda");
                    s.mu = get_num(cfg, "mu");
                    s.exponent = get_num(cfg, "exponent");
                    s.k_grid = get_int_list(cfg, "k_grid");
                    s.reps = get_int(cfg, "reps");
                    s.seed = get_seed(cfg, "seed");
                    s.lambda_log_power = get_num(cfg, "lambda_log_power");
                    try {
                      s.validate();
                      BetaPrior{get_num(cfg, "a"), get_num(cfg, "b")}.validate();
                      NPriorSpec{PowerLaw{get_num(cfg, "gamma")}}.validate();
                      TruncationPolicy{get_num(cfg, "tail_tol"), get_int(cfg, "n_cap")}.validate();
                    } catch (const Error& e) {
                      throw UsageError(e.what());
                    }
                    return cfg;
                  },
                  [](const json& cfg, unsigned threads, std::ostream&) {
                    SequenceSpec s;
                    s.lambda = get_num(cfg, "lambda");
                    s.mu = get_num(cfg, "mu");
                    s.exponent = get_num(cfg, "exponent");
                    s.k_grid = get_int_list(cfg, "k_grid");
                    s.reps = get_int(cfg, "reps");
                    s.seed = get_seed(cfg, "seed");
                    s.lambda_log_power = get_num(cfg, "lambda_log_power");
                    s.threads = threads;
                    const auto curve =
                        contraction_curve(s, BetaPrior{get_num(cfg, "a"), get_num(cfg, "b")},
                                          NPriorSpec{PowerLaw{get_num(cfg, "gamma")}},
                                          TruncationPolicy{get_num(cfg, "tail_tol"), get_int(cfg, "n_cap")});
                    std::ostringstream os;
                    write_contraction_csv(os, curve);
                    return Output{os.str()};
                  }});

  cmds.push_back({"tk-bounds", "Admissible range of the prior truncation point T_k; prints JSON",
                  [] {
                    return json{{"gamma", 0.0}, {"k", 8}, {"lambda", 1.0}, {"alpha", 1.0}, {"beta_c", 1.0}};
                  },
                  {{"gamma", "prior exponent in [0, 1]"},
                   {"lambda", "class constant"},
                   {"alpha", "prior condition constant alpha"},
                   {"beta_c", "prior condition constant beta"}},
                  [](json cfg) {
                    for (const char* key : {"gamma", "lambda", "alpha", "beta_c"}) get_num(cfg, key);
                    get_int(cfg, "k");
                    return cfg;
                  },
                  [](const json& cfg, unsigned, std::ostream&) {
                    const TkBounds b = tk_bounds(get_num(cfg, "gamma"), get_int(cfg, "k"), get_num(cfg, "lambda"),
                                                 get_num(cfg, "alpha"), get_num(cfg, "beta_c"));
                    json out{{"t_min", b.t_min},
                             {"log_t_max", std::isfinite(b.log_t_max) ? json(b.log_t_max) : json("inf")},
                             {"log_log_t_max", b.log_log_t_max ? json(*b.log_log_t_max) : json(nullptr)},
                             {"t_max_finite_double", b.t_max_finite_double}};
                    return Output{dump(out)};
                  }});

  cmds.push_back({"max-probe", "P(M_k = n) exactly and by simulation, with the regime label; prints JSON",
                  [] {
                    return json{{"n", 4}, {"p", 0.25}, {"k", 2000}, {"reps", 100000}, {"seed", 1},
                                {"critical_band", 1.0}};
                  },
                  {{"n", "binomial population"},
                   {"p", "binomial success probability"},
                   {"critical_band", "|n log n - log k| at or below this is labelled critical"}},
                  [](json cfg) {
                    get_int(cfg, "n");
                    get_num(cfg, "p");
                    get_int(cfg, "k");
                    get_int(cfg, "reps");
                    get_seed(cfg, "seed");
                    get_num(cfg, "critical_band");
                    return cfg;
                  },
                  [](const json& cfg, unsigned threads, std::ostream&) {
                    const std::int64_t n = get_int(cfg, "n");
                    const double p = get_num(cfg, "p");
                    const MaxProbeResult r =
                        max_consistency_probe(n, p, get_int(cfg, "k"), get_int(cfg, "reps"), get_seed(cfg, "seed"),
                                              get_num(cfg, "critical_band"), threads);
                    json out{{"exact_prob", r.exact_prob},
                             {"mc_prob", r.mc_prob},
                             {"mc_stderr", r.mc_stderr},
                             {"margin", r.margin},
                             {"regime", to_string(r.regime)}};
                    if (p < 1.0) {
                      const MaxThreshold strict = max_half_threshold(n, p, true);
                      const MaxThreshold loose = max_half_threshold(n, p, false);
                      out["half_threshold"] = json{{"strict_tail_prob", strict.tail_prob},
                                                   {"strict_k_min", strict.k_min},
                                                   {"nonstrict_tail_prob", loose.tail_prob},
                                                   {"nonstrict_k_min", loose.k_min}};
                    }
                    return Output{dump(out)};
                  }});

  cmds.push_back({"theory-check", "Numeric sweep of the supporting inequalities; prints JSON, exit 1 on violations",
                  [] { return json::object(); },
                  {},
                  [](json cfg) { return cfg; },
                  [](const json&, unsigned threads, std::ostream& log) {
                    json out = json::array();
                    std::size_t total = 0;
                    for (const auto& rep : run_default_sweep(threads)) {
                      json v = json::array();
                      for (const auto& viol : rep.violations) v.push_back({{"params", viol.params}, {"detail", viol.detail}});
                      total += rep.violations.size();
                      out.push_back({{"lemma", rep.lemma},
                                     {"cases_run", rep.cases_run},
                                     {"skipped", rep.skipped},
                                     {"violations", v}});
                    }
                    log << total << " violation(s)\n";
                    return Output{dump(out), total == 0};
                  }});

  cmds.push_back({"fluoro synth", "Synthetic bleaching count table; prints CSV",
                  [] {
                    return json{{"n_anchor", 15},  {"occupancy_p", 1.0},
                                {"n_rois", 94},    {"b", 1.5e-4},
                                {"p_on", 0.0339},  {"frames", json::array({1500, 3000, 4500, 6000, 7500, 9000})},
                                {"seed", 1},       {"frame_exact", false}};
                  },
                  {{"n_anchor", "n_i(0) ~ Bin(n_anchor, occupancy_p)"},
                   {"occupancy_p", "per-site occupancy probability"},
                   {"n_rois", "number of ROIs"},
                   {"b", "per-frame bleaching probability"},
                   {"p_on", "on-state probability"},
                   {"frame_exact", "simulate bleaching frame by frame"}},
                  [](json cfg) {
                    SynthConfig c;
                    c.n_anchor = get_int(cfg, "n_anchor");
                    c.occupancy_p = get_num(cfg, "occupancy_p");
                    c.n_rois = get_int(cfg, "n_rois");
                    c.b = get_num(cfg, "b");
                    c.p_on = get_num(cfg, "p_on");
                    c.frames = get_int_list(cfg, "frames");
                    c.seed = get_seed(cfg, "seed");
                    c.frame_exact = get_bool(cfg, "frame_exact");
                    try {
                      c.validate();
                    } catch (const Error& e) {
                      throw UsageError(e.what());
                    }
                    return cfg;
                  },
                  [](const json& cfg, unsigned, std::ostream&) {
                    SynthConfig c;
                    c.n_anchor = get_int(cfg, "n_anchor");
                    c.occupancy_p = get_num(cfg, "occupancy_p");
                    c.n_rois = get_int(cfg, "n_rois");
                    c.b = get_num(cfg, "b");
                    c.p_on = get_num(cfg, "p_on");
                    c.frames = get_int_list(cfg, "frames");
                    c.seed = get_seed(cfg, "seed");
                    c.frame_exact = get_bool(cfg, "frame_exact");
                    std::ostringstream os;
                    write_count_table(os, synth_dataset(c).table);
                    return Output{os.str()};
                  }});

  cmds.push_back({"fluoro fit", "Per-frame estimates and the log-linear bleaching fit; prints JSON",
                  [] {
                    json d{{"counts", ""}, {"frames", nullptr}};
                    d.update(estimator_flat_defaults("se", 0.5, 2.0, nullptr, 0.0339));
                    d["weighted"] = false;
                    return d;
                  },
                  {{"counts", "count table CSV: roi,t_<f1>,t_<f2>,..."},
                   {"frames", "frames to use (null: every column)"},
                   {"weighted", "weight each frame by its estimate"}},
                  [](json cfg) {
                    if (get_str(cfg, "counts").empty()) throw UsageError("--counts is required");
                    if (!cfg["frames"].is_null()) get_int_list(cfg, "frames");
                    cfg = resolve_flat_prior(std::move(cfg));
                    cfg["spec"] = flat_estimator_entry(cfg);
                    get_bool(cfg, "weighted");
                    return cfg;
                  },
                  [](const json& cfg, unsigned threads, std::ostream& log) {
                    CountTable table = ingest_counts(get_str(cfg, "counts"));
                    if (!cfg["frames"].is_null()) table = select_frames(table, get_int_list(cfg, "frames"));
                    const EstimatorSpec spec = estimator_from_json(cfg["spec"]);
                    BleachPipelineOptions opts;
                    opts.weighted = get_bool(cfg, "weighted");
                    opts.threads = threads;
                    const BleachFit fit = run_bleach_pipeline(table, spec, opts);
                    json per_frame = json::array();
                    for (const auto& pt : fit.per_frame) per_frame.push_back({{"t", pt.t}, {"n_t_hat", pt.n_t_hat}});
                    for (const auto& w : fit.warnings) log << "warning: " << w << '\n';
                    json out{{"estimator", spec.label()},
                             {"n0_hat", fit.n0_hat},
                             {"n0_rounded", fit.n0_rounded},
                             {"b_hat", fit.b_hat},
                             {"b_at_boundary", fit.b_at_boundary},
                             {"frames_used", fit.frames_used},
                             {"r_squared", fit.r_squared},
                             {"per_frame", per_frame},
                             {"residuals", fit.residuals},
                             {"warnings", fit.warnings}};
                    return Output{dump(out)};
                  }});

  cmds.push_back({"fluoro p-on", "On-state probability from blink traces (a file, or synthetic); prints JSON",
                  [] {
                    return json{{"traces", ""}, {"n_traces", 500}, {"p_on", 0.0339},
                                {"off_rate", 0.5}, {"bleach", 1e-3}, {"seed", 1}};
                  },
                  {{"traces", "file with one 0/1 trace per line (empty: synthesize)"},
                   {"n_traces", "synthetic traces"},
                   {"p_on", "synthetic stationary on-probability"},
                   {"off_rate", "synthetic on -> off probability per frame"},
                   {"bleach", "synthetic bleaching probability per frame"}},
                  [](json cfg) {
                    get_str(cfg, "traces");
                    get_int(cfg, "n_traces");
                    for (const char* key : {"p_on", "off_rate", "bleach"}) get_num(cfg, key);
                    get_seed(cfg, "seed");
                    return cfg;
                  },
                  [](const json& cfg, unsigned, std::ostream&) {
                    const std::string path = get_str(cfg, "traces");
                    std::vector<BlinkTrace> traces;
                    if (path.empty()) {
                      BlinkSynthConfig c;
                      c.n_traces = get_int(cfg, "n_traces");
                      c.p_on = get_num(cfg, "p_on");
                      c.off_rate = get_num(cfg, "off_rate");
                      c.bleach = get_num(cfg, "bleach");
                      c.seed = get_seed(cfg, "seed");
                      traces = synth_blink_traces(c);
                    } else {
                      traces = read_traces(path);
                    }
                    double total = 0.0;
                    for (const auto& t : traces) total += static_cast<double>(t.on.size());
                    const double p_on = estimate_p_on(traces);
                    json out{{"p_on_hat", p_on},
                             {"n_traces", traces.size()},
                             {"mean_trace_length", total / static_cast<double>(traces.size())},
                             {"source", path.empty() ? "synthetic" : path}};
                    return Output{dump(out)};
                  }});

  return cmds;
}

const std::vector<Command>& commands() {
  static const std::vector<Command> cmds = build_commands();
  return cmds;
}

const Command& find_command(const std::string& name) {
  for (const auto& c : commands()) {
    if (c.name == name) return c;
  }
  throw UsageError("unknown subcommand '" + name + "'");
}

std::string flag_name(const std::string& key) {
  std::string out = "--";
  for (char c : key) out.push_back(c == '_' ? '-' : c);
  return out;
}

std::string default_text(const std::string& key, const json& value) {
  if (key == "estimators") return estimator_list_to_flag(value);
  if (value.is_array()) {
    std::string out;
    for (const auto& v : value) out += (out.empty() ? "" : ",") + v.dump();
    return out;
  }
  if (value.is_string()) return value.get<std::string>();
  return value.dump();
}

/// Converts a flag's text to the JSON type of the config field.
json flag_value(const std::string& key, const json& def, const std::string& text) {
  const std::string what = flag_name(key);
  if (key == "estimators") return estimator_list_from_flag(text);
  if (key == "frames") {
    json out = json::array();
    try {
      for (auto f : parse_frame_list(text)) out.push_back(f);
    } catch (const Error& e) {
      throw UsageError(what + ": " + e.what());
    }
    return out;
  }
  if (def.is_array()) {
    json out = json::array();
    for (const auto& token : split(text, ',')) out.push_back(parse_integer(token, what));
    return out;
  }
  if (def.is_string()) return text;
  if (key == "seed") {
    if (!text.empty() && text[0] == '-') throw UsageError(what + ": seed must be non-negative");
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
      throw UsageError(what + ": '" + text + "' is not a seed");
    }
    return v;
  }
  if (def.is_number_integer()) return parse_integer(text, what);
  return parse_double(text, what);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path);
}

struct LeafOptions {
  const Command* cmd = nullptr;
  CLI::App* app = nullptr;
  std::map<std::string, std::string> text;
  std::map<std::string, bool> flags;
  std::map<std::string, CLI::Option*> opts;
  std::string config_path;
  std::string out_path;
  std::string manifest_path;
  unsigned threads = 0;
};

struct RerunOptions {
  CLI::App* app = nullptr;
  std::string manifest;
  std::string out_path;
  std::string manifest_path;
  unsigned threads = 0;
  CLI::Option* threads_opt = nullptr;
};

void add_io_options(CLI::App* app, std::string& out_path, std::string& manifest_path, unsigned& threads) {
  app->add_option("--out,-o", out_path, "write the primary output here instead of stdout");
  app->add_option("--manifest", manifest_path,
                  "manifest path (default: <out>.manifest.json, or stderr when writing to stdout)");
  app->add_option("--threads", threads, "worker threads (0: BNEST_THREADS or hardware)")->capture_default_str();
}

json requested_config(const LeafOptions& leaf) {
  json cfg = leaf.cmd->defaults();
  if (!leaf.config_path.empty()) {
    const json file = read_json_file(leaf.config_path);
    if (!file.is_object()) throw UsageError(leaf.config_path + ": config must be a JSON object");
    for (const auto& [key, value] : file.items()) {
      if (!cfg.contains(key)) throw UsageError(leaf.config_path + ": unknown config field '" + key + "'");
      cfg[key] = value;
    }
  }
  for (const auto& [key, opt] : leaf.opts) {
    if (opt->count() == 0) continue;
    const auto flag = leaf.flags.find(key);
    cfg[key] = flag != leaf.flags.end() ? json(flag->second) : flag_value(key, cfg[key], leaf.text.at(key));
  }
  return cfg;
}

int finish(const std::string& subcommand, const json& resolved, unsigned threads, const std::string& out_path,
           const std::string& manifest_path, std::ostream& out, std::ostream& err) {
  const Output result = execute(subcommand, resolved, threads, err);
  const json manifest = make_manifest(subcommand, resolved, threads);
  if (out_path.empty()) {
    out << result.text;
    out.flush();
  } else {
    write_text(out_path, result.text);
  }
  const std::string mpath = !manifest_path.empty() ? manifest_path : out_path.empty() ? "" : out_path + ".manifest.json";
  if (mpath.empty()) {
    err << manifest.dump() << '\n';
  } else {
    write_text(mpath, dump(manifest));
  }
  return result.ok ? 0 : 1;
}

}  // namespace

json to_json(const EstimatorSpec& spec_in) {
  const EstimatorSpec spec = spec_in.normalized();
  json j{{"type", type_name(spec.kind)}};
  if (const auto* s = std::get_if<ScaleKind>(&spec.kind)) j["gamma"] = s->gamma;
  if (const auto* d = std::get_if<DgeKind>(&spec.kind)) j["n0_max"] = d->n0_max;
  if (const auto* m = std::get_if<MapKind>(&spec.kind)) j["t_k"] = m->t_k;
  if (spec.uses_beta()) {
    j["a"] = spec.beta.a;
    j["b"] = spec.beta.b;
  }
  if (std::holds_alternative<ScaleKind>(spec.kind) || std::holds_alternative<RafteryKind>(spec.kind)) {
    j["tail_tol"] = spec.trunc.tail_tol;
    j["n_cap"] = spec.trunc.n_cap;
    j["allow_nonintegrable"] = spec.trunc.allow_nonintegrable;
  }
  return j;
}

EstimatorSpec estimator_from_json(const json& j) {
  if (!j.is_object()) throw UsageError("estimator must be a JSON object");
  const std::string type = get_str(j, "type");
  BetaPrior beta;
  if (j.contains("a")) beta.a = get_num(j, "a");
  if (j.contains("b")) beta.b = get_num(j, "b");
  TruncationPolicy trunc;
  if (j.contains("tail_tol")) trunc.tail_tol = get_num(j, "tail_tol");
  if (j.contains("n_cap")) trunc.n_cap = get_int(j, "n_cap");
  if (j.contains("allow_nonintegrable")) trunc.allow_nonintegrable = get_bool(j, "allow_nonintegrable");
  EstimatorSpec spec;
  if (type == "se") {
    spec = EstimatorSpec::scale(j.contains("gamma") ? get_num(j, "gamma") : 1.0, beta, trunc);
  } else if (type == "dge") {
    spec = EstimatorSpec::dge(j.contains("n0_max") ? get_int(j, "n0_max") : 500, beta);
  } else if (type == "re") {
    spec = EstimatorSpec::raftery(trunc);
  } else if (type == "map") {
    spec = EstimatorSpec::map(j.contains("t_k") ? get_int(j, "t_k") : 1000, beta);
  } else if (type == "max") {
    spec = EstimatorSpec::sample_max();
  } else {
    throw UsageError("unknown estimator type '" + type + "' (se, dge, re, map, max)");
  }
  if (spec.uses_beta()) spec.beta.validate();
  spec.trunc.validate();
  return spec.normalized();
}

json parse_estimator_token(const std::string& token) {
  const auto parts = split(token, ':');
  if (parts.empty() || parts.size() > 2) throw UsageError("bad estimator '" + token + "'");
  const std::string& type = parts[0];
  json j{{"type", type}};
  const bool has_arg = parts.size() == 2;
  const std::string what = "estimator '" + token + "'";
  if (type == "se") {
    j["gamma"] = has_arg ? parse_double(parts[1], what) : 1.0;
  } else if (type == "dge") {
    j["n0_max"] = has_arg ? parse_integer(parts[1], what) : 500;
  } else if (type == "map") {
    j["t_k"] = has_arg ? parse_integer(parts[1], what) : 1000;
  } else if (type == "re" || type == "max") {
    if (has_arg) throw UsageError(what + " takes no parameter");
  } else {
    throw UsageError("unknown estimator type '" + type + "' (se, dge, re, map, max)");
  }
  return j;
}

std::vector<std::string> subcommand_names() {
  std::vector<std::string> out;
  for (const auto& c : commands()) out.push_back(c.name);
  return out;
}

json default_config(const std::string& subcommand) { return find_command(subcommand).defaults(); }

json resolve_config(const std::string& subcommand, const json& requested) {
  const Command& cmd = find_command(subcommand);
  if (!requested.is_object()) throw UsageError("config must be a JSON object");
  json cfg = cmd.defaults();
  for (const auto& [key, value] : requested.items()) {
    if (!cfg.contains(key) && key != "spec") throw UsageError("unknown config field '" + key + "'");
    cfg[key] = value;
  }
  cfg.erase("spec");
  try {
    return cmd.resolve(std::move(cfg));
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

Output execute(const std::string& subcommand, const json& resolved, unsigned threads, std::ostream& log) {
  return find_command(subcommand).run(resolved, threads, log);
}

json make_manifest(const std::string& subcommand, const json& resolved, unsigned threads) {
  return json{{"tool", "bnest"},
              {"version", BNEST_VERSION},
              {"subcommand", subcommand},
              {"config", resolved},
              {"seed", resolved.contains("seed") ? resolved["seed"] : json(nullptr)},
              {"threads", threads == 0 ? default_threads() : threads},
              {"timestamp", utc_timestamp()}};
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian estimation of the binomial population size n with unknown p", "bnest"};
  app.set_version_flag("--version", BNEST_VERSION);
  app.require_subcommand(1);

  std::vector<std::unique_ptr<LeafOptions>> leaves;
  CLI::App* fluoro = app.add_subcommand("fluoro", "Fluorophore counting with bleaching");
  fluoro->require_subcommand(1);

  for (const auto& cmd : commands()) {
    auto leaf = std::make_unique<LeafOptions>();
    leaf->cmd = &cmd;
    const bool nested = cmd.name.rfind("fluoro ", 0) == 0;
    CLI::App* parent = nested ? fluoro : &app;
    leaf->app = parent->add_subcommand(nested ? cmd.name.substr(7) : cmd.name, cmd.description);
    leaf->app->add_option("--config", leaf->config_path, "JSON config file (flags override it)");
    add_io_options(leaf->app, leaf->out_path, leaf->manifest_path, leaf->threads);
    const json defaults = cmd.defaults();
    for (const auto& [key, value] : defaults.items()) {
      std::string help = cmd.help.count(key) ? cmd.help.at(key)
                         : common_help().count(key) ? common_help().at(key)
                                                    : key;
      if (value.is_boolean()) {
        leaf->flags[key] = value.get<bool>();
        const std::string name = flag_name(key);
        leaf->opts[key] = leaf->app->add_flag(name + ",!--no-" + name.substr(2), leaf->flags[key],
                                              help + " [default: " + value.dump() + "]");
      } else {
        leaf->text[key] = default_text(key, value);
        leaf->opts[key] =
            leaf->app->add_option(flag_name(key), leaf->text[key], help)
                ->default_str(default_text(key, value))
                ->type_name(value.is_array()             ? "LIST"
                            : value.is_string()          ? "TEXT"
                            : value.is_number_integer()  ? "INT"
                                                         : "NUM");
      }
    }
    leaves.push_back(std::move(leaf));
  }

  RerunOptions rerun;
  rerun.app = app.add_subcommand("rerun", "Repeat a run from its manifest");
  rerun.app->add_option("manifest", rerun.manifest, "manifest JSON written by an earlier run")->required();
  rerun.app->add_option("--out,-o", rerun.out_path, "write the primary output here instead of stdout");
  rerun.app->add_option("--manifest-out", rerun.manifest_path, "where to write the new manifest");
  rerun.threads_opt =
      rerun.app->add_option("--threads", rerun.threads, "worker threads (default: the manifest's count)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (rerun.app->parsed()) {
      json manifest;
      std::string subcommand;
      json resolved;
      unsigned threads = 0;
      try {
        manifest = read_json_file(rerun.manifest);
        subcommand = get_str(manifest, "subcommand");
        if (!manifest.contains("config")) throw UsageError("manifest has no config");
        resolved = resolve_config(subcommand, manifest["config"]);
        if (manifest.contains("threads")) threads = static_cast<unsigned>(get_int(manifest, "threads"));
      } catch (const json::exception& e) {
        throw UsageError(rerun.manifest + ": " + e.what());
      }
      if (rerun.threads_opt->count() > 0) threads = rerun.threads;
      return finish(subcommand, resolved, threads, rerun.out_path, rerun.manifest_path, out, err);
    }
    for (const auto& leaf : leaves) {
      if (!leaf->app->parsed()) continue;
      json resolved;
      try {
        resolved = resolve_config(leaf->cmd->name, requested_config(*leaf));
      } catch (const json::exception& e) {
        throw UsageError(e.what());
      }
      return finish(leaf->cmd->name, resolved, leaf->threads, leaf->out_path, leaf->manifest_path, out, err);
    }
    err << "no subcommand given\n";
    return 2;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace bnest::cli
