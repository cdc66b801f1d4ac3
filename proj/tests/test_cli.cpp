#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

using namespace bnest;
using bnest::cli::json;

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = 0;
  std::string out;
  std::string err;
};

RunResult call(std::vector<std::string> args) {
  args.insert(args.begin(), "bnest");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bnest_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> words(const std::string& subcommand) {
  std::vector<std::string> out;
  std::istringstream in(subcommand);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

}  // namespace

TEST_CASE("estimator JSON round trip") {
  const std::vector<EstimatorSpec> specs{EstimatorSpec::scale(0.5, {2.0, 57.0}), EstimatorSpec::dge(500, {2.0, 3.0}),
                                         EstimatorSpec::raftery(), EstimatorSpec::map(1000, {1.0, 1.0}),
                                         EstimatorSpec::sample_max()};
  for (const auto& s : specs) {
    const json j = cli::to_json(s);
    CHECK(cli::to_json(cli::estimator_from_json(j)) == j);
    CHECK(cli::estimator_from_json(j).label() == s.label());
  }
  CHECK(cli::parse_estimator_token("se:0.5")["gamma"] == 0.5);
  CHECK(cli::parse_estimator_token("dge:500")["n0_max"] == 500);
  CHECK_THROWS_AS(cli::parse_estimator_token("re:1"), cli::UsageError);
  CHECK_THROWS_AS(cli::parse_estimator_token("xyz"), cli::UsageError);
}

TEST_CASE("every subcommand reruns bit-identically from its manifest") {
  const fs::path dir = scratch_dir("rerun");
  const fs::path counts = dir / "counts.csv";
  REQUIRE(call({"fluoro", "synth", "--n-rois", "30", "--out", counts.string()}).code == 0);

  const std::vector<std::pair<std::string, std::vector<std::string>>> cases{
      {"estimate", {"--values", "0,1,0,2,1,0,3", "--gamma", "0.5", "--b", "20"}},
      {"posterior", {"--values", "2,1,3", "--prior", "uniform", "--n0-max", "40"}},
      {"simulate", {"--reps", "40", "--seed", "3"}},
      {"robustness", {"--reps", "20", "--estimators", "se:1,dge:500"}},
      {"contract", {"--reps", "6", "--k-grid", "200,2000"}},
      {"tk-bounds", {"--k", "100"}},
      {"max-probe", {"--reps", "2000"}},
      {"theory-check", {}},
      {"fluoro synth", {"--n-rois", "20"}},
      {"fluoro fit", {"--counts", counts.string()}},
      {"fluoro p-on", {"--n-traces", "50"}},
  };
  int idx = 0;
  for (const auto& [sub, flags] : cases) {
    INFO(sub);
    const fs::path out = dir / ("out" + std::to_string(idx++));
    std::vector<std::string> args = words(sub);
    args.insert(args.end(), flags.begin(), flags.end());
    args.insert(args.end(), {"--threads", "1", "--out", out.string()});
    const RunResult first = call(args);
    REQUIRE(first.code == 0);
    const fs::path manifest = out.string() + ".manifest.json";
    const json m = json::parse(slurp(manifest));
    CHECK(m["subcommand"] == sub);
    CHECK(m["threads"] == 1);

    const fs::path again = out.string() + ".again";
    const RunResult second = call({"rerun", manifest.string(), "--threads", "3", "--out", again.string(),
                                   "--manifest-out", (dir / "m.json").string()});
    REQUIRE(second.code == 0);
    CHECK(slurp(out) == slurp(again));
    CHECK(json::parse(slurp(dir / "m.json"))["config"] == m["config"]);
  }
  fs::remove_all(dir);
}

TEST_CASE("config files merge under flags") {
  const fs::path dir = scratch_dir("config");
  const fs::path cfg = dir / "c.json";
  std::ofstream(cfg) << R"({"reps": 30, "seed": 9, "n0": 10})";
  const RunResult a = call({"simulate", "--config", cfg.string(), "--seed", "4", "--manifest", (dir / "m.json").string()});
  REQUIRE(a.code == 0);
  const json m = json::parse(slurp(dir / "m.json"));
  CHECK(m["config"]["reps"] == 30);
  CHECK(m["config"]["n0"] == 10);
  CHECK(m["config"]["seed"] == 4);
  CHECK(m["seed"] == 4);

  std::ofstream(dir / "bad.json") << R"({"repz": 30})";
  CHECK(call({"simulate", "--config", (dir / "bad.json").string()}).code == 2);
  fs::remove_all(dir);
}

TEST_CASE("exit codes") {
  CHECK(call({}).code == 2);
  CHECK(call({"simulate", "--reps", "abc"}).code == 2);
  CHECK(call({"simulate", "--no-such-flag"}).code == 2);
  CHECK(call({"estimate", "--values", "1,2", "--gamma", "0"}).code == 1);
  CHECK(call({"estimate", "--values", "1,x"}).code != 0);
  CHECK(call({"rerun", "/nonexistent/manifest.json"}).code != 0);
  const RunResult help = call({"simulate", "--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("--reps") != std::string::npos);
  CHECK(call({"--version"}).code == 0);
}

TEST_CASE("manifest goes to stderr without an output path") {
  const RunResult r = call({"tk-bounds"});
  REQUIRE(r.code == 0);
  const json m = json::parse(r.err.substr(r.err.find('{')));
  CHECK(m["tool"] == "bnest");
  CHECK(m["subcommand"] == "tk-bounds");
  CHECK(m.contains("timestamp"));
  const json out = json::parse(r.out);
  CHECK(out["t_min"].get<double>() == doctest::Approx(1.25177).epsilon(1e-5));
}
