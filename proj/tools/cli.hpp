#pragma once

// Command-line front end. Every subcommand resolves its configuration to a
// single JSON object (defaults < config file < flags) and runs from that
// object alone, so a run manifest carries everything needed to repeat it.

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bnest/estimators.hpp"

namespace bnest::cli {

using json = nlohmann::ordered_json;

/// Raised for bad flags, config files or manifests; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json to_json(const EstimatorSpec& spec);
/// Accepts {"type": "se"|"dge"|"re"|"map"|"max", ...}; missing fields take defaults.
EstimatorSpec estimator_from_json(const json& j);
/// "se:0.5", "dge:500", "re", "map:1000" or "max".
json parse_estimator_token(const std::string& token);

std::vector<std::string> subcommand_names();

/// Defaults for a subcommand such as "simulate" or "fluoro fit".
json default_config(const std::string& subcommand);
/// Fills derived fields and validates; throws UsageError.
json resolve_config(const std::string& subcommand, const json& requested);

struct Output {
  /// Primary output: CSV or JSON text.
  std::string text;
  /// False when the run completed but found a failure worth a non-zero exit
  /// (theory-check violations).
  bool ok = true;
};

/// Runs a resolved config. Notes meant for a human go to `log`.
Output execute(const std::string& subcommand, const json& resolved, unsigned threads, std::ostream& log);

json make_manifest(const std::string& subcommand, const json& resolved, unsigned threads);

/// Full entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bnest::cli
