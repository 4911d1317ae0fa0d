#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace pathflow::cli {

enum ExitCode : int {
  kPass = 0,
  kAssertionFailed = 1,
  kConfigError = 2,
};

// Commands understood by run().
const std::vector<std::string>& commands();

// Fills defaults for `command` and validates; unknown keys and bad values throw ConfigError.
nlohmann::json normalize_config(const std::string& command, const nlohmann::json& raw);

struct Outcome {
  int exit_code = kPass;
  nlohmann::json report;  // empty on config errors
  double runtime_ms = 0.0;
};

// Runs a validated (normalized) configuration. Writes the report and CSV files named in it.
Outcome execute(const nlohmann::json& config);

// Full command line, args[0] being the program name. Reports go to `out` when no
// output path is configured; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pathflow::cli
