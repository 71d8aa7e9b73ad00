#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "json.hpp"
#include "spde/config.hpp"

namespace spde {

/// Process exit statuses of the CLI.
enum ExitStatus : int { kExitOk = 0, kExitOperational = 1, kExitGateRefused = 2, kExitVerificationFailed = 3 };

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;  ///< no artifacts when empty
  std::size_t workers = 1;
};

struct RunOutcome {
  int status = kExitOk;
  nlohmann::json report;
};

/// upsilon | gate | minbeta | simulate | verify | anderson | wave.
bool known_subcommand(const std::string& name);

/// Canned anderson inputs; user JSON is merged over them.
nlohmann::json anderson_defaults();

/// Subcommand defaults merged under `raw`, then parsed and checked for the
/// fields the subcommand needs. Throws ConfigError.
ExperimentConfig resolve_config(const std::string& subcommand, const nlohmann::json& raw);

/// Runs one subcommand and writes <out>/<subcommand>.{config.json,report.json}
/// plus a CSV for field-producing runs. Library errors propagate.
RunOutcome execute(const std::string& subcommand, const ExperimentConfig& config, const RunOptions& opts);

/// execute() with errors mapped to exit statuses: the report JSON goes to
/// `out`, diagnostics to `err`.
int run(const std::string& subcommand, const ExperimentConfig& config, const RunOptions& opts, std::ostream& out,
        std::ostream& err);

}  // namespace spde
