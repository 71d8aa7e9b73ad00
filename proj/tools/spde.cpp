// spde: command-line front end of the stochastic heat equation lab.
//
//   spde <upsilon|gate|minbeta|simulate|verify|anderson|wave> --config <path|json>
//        [--out <dir>] [--seed <u64>] [--replicas <n>] [overrides...]
//
// Worker count comes from SPDE_WORKERS only. Exit status: 0 ok, 1 usage or
// operational error, 2 existence gate refused, 3 verification failed.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "spde/errors.hpp"
#include "spde/harness.hpp"
#include "spde/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Stochastic heat equation numerical lab"};
  app.require_subcommand(1, 1);

  std::string config_arg;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::string model_arg;
  std::optional<double> beta;
  std::optional<double> k;
  std::optional<double> lip;
  std::string check;

  for (const char* name : {"upsilon", "gate", "minbeta", "simulate", "verify", "anderson", "wave"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_arg, "config file or inline JSON")->required();
    sub->add_option("--out", out_dir, "directory for the resolved config, report and CSV");
    sub->add_option("--seed", seed, "noise seed");
    sub->add_option("--replicas", replicas, "ensemble size");
    sub->add_option("--model", model_arg, "Levy model JSON (inline or path)");
    sub->add_option("--beta", beta, "time discount beta");
    sub->add_option("--k", k, "moment order k");
    sub->add_option("--lip", lip, "Lipschitz constant for the gate");
    sub->add_option("--check", check, "verify: young | lipschitz | orthogonality | isometry");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? spde::kExitOk : spde::kExitOperational;
  }

  const std::string subcommand = app.get_subcommands().front()->get_name();
  spde::ExperimentConfig config;
  spde::RunOptions opts;
  try {
    auto raw = spde::load_json_argument(config_arg);
    if (!raw.is_object()) throw spde::ConfigError("config: expected a JSON object");
    if (!model_arg.empty()) raw["model"] = spde::load_json_argument(model_arg);
    if (seed) raw["seed"] = *seed;
    if (replicas) raw["replicas"] = *replicas;
    if (beta) raw["norm"]["beta"] = *beta;
    if (k) raw["norm"]["k"] = *k;
    if (lip) raw["lip"] = *lip;
    if (!check.empty()) raw["check"] = check;
    config = spde::resolve_config(subcommand, raw);
    opts.workers = spde::worker_count();
  } catch (const std::exception& e) {
    std::cerr << "spde " << subcommand << ": usage error: " << e.what() << '\n';
    return spde::kExitOperational;
  }
  if (!out_dir.empty()) opts.out_dir = out_dir;
  return spde::run(subcommand, config, opts, std::cout, std::cerr);
}
