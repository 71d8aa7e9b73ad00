#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "spde/errors.hpp"
#include "spde/harness.hpp"

using namespace spde;
using nlohmann::json;

namespace {

json gaussian_gate(double beta) {
  return json::parse(R"({"model": {"family": "gaussian", "kappa": 1}, "sigma": {"kind": "linear", "lambda": 1},
                         "norm": {"k": 2, "beta": )" + std::to_string(beta) + "}}");
}

std::string config_error(const std::string& sub, const json& raw) {
  try {
    resolve_config(sub, raw);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config round trip preserves every field") {
  auto raw = gaussian_gate(3.0);
  raw["grid"] = {{"T", 1.0}, {"dt", 0.125}, {"L", 2.0}, {"dx", 0.25}};
  raw["seed"] = 42;
  raw["replicas"] = 7;
  raw["method"] = "direct";
  raw["lip"] = 0.5;
  raw["check"] = "isometry";
  raw["probes"] = json::array({json::array({3, 4})});
  raw["output"] = {{"stride_t", 2}, {"stride_x", 3}};
  const auto c = ExperimentConfig::from_json(raw);
  CHECK(c.seed == 42);
  CHECK(c.replicas == 7);
  CHECK(c.method == ConvolutionMethod::direct);
  CHECK(c.gate_lip() == 0.5);
  CHECK(c.stride_x == 3);
  const auto back = ExperimentConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
}

TEST_CASE("config diagnostics name the offending field") {
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(json{{"colour", 1}}), doctest::Contains("colour"), ConfigError);
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(json{{"replicas", -3}}), doctest::Contains("replicas"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(json{{"model", {{"family", "cauchy"}}}}),
                       doctest::Contains("model"), ConfigError);
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(json{{"grid", {{"T", 1.0}}}}), doctest::Contains("grid"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(json{{"method", "spectral"}}), doctest::Contains("method"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(ExperimentConfig{}.require_grid(), doctest::Contains("grid"), ConfigError);
  CHECK(ExperimentConfig::from_json(json{{"seed", 20240601}}).seed == 20240601u);
}

TEST_CASE("load_json_argument accepts inline text and files") {
  CHECK(load_json_argument(R"({"seed": 3})")["seed"] == 3);
  const auto path = std::filesystem::temp_directory_path() / "spde_test_config.json";
  std::ofstream(path) << R"({"seed": 4})";
  CHECK(load_json_argument(path.string())["seed"] == 4);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_json_argument("/nonexistent/spde.json"), ConfigError);
}

TEST_CASE("subcommand requirements") {
  CHECK(known_subcommand("anderson"));
  CHECK_FALSE(known_subcommand("solve"));
  CHECK(config_error("simulate", json::object()) != "");
  CHECK(config_error("simulate", gaussian_gate(2.0)).find("grid") != std::string::npos);
  CHECK(config_error("gate", json{{"norm", {{"beta", 2.0}}}}).find("model") != std::string::npos);
  auto verify = gaussian_gate(2.0);
  verify["grid"] = {{"T", 1.0}, {"dt", 0.125}, {"L", 2.0}, {"dx", 0.25}};
  CHECK(config_error("verify", verify).find("check") != std::string::npos);
  // anderson accepts {} and fills the canned run.
  const auto a = resolve_config("anderson", json::object());
  CHECK(a.grid.has_value());
  CHECK(a.replicas == 10000);
  CHECK(a.norm.beta == 2.0);
  // User values override the canned ones.
  CHECK(resolve_config("anderson", json{{"replicas", 12}}).replicas == 12);
}

TEST_CASE("gate and minbeta through the harness") {
  std::ostringstream out, err;
  CHECK(run("gate", resolve_config("gate", gaussian_gate(2.0)), {}, out, err) == kExitOk);
  const auto rep = json::parse(out.str());
  CHECK(rep["pass"] == true);
  CHECK(rep["upsilon"].get<double>() == doctest::Approx(0.25));

  std::ostringstream out2, err2;
  auto stable = gaussian_gate(2.0);
  stable["model"] = {{"family", "stable"}, {"alpha", 1.0}, {"c", 1.0}};
  CHECK(run("gate", resolve_config("gate", stable), {}, out2, err2) == kExitGateRefused);

  const auto mb = execute("minbeta", resolve_config("minbeta", gaussian_gate(2.0)), {});
  CHECK(mb.status == kExitOk);
  CHECK(mb.report["min_beta"].get<double>() == doctest::Approx(0.125).epsilon(1e-5));

  const auto up = execute("upsilon", resolve_config("upsilon", gaussian_gate(0.5)), {});
  CHECK(up.report["upsilon"].get<double>() == doctest::Approx(0.5));
}

TEST_CASE("verify and simulate write artifacts") {
  const auto dir = std::filesystem::temp_directory_path() / "spde_test_artifacts";
  std::filesystem::remove_all(dir);
  auto raw = gaussian_gate(2.0);
  raw["grid"] = {{"T", 0.25}, {"dt", 1.0 / 32}, {"L", 1.0}, {"dx", 1.0 / 8}};
  raw["replicas"] = 50;
  raw["check"] = "young";
  std::ostringstream out, err;
  CHECK(run("verify", resolve_config("verify", raw), {dir, 1}, out, err) == kExitOk);
  CHECK(std::filesystem::exists(dir / "verify.config.json"));
  CHECK(std::filesystem::exists(dir / "verify.report.json"));
  const auto sim = execute("simulate", resolve_config("simulate", raw), {dir, 1});
  CHECK(sim.status == kExitOk);
  CHECK(std::filesystem::exists(dir / "simulate.csv"));
  // The emitted config reproduces the run.
  std::ifstream cfg(dir / "simulate.config.json");
  const auto again = execute("simulate", ExperimentConfig::from_json(json::parse(cfg)), {});
  CHECK(again.report["norm"] == sim.report["norm"]);
  std::filesystem::remove_all(dir);
}

TEST_CASE("operational errors map to exit status 1") {
  auto raw = gaussian_gate(2.0);
  raw["grid"] = {{"T", 0.25}, {"dt", 1.0 / 32}, {"L", 1.0}, {"dx", 1.0 / 8}};
  raw["check"] = "nonsense";
  std::ostringstream out, err;
  CHECK(run("verify", resolve_config("verify", raw), {}, out, err) == kExitOperational);
  CHECK_FALSE(err.str().empty());
}
