#include "spde/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "spde/errors.hpp"

namespace spde {

namespace {

const std::set<std::string> kKeys = {"model", "sigma",    "mu",     "nu",  "kappa",   "grid",   "norm",
                                     "seed",  "replicas", "tol",    "max_iter", "method", "lip", "l_sigma",
                                     "check", "probes",   "output"};

double number_field(const nlohmann::json& j, const char* key) {
  if (!j.at(key).is_number()) throw ConfigError(std::string(key) + ": expected a number");
  return j.at(key).get<double>();
}

std::size_t count_field(const nlohmann::json& j, const char* key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ConfigError(where + ": expected a nonnegative integer");
  }
  return v.get<std::size_t>();
}

template <class F>
auto wrap(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

const GridSpec& ExperimentConfig::require_grid() const {
  if (!grid) throw ConfigError("grid: missing (expected {\"T\", \"dt\", \"L\", \"dx\"})");
  return *grid;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["model"] = model.to_json();
  j["sigma"] = sigma.to_json();
  j["mu"] = mu.to_json();
  j["nu"] = nu ? nu->to_json() : nlohmann::json(nullptr);
  j["kappa"] = kappa;
  j["grid"] = grid ? grid->to_json() : nlohmann::json(nullptr);
  j["norm"] = norm.to_json();
  j["seed"] = seed;
  j["replicas"] = replicas;
  j["tol"] = tol;
  j["max_iter"] = max_iter;
  j["method"] = method == ConvolutionMethod::fft ? "fft" : "direct";
  j["lip"] = lip ? nlohmann::json(*lip) : nlohmann::json(nullptr);
  j["l_sigma"] = l_sigma ? nlohmann::json(*l_sigma) : nlohmann::json(nullptr);
  j["check"] = check;
  nlohmann::json pr = nlohmann::json::array();
  for (const auto& p : probes) pr.push_back({p.j, p.i});
  j["probes"] = pr;
  j["output"] = {{"stride_t", stride_t}, {"stride_x", stride_x}};
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.contains(key)) throw ConfigError(key + ": unknown field");
  }
  ExperimentConfig c;
  if (j.contains("model")) c.model = wrap("model", [&] { return LevyModel::from_json(j.at("model")); });
  if (j.contains("sigma")) c.sigma = wrap("sigma", [&] { return SigmaSpec::from_json(j.at("sigma")); });
  if (j.contains("mu")) c.mu = wrap("mu", [&] { return SignedMeasure::from_json(j.at("mu")); });
  if (j.contains("nu") && !j.at("nu").is_null()) {
    c.nu = wrap("nu", [&] { return SignedMeasure::from_json(j.at("nu")); });
  }
  if (j.contains("kappa")) {
    c.kappa = number_field(j, "kappa");
    if (!(c.kappa > 0.0)) throw ConfigError("kappa: must be > 0");
  }
  if (j.contains("grid") && !j.at("grid").is_null()) {
    c.grid = wrap("grid", [&] { return GridSpec::from_json(j.at("grid")); });
  }
  if (j.contains("norm")) c.norm = wrap("norm", [&] { return NormParams::from_json(j.at("norm")); });
  if (j.contains("seed")) c.seed = static_cast<std::uint64_t>(count_field(j, "seed", "seed"));
  if (j.contains("replicas")) {
    c.replicas = count_field(j, "replicas", "replicas");
    if (c.replicas == 0) throw ConfigError("replicas: must be >= 1");
  }
  if (j.contains("tol")) {
    c.tol = number_field(j, "tol");
    if (!(c.tol > 0.0)) throw ConfigError("tol: must be > 0");
  }
  if (j.contains("max_iter")) {
    c.max_iter = count_field(j, "max_iter", "max_iter");
    if (c.max_iter == 0) throw ConfigError("max_iter: must be >= 1");
  }
  if (j.contains("method")) {
    const auto& m = j.at("method");
    if (m == "fft") {
      c.method = ConvolutionMethod::fft;
    } else if (m == "direct") {
      c.method = ConvolutionMethod::direct;
    } else {
      throw ConfigError("method: expected \"fft\" or \"direct\"");
    }
  }
  if (j.contains("lip") && !j.at("lip").is_null()) {
    c.lip = number_field(j, "lip");
    if (!(*c.lip >= 0.0)) throw ConfigError("lip: must be >= 0");
  }
  if (j.contains("l_sigma") && !j.at("l_sigma").is_null()) {
    c.l_sigma = number_field(j, "l_sigma");
    if (!(*c.l_sigma > 0.0)) throw ConfigError("l_sigma: must be > 0");
  }
  if (j.contains("check")) {
    if (!j.at("check").is_string()) throw ConfigError("check: expected a string");
    c.check = j.at("check").get<std::string>();
  }
  if (j.contains("probes")) {
    if (!j.at("probes").is_array()) throw ConfigError("probes: expected an array of [j, i]");
    for (const auto& p : j.at("probes")) {
      const auto nonneg = [](const nlohmann::json& v) {
        return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
      };
      if (!p.is_array() || p.size() != 2 || !nonneg(p[0]) || !nonneg(p[1])) {
        throw ConfigError("probes: each probe must be [j, i] with nonnegative integers");
      }
      c.probes.push_back({p[0].get<std::size_t>(), p[1].get<std::size_t>()});
    }
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    if (!o.is_object()) throw ConfigError("output: expected an object");
    if (o.contains("stride_t")) c.stride_t = count_field(o, "stride_t", "output.stride_t");
    if (o.contains("stride_x")) c.stride_x = count_field(o, "stride_x", "output.stride_x");
    if (c.stride_t == 0 || c.stride_x == 0) throw ConfigError("output: strides must be >= 1");
  }
  return c;
}

nlohmann::json load_json_argument(const std::string& text_or_path) {
  auto parsed = nlohmann::json::parse(text_or_path, nullptr, false);
  if (!parsed.is_discarded()) return parsed;
  std::ifstream is(text_or_path);
  if (!is) throw ConfigError("cannot parse \"" + text_or_path + "\" as JSON or open it as a file");
  std::stringstream ss;
  ss << is.rdbuf();
  auto from_file = nlohmann::json::parse(ss.str(), nullptr, false);
  if (from_file.is_discarded()) throw ConfigError(text_or_path + ": not valid JSON");
  return from_file;
}

}  // namespace spde
