#include "spde/grid.hpp"

#include <cmath>
#include <string>

#include "spde/errors.hpp"

namespace spde {

namespace {

std::size_t exact_ratio(double num, double den, const char* what) {
  const double ratio = num / den;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, rounded)) {
    throw ParameterError(std::string("grid: ") + what + " is not a positive integer");
  }
  return static_cast<std::size_t>(rounded);
}

}  // namespace

GridSpec GridSpec::make(double T, double dt, double L, double dx) {
  if (!(T > 0.0) || !(dt > 0.0) || !(L > 0.0) || !(dx > 0.0)) {
    throw ParameterError("grid: T, dt, L, dx must all be positive");
  }
  GridSpec g;
  g.T = T;
  g.dt = dt;
  g.L = L;
  g.dx = dx;
  g.n_t = exact_ratio(T, dt, "T/dt");
  g.n_x = exact_ratio(2.0 * L, dx, "2L/dx");
  return g;
}

std::size_t GridSpec::nearest_column(double x) const {
  const double idx = std::round((x + L) / dx);
  if (idx <= 0.0) return 0;
  if (idx >= static_cast<double>(n_x - 1)) return n_x - 1;
  return static_cast<std::size_t>(idx);
}

void GridSpec::require_cfl(double kappa) const {
  if (kappa * dt > dx * (1.0 + 1e-12)) {
    throw ParameterError("grid: CFL violation, kappa*dt > dx");
  }
}

nlohmann::json GridSpec::to_json() const {
  return {{"T", T}, {"dt", dt}, {"L", L}, {"dx", dx}};
}

GridSpec GridSpec::from_json(const nlohmann::json& j) {
  for (const char* key : {"T", "dt", "L", "dx"}) {
    if (!j.contains(key) || !j.at(key).is_number()) {
      throw ConfigError(std::string("grid.") + key + ": missing or not a number");
    }
  }
  return make(j.at("T").get<double>(), j.at("dt").get<double>(), j.at("L").get<double>(),
              j.at("dx").get<double>());
}

}  // namespace spde
