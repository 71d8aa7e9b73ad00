#pragma once

#include <cstddef>

#include "json.hpp"

namespace spde {

/// Space-time lattice: rows t_j = j*dt (j < n_t) cover [0, T); columns
/// x_i = -L + i*dx (i < n_x) cover [-L, L). x = 0 is column n_x/2.
struct GridSpec {
  double T = 1.0;
  double dt = 1.0;
  double L = 1.0;
  double dx = 1.0;
  std::size_t n_t = 1;
  std::size_t n_x = 1;

  /// Validates that T/dt and 2L/dx are integers (within 1e-9).
  static GridSpec make(double T, double dt, double L, double dx);

  double t(std::size_t j) const { return static_cast<double>(j) * dt; }
  double x(std::size_t i) const { return -L + static_cast<double>(i) * dx; }
  std::size_t cells() const { return n_t * n_x; }
  std::size_t center() const { return n_x / 2; }

  /// Column index nearest to position x (clamped to the lattice).
  std::size_t nearest_column(double x) const;

  /// Enforces kappa*dt <= dx (wave propagation).
  void require_cfl(double kappa) const;

  bool operator==(const GridSpec&) const = default;

  nlohmann::json to_json() const;
  static GridSpec from_json(const nlohmann::json& j);
};

}  // namespace spde
