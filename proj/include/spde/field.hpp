#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "spde/grid.hpp"

namespace spde {

/// Where an ensemble came from. Replica r was driven by noise stream
/// (seed, first_replica + r).
struct Provenance {
  std::uint64_t seed = 0;
  std::uint64_t first_replica = 0;
  nlohmann::json model;
  nlohmann::json measure;
  nlohmann::json sigma;
  std::size_t iterations = 0;

  nlohmann::json to_json() const;
};

/// Replicas u_r[j, i] stored contiguously, replica-major then row-major.
class FieldEnsemble {
 public:
  FieldEnsemble(GridSpec grid, std::size_t replicas, double fill = 0.0);

  const GridSpec& grid() const { return grid_; }
  std::size_t replicas() const { return replicas_; }
  std::size_t cells() const { return grid_.cells(); }

  double& at(std::size_t r, std::size_t j, std::size_t i) { return data_[(r * grid_.n_t + j) * grid_.n_x + i]; }
  double at(std::size_t r, std::size_t j, std::size_t i) const {
    return data_[(r * grid_.n_t + j) * grid_.n_x + i];
  }
  std::span<double> replica(std::size_t r) { return std::span<double>(data_).subspan(r * cells(), cells()); }
  std::span<const double> replica(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cells(), cells());
  }
  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  /// Throws InvalidEnsembleError on any NaN or infinity.
  void validate() const;

  Provenance provenance;

 private:
  GridSpec grid_;
  std::size_t replicas_;
  std::vector<double> data_;
};

/// Throws ContractError unless a and b share grid and replica count.
void require_aligned(const FieldEnsemble& a, const FieldEnsemble& b);

/// a - b replica by replica.
FieldEnsemble difference(const FieldEnsemble& a, const FieldEnsemble& b);

}  // namespace spde
