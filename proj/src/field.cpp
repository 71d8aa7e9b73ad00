#include "spde/field.hpp"

#include <cmath>
#include <string>

#include "spde/errors.hpp"

namespace spde {

nlohmann::json Provenance::to_json() const {
  return {{"seed", seed},     {"first_replica", first_replica}, {"model", model},
          {"measure", measure}, {"sigma", sigma},               {"iterations", iterations}};
}

FieldEnsemble::FieldEnsemble(GridSpec grid, std::size_t replicas, double fill)
    : grid_(grid), replicas_(replicas), data_(replicas * grid.cells(), fill) {}

void FieldEnsemble::validate() const {
  for (std::size_t k = 0; k < data_.size(); ++k) {
    if (!std::isfinite(data_[k])) {
      const std::size_t r = k / cells();
      const std::size_t j = (k % cells()) / grid_.n_x;
      const std::size_t i = k % grid_.n_x;
      throw InvalidEnsembleError("non-finite value at replica " + std::to_string(r) + ", cell (" +
                                 std::to_string(j) + ", " + std::to_string(i) + ")");
    }
  }
}

void require_aligned(const FieldEnsemble& a, const FieldEnsemble& b) {
  if (!(a.grid() == b.grid())) throw ContractError("ensembles live on different grids");
  if (a.replicas() != b.replicas()) throw ContractError("ensembles have different replica counts");
}

FieldEnsemble difference(const FieldEnsemble& a, const FieldEnsemble& b) {
  require_aligned(a, b);
  FieldEnsemble out(a.grid(), a.replicas());
  auto o = out.values();
  auto x = a.values();
  auto y = b.values();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] = x[k] - y[k];
  out.provenance = a.provenance;
  return out;
}

}  // namespace spde
