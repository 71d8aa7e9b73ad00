#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "spde/field.hpp"
#include "spde/measures.hpp"

namespace spde {

/// (k, beta, eta) plus the discretization of the shift supremum and the
/// time integral.
struct NormParams {
  double k = 2.0;
  double beta = 1.0;
  WeightMeasure eta = WeightMeasure::lebesgue();
  /// Shifts z = s dx with |s| <= shift_cells; default n_x / 4.
  std::optional<std::size_t> shift_cells;
  /// Time truncation T_norm; default max(T, 8 / beta).
  std::optional<double> time_horizon;
  std::size_t bootstrap_resamples = 200;
  std::uint64_t bootstrap_seed = 0x6e6f726dULL;

  void validate() const;
  std::size_t shifts(const GridSpec& grid) const { return shift_cells.value_or(grid.n_x / 4); }
  double horizon(const GridSpec& grid) const;

  nlohmann::json to_json() const;
  static NormParams from_json(const nlohmann::json& j);
};

struct NormEstimate {
  double value = 0.0;       ///< the norm (not squared)
  double std_error = 0.0;   ///< of value
  double squared = 0.0;     ///< value^2
  double squared_std_error = 0.0;
  double tail_bound = 0.0;  ///< bound on the omitted t > horizon part of squared
  double horizon = 0.0;     ///< time actually covered by the sum
  double shift_extent = 0.0;
  std::size_t replicas = 0;

  nlohmann::json to_json() const;
};

/// mean_r |u_r[j, i]|^k. Throws InvalidEnsembleError on non-finite input or output.
std::vector<double> moment_field(const FieldEnsemble& ens, double k);

/// Point value of N^2 from a k-th moment field.
double norm_squared_from_moments(std::span<const double> moments, const GridSpec& grid, const NormParams& p);

/// N-hat with bootstrap error bars over replicas.
NormEstimate norm_estimate(const FieldEnsemble& ens, const NormParams& p);

/// Per-replica term Q = sum_j e^{-beta t_j} dt sum_i eta(x_i) dx u[j, i]^2 of M-hat^2.
double m_norm_term(std::span<const double> field, const GridSpec& grid, double beta, const WeightMeasure& eta,
                   double horizon);

/// M^2 from a second-moment field E u^2 (e.g. the Volterra oracle): the
/// m_norm_term sum with u^2 replaced by the moment.
double m_norm_squared_of_moments(std::span<const double> second_moment, const GridSpec& grid, double beta,
                                 const WeightMeasure& eta, double horizon);

/// M-hat from per-replica terms: M^2 = mean(Q), error from the sample spread.
NormEstimate m_norm_from_terms(std::span<const double> terms, const GridSpec& grid, double beta, double horizon,
                               double max_row_sum);

/// M-hat: k = 2, no shift supremum.
NormEstimate m_norm_estimate(const FieldEnsemble& ens, double beta, const WeightMeasure& eta,
                             std::optional<double> horizon = std::nullopt);

}  // namespace spde
