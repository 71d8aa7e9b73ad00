#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "spde/convolution.hpp"
#include "spde/field.hpp"
#include "spde/norms.hpp"
#include "spde/picard.hpp"
#include "spde/sigma.hpp"

namespace spde {

/// Verdict of an inequality or identity check: pass iff the violation stays
/// within `slack`.
struct CheckReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool pass = false;
  nlohmann::json details = nlohmann::json::object();

  nlohmann::json to_json() const;
};

/// Relative allowance for grid bias in inequality checks.
inline constexpr double kDiscretizationSlack = 0.05;

/// Stochastic convolution of every replica: out_r = K * (Z_r dW_r) with
/// noise stream (seed, r). A single-replica Z is shared by `replicas`
/// noise realizations.
FieldEnsemble convolve_ensemble(const std::shared_ptr<const SpectralKernel>& kernel, const FieldEnsemble& z,
                                std::uint64_t seed, std::size_t replicas, const SolverOptions& opts = {});

/// N(K * Z dW) <= z_k sqrt(Upsilon) N(Z); pass iff
/// lhs <= rhs (1 + 0.05) + 3 (combined bootstrap error).
CheckReport young_check(const std::shared_ptr<const SpectralKernel>& kernel, double upsilon_value,
                        const FieldEnsemble& z, const NormParams& p, std::uint64_t seed, std::size_t replicas,
                        const SolverOptions& opts = {});

/// N(sigma(Z) - sigma(Z*)) <= Lip N(Z - Z*) on shared replicas.
CheckReport lipschitz_composition_check(const FieldEnsemble& z, const FieldEnsemble& z_star,
                                        const SigmaSpec& sigma, const NormParams& p);

/// M(u)^2 = M(D)^2 + M(u - D)^2 estimated on one ensemble (D deterministic).
/// Pass iff the mean per-replica defect lies within 3 standard errors.
CheckReport orthogonality_check(const FieldEnsemble& u, std::span<const double> deterministic, double beta,
                                const WeightMeasure& eta, std::optional<double> horizon = std::nullopt);

/// Same identity from per-replica M-hat^2 terms of u and u - D.
CheckReport orthogonality_from_terms(std::span<const double> q_solution, std::span<const double> q_noise,
                                     double q_deterministic);

struct Probe {
  std::size_t j = 0;
  std::size_t i = 0;
};

/// Monte Carlo variance of K * (Z dW) at probes against the isometry sum
/// sum_{j<n} sum_m K(n-j, i-m)^2 Z[j, m]^2 dt dx (deterministic Z). Replicas
/// are streamed; nothing is stored beyond the probe values.
CheckReport isometry_check(const std::shared_ptr<const SpectralKernel>& kernel, std::span<const double> z,
                           const GridSpec& grid, const std::vector<Probe>& probes, std::uint64_t seed,
                           std::size_t replicas, const SolverOptions& opts = {});

/// Exact isometry sum for deterministic Z at every cell.
std::vector<double> isometry_variance(const KernelTable& kernel, std::span<const double> z, const GridSpec& grid);

}  // namespace spde
