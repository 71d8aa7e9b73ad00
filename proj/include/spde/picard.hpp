#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "spde/convolution.hpp"
#include "spde/dalang.hpp"
#include "spde/errors.hpp"
#include "spde/field.hpp"
#include "spde/levy.hpp"
#include "spde/measures.hpp"
#include "spde/norms.hpp"
#include "spde/sigma.hpp"

namespace spde {

/// Raised when the existence gate refuses a run; carries the gate report.
class GateRefusal : public Error {
 public:
  explicit GateRefusal(GateReport report)
      : Error("existence gate refused: " + report.reason), report_(std::move(report)) {}
  const GateReport& report() const { return report_; }

 private:
  GateReport report_;
};

struct SolverOptions {
  ConvolutionMethod method = ConvolutionMethod::fft;
  std::size_t workers = 1;
};

struct PicardReport {
  GateReport gate;
  /// distances[n-1] = N-hat(u^(n) - u^(n-1)), u^(0) = 0.
  std::vector<NormEstimate> distances;
  /// ratios[n-1] = distances[n] / distances[n-1].
  std::vector<double> ratios;
  std::size_t iterations = 0;
  bool converged = false;
  std::string warning;
  /// Mass a point source can leak out of [-L, L] by time T.
  double leakage_bound = 0.0;
  /// Solver-specific metadata (e.g. atom placement offsets).
  nlohmann::json notes = nlohmann::json::object();

  nlohmann::json to_json() const;
};

struct PicardResult {
  FieldEnsemble ensemble;
  std::vector<double> deterministic;  ///< n_t x n_x
  PicardReport report;
};

/// D[j, i] = (P_{t_j} mu)(x_i) for j >= 1. Row 0 carries only the density
/// part of mu; atoms enter through P_t mu for t > 0.
std::vector<double> deterministic_part(const LevyModel& model, const SignedMeasure& mu, const GridSpec& grid);

/// Upper bound on the mass of P_T mu leaving [-L, L], as a fraction of |mu|(R).
double domain_leakage(const LevyModel& model, const SignedMeasure& mu, const GridSpec& grid);

/// Kernel-generic Picard iteration u^(n+1) = D + K * (sigma(u^(n)) dW), u^(0) = 0.
/// Replica r uses noise stream (seed, r) for every iterate.
PicardResult picard_iterate(const std::shared_ptr<const SpectralKernel>& kernel, std::vector<double> deterministic,
                            const SigmaSpec& sigma, const GridSpec& grid, const NormParams& norm, std::uint64_t seed,
                            std::size_t replicas, double tol, std::size_t max_iter, const SolverOptions& opts);

/// Heat equation driven by the Levy generator. Throws GateRefusal when
/// Upsilon(beta) >= 1/(z_k Lip)^2.
PicardResult picard_solve(const LevyModel& model, const SigmaSpec& sigma, const SignedMeasure& mu,
                          const GridSpec& grid, const NormParams& norm, std::uint64_t seed, std::size_t replicas,
                          double tol, std::size_t max_iter, const SolverOptions& opts = {});

/// E[u_n^2] for sigma(u) = lambda u under the same discretization:
///   f[n] = D[n]^2 + lambda^2 sum_{j<n} sum_m K(n-j, i-m)^2 f[j, m] dt dx.
std::vector<double> second_moment_volterra(const std::shared_ptr<const SpectralKernel>& squared_kernel,
                                           std::span<const double> deterministic, double lambda,
                                           const GridSpec& grid);
std::vector<double> second_moment_volterra(const LevyModel& model, double lambda, const SignedMeasure& mu,
                                           const GridSpec& grid);

struct MarchOptions {
  double beta = 2.0;
  WeightMeasure eta = WeightMeasure::lebesgue();
  double horizon = 0.0;  ///< 0 means the whole grid
  std::size_t stride_t = 1;
  std::size_t stride_x = 1;
  std::size_t workers = 1;
  std::size_t block = 64;
};

/// Streaming ensemble statistics of the one-step semigroup march.
struct MarchSummary {
  GridSpec grid;
  std::size_t stride_t = 1;
  std::size_t stride_x = 1;
  std::size_t rows = 0;  ///< strided rows
  std::size_t cols = 0;  ///< strided columns
  std::vector<double> mean;    ///< rows x cols, E u
  std::vector<double> second;  ///< rows x cols, E u^2
  std::vector<double> q_solution;  ///< per replica M-hat^2 term of u
  std::vector<double> q_noise;     ///< per replica M-hat^2 term of u - D
  std::size_t stencil_half_width = 0;
  std::size_t replicas = 0;
};

/// Monte Carlo for the same scheme via v[n+1] = S (v[n] + g[n] / dx), S = p_dt dx
/// sampled on the lattice and clipped to the window; u[n] = D[n] + v[n]. S^d
/// agrees with the sampled p_{d dt} dx up to aliasing and boundary killing.
/// Replicas run in fixed blocks merged in block order, so the result does not
/// depend on the worker count.
MarchSummary march_solve(const LevyModel& model, const SigmaSpec& sigma, std::span<const double> deterministic,
                         const GridSpec& grid, std::uint64_t seed, std::size_t replicas, const MarchOptions& opts);

}  // namespace spde
