#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "spde/dalang.hpp"
#include "spde/kernel_table.hpp"
#include "spde/measures.hpp"
#include "spde/picard.hpp"

namespace spde {

/// d'Alembert propagator Gamma_t(x) = 1/2 on |x| <= kappa t.
class WavePropagator {
 public:
  explicit WavePropagator(double kappa);

  double kappa() const { return kappa_; }
  double operator()(double t, double x) const;
  /// ||Gamma_t||_{L^2}^2 = kappa t / 2.
  double l2_norm_squared(double t) const;
  /// Lattice tabulation; the light-cone edge counts as inside up to a
  /// relative 1e-12 so that kappa t = m dx lands on the lattice.
  std::shared_ptr<const KernelTable> table(const GridSpec& grid) const;

 private:
  double kappa_;
};

/// int_0^inf e^{-beta t} ||Gamma_t||^2 dt by quadrature (closed form kappa / (2 beta^2)).
UpsilonValue wave_upsilon(double kappa, double beta);

struct WaveDeterministic {
  double density = 0.0;       ///< absolutely continuous part at x
  std::vector<Atom> atoms;    ///< d'Alembert translates of the atoms of u0
};

/// (Gamma'_t * u0)(x) + (Gamma_t * v0)(x): the density part of u0 translated
/// by +-kappa t with weight 1/2, plus 1/2 v0([x - kappa t, x + kappa t]).
/// Atoms of u0 travel as atoms and are reported separately.
WaveDeterministic wave_deterministic_part(const SignedMeasure& u0, const std::optional<SignedMeasure>& v0,
                                          double kappa, double t, double x);

struct WaveGridDeterministic {
  std::vector<double> field;           ///< n_t x n_x; atoms binned as weight / dx
  double max_atom_offset = 0.0;        ///< largest |atom - nearest column|
};

WaveGridDeterministic wave_deterministic_field(const SignedMeasure& u0, const std::optional<SignedMeasure>& v0,
                                               double kappa, const GridSpec& grid);

/// Count of cells (over all replicas) that are nonzero although they lie
/// farther than kappa t + margin from the support of u0 and v0. Zero for
/// every solution with sigma(0) = 0.
std::size_t light_cone_violations(const FieldEnsemble& u, const SignedMeasure& u0,
                                  const std::optional<SignedMeasure>& v0, double kappa, double margin);

/// Picard iteration with Gamma in place of p. Throws GateRefusal when
/// wave_upsilon(kappa, beta) >= 1/(z_k Lip)^2 and ParameterError when
/// kappa dt > dx.
PicardResult wave_picard_solve(const SigmaSpec& sigma, const SignedMeasure& u0,
                               const std::optional<SignedMeasure>& v0, double kappa, const GridSpec& grid,
                               const NormParams& norm, std::uint64_t seed, std::size_t replicas, double tol,
                               std::size_t max_iter, const SolverOptions& opts = {});

}  // namespace spde
