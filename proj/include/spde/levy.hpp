#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "json.hpp"
#include "spde/grid.hpp"
#include "spde/kernel_table.hpp"

namespace spde {

class SignedMeasure;

enum class Family { gaussian, symmetric_stable };

/// Symmetric Levy generator: Psi(xi) = kappa*xi^2 (gaussian) or
/// c*|xi|^alpha (symmetric alpha-stable, 0 < alpha <= 2).
class LevyModel {
 public:
  static LevyModel gaussian(double kappa);
  static LevyModel stable(double alpha, double c);

  Family family() const { return family_; }
  double kappa() const { return kappa_; }
  double alpha() const { return alpha_; }
  double scale() const { return c_; }

  /// Tail index of Psi: 2 for gaussian, alpha for stable.
  double index() const { return family_ == Family::gaussian ? 2.0 : alpha_; }
  /// Coefficient in Psi(xi) = coefficient * |xi|^index.
  double coefficient() const { return family_ == Family::gaussian ? kappa_ : c_; }
  /// Dalang's integral converges iff the tail index exceeds 1.
  bool dalang_holds() const { return index() > 1.0; }
  /// Spatial spread of p_t: sqrt(2 kappa t) or (c t)^(1/alpha).
  double width(double t) const;

  nlohmann::json to_json() const;
  static LevyModel from_json(const nlohmann::json& j);

  bool operator==(const LevyModel&) const = default;

 private:
  LevyModel(Family f, double kappa, double alpha, double c)
      : family_(f), kappa_(kappa), alpha_(alpha), c_(c) {}

  Family family_;
  double kappa_;
  double alpha_;
  double c_;
};

double psi(const LevyModel& model, double xi);

enum class DensityMethod { closed_form, fourier_inversion };

DensityMethod density_method(const LevyModel& model);

/// p_t(x). Closed forms for gaussian and alpha in {1, 2}; other stable
/// indices invert e^{-t c |xi|^alpha} numerically, truncating the frequency
/// range where the integrand falls below 1e-12.
/// Throws DomainError for t <= 0, ToleranceError if the inversion does not
/// reach its accuracy target.
double transition_density(const LevyModel& model, double t, double x);

/// (P_t mu)(x) = sum_j w_j p_t(x - a_j) + int p_t(x - y) rho(y) dy.
double semigroup_apply(const LevyModel& model, double t, const SignedMeasure& mu, double x);

/// p_t([-half_width, half_width]^c), the mass a point source at the origin
/// leaks out of the simulation window by time t.
double mass_outside(const LevyModel& model, double t, double half_width);

/// p_t and its lattice tabulations. Tabulations are built on first request
/// and cached per grid; access is internally synchronized.
class TransitionKernel {
 public:
  explicit TransitionKernel(LevyModel model) : model_(model) {}

  const LevyModel& model() const { return model_; }
  DensityMethod method() const { return density_method(model_); }
  double operator()(double t, double x) const { return transition_density(model_, t, x); }

  std::shared_ptr<const KernelTable> table(const GridSpec& grid) const;

 private:
  using Key = std::tuple<double, double, std::size_t, std::size_t>;

  LevyModel model_;
  mutable std::mutex mutex_;
  mutable std::map<Key, std::shared_ptr<const KernelTable>> cache_;
};

}  // namespace spde
