#pragma once

#include <functional>
#include <optional>
#include <string>

#include "json.hpp"
#include "spde/levy.hpp"

namespace spde {

/// Value of a Dalang-type integral, or a divergence verdict.
struct UpsilonValue {
  bool diverges = false;
  double value = 0.0;
  double abs_error = 0.0;

  nlohmann::json to_json() const;
};

/// z_k: exact z_2 = 1, Carlen-Kree upper bound 2 sqrt(k) otherwise.
double burkholder_constant(double k);

/// Upsilon(beta) = (1/2pi) int dxi / (beta + 2 Psi(xi)). Computed on
/// [0, inf) through a tail substitution; divergence (tail index <= 1) is
/// decided analytically and never by quadrature.
UpsilonValue upsilon(const LevyModel& model, double beta);

struct GateParams {
  double k = 2.0;
  double beta = 1.0;
  double lip_sigma = 0.0;
  std::optional<double> l_sigma;

  void validate() const;
};

struct GateReport {
  bool pass = false;
  UpsilonValue upsilon;
  double threshold = 0.0;  ///< 1/(z_k Lip)^2, +inf when Lip = 0
  double z_k = 1.0;
  double contraction = 0.0;  ///< z_k Lip sqrt(Upsilon), the Picard contraction factor
  std::string reason;

  nlohmann::json to_json() const;
};

/// Decides Upsilon(beta) < 1/(z_k Lip)^2. Values within the quadrature
/// error of the threshold count as not strictly below it.
GateReport gate_from_upsilon(const UpsilonValue& ups, double k, double lip_sigma);

GateReport existence_gate(const LevyModel& model, const GateParams& params);

/// Smallest beta with Upsilon(beta) < 1/(z_k Lip)^2 (bisection on the
/// decreasing map beta -> Upsilon(beta)); 0 when Lip = 0.
double min_beta(const std::function<UpsilonValue(double)>& ups, double k, double lip_sigma);
double min_beta(const LevyModel& model, double k, double lip_sigma);

struct SharpnessReport {
  bool pass = false;
  UpsilonValue upsilon;
  double threshold = 0.0;

  nlohmann::json to_json() const;
};

/// Necessary condition Upsilon(beta) < 1/L_sigma^2 for a solution with
/// finite M_beta norms when |sigma(z)/z| >= L_sigma.
SharpnessReport sharpness_bound(const LevyModel& model, double beta, double l_sigma);

}  // namespace spde
