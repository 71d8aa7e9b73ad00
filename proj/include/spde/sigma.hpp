#pragma once

#include <span>
#include <vector>

#include "json.hpp"

namespace spde {

/// Lipschitz nonlinearity sigma: lambda z, a + lambda z, or a piecewise
/// linear table extended beyond its ends with the end slopes.
class SigmaSpec {
 public:
  enum class Kind { linear, affine, tabulated };

  static SigmaSpec linear(double lambda);
  static SigmaSpec affine(double a, double lambda);
  static SigmaSpec tabulated(std::vector<double> z, std::vector<double> values);
  /// |z| as a three-node table.
  static SigmaSpec absolute();

  Kind kind() const { return kind_; }
  double operator()(double z) const;
  double lip() const { return lip_; }
  double value_at_zero() const { return (*this)(0.0); }
  /// sigma vanishes identically.
  bool is_zero() const;
  /// Lower linear bound inf |sigma(z)/z| over z != 0 (0 when sigma(0) != 0).
  double lower_linear_bound() const;

  void apply(std::span<const double> z, std::span<double> out) const;

  nlohmann::json to_json() const;
  static SigmaSpec from_json(const nlohmann::json& j);

 private:
  SigmaSpec(Kind kind, double a, double lambda, std::vector<double> z, std::vector<double> v);
  void spot_check() const;

  Kind kind_;
  double a_ = 0.0;
  double lambda_ = 0.0;
  std::vector<double> z_;
  std::vector<double> v_;
  double lip_ = 0.0;
};

}  // namespace spde
