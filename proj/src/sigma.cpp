#include "spde/sigma.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "spde/errors.hpp"

namespace spde {

SigmaSpec::SigmaSpec(Kind kind, double a, double lambda, std::vector<double> z, std::vector<double> v)
    : kind_(kind), a_(a), lambda_(lambda), z_(std::move(z)), v_(std::move(v)) {
  if (kind_ == Kind::tabulated) {
    for (std::size_t k = 1; k < z_.size(); ++k) {
      lip_ = std::max(lip_, std::abs((v_[k] - v_[k - 1]) / (z_[k] - z_[k - 1])));
    }
  } else {
    lip_ = std::abs(lambda_);
  }
  spot_check();
}

SigmaSpec SigmaSpec::linear(double lambda) {
  if (!std::isfinite(lambda)) throw ParameterError("sigma: lambda must be finite");
  return SigmaSpec(Kind::linear, 0.0, lambda, {}, {});
}

SigmaSpec SigmaSpec::affine(double a, double lambda) {
  if (!std::isfinite(a) || !std::isfinite(lambda)) throw ParameterError("sigma: coefficients must be finite");
  return SigmaSpec(Kind::affine, a, lambda, {}, {});
}

SigmaSpec SigmaSpec::tabulated(std::vector<double> z, std::vector<double> values) {
  if (z.size() < 2 || z.size() != values.size()) {
    throw ParameterError("sigma: table needs at least two (z, sigma) nodes of equal count");
  }
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (!std::isfinite(z[k]) || !std::isfinite(values[k])) throw ParameterError("sigma: non-finite table entry");
    if (k > 0 && !(z[k] > z[k - 1])) throw ParameterError("sigma: table nodes must increase strictly");
  }
  return SigmaSpec(Kind::tabulated, 0.0, 0.0, std::move(z), std::move(values));
}

SigmaSpec SigmaSpec::absolute() { return tabulated({-1.0, 0.0, 1.0}, {1.0, 0.0, 1.0}); }

double SigmaSpec::operator()(double z) const {
  switch (kind_) {
    case Kind::linear:
      return lambda_ * z;
    case Kind::affine:
      return a_ + lambda_ * z;
    case Kind::tabulated: {
      // Segment k spans [z_k, z_{k+1}]; the end segments extend linearly.
      auto it = std::upper_bound(z_.begin() + 1, z_.end() - 1, z);
      const auto k = static_cast<std::size_t>(it - z_.begin()) - 1;
      const double slope = (v_[k + 1] - v_[k]) / (z_[k + 1] - z_[k]);
      return v_[k] + slope * (z - z_[k]);
    }
  }
  return 0.0;
}

bool SigmaSpec::is_zero() const {
  switch (kind_) {
    case Kind::linear:
      return lambda_ == 0.0;
    case Kind::affine:
      return a_ == 0.0 && lambda_ == 0.0;
    case Kind::tabulated:
      return std::all_of(v_.begin(), v_.end(), [](double v) { return v == 0.0; });
  }
  return false;
}

double SigmaSpec::lower_linear_bound() const {
  if (value_at_zero() != 0.0) return 0.0;
  if (kind_ != Kind::tabulated) return std::abs(lambda_);
  // sigma(z)/z is monotone between nodes when sigma(0) = 0, so its infimum is
  // attained at a node or at the end slopes.
  double lo = std::min(std::abs(v_[1] - v_[0]) / (z_[1] - z_[0]),
                       std::abs(v_.back() - v_[v_.size() - 2]) / (z_.back() - z_[z_.size() - 2]));
  for (std::size_t k = 0; k < z_.size(); ++k) {
    if (z_[k] != 0.0) lo = std::min(lo, std::abs(v_[k] / z_[k]));
  }
  return lo;
}

void SigmaSpec::apply(std::span<const double> z, std::span<double> out) const {
  if (kind_ == Kind::linear) {
    for (std::size_t k = 0; k < z.size(); ++k) out[k] = lambda_ * z[k];
    return;
  }
  for (std::size_t k = 0; k < z.size(); ++k) out[k] = (*this)(z[k]);
}

void SigmaSpec::spot_check() const {
  double lo = -4.0;
  double hi = 4.0;
  if (kind_ == Kind::tabulated) {
    const double pad = 0.5 * (z_.back() - z_.front());
    lo = z_.front() - pad;
    hi = z_.back() + pad;
  }
  std::mt19937_64 gen(0x5eedu);
  std::uniform_real_distribution<double> u(lo, hi);
  for (int n = 0; n < 256; ++n) {
    const double a = u(gen);
    const double b = u(gen);
    const double lhs = std::abs((*this)(a) - (*this)(b));
    if (lhs > lip_ * std::abs(a - b) * (1.0 + 1e-12) + 1e-300) {
      throw ParameterError("sigma: Lipschitz spot check failed");
    }
  }
}

nlohmann::json SigmaSpec::to_json() const {
  switch (kind_) {
    case Kind::linear:
      return {{"kind", "linear"}, {"lambda", lambda_}};
    case Kind::affine:
      return {{"kind", "affine"}, {"a", a_}, {"lambda", lambda_}};
    case Kind::tabulated:
      return {{"kind", "tabulated"}, {"z", z_}, {"sigma", v_}};
  }
  return {};
}

SigmaSpec SigmaSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw ConfigError("sigma.kind: missing (expected linear, affine, abs or tabulated)");
  }
  auto number = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) {
      throw ConfigError(std::string("sigma.") + key + ": missing or not a number");
    }
    return j.at(key).get<double>();
  };
  auto array = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_array()) {
      throw ConfigError(std::string("sigma.") + key + ": missing or not an array");
    }
    std::vector<double> v;
    for (const auto& e : j.at(key)) {
      if (!e.is_number()) throw ConfigError(std::string("sigma.") + key + ": non-numeric entry");
      v.push_back(e.get<double>());
    }
    return v;
  };
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "linear") return linear(number("lambda"));
  if (kind == "affine") return affine(number("a"), number("lambda"));
  if (kind == "abs") return absolute();
  if (kind == "tabulated") return tabulated(array("z"), array("sigma"));
  throw ConfigError("sigma.kind: unknown kind \"" + kind + "\"");
}

}  // namespace spde
