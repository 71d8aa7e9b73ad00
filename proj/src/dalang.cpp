#include "spde/dalang.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "spde/errors.hpp"
#include "spde/quadrature.hpp"

namespace spde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool strictly_below(const UpsilonValue& ups, double threshold) {
  if (ups.diverges) return false;
  if (std::isinf(threshold)) return true;
  const double margin = std::max(ups.abs_error, 1e-12 * threshold);
  return ups.value + margin < threshold;
}

nlohmann::json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

nlohmann::json UpsilonValue::to_json() const {
  if (diverges) return {{"diverges", true}, {"upsilon", nullptr}};
  return {{"diverges", false}, {"upsilon", value}, {"abs_error", abs_error}};
}

double burkholder_constant(double k) {
  if (!(k >= 2.0)) throw ParameterError("Burkholder constant requires k >= 2");
  if (k == 2.0) return 1.0;
  return 2.0 * std::sqrt(k);
}

UpsilonValue upsilon(const LevyModel& model, double beta) {
  if (!(beta > 0.0)) throw ParameterError("upsilon requires beta > 0");
  // Integrand ~ 1/(2 c |xi|^alpha) at infinity: not integrable for alpha <= 1.
  if (!model.dalang_holds()) return {true, kInf, 0.0};
  const double alpha = model.index();
  const double c = model.coefficient();
  auto f = [&](double xi) { return 1.0 / (beta + 2.0 * psi(model, xi)); };
  // Split at the crossover 2 Psi(X) = beta. On [X, inf) the map xi = X s^{-p},
  // p = 1/(alpha - 1), turns the xi^{-alpha} tail into a bounded integrand on
  // (0, 1]; u/(1-u) would leave an endpoint singularity for alpha < 2.
  const double x_split = std::pow(beta / (2.0 * c), 1.0 / alpha);
  const double p = 1.0 / (alpha - 1.0);
  const double limit = p * x_split / (2.0 * c * std::pow(x_split, alpha));  // value at s = 0
  auto tail = [&](double s) {
    const double stretch = std::pow(s, -p);
    if (!std::isfinite(stretch)) return limit;
    return f(x_split * stretch) * p * x_split * stretch / s;
  };
  quad::Options opt;
  opt.abs_tol = 1e-13;
  opt.rel_tol = 1e-13;
  const auto head = quad::integrate(f, 0.0, x_split, opt);
  const auto rest = quad::integrate(tail, 0.0, 1.0, opt);
  if (!head.converged || !rest.converged) throw ToleranceError("upsilon: quadrature did not converge");
  // (1/2pi) * 2 * int_0^inf by evenness.
  return {false, (head.value + rest.value) / std::numbers::pi, (head.abs_error + rest.abs_error) / std::numbers::pi};
}

void GateParams::validate() const {
  if (!(k >= 2.0)) throw ParameterError("gate: k must be >= 2");
  if (!(beta > 0.0)) throw ParameterError("gate: beta must be > 0");
  if (!(lip_sigma >= 0.0)) throw ParameterError("gate: Lipschitz constant must be >= 0");
  if (l_sigma) {
    if (!(*l_sigma >= 0.0)) throw ParameterError("gate: l_sigma must be >= 0");
    if (*l_sigma > lip_sigma) throw ParameterError("gate: l_sigma cannot exceed the Lipschitz constant");
  }
}

GateReport gate_from_upsilon(const UpsilonValue& ups, double k, double lip_sigma) {
  GateReport rep;
  rep.upsilon = ups;
  rep.z_k = burkholder_constant(k);
  const double zl = rep.z_k * lip_sigma;
  rep.threshold = zl == 0.0 ? kInf : 1.0 / (zl * zl);
  if (ups.diverges) {
    rep.pass = false;
    rep.contraction = kInf;
    rep.reason = "Dalang condition violated";
    return rep;
  }
  rep.contraction = zl * std::sqrt(ups.value);
  rep.pass = strictly_below(ups, rep.threshold);
  rep.reason = rep.pass ? "Upsilon(beta) < 1/(z_k Lip)^2" : "Upsilon(beta) >= 1/(z_k Lip)^2";
  return rep;
}

GateReport existence_gate(const LevyModel& model, const GateParams& params) {
  params.validate();
  return gate_from_upsilon(upsilon(model, params.beta), params.k, params.lip_sigma);
}

nlohmann::json GateReport::to_json() const {
  auto j = upsilon.to_json();
  j["pass"] = pass;
  j["threshold"] = number_or_null(threshold);
  j["z_k"] = z_k;
  j["z_k_kind"] = z_k == 1.0 ? "exact" : "carlen_kree_bound";
  j["contraction"] = number_or_null(contraction);
  j["reason"] = reason;
  return j;
}

double min_beta(const std::function<UpsilonValue(double)>& ups, double k, double lip_sigma) {
  if (!(lip_sigma >= 0.0)) throw ParameterError("min_beta: Lipschitz constant must be >= 0");
  const double z = burkholder_constant(k);
  if (ups(1.0).diverges) throw ParameterError("min_beta: Dalang condition violated, no finite beta");
  if (lip_sigma == 0.0) return 0.0;
  const double threshold = 1.0 / ((z * lip_sigma) * (z * lip_sigma));
  auto passes = [&](double beta) { return ups(beta).value < threshold; };
  double hi = 1.0;
  while (!passes(hi)) {
    hi *= 2.0;
    if (hi > 1e300) throw ToleranceError("min_beta: no passing beta found");
  }
  double lo = hi;
  while (passes(lo)) {
    lo *= 0.5;
    if (lo < 1e-300) return 0.0;
  }
  while (hi - lo > 1e-13 * hi) {
    const double mid = 0.5 * (lo + hi);
    (passes(mid) ? hi : lo) = mid;
  }
  return hi;
}

double min_beta(const LevyModel& model, double k, double lip_sigma) {
  return min_beta([&](double beta) { return upsilon(model, beta); }, k, lip_sigma);
}

nlohmann::json SharpnessReport::to_json() const {
  auto j = upsilon.to_json();
  j["pass"] = pass;
  j["threshold"] = number_or_null(threshold);
  return j;
}

SharpnessReport sharpness_bound(const LevyModel& model, double beta, double l_sigma) {
  if (!(l_sigma > 0.0)) throw ParameterError("sharpness_bound requires l_sigma > 0");
  SharpnessReport rep;
  rep.upsilon = upsilon(model, beta);
  rep.threshold = 1.0 / (l_sigma * l_sigma);
  rep.pass = strictly_below(rep.upsilon, rep.threshold);
  return rep;
}

}  // namespace spde
