#include "spde/levy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "spde/errors.hpp"
#include "spde/measures.hpp"
#include "spde/quadrature.hpp"

namespace spde {

namespace {

constexpr double kPi = std::numbers::pi;
// Initial frequency cutoff: e^{-t c Xi^alpha} = 1e-12.
const double kCutoffLog = std::log(1e12);
constexpr int kMaxInversionPanels = 20000;

void require_positive_time(double t) {
  if (!(t > 0.0)) throw DomainError("transition density requires t > 0");
}

double gaussian_density(double kappa, double t, double x) {
  return std::exp(-x * x / (4.0 * kappa * t)) / std::sqrt(4.0 * kPi * kappa * t);
}

double cauchy_density(double c, double t, double x) {
  const double s = c * t;
  return s / (kPi * (s * s + x * x));
}

// (1/pi) int_0^Xi e^{-t c xi^alpha} w(xi) dxi with panels aligned to the
// oscillation period of w.
template <class W>
double stable_fourier_integral(double alpha, double c, double t, double freq, W&& weight) {
  const double rate = t * c;
  // Start where e^{-t c Xi^alpha} = 1e-12 and widen until the truncated tail
  // int_Xi^inf e^{-rate xi^alpha} dxi / pi <= e^{-rate Xi^alpha} Xi^{1-alpha} / (rate alpha pi)
  // is below 1e-13 (heavy tails with alpha < 1 need the margin).
  double log_cut = kCutoffLog;
  double cutoff = std::pow(log_cut / rate, 1.0 / alpha);
  while (std::exp(-log_cut) * std::pow(cutoff, 1.0 - alpha) / (rate * alpha * kPi) > 1e-13) {
    log_cut += std::log(10.0);
    cutoff = std::pow(log_cut / rate, 1.0 / alpha);
    if (log_cut > 700.0) throw ToleranceError("stable density: frequency truncation cannot reach 1e-13");
  }
  std::vector<double> points{0.0};
  const double period = freq > 0.0 ? kPi / freq : cutoff;
  const double panels = std::ceil(cutoff / period);
  if (panels > kMaxInversionPanels) {
    throw ToleranceError("stable density: too many oscillations for Fourier inversion");
  }
  for (int p = 1; p < static_cast<int>(panels); ++p) points.push_back(p * period);
  points.push_back(cutoff);
  auto f = [&](double xi) { return std::exp(-rate * std::pow(xi, alpha)) * weight(xi); };
  quad::Options opt;
  opt.abs_tol = 1e-13;
  opt.rel_tol = 1e-10;
  opt.max_intervals = 4 * kMaxInversionPanels;
  const auto r = quad::integrate(f, std::span<const double>(points), opt);
  if (!r.converged) {
    throw ToleranceError("stable density: Fourier inversion did not converge (error " +
                         std::to_string(r.abs_error) + ")");
  }
  return r.value / kPi;
}

// Tail series (1/pi) sum_n (-1)^{n+1} Gamma(n alpha + 1) sin(n pi alpha / 2) r^n / (n! |x|)
// with r = c t / |x|^alpha. Convergent for alpha < 1, asymptotic for alpha > 1.
double stable_tail_series(double alpha, double c, double t, double ax) {
  const double r = c * t / std::pow(ax, alpha);
  double sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (int n = 1; n <= 60; ++n) {
    const double mag = std::exp(std::lgamma(n * alpha + 1.0) - std::lgamma(n + 1.0) + n * std::log(r));
    if (alpha > 1.0 && mag > prev) break;
    const double term = (n % 2 == 1 ? 1.0 : -1.0) * mag * std::sin(n * kPi * alpha / 2.0);
    sum += term;
    if (mag < 1e-16 * std::abs(sum)) break;
    prev = mag;
  }
  return sum / (kPi * ax);
}

}  // namespace

LevyModel LevyModel::gaussian(double kappa) {
  if (!(kappa > 0.0)) throw ParameterError("gaussian model requires kappa > 0");
  return LevyModel(Family::gaussian, kappa, 2.0, kappa);
}

LevyModel LevyModel::stable(double alpha, double c) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw ParameterError("stable model requires alpha in (0, 2]");
  if (!(c > 0.0)) throw ParameterError("stable model requires c > 0");
  return LevyModel(Family::symmetric_stable, 0.0, alpha, c);
}

double LevyModel::width(double t) const {
  if (family_ == Family::gaussian) return std::sqrt(2.0 * kappa_ * t);
  return std::pow(c_ * t, 1.0 / alpha_);
}

nlohmann::json LevyModel::to_json() const {
  if (family_ == Family::gaussian) return {{"family", "gaussian"}, {"kappa", kappa_}};
  return {{"family", "stable"}, {"alpha", alpha_}, {"c", c_}};
}

LevyModel LevyModel::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("family") || !j.at("family").is_string()) {
    throw ConfigError("model.family: missing (expected \"gaussian\" or \"stable\")");
  }
  const auto family = j.at("family").get<std::string>();
  auto number = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) {
      throw ConfigError(std::string("model.") + key + ": missing or not a number");
    }
    return j.at(key).get<double>();
  };
  if (family == "gaussian") return gaussian(number("kappa"));
  if (family == "stable") return stable(number("alpha"), number("c"));
  throw ConfigError("model.family: unknown family \"" + family + "\"");
}

double psi(const LevyModel& model, double xi) {
  if (model.family() == Family::gaussian) return model.kappa() * xi * xi;
  return model.scale() * std::pow(std::abs(xi), model.alpha());
}

DensityMethod density_method(const LevyModel& model) {
  if (model.family() == Family::gaussian) return DensityMethod::closed_form;
  if (model.alpha() == 1.0 || model.alpha() == 2.0) return DensityMethod::closed_form;
  return DensityMethod::fourier_inversion;
}

double transition_density(const LevyModel& model, double t, double x) {
  require_positive_time(t);
  if (model.family() == Family::gaussian) return gaussian_density(model.kappa(), t, x);
  const double alpha = model.alpha();
  const double c = model.scale();
  if (alpha == 2.0) return gaussian_density(c, t, x);
  if (alpha == 1.0) return cauchy_density(c, t, x);
  const double ax = std::abs(x);
  // Far from the origin relative to the spread, the tail series is both exact
  // to rounding and cheaper than oscillatory inversion.
  if (ax > 0.0 && c * t / std::pow(ax, alpha) <= (alpha < 1.0 ? 0.5 : 1e-3)) {
    return stable_tail_series(alpha, c, t, ax);
  }
  return stable_fourier_integral(alpha, c, t, ax, [ax](double xi) { return std::cos(xi * ax); });
}

double semigroup_apply(const LevyModel& model, double t, const SignedMeasure& mu, double x) {
  require_positive_time(t);
  double out = 0.0;
  for (const auto& atom : mu.atoms()) out += atom.weight * transition_density(model, t, x - atom.location);
  if (!mu.density()) return out;

  const Density& rho = *mu.density();
  const double w = model.width(t);
  double lo = rho.lower();
  double hi = rho.upper();
  if (model.index() == 2.0) {
    lo = std::max(lo, x - 40.0 * w);
    hi = std::min(hi, x + 40.0 * w);
  }
  if (!(hi > lo)) return out;
  std::vector<double> points{lo, hi};
  for (double k : {0.0, 1.0, -1.0, 4.0, -4.0, 16.0, -16.0}) {
    const double p = x + k * w;
    if (p > lo && p < hi) points.push_back(p);
  }
  const auto kinks = rho.kinks();
  std::size_t inside = 0;
  for (double k : kinks) inside += (k > lo && k < hi) ? 1 : 0;
  if (inside <= 4096) {
    for (double k : kinks) {
      if (k > lo && k < hi) points.push_back(k);
    }
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  auto f = [&](double y) { return transition_density(model, t, x - y) * rho(y); };
  quad::Options opt;
  opt.abs_tol = 1e-12;
  opt.rel_tol = 1e-10;
  return out + quad::integrate(f, std::span<const double>(points), opt).value;
}

double mass_outside(const LevyModel& model, double t, double half_width) {
  require_positive_time(t);
  if (model.family() == Family::gaussian || model.alpha() == 2.0) {
    return std::erfc(half_width / std::sqrt(4.0 * model.coefficient() * t));
  }
  if (model.alpha() == 1.0) {
    return 1.0 - 2.0 / kPi * std::atan(half_width / (model.scale() * t));
  }
  // p_t([-h, h]) = (2/pi) int_0^inf e^{-t Psi} sin(h xi)/xi dxi.
  const double h = half_width;
  const double inside = 2.0 * stable_fourier_integral(model.alpha(), model.scale(), t, h, [h](double xi) {
    return xi == 0.0 ? h : std::sin(h * xi) / xi;
  });
  return std::max(0.0, 1.0 - inside);
}

std::shared_ptr<const KernelTable> TransitionKernel::table(const GridSpec& grid) const {
  const Key key{grid.dt, grid.dx, grid.n_t, grid.n_x};
  std::lock_guard lock(mutex_);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  // Symmetric families: tabulate non-negative offsets and mirror.
  auto table = std::make_shared<KernelTable>(grid.n_t, grid.n_x);
  const auto n = static_cast<std::ptrdiff_t>(grid.n_x);
  for (std::size_t d = 1; d < grid.n_t; ++d) {
    const double t = grid.t(d);
    for (std::ptrdiff_t off = 0; off < n; ++off) {
      const double v = transition_density(model_, t, static_cast<double>(off) * grid.dx);
      table->at(d, off) = v;
      table->at(d, -off) = v;
    }
  }
  cache_.emplace(key, table);
  return table;
}

}  // namespace spde
