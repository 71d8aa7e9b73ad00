#include "spde/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "spde/dalang.hpp"
#include "spde/errors.hpp"
#include "spde/quadrature.hpp"

namespace spde {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kAnalyticSamples = 4097;
constexpr int kMaxFrequencyPanels = 20000;

void sort_unique(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

double require_number(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ConfigError(where + "." + key + ": missing or not a number");
  }
  return j.at(key).get<double>();
}

Density table_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const double x0 = require_number(j, "x0", where);
  const double dx = require_number(j, "dx", where);
  if (!j.contains("values") || !j.at("values").is_array()) {
    throw ConfigError(where + ".values: missing or not an array");
  }
  std::vector<double> values;
  for (const auto& v : j.at("values")) {
    if (!v.is_number()) throw ConfigError(where + ".values: non-numeric entry");
    values.push_back(v.get<double>());
  }
  return Density::tabulated(x0, dx, std::move(values));
}

// int_0^h (y0 + s u) e^{i xi u} du.
std::complex<double> linear_segment_fourier(double y0, double y1, double h, double xi) {
  const double s = (y1 - y0) / h;
  const double q = xi * h;
  std::complex<double> e0;
  std::complex<double> e1;
  if (std::abs(q) < 1e-3) {
    const std::complex<double> i(0.0, 1.0);
    const double h2 = h * h;
    e0 = h * (1.0 + i * q / 2.0 - q * q / 6.0 - i * q * q * q / 24.0);
    e1 = h2 * (0.5 + i * q / 3.0 - q * q / 8.0 - i * q * q * q / 30.0);
  } else {
    const std::complex<double> ixi(0.0, xi);
    const std::complex<double> eh = std::polar(1.0, q);
    e0 = (eh - 1.0) / ixi;
    e1 = (h * eh - e0) / ixi;
  }
  return y0 * e0 + s * e1;
}

}  // namespace

Density Density::tabulated(double x0, double dx, std::vector<double> values) {
  if (!std::isfinite(x0)) throw ParameterError("density: x0 must be finite");
  if (!(dx > 0.0) || !std::isfinite(dx)) throw ParameterError("density: dx must be > 0");
  if (values.size() < 2) throw ParameterError("density: at least two table values required");
  for (double v : values) {
    if (!std::isfinite(v)) throw ParameterError("density: non-finite table value");
  }
  std::vector<double> cum(values.size(), 0.0);
  for (std::size_t k = 1; k < values.size(); ++k) cum[k] = cum[k - 1] + 0.5 * dx * (values[k - 1] + values[k]);
  const double upper = x0 + static_cast<double>(values.size() - 1) * dx;
  return Density(Table{x0, dx, std::move(values), std::move(cum)}, x0, upper);
}

Density Density::analytic(std::function<double(double)> f, double lower, double upper) {
  if (!f) throw ParameterError("density: empty function");
  if (!(std::isfinite(lower) && std::isfinite(upper) && upper > lower)) {
    throw ParameterError("density: support must be a finite interval with lower < upper");
  }
  return Density(Analytic{std::move(f)}, lower, upper);
}

double Density::operator()(double x) const {
  if (x < lower_ || x > upper_) return 0.0;
  if (const auto* a = std::get_if<Analytic>(&repr_)) return a->f(x);
  const auto& t = std::get<Table>(repr_);
  const std::size_t last = t.values.size() - 2;
  const double pos = (x - t.x0) / t.dx;
  const auto k = std::min(static_cast<std::size_t>(pos), last);
  const double u = pos - static_cast<double>(k);
  return t.values[k] + u * (t.values[k + 1] - t.values[k]);
}

double Density::integral(double a, double b) const {
  if (b < a) return -integral(b, a);
  a = std::max(a, lower_);
  b = std::min(b, upper_);
  if (!(b > a)) return 0.0;
  if (const auto* an = std::get_if<Analytic>(&repr_)) {
    return quad::integrate(an->f, a, b, {1e-13, 1e-11, 20000}).value;
  }
  const auto& t = std::get<Table>(repr_);
  const std::size_t last = t.values.size() - 2;
  // Exact antiderivative of the piecewise-linear interpolant.
  auto primitive = [&](double x) {
    const double pos = (x - t.x0) / t.dx;
    const auto k = std::min(static_cast<std::size_t>(pos), last);
    const double u = (pos - static_cast<double>(k)) * t.dx;
    const double slope = (t.values[k + 1] - t.values[k]) / t.dx;
    return t.cumulative[k] + t.values[k] * u + 0.5 * slope * u * u;
  };
  return primitive(b) - primitive(a);
}

double Density::abs_integral() const {
  if (const auto* an = std::get_if<Analytic>(&repr_)) {
    auto g = [&](double x) { return std::abs(an->f(x)); };
    return quad::integrate(g, lower_, upper_, {1e-13, 1e-11, 20000}).value;
  }
  const auto& t = std::get<Table>(repr_);
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < t.values.size(); ++k) {
    const double y0 = t.values[k];
    const double y1 = t.values[k + 1];
    if ((y0 >= 0.0) == (y1 >= 0.0)) {
      sum += 0.5 * t.dx * std::abs(y0 + y1);
    } else {
      const double root = y0 / (y0 - y1) * t.dx;
      sum += 0.5 * (std::abs(y0) * root + std::abs(y1) * (t.dx - root));
    }
  }
  return sum;
}

double Density::sup_abs() const {
  double m = 0.0;
  if (const auto* an = std::get_if<Analytic>(&repr_)) {
    for (int k = 0; k < kAnalyticSamples; ++k) {
      const double x = lower_ + (upper_ - lower_) * k / (kAnalyticSamples - 1);
      m = std::max(m, std::abs(an->f(x)));
    }
    return m;
  }
  for (double v : std::get<Table>(repr_).values) m = std::max(m, std::abs(v));
  return m;
}

double Density::variation() const {
  if (const auto* an = std::get_if<Analytic>(&repr_)) {
    double prev = an->f(lower_);
    double v = std::abs(prev);
    for (int k = 1; k < kAnalyticSamples; ++k) {
      const double cur = an->f(lower_ + (upper_ - lower_) * k / (kAnalyticSamples - 1));
      v += std::abs(cur - prev);
      prev = cur;
    }
    return v + std::abs(prev);
  }
  const auto& vals = std::get<Table>(repr_).values;
  double v = std::abs(vals.front()) + std::abs(vals.back());
  for (std::size_t k = 1; k < vals.size(); ++k) v += std::abs(vals[k] - vals[k - 1]);
  return v;
}

std::complex<double> Density::fourier(double xi) const {
  if (const auto* an = std::get_if<Analytic>(&repr_)) {
    std::vector<double> points{lower_};
    const double span = upper_ - lower_;
    const int panels = std::clamp(static_cast<int>(std::ceil(std::abs(xi) * span / kPi)), 1, 2000);
    for (int p = 1; p < panels; ++p) points.push_back(lower_ + span * p / panels);
    points.push_back(upper_);
    const quad::Options opt{1e-13, 1e-11, 40000};
    auto re = quad::integrate([&](double x) { return an->f(x) * std::cos(xi * x); }, std::span<const double>(points), opt);
    auto im = quad::integrate([&](double x) { return an->f(x) * std::sin(xi * x); }, std::span<const double>(points), opt);
    return {re.value, im.value};
  }
  const auto& t = std::get<Table>(repr_);
  std::complex<double> sum = 0.0;
  for (std::size_t k = 0; k + 1 < t.values.size(); ++k) {
    const double xk = t.x0 + static_cast<double>(k) * t.dx;
    sum += std::polar(1.0, xi * xk) * linear_segment_fourier(t.values[k], t.values[k + 1], t.dx, xi);
  }
  return sum;
}

std::vector<double> Density::kinks() const {
  if (std::holds_alternative<Analytic>(repr_)) return {lower_, upper_};
  const auto& t = std::get<Table>(repr_);
  std::vector<double> out(t.values.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = t.x0 + static_cast<double>(k) * t.dx;
  return out;
}

nlohmann::json Density::to_json() const {
  if (std::holds_alternative<Analytic>(repr_)) {
    return {{"kind", "analytic"}, {"lower", lower_}, {"upper", upper_}};
  }
  const auto& t = std::get<Table>(repr_);
  return {{"x0", t.x0}, {"dx", t.dx}, {"values", t.values}};
}

SignedMeasure::SignedMeasure(std::vector<Atom> atoms, std::optional<Density> density)
    : atoms_(std::move(atoms)), density_(std::move(density)) {
  for (const auto& a : atoms_) {
    if (!std::isfinite(a.location) || !std::isfinite(a.weight)) {
      throw ParameterError("measure: atom location and weight must be finite");
    }
    if (a.weight == 0.0) throw ParameterError("measure: atom weight must be nonzero");
  }
  if (atoms_.empty() && (!density_ || density_->abs_integral() == 0.0)) {
    throw ParameterError("measure: the zero measure is not a valid initial datum");
  }
}

double SignedMeasure::total_variation() const {
  double tv = 0.0;
  for (const auto& a : atoms_) tv += std::abs(a.weight);
  if (density_) tv += density_->abs_integral();
  return tv;
}

double SignedMeasure::total_mass() const {
  double m = 0.0;
  for (const auto& a : atoms_) m += a.weight;
  if (density_) m += density_->integral(density_->lower(), density_->upper());
  return m;
}

double SignedMeasure::density_at(double x) const { return density_ ? (*density_)(x) : 0.0; }

double SignedMeasure::window_mass(double a, double b) const {
  double m = 0.0;
  for (const auto& at : atoms_) {
    if (at.location >= a && at.location <= b) m += at.weight;
  }
  if (density_) m += density_->integral(a, b);
  return m;
}

nlohmann::json SignedMeasure::to_json() const {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& a : atoms_) atoms.push_back({a.location, a.weight});
  return {{"atoms", atoms}, {"density", density_ ? density_->to_json() : nlohmann::json(nullptr)}};
}

SignedMeasure SignedMeasure::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("measure: expected an object");
  std::vector<Atom> atoms;
  if (j.contains("atoms")) {
    if (!j.at("atoms").is_array()) throw ConfigError("measure.atoms: expected an array");
    for (const auto& a : j.at("atoms")) {
      if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
        throw ConfigError("measure.atoms: each atom must be [location, weight]");
      }
      atoms.push_back({a[0].get<double>(), a[1].get<double>()});
    }
  }
  std::optional<Density> density;
  if (j.contains("density") && !j.at("density").is_null()) {
    density = table_from_json(j.at("density"), "measure.density");
  }
  return SignedMeasure(std::move(atoms), std::move(density));
}

std::complex<double> fourier_transform(const SignedMeasure& mu, double xi) {
  std::complex<double> sum = 0.0;
  for (const auto& a : mu.atoms()) sum += a.weight * std::polar(1.0, xi * a.location);
  if (mu.density()) sum += mu.density()->fourier(xi);
  return sum;
}

WeightMeasure WeightMeasure::exponential(double m) {
  if (!(m > 0.0) || !std::isfinite(m)) throw ParameterError("weight: exponential scale m must be > 0");
  return WeightMeasure(Kind::exponential, m, std::nullopt);
}

WeightMeasure WeightMeasure::tabulated(Density density) {
  if (!density.is_tabulated()) throw ParameterError("weight: tabulated kind requires a table");
  for (double x : density.kinks()) {
    if (density(x) < 0.0) throw ParameterError("weight: density must be nonnegative");
  }
  return WeightMeasure(Kind::tabulated, 0.0, std::move(density));
}

double WeightMeasure::density(double x) const {
  switch (kind_) {
    case Kind::lebesgue:
      return 1.0;
    case Kind::exponential:
      return std::exp(-std::abs(x) / m_);
    case Kind::tabulated:
      return (*table_)(x);
  }
  return 0.0;
}

double WeightMeasure::mass() const {
  switch (kind_) {
    case Kind::lebesgue:
      return std::numeric_limits<double>::infinity();
    case Kind::exponential:
      return 2.0 * m_;
    case Kind::tabulated:
      return table_->integral(table_->lower(), table_->upper());
  }
  return 0.0;
}

double WeightMeasure::sup_density() const {
  return kind_ == Kind::tabulated ? table_->sup_abs() : 1.0;
}

nlohmann::json WeightMeasure::to_json() const {
  switch (kind_) {
    case Kind::lebesgue:
      return {{"kind", "lebesgue"}};
    case Kind::exponential:
      return {{"kind", "exp"}, {"m", m_}};
    case Kind::tabulated: {
      auto j = table_->to_json();
      j["kind"] = "tabulated";
      return j;
    }
  }
  return {};
}

WeightMeasure WeightMeasure::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw ConfigError("eta.kind: missing (expected \"lebesgue\", \"exp\" or \"tabulated\")");
  }
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "lebesgue") return lebesgue();
  if (kind == "exp") return exponential(require_number(j, "m", "eta"));
  if (kind == "tabulated") return tabulated(table_from_json(j, "eta"));
  throw ConfigError("eta.kind: unknown kind \"" + kind + "\"");
}

AdmissibilityValue admissibility_lebesgue(const SignedMeasure& mu, const LevyModel& model, double beta) {
  if (!(beta > 0.0)) throw ParameterError("admissibility requires beta > 0");
  if (mu.has_atoms() && !model.dalang_holds()) {
    return {true, std::numeric_limits<double>::infinity(), 0.0};
  }
  AdmissibilityValue out;
  const auto& atoms = mu.atoms();

  // Atom-atom part: int cos(xi a)/(beta + 2 Psi) dxi = 2 pi int_0^inf e^{-beta t} p_{2t}(a) dt.
  if (!atoms.empty()) {
    const auto ups = upsilon(model, beta);
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      for (std::size_t l = j; l < atoms.size(); ++l) {
        const double a = atoms[j].location - atoms[l].location;
        const double ww = atoms[j].weight * atoms[l].weight * (j == l ? 1.0 : 2.0);
        if (a == 0.0) {
          out.value += ww * 2.0 * kPi * ups.value;
          out.abs_error += std::abs(ww) * 2.0 * kPi * ups.abs_error;
          continue;
        }
        auto f = [&](double t) { return std::exp(-beta * t) * transition_density(model, 2.0 * t, a); };
        const auto r = quad::integrate_to_infinity(f, 0.0, {1e-13, 1e-11, 20000});
        out.value += ww * 2.0 * kPi * r.value;
        out.abs_error += std::abs(ww) * 2.0 * kPi * r.abs_error;
      }
    }
  }
  if (!mu.density()) return out;

  // Remaining part (|mu_hat|^2 - |A_hat|^2)/(beta + 2 Psi), A the atomic part; even in xi.
  const Density& rho = *mu.density();
  double atom_tv = 0.0;
  double lo = rho.lower();
  double hi = rho.upper();
  for (const auto& a : atoms) {
    atom_tv += std::abs(a.weight);
    lo = std::min(lo, a.location);
    hi = std::max(hi, a.location);
  }
  const double spread = std::max(hi - lo, 1e-12);
  // With |rho_hat| <= V / xi: |integrand| <= (V / xi)(2 |A| + V / xi) / (2 c xi^alpha), so
  // the part beyond X is at most V |A| / (c alpha X^alpha) + V^2 / (2 c (alpha + 1) X^{alpha + 1}).
  const double c = model.coefficient();
  const double alpha = model.index();
  const double v = rho.variation();
  auto tail_bound = [&](double cutoff) {
    return v * atom_tv / (c * alpha * std::pow(cutoff, alpha)) +
           v * v / (2.0 * c * (alpha + 1.0) * std::pow(cutoff, alpha + 1.0));
  };
  const double period = kPi / spread;
  double cutoff = period;
  while (tail_bound(cutoff) > 1e-10 && cutoff < kMaxFrequencyPanels * period) cutoff *= 2.0;
  double panels = std::ceil(cutoff / period);
  if (panels > kMaxFrequencyPanels) {
    panels = kMaxFrequencyPanels;
    cutoff = panels * period;
  }
  std::vector<double> points;
  for (int p = 0; p < static_cast<int>(panels); ++p) points.push_back(p * period);
  points.push_back(cutoff);
  auto g = [&](double xi) {
    std::complex<double> a = 0.0;
    for (const auto& at : atoms) a += at.weight * std::polar(1.0, xi * at.location);
    const auto full = a + rho.fourier(xi);
    return (std::norm(full) - std::norm(a)) / (beta + 2.0 * psi(model, xi));
  };
  const auto r = quad::integrate(g, std::span<const double>(points),
                                 {1e-12, 1e-10, 4 * kMaxFrequencyPanels + 1000});
  out.value += 2.0 * r.value;
  out.abs_error += 2.0 * r.abs_error + tail_bound(cutoff);
  return out;
}

nlohmann::json GeneralAdmissibility::to_json() const {
  return {{"value", value},
          {"abs_error", abs_error},
          {"shift_extent", shift_extent},
          {"shift_spacing", shift_spacing},
          {"shift_count", shift_count},
          {"lower_bound", lower_bound}};
}

namespace {

// int eta(dx) |(P_s mu)(x - z)|^2.
double shifted_energy(const SignedMeasure& mu, const WeightMeasure& eta, const LevyModel& model, double s,
                      double z) {
  const double w = model.width(s);
  std::vector<double> points;
  for (const auto& a : mu.atoms()) {
    for (double k : {0.0, 1.0, -1.0, 4.0, -4.0, 16.0, -16.0, 64.0, -64.0}) points.push_back(a.location + z + k * w);
  }
  if (mu.density()) {
    for (double k : {0.0, 1.0, -1.0, 4.0, -4.0, 16.0, -16.0}) {
      points.push_back(mu.density()->lower() + z + k * w);
      points.push_back(mu.density()->upper() + z + k * w);
    }
  }
  auto f = [&](double x) {
    const double v = semigroup_apply(model, s, mu, x - z);
    return eta.density(x) * v * v;
  };
  const quad::Options opt{1e-13, 1e-9, 20000};

  if (eta.kind() == WeightMeasure::Kind::tabulated) {
    const Density& tab = *eta.table();
    std::vector<double> pts{tab.lower(), tab.upper()};
    for (double p : points) {
      if (p > tab.lower() && p < tab.upper()) pts.push_back(p);
    }
    const auto nodes = tab.kinks();
    if (nodes.size() <= 4096) pts.insert(pts.end(), nodes.begin(), nodes.end());
    sort_unique(pts);
    return quad::integrate(f, std::span<const double>(pts), opt).value;
  }

  points.push_back(0.0);
  sort_unique(points);
  const double lo = points.front();
  const double hi = points.back();
  double total = quad::integrate(f, std::span<const double>(points), opt).value;
  total += quad::integrate_to_infinity(f, hi, opt).value;
  total += quad::integrate_to_infinity([&](double y) { return f(-y); }, -lo, opt).value;
  return total;
}

}  // namespace

GeneralAdmissibility admissibility_general(const SignedMeasure& mu, const WeightMeasure& eta, const LevyModel& model,
                                           double beta, const GridSpec& grid) {
  if (!(beta > 0.0)) throw ParameterError("admissibility requires beta > 0");
  if (!eta.finite()) throw ParameterError("admissibility_general requires a finite or exponential weight");

  GeneralAdmissibility out;
  const auto half = static_cast<long>(std::floor(0.5 * grid.L / grid.dx + 1e-9));
  out.shift_spacing = grid.dx;
  out.shift_extent = static_cast<double>(half) * grid.dx;
  out.shift_count = static_cast<std::size_t>(2 * half + 1);
  if (eta.mass() == 0.0) return out;  // annihilates every inner integral

  auto sup_energy = [&](double s) {
    double best = 0.0;
    for (long k = -half; k <= half; ++k) {
      best = std::max(best, shifted_energy(mu, eta, model, s, static_cast<double>(k) * grid.dx));
    }
    return best;
  };
  // s = v^2 grades the mesh toward the integrable s^{-1/2} singularity at 0.
  const double v_max = std::sqrt(40.0 / beta);
  auto integrand = [&](double v) { return v == 0.0 ? 0.0 : 2.0 * v * std::exp(-beta * v * v) * sup_energy(v * v); };
  auto composite = [&](int panels) {
    double sum = 0.0;
    const double h = v_max / panels;
    for (int p = 0; p < panels; ++p) sum += quad::detail::kronrod15(integrand, p * h, (p + 1) * h).value;
    return sum;
  };
  const double coarse = composite(16);
  const double fine = composite(32);
  out.value = fine;
  out.abs_error = std::abs(fine - coarse);
  return out;
}

}  // namespace spde
