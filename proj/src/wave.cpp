#include "spde/wave.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spde/errors.hpp"
#include "spde/quadrature.hpp"

namespace spde {

WavePropagator::WavePropagator(double kappa) : kappa_(kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ParameterError("wave: kappa must be > 0");
}

double WavePropagator::operator()(double t, double x) const {
  if (!(t > 0.0)) throw DomainError("wave propagator requires t > 0");
  return std::abs(x) <= kappa_ * t ? 0.5 : 0.0;
}

double WavePropagator::l2_norm_squared(double t) const { return 0.5 * kappa_ * t; }

std::shared_ptr<const KernelTable> WavePropagator::table(const GridSpec& grid) const {
  const double k = kappa_;
  return std::make_shared<const KernelTable>(KernelTable::tabulate(grid, [k](double t, double x) {
    return std::abs(x) <= k * t * (1.0 + 1e-12) ? 0.5 : 0.0;
  }));
}

UpsilonValue wave_upsilon(double kappa, double beta) {
  if (!(beta > 0.0)) throw ParameterError("wave_upsilon requires beta > 0");
  const WavePropagator g(kappa);
  auto f = [&](double t) { return std::exp(-beta * t) * g.l2_norm_squared(t); };
  const auto r = quad::integrate_to_infinity(f, 0.0, {1e-14, 1e-12, 20000});
  return {false, r.value, r.abs_error};
}

WaveDeterministic wave_deterministic_part(const SignedMeasure& u0, const std::optional<SignedMeasure>& v0,
                                          double kappa, double t, double x) {
  if (!(t > 0.0)) throw DomainError("wave deterministic part requires t > 0");
  if (!(kappa > 0.0)) throw ParameterError("wave: kappa must be > 0");
  const double reach = kappa * t;
  WaveDeterministic out;
  out.density = 0.5 * (u0.density_at(x - reach) + u0.density_at(x + reach));
  for (const auto& a : u0.atoms()) {
    out.atoms.push_back({a.location - reach, 0.5 * a.weight});
    out.atoms.push_back({a.location + reach, 0.5 * a.weight});
  }
  if (v0) out.density += 0.5 * v0->window_mass(x - reach, x + reach);
  return out;
}

WaveGridDeterministic wave_deterministic_field(const SignedMeasure& u0, const std::optional<SignedMeasure>& v0,
                                               double kappa, const GridSpec& grid) {
  WaveGridDeterministic out;
  out.field.assign(grid.cells(), 0.0);
  auto bin = [&](std::size_t j, double location, double weight) {
    if (location < grid.x(0) - 0.5 * grid.dx || location > grid.x(grid.n_x - 1) + 0.5 * grid.dx) return;
    const std::size_t i = grid.nearest_column(location);
    out.max_atom_offset = std::max(out.max_atom_offset, std::abs(location - grid.x(i)));
    out.field[j * grid.n_x + i] += weight / grid.dx;
  };
  // t = 0: u0 itself.
  for (std::size_t i = 0; i < grid.n_x; ++i) out.field[i] = u0.density_at(grid.x(i));
  for (const auto& a : u0.atoms()) bin(0, a.location, a.weight);
  for (std::size_t j = 1; j < grid.n_t; ++j) {
    const double t = grid.t(j);
    for (std::size_t i = 0; i < grid.n_x; ++i) {
      out.field[j * grid.n_x + i] += wave_deterministic_part(u0, v0, kappa, t, grid.x(i)).density;
    }
    for (const auto& a : u0.atoms()) {
      bin(j, a.location - kappa * t, 0.5 * a.weight);
      bin(j, a.location + kappa * t, 0.5 * a.weight);
    }
  }
  return out;
}

std::size_t light_cone_violations(const FieldEnsemble& u, const SignedMeasure& u0,
                                  const std::optional<SignedMeasure>& v0, double kappa, double margin) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto* m : {&u0, v0 ? &*v0 : nullptr}) {
    if (m == nullptr) continue;
    for (const auto& a : m->atoms()) {
      lo = std::min(lo, a.location);
      hi = std::max(hi, a.location);
    }
    if (m->density()) {
      lo = std::min(lo, m->density()->lower());
      hi = std::max(hi, m->density()->upper());
    }
  }
  const GridSpec& g = u.grid();
  std::size_t count = 0;
  for (std::size_t r = 0; r < u.replicas(); ++r) {
    for (std::size_t j = 0; j < g.n_t; ++j) {
      const double reach = kappa * g.t(j) + margin;
      for (std::size_t i = 0; i < g.n_x; ++i) {
        const double x = g.x(i);
        if ((x < lo - reach || x > hi + reach) && u.at(r, j, i) != 0.0) ++count;
      }
    }
  }
  return count;
}

PicardResult wave_picard_solve(const SigmaSpec& sigma, const SignedMeasure& u0,
                               const std::optional<SignedMeasure>& v0, double kappa, const GridSpec& grid,
                               const NormParams& norm, std::uint64_t seed, std::size_t replicas, double tol,
                               std::size_t max_iter, const SolverOptions& opts) {
  const WavePropagator gamma(kappa);
  grid.require_cfl(kappa);
  auto gate = gate_from_upsilon(wave_upsilon(kappa, norm.beta), norm.k, sigma.lip());
  if (!gate.pass) throw GateRefusal(gate);
  auto det = wave_deterministic_field(u0, v0, kappa, grid);
  auto spectral = std::make_shared<const SpectralKernel>(gamma.table(grid));
  auto result = picard_iterate(spectral, std::move(det.field), sigma, grid, norm, seed, replicas, tol, max_iter, opts);
  result.report.gate = gate;
  // Finite propagation speed: data leaves [-L, L] only once kappa T spans the gap.
  double reach = 0.0;
  for (const auto* m : {&u0, v0 ? &*v0 : nullptr}) {
    if (m == nullptr) continue;
    for (const auto& a : m->atoms()) reach = std::max(reach, std::abs(a.location));
    if (m->density()) reach = std::max({reach, std::abs(m->density()->lower()), std::abs(m->density()->upper())});
  }
  result.report.leakage_bound = reach + kappa * grid.T < grid.L ? 0.0 : 1.0;
  result.report.notes = {{"wave_upsilon", gate.upsilon.value},
                         {"max_atom_offset", det.max_atom_offset},
                         {"atom_placement", "nearest column"}};
  result.ensemble.provenance.model = {{"family", "wave"}, {"kappa", kappa}};
  result.ensemble.provenance.measure = u0.to_json();
  return result;
}

}  // namespace spde
