#include "spde/verify.hpp"

#include <algorithm>
#include <cmath>

#include "spde/dalang.hpp"
#include "spde/errors.hpp"
#include "spde/noise.hpp"
#include "spde/parallel.hpp"

namespace spde {

namespace {

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_error_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

nlohmann::json CheckReport::to_json() const {
  return {{"check", name}, {"lhs", lhs}, {"rhs", rhs}, {"slack", slack}, {"pass", pass}, {"details", details}};
}

FieldEnsemble convolve_ensemble(const std::shared_ptr<const SpectralKernel>& kernel, const FieldEnsemble& z,
                                std::uint64_t seed, std::size_t replicas, const SolverOptions& opts) {
  const GridSpec& grid = z.grid();
  if (kernel->n_t() != grid.n_t || kernel->n_x() != grid.n_x) throw ContractError("convolution: kernel and grid differ");
  const bool shared = z.replicas() == 1;
  if (!shared && z.replicas() != replicas) throw ContractError("convolution: replica count mismatch");
  FieldEnsemble out(grid, replicas);
  parallel_for(replicas, opts.workers, [&](std::size_t r) {
    const NoiseStream stream(seed, r);
    const auto zr = z.replica(shared ? 0 : r);
    auto o = out.replica(r);
    CausalConvolution conv(kernel, opts.method);
    std::vector<double> dw(grid.n_x);
    std::vector<double> src(grid.n_x);
    for (std::size_t n = 0; n < grid.n_t; ++n) {
      conv.output(o.subspan(n * grid.n_x, grid.n_x));
      if (n + 1 == grid.n_t) break;
      fill_noise_row(grid, stream, n, dw);
      for (std::size_t i = 0; i < grid.n_x; ++i) src[i] = zr[n * grid.n_x + i] * dw[i];
      conv.push(src);
    }
  });
  out.provenance.seed = seed;
  return out;
}

CheckReport young_check(const std::shared_ptr<const SpectralKernel>& kernel, double upsilon_value,
                        const FieldEnsemble& z, const NormParams& p, std::uint64_t seed, std::size_t replicas,
                        const SolverOptions& opts) {
  const auto conv = convolve_ensemble(kernel, z, seed, replicas, opts);
  const auto lhs = norm_estimate(conv, p);
  const auto nz = norm_estimate(z, p);
  const double factor = burkholder_constant(p.k) * std::sqrt(upsilon_value);
  CheckReport rep;
  rep.name = "young";
  rep.lhs = lhs.value;
  rep.rhs = factor * nz.value;
  const double stat = 3.0 * std::hypot(lhs.std_error, (1.0 + kDiscretizationSlack) * factor * nz.std_error);
  rep.slack = kDiscretizationSlack * rep.rhs + stat;
  rep.pass = rep.lhs <= rep.rhs + rep.slack;
  rep.details = {{"lhs_norm", lhs.to_json()},
                 {"z_norm", nz.to_json()},
                 {"z_k", burkholder_constant(p.k)},
                 {"upsilon", upsilon_value},
                 {"replicas", replicas}};
  return rep;
}

CheckReport lipschitz_composition_check(const FieldEnsemble& z, const FieldEnsemble& z_star,
                                        const SigmaSpec& sigma, const NormParams& p) {
  require_aligned(z, z_star);
  FieldEnsemble comp(z.grid(), z.replicas());
  auto a = z.values();
  auto b = z_star.values();
  auto c = comp.values();
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = sigma(a[k]) - sigma(b[k]);
  const auto lhs = norm_estimate(comp, p);
  const auto rhs = norm_estimate(difference(z, z_star), p);
  CheckReport rep;
  rep.name = "lipschitz";
  rep.lhs = lhs.value;
  rep.rhs = sigma.lip() * rhs.value;
  // Holds replica by replica, so only rounding and resampling noise remain.
  rep.slack = 1e-12 * rep.rhs + 3.0 * std::hypot(lhs.std_error, sigma.lip() * rhs.std_error);
  rep.pass = rep.lhs <= rep.rhs + rep.slack;
  rep.details = {{"lhs_norm", lhs.to_json()}, {"difference_norm", rhs.to_json()}, {"lip", sigma.lip()}};
  return rep;
}

CheckReport orthogonality_from_terms(std::span<const double> q_solution, std::span<const double> q_noise,
                                     double q_deterministic) {
  if (q_solution.size() != q_noise.size() || q_solution.empty()) {
    throw ContractError("orthogonality: term vectors differ in length or are empty");
  }
  std::vector<double> defect(q_solution.size());
  for (std::size_t r = 0; r < defect.size(); ++r) defect[r] = q_solution[r] - q_noise[r] - q_deterministic;
  CheckReport rep;
  rep.name = "orthogonality";
  rep.lhs = mean_of(q_solution);
  rep.rhs = q_deterministic + mean_of(q_noise);
  const double se = std_error_of(defect);
  rep.slack = 3.0 * se;
  rep.pass = std::abs(rep.lhs - rep.rhs) <= rep.slack;
  rep.details = {{"m_solution_squared", rep.lhs},
                 {"m_solution_squared_std_error", std_error_of(q_solution)},
                 {"m_deterministic_squared", q_deterministic},
                 {"m_convolution_squared", mean_of(q_noise)},
                 {"m_convolution_squared_std_error", std_error_of(q_noise)},
                 {"defect_std_error", se},
                 {"relative_defect", rep.lhs != 0.0 ? std::abs(rep.lhs - rep.rhs) / rep.lhs : 0.0},
                 {"replicas", q_solution.size()}};
  return rep;
}

CheckReport orthogonality_check(const FieldEnsemble& u, std::span<const double> deterministic, double beta,
                                const WeightMeasure& eta, std::optional<double> horizon) {
  const GridSpec& grid = u.grid();
  if (deterministic.size() != grid.cells()) throw ContractError("orthogonality: deterministic part and grid differ");
  u.validate();
  const double h = horizon.value_or(std::max(grid.T, 8.0 / beta));
  std::vector<double> qs(u.replicas());
  std::vector<double> qn(u.replicas());
  std::vector<double> noise(grid.cells());
  for (std::size_t r = 0; r < u.replicas(); ++r) {
    const auto ur = u.replica(r);
    for (std::size_t c = 0; c < noise.size(); ++c) noise[c] = ur[c] - deterministic[c];
    qs[r] = m_norm_term(ur, grid, beta, eta, h);
    qn[r] = m_norm_term(noise, grid, beta, eta, h);
  }
  return orthogonality_from_terms(qs, qn, m_norm_term(deterministic, grid, beta, eta, h));
}

std::vector<double> isometry_variance(const KernelTable& kernel, std::span<const double> z, const GridSpec& grid) {
  if (z.size() != grid.cells()) throw ContractError("isometry: integrand and grid differ");
  auto sq = std::make_shared<const KernelTable>(kernel.squared());
  std::vector<double> src(grid.cells());
  for (std::size_t c = 0; c < src.size(); ++c) src[c] = z[c] * z[c] * grid.dt * grid.dx;
  std::vector<double> out(grid.cells());
  convolve_field(std::make_shared<const SpectralKernel>(sq), ConvolutionMethod::direct, src, out);
  return out;
}

CheckReport isometry_check(const std::shared_ptr<const SpectralKernel>& kernel, std::span<const double> z,
                           const GridSpec& grid, const std::vector<Probe>& probes, std::uint64_t seed,
                           std::size_t replicas, const SolverOptions& opts) {
  if (z.size() != grid.cells()) throw ContractError("isometry: integrand and grid differ");
  for (const auto& pr : probes) {
    if (pr.j >= grid.n_t || pr.i >= grid.n_x) throw ContractError("isometry: probe outside the grid");
  }
  const std::size_t np = probes.size();
  std::vector<double> samples(replicas * np);
  parallel_for(replicas, opts.workers, [&](std::size_t r) {
    const NoiseStream stream(seed, r);
    CausalConvolution conv(kernel, opts.method);
    std::vector<double> dw(grid.n_x);
    std::vector<double> src(grid.n_x);
    std::vector<double> row(grid.n_x);
    for (std::size_t n = 0; n < grid.n_t; ++n) {
      conv.output(row);
      for (std::size_t q = 0; q < np; ++q) {
        if (probes[q].j == n) samples[r * np + q] = row[probes[q].i];
      }
      if (n + 1 == grid.n_t) break;
      fill_noise_row(grid, stream, n, dw);
      for (std::size_t i = 0; i < grid.n_x; ++i) src[i] = z[n * grid.n_x + i] * dw[i];
      conv.push(src);
    }
  });
  const auto exact = isometry_variance(kernel->table(), z, grid);
  CheckReport rep;
  rep.name = "isometry";
  rep.pass = true;
  nlohmann::json rows = nlohmann::json::array();
  double worst = 0.0;
  for (std::size_t q = 0; q < np; ++q) {
    std::vector<double> sq(replicas);
    for (std::size_t r = 0; r < replicas; ++r) {
      const double x = samples[r * np + q];
      sq[r] = x * x;
    }
    // Zero-mean integral: the variance estimator is the mean of squares.
    const double var = mean_of(sq);
    const double se = std_error_of(sq);
    const double target = exact[probes[q].j * grid.n_x + probes[q].i];
    const double z_score = se > 0.0 ? (var - target) / se : (var == target ? 0.0 : INFINITY);
    const bool ok = std::abs(var - target) <= 3.0 * se;
    rep.pass = rep.pass && ok;
    if (std::abs(z_score) >= std::abs(worst)) {
      worst = z_score;
      rep.lhs = var;
      rep.rhs = target;
      rep.slack = 3.0 * se;
    }
    rows.push_back({{"j", probes[q].j}, {"i", probes[q].i}, {"mc_variance", var}, {"std_error", se},
                    {"isometry_sum", target}, {"z_score", z_score}, {"pass", ok}});
  }
  rep.details = {{"probes", rows}, {"replicas", replicas}};
  return rep;
}

}  // namespace spde
