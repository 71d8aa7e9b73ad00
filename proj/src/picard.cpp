#include "spde/picard.hpp"

#include <algorithm>
#include <cmath>

#include "spde/noise.hpp"
#include "spde/parallel.hpp"

namespace spde {

nlohmann::json PicardReport::to_json() const {
  nlohmann::json d = nlohmann::json::array();
  for (const auto& e : distances) d.push_back(e.to_json());
  return {{"gate", gate.to_json()},     {"distances", d},         {"ratios", ratios},
          {"iterations", iterations}, {"converged", converged}, {"warning", warning},
          {"leakage_bound", leakage_bound}, {"notes", notes}};
}

std::vector<double> deterministic_part(const LevyModel& model, const SignedMeasure& mu, const GridSpec& grid) {
  std::vector<double> d(grid.cells());
  for (std::size_t i = 0; i < grid.n_x; ++i) d[i] = mu.density_at(grid.x(i));
  for (std::size_t j = 1; j < grid.n_t; ++j) {
    for (std::size_t i = 0; i < grid.n_x; ++i) d[j * grid.n_x + i] = semigroup_apply(model, grid.t(j), mu, grid.x(i));
  }
  return d;
}

double domain_leakage(const LevyModel& model, const SignedMeasure& mu, const GridSpec& grid) {
  double reach = 0.0;
  for (const auto& a : mu.atoms()) reach = std::max(reach, std::abs(a.location));
  if (mu.density()) reach = std::max({reach, std::abs(mu.density()->lower()), std::abs(mu.density()->upper())});
  if (reach >= grid.L) return 1.0;
  return mass_outside(model, grid.T, grid.L - reach);
}

PicardResult picard_iterate(const std::shared_ptr<const SpectralKernel>& kernel, std::vector<double> deterministic,
                            const SigmaSpec& sigma, const GridSpec& grid, const NormParams& norm, std::uint64_t seed,
                            std::size_t replicas, double tol, std::size_t max_iter, const SolverOptions& opts) {
  norm.validate();
  if (kernel->n_t() != grid.n_t || kernel->n_x() != grid.n_x) throw ContractError("picard: kernel and grid differ");
  if (deterministic.size() != grid.cells()) throw ContractError("picard: deterministic part and grid differ");
  if (replicas == 0) throw ParameterError("picard: at least one replica required");
  if (max_iter == 0) throw ParameterError("picard: max_iter must be >= 1");
  if (sigma.value_at_zero() != 0.0 && !norm.eta.finite()) {
    throw ParameterError("picard: sigma(0) != 0 requires a finite weight measure eta");
  }

  const std::size_t nx = grid.n_x;
  FieldEnsemble prev(grid, replicas, 0.0);
  FieldEnsemble next(grid, replicas, 0.0);
  PicardReport report;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    parallel_for(replicas, opts.workers, [&](std::size_t r) {
      CausalConvolution conv(kernel, opts.method);
      const NoiseStream stream(seed, r);
      std::vector<double> dw(nx);
      std::vector<double> src(nx);
      const auto u_old = prev.replica(r);
      const auto u_new = next.replica(r);
      for (std::size_t n = 0; n < grid.n_t; ++n) {
        auto row = u_new.subspan(n * nx, nx);
        conv.output(row);
        for (std::size_t i = 0; i < nx; ++i) row[i] += deterministic[n * nx + i];
        if (n + 1 == grid.n_t) break;
        sigma.apply(u_old.subspan(n * nx, nx), src);
        fill_noise_row(grid, stream, n, dw);
        for (std::size_t i = 0; i < nx; ++i) src[i] *= dw[i];
        conv.push(src);
      }
    });
    next.validate();
    report.distances.push_back(norm_estimate(difference(next, prev), norm));
    std::swap(prev, next);
    report.iterations = it;
    if (report.distances.back().value <= tol) {
      report.converged = true;
      break;
    }
  }
  for (std::size_t n = 1; n < report.distances.size(); ++n) {
    const double d0 = report.distances[n - 1].value;
    report.ratios.push_back(d0 > 0.0 ? report.distances[n].value / d0 : 0.0);
  }
  if (!report.converged) {
    report.warning = "no convergence after " + std::to_string(max_iter) + " iterations (last distance " +
                     std::to_string(report.distances.back().value) + ", tol " + std::to_string(tol) + ")";
  }
  prev.provenance.seed = seed;
  prev.provenance.sigma = sigma.to_json();
  prev.provenance.iterations = report.iterations;
  return {std::move(prev), std::move(deterministic), std::move(report)};
}

PicardResult picard_solve(const LevyModel& model, const SigmaSpec& sigma, const SignedMeasure& mu,
                          const GridSpec& grid, const NormParams& norm, std::uint64_t seed, std::size_t replicas,
                          double tol, std::size_t max_iter, const SolverOptions& opts) {
  GateParams gp;
  gp.k = norm.k;
  gp.beta = norm.beta;
  gp.lip_sigma = sigma.lip();
  auto gate = existence_gate(model, gp);
  if (!gate.pass) throw GateRefusal(gate);

  const TransitionKernel kernel(model);
  auto spectral = std::make_shared<const SpectralKernel>(kernel.table(grid));
  auto result = picard_iterate(spectral, deterministic_part(model, mu, grid), sigma, grid, norm, seed, replicas, tol,
                               max_iter, opts);
  result.report.gate = gate;
  result.report.leakage_bound = domain_leakage(model, mu, grid);
  result.ensemble.provenance.model = model.to_json();
  result.ensemble.provenance.measure = mu.to_json();
  return result;
}

std::vector<double> second_moment_volterra(const std::shared_ptr<const SpectralKernel>& squared_kernel,
                                           std::span<const double> deterministic, double lambda,
                                           const GridSpec& grid) {
  if (!(lambda >= 0.0)) throw ParameterError("volterra: lambda must be >= 0");
  if (deterministic.size() != grid.cells()) throw ContractError("volterra: deterministic part and grid differ");
  const std::size_t nx = grid.n_x;
  std::vector<double> f(grid.cells());
  std::vector<double> row(nx);
  std::vector<double> src(nx);
  CausalConvolution conv(squared_kernel, ConvolutionMethod::fft);
  const double l2 = lambda * lambda;
  const double cell = grid.dt * grid.dx;
  for (std::size_t n = 0; n < grid.n_t; ++n) {
    conv.output(row);
    for (std::size_t i = 0; i < nx; ++i) {
      const double d = deterministic[n * nx + i];
      // Nonnegative kernel and sources: clip FFT round-off below zero.
      f[n * nx + i] = d * d + l2 * std::max(0.0, row[i]);
    }
    if (n + 1 == grid.n_t) break;
    for (std::size_t i = 0; i < nx; ++i) src[i] = f[n * nx + i] * cell;
    conv.push(src);
  }
  return f;
}

std::vector<double> second_moment_volterra(const LevyModel& model, double lambda, const SignedMeasure& mu,
                                           const GridSpec& grid) {
  const TransitionKernel kernel(model);
  auto sq = std::make_shared<const KernelTable>(kernel.table(grid)->squared());
  return second_moment_volterra(std::make_shared<const SpectralKernel>(sq), deterministic_part(model, mu, grid),
                                lambda, grid);
}

MarchSummary march_solve(const LevyModel& model, const SigmaSpec& sigma, std::span<const double> deterministic,
                         const GridSpec& grid, std::uint64_t seed, std::size_t replicas, const MarchOptions& opts) {
  if (deterministic.size() != grid.cells()) throw ContractError("march: deterministic part and grid differ");
  if (replicas == 0) throw ParameterError("march: at least one replica required");
  if (opts.stride_t == 0 || opts.stride_x == 0 || opts.block == 0) throw ParameterError("march: zero stride or block");
  const std::size_t nx = grid.n_x;

  // One-step stencil, truncated where p_dt drops below 1e-17 of its peak.
  const double peak = transition_density(model, grid.dt, 0.0);
  std::size_t W = 0;
  while (W + 1 < nx && transition_density(model, grid.dt, static_cast<double>(W + 1) * grid.dx) > 1e-17 * peak) ++W;
  std::vector<double> stencil(2 * W + 1);
  for (std::size_t m = 0; m <= W; ++m) {
    const double s = transition_density(model, grid.dt, static_cast<double>(m) * grid.dx) * grid.dx;
    stencil[W + m] = s;
    stencil[W - m] = s;
  }

  MarchSummary out;
  out.grid = grid;
  out.stride_t = opts.stride_t;
  out.stride_x = opts.stride_x;
  out.rows = (grid.n_t + opts.stride_t - 1) / opts.stride_t;
  out.cols = (nx + opts.stride_x - 1) / opts.stride_x;
  out.stencil_half_width = W;
  out.replicas = replicas;
  out.q_solution.assign(replicas, 0.0);
  out.q_noise.assign(replicas, 0.0);

  const double horizon = opts.horizon > 0.0 ? opts.horizon : grid.T;
  std::vector<double> wt(grid.n_t, 0.0);
  for (std::size_t n = 0; n < grid.n_t && grid.t(n) < horizon - 1e-12 * grid.dt; ++n) {
    wt[n] = std::exp(-opts.beta * grid.t(n)) * grid.dt;
  }
  std::vector<double> wx(nx);
  for (std::size_t i = 0; i < nx; ++i) wx[i] = opts.eta.density(grid.x(i)) * grid.dx;

  const std::size_t strided = out.rows * out.cols;
  const std::size_t blocks = (replicas + opts.block - 1) / opts.block;
  std::vector<std::vector<double>> part_mean(blocks);
  std::vector<std::vector<double>> part_second(blocks);

  parallel_for(blocks, opts.workers, [&](std::size_t b) {
    std::vector<double> sum(strided, 0.0);
    std::vector<double> sum2(strided, 0.0);
    std::vector<double> v(nx);
    std::vector<double> u(nx);
    std::vector<double> g(nx);
    std::vector<double> dw(nx);
    std::vector<double> pad(nx + 2 * W, 0.0);
    const std::size_t r_end = std::min(replicas, (b + 1) * opts.block);
    for (std::size_t r = b * opts.block; r < r_end; ++r) {
      const NoiseStream stream(seed, r);
      std::fill(v.begin(), v.end(), 0.0);
      double qu = 0.0;
      double qv = 0.0;
      for (std::size_t n = 0; n < grid.n_t; ++n) {
        const double* d = deterministic.data() + n * nx;
        for (std::size_t i = 0; i < nx; ++i) u[i] = d[i] + v[i];
        if (wt[n] > 0.0) {
          double su = 0.0;
          double sv = 0.0;
          for (std::size_t i = 0; i < nx; ++i) {
            su += wx[i] * (u[i] * u[i]);
            sv += wx[i] * (v[i] * v[i]);
          }
          qu += wt[n] * su;
          qv += wt[n] * sv;
        }
        if (n % opts.stride_t == 0) {
          double* s1 = sum.data() + (n / opts.stride_t) * out.cols;
          double* s2 = sum2.data() + (n / opts.stride_t) * out.cols;
          for (std::size_t c = 0; c < out.cols; ++c) {
            const double x = u[c * opts.stride_x];
            s1[c] += x;
            s2[c] += x * x;
          }
        }
        if (n + 1 == grid.n_t) break;
        sigma.apply(u, g);
        fill_noise_row(grid, stream, n, dw);
        for (std::size_t i = 0; i < nx; ++i) pad[W + i] = v[i] + g[i] * dw[i] / grid.dx;
        std::fill(v.begin(), v.end(), 0.0);
        for (std::size_t m = 0; m < stencil.size(); ++m) {
          // v[i] += S[m - W] pad[W + i - (m - W)]
          const double s = stencil[m];
          const double* src = pad.data() + 2 * W - m;
          for (std::size_t i = 0; i < nx; ++i) v[i] += s * src[i];
        }
      }
      out.q_solution[r] = qu;
      out.q_noise[r] = qv;
    }
    part_mean[b] = std::move(sum);
    part_second[b] = std::move(sum2);
  });

  out.mean.assign(strided, 0.0);
  out.second.assign(strided, 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t c = 0; c < strided; ++c) {
      out.mean[c] += part_mean[b][c];
      out.second[c] += part_second[b][c];
    }
  }
  const double inv = 1.0 / static_cast<double>(replicas);
  for (std::size_t c = 0; c < strided; ++c) {
    out.mean[c] *= inv;
    out.second[c] *= inv;
  }
  for (double q : out.q_solution) {
    if (!std::isfinite(q)) throw InvalidEnsembleError("march: non-finite second-moment term");
  }
  return out;
}

}  // namespace spde
