#include <cmath>
#include <memory>
#include <vector>

#include "doctest.h"
#include "spde/errors.hpp"
#include "spde/norms.hpp"
#include "spde/picard.hpp"

using namespace spde;

namespace {

// 16 x 32 cells: small enough for thousands of replicas.
GridSpec small_grid() { return GridSpec::make(0.5, 1.0 / 32, 2.0, 1.0 / 8); }

NormParams norm_params(double beta, WeightMeasure eta = WeightMeasure::lebesgue()) {
  NormParams p;
  p.k = 2.0;
  p.beta = beta;
  p.eta = std::move(eta);
  p.bootstrap_resamples = 50;
  return p;
}

struct Moments {
  double mean = 0.0;
  double se = 0.0;
  double second = 0.0;
  double second_se = 0.0;
};

Moments moments_at(const FieldEnsemble& ens, std::size_t j, std::size_t i) {
  const double n = static_cast<double>(ens.replicas());
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  for (std::size_t r = 0; r < ens.replicas(); ++r) {
    const double u = ens.at(r, j, i);
    s1 += u;
    s2 += u * u;
    s4 += u * u * u * u;
  }
  Moments m;
  m.mean = s1 / n;
  m.se = std::sqrt(std::max(0.0, s2 / n - m.mean * m.mean) / n);
  m.second = s2 / n;
  m.second_se = std::sqrt(std::max(0.0, s4 / n - m.second * m.second) / n);
  return m;
}

// f[n] = D[n]^2 + lambda^2 sum_{j<n} sum_m K(n-j, i-m)^2 f[j, m] dt dx, literally.
std::vector<double> volterra_brute_force(const KernelTable& k, const std::vector<double>& d, double lambda,
                                         const GridSpec& g) {
  std::vector<double> f(g.cells());
  for (std::size_t n = 0; n < g.n_t; ++n) {
    for (std::size_t i = 0; i < g.n_x; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t m = 0; m < g.n_x; ++m) {
          const double kv = k.at(n - j, static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(m));
          acc += kv * kv * f[j * g.n_x + m] * g.dt * g.dx;
        }
      }
      f[n * g.n_x + i] = d[n * g.n_x + i] * d[n * g.n_x + i] + lambda * lambda * acc;
    }
  }
  return f;
}

}  // namespace

TEST_CASE("deterministic part is the semigroup applied to mu") {
  const auto g = small_grid();
  const auto model = LevyModel::gaussian(1.0);
  const SignedMeasure mu({{0.25, 1.0}}, Density::tabulated(-1.0, 0.5, {0.0, 1.0, 2.0, 1.0, 0.0}));
  const auto d = deterministic_part(model, mu, g);
  for (std::size_t i = 0; i < g.n_x; ++i) CHECK(d[i] == mu.density_at(g.x(i)));  // atoms never become spikes
  for (std::size_t j : {1u, 7u, 15u}) {
    for (std::size_t i : {0u, 16u, 18u, 31u}) {
      CHECK(d[j * g.n_x + i] == semigroup_apply(model, g.t(j), mu, g.x(i)));
    }
  }
  CHECK(domain_leakage(model, SignedMeasure::dirac(), g) == doctest::Approx(std::erfc(2.0 / std::sqrt(4.0 * 0.5))));
}

TEST_CASE("sigma = 0 reproduces the heat flow after one iteration") {
  const auto g = small_grid();
  const auto model = LevyModel::gaussian(1.0);
  auto res = picard_solve(model, SigmaSpec::linear(0.0), SignedMeasure::dirac(), g, norm_params(1.0), 1, 3, 1e-12, 5);
  CHECK(res.report.converged);
  CHECK(res.report.iterations == 2);
  CHECK(res.report.distances[1].value == 0.0);
  const auto d = deterministic_part(model, SignedMeasure::dirac(), g);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < g.cells(); ++c) CHECK(res.ensemble.replica(r)[c] == d[c]);
  }
}

TEST_CASE("ensemble mean equals the deterministic part") {
  const auto g = small_grid();
  const auto model = LevyModel::gaussian(1.0);
  const SignedMeasure mu({{0.0, 1.0}}, Density::tabulated(-1.0, 1.0, {0.5, 0.5, 0.5}));
  for (const auto& sigma : {SigmaSpec::linear(1.0), SigmaSpec::affine(0.5, 0.5), SigmaSpec::absolute()}) {
    auto res = picard_solve(model, sigma, mu, g, norm_params(2.0, WeightMeasure::exponential(1.0)), 77, 3000, 1e-9,
                            g.n_t + 1);
    for (std::size_t j : {4u, 10u, 15u}) {
      for (std::size_t i : {8u, 16u, 20u}) {
        const auto m = moments_at(res.ensemble, j, i);
        CHECK(std::abs(m.mean - res.deterministic[j * g.n_x + i]) <= 3.0 * m.se + 1e-12);
      }
    }
  }
}

TEST_CASE("the discrete equation is solved exactly after n_t iterations") {
  const auto g = small_grid();
  auto res = picard_solve(LevyModel::gaussian(1.0), SigmaSpec::linear(1.0), SignedMeasure::dirac(), g,
                          norm_params(2.0), 3, 4, 0.0, g.n_t + 1);
  // Causality: iterate n is exact on rows < n, so the last distance vanishes.
  CHECK(res.report.distances.back().value == 0.0);
  CHECK(res.report.converged);
}

TEST_CASE("Picard distances contract at the rate z_k Lip sqrt(Upsilon)") {
  const auto g = GridSpec::make(1.0, 1.0 / 64, 4.0, 1.0 / 16);
  auto res = picard_solve(LevyModel::gaussian(1.0), SigmaSpec::linear(1.0), SignedMeasure::dirac(), g,
                          norm_params(2.0), 5, 200, 1e-12, 6);
  CHECK(res.report.gate.contraction == doctest::Approx(0.5));
  REQUIRE(res.report.ratios.size() >= 4);
  for (std::size_t n = 1; n < 5; ++n) CHECK(res.report.ratios[n] <= 0.5 + 0.1);
}

TEST_CASE("gate refusal and invalid setups") {
  const auto g = small_grid();
  CHECK_THROWS_AS(picard_solve(LevyModel::stable(1.0, 1.0), SigmaSpec::linear(1.0), SignedMeasure::dirac(), g,
                               norm_params(2.0), 1, 2, 1e-6, 3),
                  GateRefusal);
  try {
    picard_solve(LevyModel::gaussian(1.0), SigmaSpec::linear(1.0), SignedMeasure::dirac(), g, norm_params(0.1), 1, 2,
                 1e-6, 3);
    FAIL("expected refusal");
  } catch (const GateRefusal& e) {
    CHECK_FALSE(e.report().pass);
    CHECK(e.report().upsilon.value == doctest::Approx(1.0 / (2.0 * std::sqrt(0.2))));
  }
  // sigma(0) != 0 needs a finite weight.
  CHECK_THROWS_AS(picard_solve(LevyModel::gaussian(1.0), SigmaSpec::affine(1.0, 0.5), SignedMeasure::dirac(), g,
                               norm_params(2.0), 1, 2, 1e-6, 3),
                  ParameterError);
  FieldEnsemble bad(g, 1, 0.0);
  bad.at(0, 3, 3) = std::nan("");
  CHECK_THROWS_AS(bad.validate(), InvalidEnsembleError);
}

TEST_CASE("results do not depend on the worker count") {
  const auto g = small_grid();
  const auto run = [&](std::size_t workers) {
    return picard_solve(LevyModel::stable(1.5, 1.0), SigmaSpec::linear(0.8), SignedMeasure::dirac(), g,
                        norm_params(4.0), 9, 37, 1e-10, 4, {ConvolutionMethod::fft, workers});
  };
  const auto a = run(1);
  const auto b = run(3);
  CHECK(std::equal(a.ensemble.values().begin(), a.ensemble.values().end(), b.ensemble.values().begin()));
  CHECK(a.report.distances.back().value == b.report.distances.back().value);
}

TEST_CASE("Volterra second moment") {
  const auto g = small_grid();
  const auto model = LevyModel::gaussian(1.0);
  const SignedMeasure mu({{0.1, 1.0}}, Density::tabulated(-1.0, 1.0, {0.2, 0.7, 0.0}));
  const auto d = deterministic_part(model, mu, g);
  const auto f0 = second_moment_volterra(model, 0.0, mu, g);
  for (std::size_t c = 0; c < g.cells(); ++c) CHECK(f0[c] == d[c] * d[c]);
  const auto f = second_moment_volterra(model, 1.3, mu, g);
  const auto oracle = volterra_brute_force(*TransitionKernel(model).table(g), d, 1.3, g);
  double scale = 0.0;
  for (double v : oracle) scale = std::max(scale, v);
  for (std::size_t c = 0; c < g.cells(); ++c) {
    CHECK(f[c] >= d[c] * d[c]);
    CHECK(std::abs(f[c] - oracle[c]) <= 1e-10 * scale);
  }
}

TEST_CASE("Monte Carlo second moment matches the Volterra oracle") {
  const auto g = small_grid();
  const auto model = LevyModel::gaussian(1.0);
  const SignedMeasure mu = SignedMeasure::dirac();
  auto res = picard_solve(model, SigmaSpec::linear(1.0), mu, g, norm_params(2.0), 123, 10000, 0.0, g.n_t + 1);
  const auto f = second_moment_volterra(model, 1.0, mu, g);
  const std::size_t j = g.n_t / 2;
  const std::size_t i = g.center();
  const auto m = moments_at(res.ensemble, j, i);
  CHECK(std::abs(m.second - f[j * g.n_x + i]) <= 5.0 * m.second_se);
}

TEST_CASE("semigroup march agrees with the Picard solution on shared noise") {
  const auto g = GridSpec::make(0.5, 1.0 / 128, 4.0, 1.0 / 16);
  const auto model = LevyModel::gaussian(1.0);
  const auto sigma = SigmaSpec::linear(1.0);
  const auto d = deterministic_part(model, SignedMeasure::dirac(), g);
  const std::size_t reps = 6;
  auto res = picard_solve(model, sigma, SignedMeasure::dirac(), g, norm_params(2.0), 31, reps, 0.0, g.n_t + 1);
  MarchOptions mo;
  mo.beta = 2.0;
  const auto mc = march_solve(model, sigma, d, g, 31, reps, mo);
  for (std::size_t r = 0; r < reps; ++r) {
    const double q = m_norm_term(res.ensemble.replica(r), g, 2.0, WeightMeasure::lebesgue(), g.T);
    CHECK(mc.q_solution[r] == doctest::Approx(q).epsilon(1e-4));
  }
  // Strided mean reads the same cells; the window edge differs by boundary killing.
  for (std::size_t c = g.n_x / 4; c < 3 * g.n_x / 4; c += 8) {
    const std::size_t j = g.n_t - 1;
    double s1 = 0.0;
    for (std::size_t r = 0; r < reps; ++r) s1 += res.ensemble.at(r, j, c);
    CHECK(mc.mean[j * mc.cols + c] == doctest::Approx(s1 / reps).epsilon(1e-3).scale(1e-6));
  }
}

TEST_CASE("march statistics are independent of workers and block merging") {
  const auto g = GridSpec::make(0.25, 1.0 / 64, 2.0, 1.0 / 16);
  const auto model = LevyModel::gaussian(1.0);
  const auto d = deterministic_part(model, SignedMeasure::dirac(), g);
  MarchOptions mo;
  mo.stride_t = 4;
  mo.stride_x = 2;
  mo.block = 8;
  mo.workers = 1;
  const auto a = march_solve(model, SigmaSpec::linear(1.0), d, g, 4, 50, mo);
  mo.workers = 4;
  const auto b = march_solve(model, SigmaSpec::linear(1.0), d, g, 4, 50, mo);
  CHECK(a.mean == b.mean);
  CHECK(a.second == b.second);
  CHECK(a.q_solution == b.q_solution);
  CHECK(a.rows == 4);
  CHECK(a.cols == 32);
}
