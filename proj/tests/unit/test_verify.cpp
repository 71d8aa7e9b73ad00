#include <cmath>
#include <memory>
#include <random>

#include "doctest.h"
#include "spde/dalang.hpp"
#include "spde/verify.hpp"

using namespace spde;

namespace {

GridSpec grid() { return GridSpec::make(1.0, 1.0 / 32, 4.0, 1.0 / 8); }

std::shared_ptr<const SpectralKernel> heat_kernel(const GridSpec& g) {
  return std::make_shared<const SpectralKernel>(TransitionKernel(LevyModel::gaussian(1.0)).table(g));
}

NormParams params(double k, double beta, WeightMeasure eta) {
  NormParams p;
  p.k = k;
  p.beta = beta;
  p.eta = std::move(eta);
  p.bootstrap_resamples = 50;
  return p;
}

FieldEnsemble gaussian_field(const GridSpec& g, std::size_t reps, std::uint64_t seed) {
  FieldEnsemble e(g, reps);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  for (double& v : e.values()) v = n(rng);
  return e;
}

}  // namespace

TEST_CASE("Young inequality for deterministic integrands") {
  const auto g = grid();
  const auto k = heat_kernel(g);
  const double ups = upsilon(LevyModel::gaussian(1.0), 2.0).value;
  CHECK(ups == doctest::Approx(0.25));
  const auto p = params(2.0, 2.0, WeightMeasure::exponential(1.0));
  const auto zero = young_check(k, ups, FieldEnsemble(g, 1, 0.0), p, 1, 20);
  CHECK(zero.pass);
  CHECK(zero.lhs == 0.0);
  const auto one = young_check(k, ups, FieldEnsemble(g, 1, 1.0), p, 2, 400);
  CHECK(one.pass);
  CHECK(one.rhs <= 0.5);
  CHECK(one.lhs <= 0.525);
  CHECK(one.lhs > 0.0);
}

TEST_CASE("Young inequality for random integrands") {
  const auto g = grid();
  const auto k = heat_kernel(g);
  const double ups = upsilon(LevyModel::gaussian(1.0), 4.0).value;
  for (double kk : {2.0, 4.0}) {
    const auto z = gaussian_field(g, 200, 11);
    const auto rep = young_check(k, ups, z, params(kk, 4.0, WeightMeasure::lebesgue()), 3, 200);
    CHECK(rep.pass);
    CHECK(rep.details["z_k"].get<double>() == burkholder_constant(kk));
  }
}

TEST_CASE("Lipschitz composition") {
  const auto g = grid();
  const auto z = gaussian_field(g, 30, 4);
  const auto zs = gaussian_field(g, 30, 5);
  const auto p = params(2.0, 1.0, WeightMeasure::exponential(1.0));
  const auto id = lipschitz_composition_check(z, zs, SigmaSpec::linear(1.0), p);
  CHECK(id.pass);
  CHECK(id.lhs == doctest::Approx(id.rhs).epsilon(1e-13));
  const auto c = lipschitz_composition_check(z, zs, SigmaSpec::affine(2.0, 0.0), p);
  CHECK(c.pass);
  CHECK(c.lhs == 0.0);
  // |z| against -z: |sigma(z) - sigma(-z)| = 0 while |z - (-z)| = 2|z|.
  FieldEnsemble neg(g, 30);
  for (std::size_t q = 0; q < neg.values().size(); ++q) neg.values()[q] = -z.values()[q];
  const auto abs = lipschitz_composition_check(z, neg, SigmaSpec::absolute(), p);
  CHECK(abs.pass);
  CHECK(abs.lhs <= 1e-14 * abs.rhs);  // piecewise-linear evaluation rounds
  const auto lam = lipschitz_composition_check(z, zs, SigmaSpec::linear(-0.7), p);
  CHECK(lam.pass);
  CHECK(lam.lhs == doctest::Approx(lam.rhs).epsilon(1e-13));
  CHECK_THROWS_AS(lipschitz_composition_check(z, gaussian_field(g, 31, 6), SigmaSpec::absolute(), p),
                  ContractError);
}

TEST_CASE("orthogonality is exact without noise") {
  const auto g = grid();
  const auto d = deterministic_part(LevyModel::gaussian(1.0), SignedMeasure::dirac(), g);
  FieldEnsemble u(g, 5);
  for (std::size_t r = 0; r < 5; ++r) std::copy(d.begin(), d.end(), u.replica(r).begin());
  const auto rep = orthogonality_check(u, d, 2.0, WeightMeasure::lebesgue());
  CHECK(rep.pass);
  CHECK(rep.lhs == doctest::Approx(rep.rhs).epsilon(1e-14));
  CHECK(rep.details["m_convolution_squared"].get<double>() == 0.0);
}

TEST_CASE("orthogonality holds on a Picard solution") {
  const auto g = grid();
  auto res = picard_solve(LevyModel::gaussian(1.0), SigmaSpec::linear(1.0), SignedMeasure::dirac(), g,
                          params(2.0, 2.0, WeightMeasure::lebesgue()), 17, 400, 0.0, g.n_t + 1);
  const auto rep = orthogonality_check(res.ensemble, res.deterministic, 2.0, WeightMeasure::lebesgue());
  CHECK(rep.pass);
  CHECK(rep.details["m_convolution_squared"].get<double>() > 0.0);
}

TEST_CASE("isometry sum against a literal double loop") {
  const auto g = GridSpec::make(0.25, 1.0 / 32, 1.0, 1.0 / 8);
  const auto k = heat_kernel(g);
  std::vector<double> z(g.cells());
  for (std::size_t c = 0; c < z.size(); ++c) z[c] = std::cos(0.3 * static_cast<double>(c));
  const auto fast = isometry_variance(k->table(), z, g);
  for (std::size_t n = 0; n < g.n_t; ++n) {
    for (std::size_t i = 0; i < g.n_x; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t m = 0; m < g.n_x; ++m) {
          const double kv = k->table().at(n - j, static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(m));
          acc += kv * kv * z[j * g.n_x + m] * z[j * g.n_x + m] * g.dt * g.dx;
        }
      }
      CHECK(fast[n * g.n_x + i] == doctest::Approx(acc).epsilon(1e-10).scale(1e-12));
    }
  }
}

TEST_CASE("Monte Carlo variance matches the isometry") {
  const auto g = grid();
  const auto k = heat_kernel(g);
  std::vector<double> z(g.cells(), 1.0);
  const std::vector<Probe> probes{{g.n_t - 1, g.center()}, {g.n_t / 2, g.center() + g.n_x / 8}, {g.n_t - 1, 0}};
  const auto rep = isometry_check(k, z, g, probes, 99, 4000);
  CHECK(rep.pass);
  CHECK(rep.details["probes"].size() == 3);
  CHECK_THROWS_AS(isometry_check(k, z, g, {{g.n_t, 0}}, 1, 2), ContractError);
}

TEST_CASE("norm of a stochastic convolution from its isometry variance") {
  const auto g = grid();
  const auto k = heat_kernel(g);
  const auto p = params(2.0, 2.0, WeightMeasure::exponential(1.0));
  const FieldEnsemble one(g, 1, 1.0);
  const auto conv = convolve_ensemble(k, one, 5, 2000);
  const std::vector<double> z(g.cells(), 1.0);
  const auto var = isometry_variance(k->table(), z, g);
  const double exact = norm_squared_from_moments(var, g, p);
  CHECK(norm_estimate(conv, p).squared == doctest::Approx(exact).epsilon(0.05));
}

TEST_CASE("convolve_ensemble is reproducible and replica-indexed") {
  const auto g = grid();
  const auto k = heat_kernel(g);
  const FieldEnsemble one(g, 1, 1.0);
  const auto a = convolve_ensemble(k, one, 7, 4);
  const auto b = convolve_ensemble(k, one, 7, 4, {ConvolutionMethod::fft, 3});
  CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  // Row 0 carries no noise yet.
  for (std::size_t i = 0; i < g.n_x; ++i) CHECK(a.at(2, 0, i) == 0.0);
  CHECK_THROWS_AS(convolve_ensemble(k, gaussian_field(g, 3, 1), 7, 4), ContractError);
}
