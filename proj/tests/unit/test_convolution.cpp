#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "doctest.h"
#include "spde/convolution.hpp"
#include "spde/errors.hpp"
#include "spde/levy.hpp"
#include "spde/noise.hpp"

using namespace spde;

namespace {

std::shared_ptr<const SpectralKernel> random_kernel(const GridSpec& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto t = std::make_shared<KernelTable>(g.n_t, g.n_x);
  const auto n = static_cast<std::ptrdiff_t>(g.n_x);
  for (std::size_t d = 1; d < g.n_t; ++d) {
    for (std::ptrdiff_t off = -(n - 1); off < n; ++off) t->at(d, off) = u(rng);
  }
  return std::make_shared<const SpectralKernel>(t);
}

std::vector<double> random_field(const GridSpec& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  std::vector<double> v(g.cells());
  for (auto& x : v) x = n(rng);
  return v;
}

// Literal definition, j then m ascending.
std::vector<double> brute_force(const KernelTable& k, const GridSpec& g, const std::vector<double>& src) {
  std::vector<double> out(g.cells(), 0.0);
  for (std::size_t n = 0; n < g.n_t; ++n) {
    for (std::size_t i = 0; i < g.n_x; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t m = 0; m < g.n_x; ++m) {
          acc += k.at(n - j, static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(m)) * src[j * g.n_x + m];
        }
      }
      out[n * g.n_x + i] = acc;
    }
  }
  return out;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("direct convolution equals the brute-force double loop bit for bit") {
  const auto g = GridSpec::make(1.0, 0.125, 0.5, 0.125);  // 8 x 8
  const auto k = random_kernel(g, 1);
  const auto z = random_field(g, 2);
  const auto dw = sample_noise(g, 3, 0).increments;
  std::vector<double> src(g.cells());
  for (std::size_t c = 0; c < src.size(); ++c) src[c] = z[c] * dw[c];
  std::vector<double> out(g.cells());
  stochastic_convolution(k, ConvolutionMethod::direct, z, dw, out);
  CHECK(out == brute_force(k->table(), g, src));
  std::vector<double> fft(g.cells());
  stochastic_convolution(k, ConvolutionMethod::fft, z, dw, fft);
  for (std::size_t c = 0; c < out.size(); ++c) CHECK(std::abs(fft[c] - out[c]) <= 1e-12 * max_abs(out));
}

TEST_CASE("FFT and direct agree to 1e-10 relative") {
  const auto g = GridSpec::make(1.0, 1.0 / 64, 4.0, 1.0 / 16);  // 64 x 128
  for (bool heat : {false, true}) {
    const auto k = heat ? std::make_shared<const SpectralKernel>(TransitionKernel(LevyModel::gaussian(1.0)).table(g))
                        : random_kernel(g, 4);
    CHECK(k->real_spectrum() == heat);
    const auto src = random_field(g, 5);
    std::vector<double> a(g.cells());
    std::vector<double> b(g.cells());
    convolve_field(k, ConvolutionMethod::direct, src, a);
    convolve_field(k, ConvolutionMethod::fft, src, b);
    const double scale = max_abs(a);
    double worst = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) worst = std::max(worst, std::abs(a[c] - b[c]));
    CHECK(worst <= 1e-10 * scale);
  }
}

TEST_CASE("zero integrand and exact linearity") {
  const auto g = GridSpec::make(0.5, 1.0 / 32, 1.0, 1.0 / 16);
  const auto k = std::make_shared<const SpectralKernel>(TransitionKernel(LevyModel::stable(1.5, 1.0)).table(g));
  const auto dw = sample_noise(g, 8, 0).increments;
  const auto z = random_field(g, 9);
  std::vector<double> z2(z.size());
  for (std::size_t c = 0; c < z.size(); ++c) z2[c] = 2.0 * z[c];
  for (auto method : {ConvolutionMethod::direct, ConvolutionMethod::fft}) {
    std::vector<double> out(g.cells(), 7.0);
    stochastic_convolution(k, method, std::vector<double>(g.cells(), 0.0), dw, out);
    CHECK(max_abs(out) == 0.0);
    std::vector<double> a(g.cells());
    std::vector<double> b(g.cells());
    stochastic_convolution(k, method, z, dw, a);
    stochastic_convolution(k, method, z2, dw, b);
    for (std::size_t c = 0; c < a.size(); ++c) CHECK(b[c] == 2.0 * a[c]);
  }
}

TEST_CASE("stochastic convolution has zero mean") {
  const auto g = GridSpec::make(0.5, 1.0 / 16, 1.0, 1.0 / 8);
  const auto k = std::make_shared<const SpectralKernel>(TransitionKernel(LevyModel::gaussian(1.0)).table(g));
  const std::vector<double> ones(g.cells(), 1.0);
  const std::size_t reps = 4000;
  const std::size_t probe = (g.n_t - 1) * g.n_x + g.center();
  double s = 0.0;
  double s2 = 0.0;
  std::vector<double> out(g.cells());
  for (std::size_t r = 0; r < reps; ++r) {
    stochastic_convolution(k, ConvolutionMethod::fft, ones, sample_noise(g, 21, r).increments, out);
    s += out[probe];
    s2 += out[probe] * out[probe];
  }
  const double mean = s / reps;
  const double se = std::sqrt((s2 / reps - mean * mean) / reps);
  CHECK(std::abs(mean) < 3.0 * se);
}

TEST_CASE("streaming interface") {
  const auto g = GridSpec::make(0.5, 1.0 / 16, 1.0, 1.0 / 8);
  const auto k = random_kernel(g, 30);
  const auto src = random_field(g, 31);
  std::vector<double> whole(g.cells());
  convolve_field(k, ConvolutionMethod::fft, src, whole);
  CausalConvolution conv(k, ConvolutionMethod::fft);
  std::vector<double> row(g.n_x);
  for (std::size_t n = 0; n < g.n_t; ++n) {
    CHECK(conv.rows() == n);
    conv.output(row);
    for (std::size_t i = 0; i < g.n_x; ++i) CHECK(row[i] == whole[n * g.n_x + i]);
    conv.push(std::span<const double>(src).subspan(n * g.n_x, g.n_x));
  }
  std::vector<double> wrong(g.cells() - 1);
  CHECK_THROWS_AS(convolve_field(k, ConvolutionMethod::direct, wrong, whole), ContractError);
}

TEST_CASE("compact kernels leave exact zeros outside their reach under FFT") {
  const auto g = GridSpec::make(1.0, 1.0 / 16, 4.0, 1.0 / 16);
  // Asymmetric compact kernel: nonzero on offsets [-d, 2d] at lag d.
  auto table = std::make_shared<const KernelTable>(KernelTable::tabulate(g, [&](double t, double x) {
    const double c = x / g.dx;
    const double d = t / g.dt;
    return (c >= -d - 1e-9 && c <= 2.0 * d + 1e-9) ? 1.0 + 0.01 * c : 0.0;
  }));
  auto k = std::make_shared<const SpectralKernel>(table);
  CHECK(k->support_lo(3) == -3);
  CHECK(k->support_hi(3) == 6);
  std::vector<double> src(g.cells(), 0.0);
  src[g.center()] = 1.3;                  // row 0
  src[2 * g.n_x + g.center() + 4] = -0.7;  // row 2
  std::vector<double> fft(g.cells());
  std::vector<double> direct(g.cells());
  convolve_field(k, ConvolutionMethod::fft, src, fft);
  convolve_field(k, ConvolutionMethod::direct, src, direct);
  for (std::size_t n = 0; n < g.n_t; ++n) {
    // Hull of cells reached through a nonzero kernel entry, by brute force.
    std::ptrdiff_t lo = static_cast<std::ptrdiff_t>(g.n_x);
    std::ptrdiff_t hi = -1;
    for (std::size_t i = 0; i < g.n_x; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t m = 0; m < g.n_x; ++m) {
          const auto off = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(m);
          if (src[j * g.n_x + m] != 0.0 && table->at(n - j, off) != 0.0) {
            lo = std::min(lo, static_cast<std::ptrdiff_t>(i));
            hi = std::max(hi, static_cast<std::ptrdiff_t>(i));
          }
        }
      }
    }
    for (std::size_t i = 0; i < g.n_x; ++i) {
      const std::size_t c = n * g.n_x + i;
      const auto ii = static_cast<std::ptrdiff_t>(i);
      if (ii < lo || ii > hi) {
        CHECK(direct[c] == 0.0);
        CHECK(fft[c] == 0.0);
      } else {
        CHECK(fft[c] == doctest::Approx(direct[c]).epsilon(1e-12).scale(1e-14));
      }
    }
  }
}
