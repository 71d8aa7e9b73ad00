#include "spde/noise.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>

#include "spde/errors.hpp"

namespace spde {

namespace philox {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void round(std::uint32_t& c0, std::uint32_t& c1, std::uint32_t& c2, std::uint32_t& c3, std::uint32_t k0,
                  std::uint32_t k1) {
  const std::uint64_t p0 = std::uint64_t{kM0} * c0;
  const std::uint64_t p1 = std::uint64_t{kM1} * c2;
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const auto lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const auto lo1 = static_cast<std::uint32_t>(p1);
  c0 = hi1 ^ c1 ^ k0;
  c1 = lo1;
  c2 = hi0 ^ c3 ^ k1;
  c3 = lo0;
}

inline void rounds10(std::uint32_t& c0, std::uint32_t& c1, std::uint32_t& c2, std::uint32_t& c3, std::uint32_t k0,
                     std::uint32_t k1) {
  for (int r = 0; r < 10; ++r) {
    round(c0, c1, c2, c3, k0, k1);
    k0 += kW0;
    k1 += kW1;
  }
}

}  // namespace

Counter philox4x32_10(Counter ctr, Key key) {
  rounds10(ctr[0], ctr[1], ctr[2], ctr[3], key[0], key[1]);
  return ctr;
}

}  // namespace philox

namespace {

constexpr std::size_t kBlock = 64;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// 53-bit uniform in (0, 1).
inline double open_uniform(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1p-53;
}

}  // namespace

namespace {

// Branch-free kernels so the block loops vectorize; accurate to a few ulp
// and independent of the platform libm.
inline double log_kernel(double u) {
  // u = m 2^e with m in [sqrt(1/2), sqrt(2)); log m = 2 atanh(s), s = (m-1)/(m+1).
  const auto bits = std::bit_cast<std::uint64_t>(u);
  const auto shifted = bits - 0x3FE6A09E667F3BCDull;  // bit pattern of sqrt(1/2)
  const auto e = static_cast<std::int64_t>(shifted) >> 52;
  const double m = std::bit_cast<double>(bits - (static_cast<std::uint64_t>(e) << 52));
  const double s = (m - 1.0) / (m + 1.0);
  const double s2 = s * s;
  double p = 1.0 / 23.0;
  p = p * s2 + 1.0 / 21.0;
  p = p * s2 + 1.0 / 19.0;
  p = p * s2 + 1.0 / 17.0;
  p = p * s2 + 1.0 / 15.0;
  p = p * s2 + 1.0 / 13.0;
  p = p * s2 + 1.0 / 11.0;
  p = p * s2 + 1.0 / 9.0;
  p = p * s2 + 1.0 / 7.0;
  p = p * s2 + 1.0 / 5.0;
  p = p * s2 + 1.0 / 3.0;
  const double log_m = 2.0 * s + 2.0 * s * s2 * p;
  constexpr double kLn2Hi = 6.93147180369123816490e-01;
  constexpr double kLn2Lo = 1.90821492927058770002e-10;
  const auto ed = static_cast<double>(e);
  return ed * kLn2Hi + (log_m + ed * kLn2Lo);
}

inline void sincos_kernel(double u, double& s, double& c) {
  // angle 2 pi u = (pi/2) k + phi, |phi| <= pi/4; 4u - k is exact.
  const double q = 4.0 * u;
  const double k = std::nearbyint(q);
  const double phi = (q - k) * (std::numbers::pi / 2.0);
  const double p2 = phi * phi;
  double sp = -1.0 / 1307674368000.0;  // -1/15!
  sp = sp * p2 + 1.0 / 6227020800.0;
  sp = sp * p2 - 1.0 / 39916800.0;
  sp = sp * p2 + 1.0 / 362880.0;
  sp = sp * p2 - 1.0 / 5040.0;
  sp = sp * p2 + 1.0 / 120.0;
  sp = sp * p2 - 1.0 / 6.0;
  const double sin_phi = phi + phi * p2 * sp;
  double cp = 1.0 / 20922789888000.0;  // 1/16!
  cp = cp * p2 - 1.0 / 87178291200.0;
  cp = cp * p2 + 1.0 / 479001600.0;
  cp = cp * p2 - 1.0 / 3628800.0;
  cp = cp * p2 + 1.0 / 40320.0;
  cp = cp * p2 - 1.0 / 720.0;
  cp = cp * p2 + 1.0 / 24.0;
  cp = cp * p2 - 0.5;
  const double cos_phi = 1.0 + p2 * cp;
  const auto quadrant = static_cast<std::int64_t>(k) & 3;
  const bool swap = (quadrant & 1) != 0;
  const double ss = swap ? cos_phi : sin_phi;
  const double cc = swap ? sin_phi : cos_phi;
  s = (quadrant == 2 || quadrant == 3) ? -ss : ss;
  c = (quadrant == 1 || quadrant == 2) ? -cc : cc;
}

}  // namespace

namespace detail {

double log_open_unit(double u) { return log_kernel(u); }
void sincos_turns(double u, double& s, double& c) { sincos_kernel(u, s, c); }

}  // namespace detail

NoiseStream::NoiseStream(std::uint64_t seed, std::uint64_t replica) : seed_(seed), replica_(replica) {}

void NoiseStream::fill_pairs(std::size_t j, std::size_t first_pair, std::size_t pairs, double scale,
                             double* out) const {
  const auto r_lo = static_cast<std::uint32_t>(replica_);
  const auto r_hi = static_cast<std::uint32_t>(replica_ >> 32);
  const auto row = static_cast<std::uint32_t>(j);

  // Structure-of-arrays blocks: every loop below is branch-free over q.
  alignas(64) std::uint32_t c0[kBlock], c1[kBlock], c2[kBlock], c3[kBlock];
  alignas(64) double radius[kBlock], turns[kBlock], z0[kBlock], z1[kBlock];
  for (std::size_t base = 0; base < pairs; base += kBlock) {
    const std::size_t n = std::min(kBlock, pairs - base);
    for (std::size_t q = 0; q < kBlock; ++q) {
      c0[q] = static_cast<std::uint32_t>(first_pair + base + q);
      c1[q] = row;
      c2[q] = r_lo;
      c3[q] = r_hi;
    }
    auto k0 = static_cast<std::uint32_t>(seed_);
    auto k1 = static_cast<std::uint32_t>(seed_ >> 32);
    for (int r = 0; r < 10; ++r) {
      for (std::size_t q = 0; q < kBlock; ++q) {
        const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c0[q];
        const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c2[q];
        const auto n0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1[q] ^ k0;
        const auto n2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3[q] ^ k1;
        c1[q] = static_cast<std::uint32_t>(p1);
        c3[q] = static_cast<std::uint32_t>(p0);
        c0[q] = n0;
        c2[q] = n2;
      }
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    for (std::size_t q = 0; q < kBlock; ++q) {
      radius[q] = scale * std::sqrt(-2.0 * log_kernel(open_uniform(c0[q], c1[q])));
      turns[q] = open_uniform(c2[q], c3[q]);
    }
    for (std::size_t q = 0; q < kBlock; ++q) {
      double s = 0.0;
      double c = 0.0;
      sincos_kernel(turns[q], s, c);
      z0[q] = radius[q] * c;
      z1[q] = radius[q] * s;
    }
    for (std::size_t q = 0; q < n; ++q) {
      out[2 * (base + q)] = z0[q];
      out[2 * (base + q) + 1] = z1[q];
    }
  }
}

void NoiseStream::fill_row(std::size_t j, double scale, std::span<double> out) const {
  const std::size_t even = out.size() / 2;
  fill_pairs(j, 0, even, scale, out.data());
  if (out.size() % 2 == 1) {
    double tail[2];
    fill_pairs(j, even, 1, scale, tail);
    out.back() = tail[0];
  }
}

double NoiseStream::standard_normal(std::size_t j, std::size_t i) const {
  double pair[2];
  fill_pairs(j, i / 2, 1, 1.0, pair);
  return pair[i % 2];
}

void fill_noise_row(const GridSpec& grid, const NoiseStream& stream, std::size_t j, std::span<double> out) {
  if (out.size() != grid.n_x) throw ContractError("fill_noise_row: output width differs from grid");
  stream.fill_row(j, std::sqrt(grid.dt * grid.dx), out);
}

NoiseField sample_noise(const GridSpec& grid, std::uint64_t seed, std::uint64_t replica, std::size_t budget_cells) {
  if (grid.n_x != 0 && grid.n_t > budget_cells / grid.n_x) {
    throw CapacityError("noise field of " + std::to_string(grid.n_t) + "x" + std::to_string(grid.n_x) +
                        " cells exceeds the budget of " + std::to_string(budget_cells) + " cells");
  }
  NoiseField f{grid, seed, replica, std::vector<double>(grid.n_t * grid.n_x)};
  const NoiseStream stream(seed, replica);
  for (std::size_t j = 0; j < grid.n_t; ++j) {
    fill_noise_row(grid, stream, j, std::span<double>(f.increments).subspan(j * grid.n_x, grid.n_x));
  }
  return f;
}

void write_noise_binary(const NoiseField& field, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  for (double v : field.increments) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    os.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!os) throw Error("write failed: " + path.string());
}

NoiseField read_noise_binary(const std::filesystem::path& path, const GridSpec& grid, std::uint64_t seed,
                             std::uint64_t replica) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  NoiseField f{grid, seed, replica, std::vector<double>(grid.n_t * grid.n_x)};
  for (double& v : f.increments) {
    std::uint64_t bits = 0;
    if (!is.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
      throw ContractError("noise dump " + path.string() + " is shorter than the grid");
    }
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    v = std::bit_cast<double>(bits);
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw ContractError("noise dump " + path.string() + " is longer than the grid");
  }
  return f;
}

}  // namespace spde
