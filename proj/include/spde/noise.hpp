#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "spde/grid.hpp"

namespace spde {

namespace philox {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al. counter-based generator).
Counter philox4x32_10(Counter ctr, Key key);

}  // namespace philox

namespace detail {
/// log(u) for u in (0, 1], branch-free.
double log_open_unit(double u);
/// sin and cos of 2 pi u, branch-free.
void sincos_turns(double u, double& s, double& c);
}  // namespace detail

/// Default ceiling for materialized noise fields, in cells (1 GiB of f64).
inline constexpr std::size_t kDefaultNoiseBudget = std::size_t{1} << 27;

/// Stateless white-noise source for one (seed, replica) pair. Cell (j, i)
/// draws from Philox counter (i/2, j, replica_lo, replica_hi) under key
/// (seed_lo, seed_hi); one Box-Muller transform yields cells 2p and 2p+1.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t replica);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t replica() const { return replica_; }

  /// out[i] = scale * N_i for i in [0, out.size()), N_i standard normal of cell (j, i).
  void fill_row(std::size_t j, double scale, std::span<double> out) const;
  double standard_normal(std::size_t j, std::size_t i) const;

 private:
  void fill_pairs(std::size_t j, std::size_t first_pair, std::size_t pairs, double scale, double* out) const;

  std::uint64_t seed_;
  std::uint64_t replica_;
};

/// Materialized increments Delta W[j, i] ~ N(0, dt dx), row-major.
struct NoiseField {
  GridSpec grid;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  std::vector<double> increments;

  double at(std::size_t j, std::size_t i) const { return increments[j * grid.n_x + i]; }
  std::span<const double> row(std::size_t j) const {
    return std::span<const double>(increments).subspan(j * grid.n_x, grid.n_x);
  }
};

/// Throws CapacityError when n_t * n_x exceeds budget_cells.
NoiseField sample_noise(const GridSpec& grid, std::uint64_t seed, std::uint64_t replica,
                        std::size_t budget_cells = kDefaultNoiseBudget);

/// Row j of the same field, generated on demand without materializing it.
void fill_noise_row(const GridSpec& grid, const NoiseStream& stream, std::size_t j, std::span<double> out);

/// Little-endian f64, row-major [j][i], no header.
void write_noise_binary(const NoiseField& field, const std::filesystem::path& path);
NoiseField read_noise_binary(const std::filesystem::path& path, const GridSpec& grid, std::uint64_t seed,
                             std::uint64_t replica);

}  // namespace spde
