#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "spde/grid.hpp"

namespace spde {

/// Translation-invariant space-time kernel sampled on a lattice:
/// value(d, off) = Gamma(d*dt, off*dx) for lags d in [0, n_t) and
/// offsets off in (-n_x, n_x). Lag 0 is never used by the left-point rule
/// and is stored as zero.
class KernelTable {
 public:
  KernelTable(std::size_t n_t, std::size_t n_x)
      : n_t_(n_t), n_x_(n_x), values_(n_t * (2 * n_x - 1), 0.0) {}

  static KernelTable tabulate(const GridSpec& grid,
                              const std::function<double(double t, double x)>& kernel) {
    KernelTable table(grid.n_t, grid.n_x);
    const auto n = static_cast<std::ptrdiff_t>(grid.n_x);
    for (std::size_t d = 1; d < grid.n_t; ++d) {
      const double t = grid.t(d);
      for (std::ptrdiff_t off = -(n - 1); off < n; ++off) {
        table.at(d, off) = kernel(t, static_cast<double>(off) * grid.dx);
      }
    }
    return table;
  }

  double at(std::size_t d, std::ptrdiff_t off) const {
    return values_[d * width() + static_cast<std::size_t>(off + static_cast<std::ptrdiff_t>(n_x_) - 1)];
  }
  double& at(std::size_t d, std::ptrdiff_t off) {
    return values_[d * width() + static_cast<std::size_t>(off + static_cast<std::ptrdiff_t>(n_x_) - 1)];
  }

  std::size_t n_t() const { return n_t_; }
  std::size_t n_x() const { return n_x_; }
  std::size_t width() const { return 2 * n_x_ - 1; }

  /// value(d, off) == value(d, -off) for every stored entry.
  bool symmetric() const {
    const auto n = static_cast<std::ptrdiff_t>(n_x_);
    for (std::size_t d = 0; d < n_t_; ++d) {
      for (std::ptrdiff_t off = 1; off < n; ++off) {
        if (at(d, off) != at(d, -off)) return false;
      }
    }
    return true;
  }

  /// Elementwise square, the kernel of the isometry (second-moment) map.
  KernelTable squared() const {
    KernelTable out(n_t_, n_x_);
    for (std::size_t k = 0; k < values_.size(); ++k) out.values_[k] = values_[k] * values_[k];
    return out;
  }

 private:
  std::size_t n_t_;
  std::size_t n_x_;
  std::vector<double> values_;
};

}  // namespace spde
