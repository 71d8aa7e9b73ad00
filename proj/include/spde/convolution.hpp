#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "spde/kernel_table.hpp"

namespace spde {

enum class ConvolutionMethod { direct, fft };

/// Spectral form of a kernel table: each lag row zero-padded to P = 2 n_x,
/// so circular convolution of length P equals the linear one on the
/// lattice. Built once, shared read-only by all replicas.
class SpectralKernel {
 public:
  explicit SpectralKernel(std::shared_ptr<const KernelTable> table);

  const KernelTable& table() const { return *table_; }
  std::size_t n_t() const { return table_->n_t(); }
  std::size_t n_x() const { return table_->n_x(); }
  std::size_t padded() const { return 2 * table_->n_x(); }
  std::size_t bins() const { return table_->n_x() + 1; }
  /// Symmetric kernels have a real spectrum; the imaginary part is dropped.
  bool real_spectrum() const { return real_; }

  const double* re(std::size_t d) const { return re_.data() + d * bins(); }
  const double* im(std::size_t d) const { return im_.data() + d * bins(); }

  /// Offsets of the first and last nonzero entry at lag d; lo > hi when the
  /// row vanishes.
  std::ptrdiff_t support_lo(std::size_t d) const { return support_lo_[d]; }
  std::ptrdiff_t support_hi(std::size_t d) const { return support_hi_[d]; }

 private:
  std::shared_ptr<const KernelTable> table_;
  bool real_;
  std::vector<std::ptrdiff_t> support_lo_;
  std::vector<std::ptrdiff_t> support_hi_;
  std::vector<double> re_;
  std::vector<double> im_;
};

/// Causal space-time convolution, one source row at a time:
///   out[n, i] = sum_{j<n} sum_m K(n - j, i - m) src[j, m].
/// Rows are pushed in time order; output(n) may be requested once rows
/// 0..n-1 are in. Summation over j runs in increasing order in both methods.
/// Cells that no nonzero source cell reaches through the kernel support are
/// exact zeros in both methods (FFT round-off would otherwise leave ~1e-16
/// there, which breaks finite propagation speed for compact kernels).
class CausalConvolution {
 public:
  CausalConvolution(std::shared_ptr<const SpectralKernel> kernel, ConvolutionMethod method);
  ~CausalConvolution();
  CausalConvolution(const CausalConvolution&) = delete;
  CausalConvolution& operator=(const CausalConvolution&) = delete;

  std::size_t rows() const { return rows_; }
  ConvolutionMethod method() const { return method_; }

  /// Writes out[rows(), :].
  void output(std::span<double> out);
  void push(std::span<const double> src);
  void reset() { rows_ = 0; }

 private:
  std::shared_ptr<const SpectralKernel> kernel_;
  ConvolutionMethod method_;
  std::size_t rows_ = 0;
  std::vector<double> history_;  // direct: src rows; fft: spectra (re block, im block)
  std::vector<std::ptrdiff_t> row_lo_;  // nonzero hull of each pushed row; lo > hi when empty
  std::vector<std::ptrdiff_t> row_hi_;
  struct Buffers;
  std::unique_ptr<Buffers> buf_;
};

/// Whole-field convenience: out = causal convolution of src (both n_t x n_x, row-major).
void convolve_field(const std::shared_ptr<const SpectralKernel>& kernel, ConvolutionMethod method,
                    std::span<const double> src, std::span<double> out);

/// Stochastic convolution with integrand Z and increments dW:
///   out[n, i] = sum_{j<n} sum_m K(n - j, i - m) (Z[j, m] dW[j, m]).
void stochastic_convolution(const std::shared_ptr<const SpectralKernel>& kernel, ConvolutionMethod method,
                            std::span<const double> z, std::span<const double> dw, std::span<double> out);

}  // namespace spde
