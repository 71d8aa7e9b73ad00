#include "spde/convolution.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

#include "spde/errors.hpp"

namespace spde {

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(double* p) const { fftw_free(p); }
  void operator()(fftw_complex* p) const { fftw_free(p); }
};

template <class T>
std::unique_ptr<T[], FftwFree> fftw_array(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (p == nullptr) throw CapacityError("FFT buffer allocation failed");
  return std::unique_ptr<T[], FftwFree>(p);
}

struct Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::unique_ptr<double[], FftwFree> real;
  std::unique_ptr<fftw_complex[], FftwFree> spec;

  explicit Plans(std::size_t p) : real(fftw_array<double>(p)), spec(fftw_array<fftw_complex>(p / 2 + 1)) {
    std::lock_guard lock(planner_mutex());
    const int n = static_cast<int>(p);
    forward = fftw_plan_dft_r2c_1d(n, real.get(), spec.get(), FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r_1d(n, spec.get(), real.get(), FFTW_ESTIMATE);
    if (forward == nullptr || backward == nullptr) throw Error("FFTW planning failed");
  }
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }
  Plans(const Plans&) = delete;
  Plans& operator=(const Plans&) = delete;
};

}  // namespace

SpectralKernel::SpectralKernel(std::shared_ptr<const KernelTable> table)
    : table_(std::move(table)), real_(table_->symmetric()) {
  const std::size_t nb = bins();
  const std::size_t p = padded();
  re_.assign(n_t() * nb, 0.0);
  im_.assign(real_ ? 0 : n_t() * nb, 0.0);
  Plans plans(p);
  const auto n = static_cast<std::ptrdiff_t>(n_x());
  support_lo_.assign(n_t(), n);
  support_hi_.assign(n_t(), -n);
  for (std::size_t d = 1; d < n_t(); ++d) {
    for (std::ptrdiff_t off = -(n - 1); off < n; ++off) {
      if (table_->at(d, off) != 0.0) {
        support_lo_[d] = std::min(support_lo_[d], off);
        support_hi_[d] = std::max(support_hi_[d], off);
      }
    }
    for (std::size_t k = 0; k < p; ++k) plans.real[k] = 0.0;
    for (std::ptrdiff_t off = -(n - 1); off < n; ++off) {
      const auto slot = static_cast<std::size_t>((off + static_cast<std::ptrdiff_t>(p)) % static_cast<std::ptrdiff_t>(p));
      plans.real[slot] = table_->at(d, off);
    }
    fftw_execute(plans.forward);
    for (std::size_t f = 0; f < nb; ++f) {
      re_[d * nb + f] = plans.spec[f][0];
      if (!real_) im_[d * nb + f] = plans.spec[f][1];
    }
  }
}

struct CausalConvolution::Buffers {
  explicit Buffers(std::size_t p) : plans(p) {}
  Plans plans;
  std::vector<double> acc_re;
  std::vector<double> acc_im;
};

CausalConvolution::CausalConvolution(std::shared_ptr<const SpectralKernel> kernel, ConvolutionMethod method)
    : kernel_(std::move(kernel)), method_(method) {
  const std::size_t n_t = kernel_->n_t();
  row_lo_.assign(n_t, 0);
  row_hi_.assign(n_t, -1);
  if (method_ == ConvolutionMethod::direct) {
    history_.assign(n_t * kernel_->n_x(), 0.0);
  } else {
    history_.assign(2 * n_t * kernel_->bins(), 0.0);
    buf_ = std::make_unique<Buffers>(kernel_->padded());
    buf_->acc_re.assign(kernel_->bins(), 0.0);
    buf_->acc_im.assign(kernel_->bins(), 0.0);
  }
}

CausalConvolution::~CausalConvolution() = default;

void CausalConvolution::push(std::span<const double> src) {
  const std::size_t nx = kernel_->n_x();
  if (src.size() != nx) throw ContractError("convolution: source row width differs from kernel");
  if (rows_ >= kernel_->n_t()) throw ContractError("convolution: more rows than kernel lags");
  std::ptrdiff_t lo = static_cast<std::ptrdiff_t>(nx);
  std::ptrdiff_t hi = -1;
  for (std::size_t k = 0; k < nx; ++k) {
    if (src[k] != 0.0) {
      lo = std::min(lo, static_cast<std::ptrdiff_t>(k));
      hi = static_cast<std::ptrdiff_t>(k);
    }
  }
  row_lo_[rows_] = lo;
  row_hi_[rows_] = hi;
  if (method_ == ConvolutionMethod::direct) {
    std::copy(src.begin(), src.end(), history_.begin() + static_cast<std::ptrdiff_t>(rows_ * nx));
  } else {
    auto& pl = buf_->plans;
    const std::size_t p = kernel_->padded();
    const std::size_t nb = kernel_->bins();
    for (std::size_t k = 0; k < nx; ++k) pl.real[k] = src[k];
    for (std::size_t k = nx; k < p; ++k) pl.real[k] = 0.0;
    fftw_execute_dft_r2c(pl.forward, pl.real.get(), pl.spec.get());
    double* re = history_.data() + rows_ * nb;
    double* im = history_.data() + (kernel_->n_t() + rows_) * nb;
    for (std::size_t f = 0; f < nb; ++f) {
      re[f] = pl.spec[f][0];
      im[f] = pl.spec[f][1];
    }
  }
  ++rows_;
}

void CausalConvolution::output(std::span<double> out) {
  const std::size_t nx = kernel_->n_x();
  if (out.size() != nx) throw ContractError("convolution: output row width differs from kernel");
  const std::size_t n = rows_;
  if (n >= kernel_->n_t()) throw ContractError("convolution: output row beyond kernel lags");
  if (method_ == ConvolutionMethod::direct) {
    const KernelTable& table = kernel_->table();
    for (std::size_t i = 0; i < nx; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double* src = history_.data() + j * nx;
        for (std::size_t m = 0; m < nx; ++m) {
          acc += table.at(n - j, static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(m)) * src[m];
        }
      }
      out[i] = acc;
    }
    return;
  }
  const std::size_t nb = kernel_->bins();
  double* acc_re = buf_->acc_re.data();
  double* acc_im = buf_->acc_im.data();
  for (std::size_t f = 0; f < nb; ++f) acc_re[f] = acc_im[f] = 0.0;
  const double* hre = history_.data();
  const double* him = history_.data() + kernel_->n_t() * nb;
  for (std::size_t j = 0; j < n; ++j) {
    const double* kr = kernel_->re(n - j);
    const double* sr = hre + j * nb;
    const double* si = him + j * nb;
    if (kernel_->real_spectrum()) {
      for (std::size_t f = 0; f < nb; ++f) {
        acc_re[f] += kr[f] * sr[f];
        acc_im[f] += kr[f] * si[f];
      }
    } else {
      const double* ki = kernel_->im(n - j);
      for (std::size_t f = 0; f < nb; ++f) {
        acc_re[f] += kr[f] * sr[f] - ki[f] * si[f];
        acc_im[f] += kr[f] * si[f] + ki[f] * sr[f];
      }
    }
  }
  auto& pl = buf_->plans;
  for (std::size_t f = 0; f < nb; ++f) {
    pl.spec[f][0] = acc_re[f];
    pl.spec[f][1] = acc_im[f];
  }
  fftw_execute_dft_c2r(pl.backward, pl.spec.get(), pl.real.get());
  const double scale = 1.0 / static_cast<double>(kernel_->padded());
  // Hull of cells reachable from nonzero sources; everything else is an exact zero.
  std::ptrdiff_t lo = static_cast<std::ptrdiff_t>(nx);
  std::ptrdiff_t hi = -1;
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t d = n - j;
    if (row_lo_[j] > row_hi_[j] || kernel_->support_lo(d) > kernel_->support_hi(d)) continue;
    lo = std::min(lo, row_lo_[j] + kernel_->support_lo(d));
    hi = std::max(hi, row_hi_[j] + kernel_->support_hi(d));
  }
  for (std::size_t i = 0; i < nx; ++i) {
    const auto ii = static_cast<std::ptrdiff_t>(i);
    out[i] = (ii < lo || ii > hi) ? 0.0 : pl.real[i] * scale;
  }
}

void convolve_field(const std::shared_ptr<const SpectralKernel>& kernel, ConvolutionMethod method,
                    std::span<const double> src, std::span<double> out) {
  const std::size_t nx = kernel->n_x();
  const std::size_t nt = kernel->n_t();
  if (src.size() != nt * nx || out.size() != nt * nx) throw ContractError("convolve_field: field size mismatch");
  CausalConvolution conv(kernel, method);
  for (std::size_t n = 0; n < nt; ++n) {
    conv.output(out.subspan(n * nx, nx));
    if (n + 1 < nt) conv.push(src.subspan(n * nx, nx));
  }
}

void stochastic_convolution(const std::shared_ptr<const SpectralKernel>& kernel, ConvolutionMethod method,
                            std::span<const double> z, std::span<const double> dw, std::span<double> out) {
  if (z.size() != dw.size()) throw ContractError("stochastic_convolution: integrand and noise differ in size");
  std::vector<double> src(z.size());
  for (std::size_t k = 0; k < src.size(); ++k) src[k] = z[k] * dw[k];
  convolve_field(kernel, method, src, out);
}

}  // namespace spde
