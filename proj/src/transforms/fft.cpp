#include "transforms/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <utility>

#include "core/error.hpp"

namespace spi {
namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

const PlanPair& plans_for(std::size_t rows, std::size_t cols) {
  static std::map<std::pair<std::size_t, std::size_t>, PlanPair> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto it = cache.find({rows, cols});
  if (it != cache.end()) return it->second;

  const int r = static_cast<int>(rows);
  const int c = static_cast<int>(cols);
  double* real = fftw_alloc_real(rows * cols);
  fftw_complex* cplx = fftw_alloc_complex(rows * (cols / 2 + 1));
  PlanPair p;
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  p.forward = fftw_plan_dft_r2c_2d(r, c, real, cplx, flags);
  p.inverse = fftw_plan_dft_c2r_2d(r, c, cplx, real, flags);
  fftw_free(real);
  fftw_free(cplx);
  require(p.forward != nullptr && p.inverse != nullptr, ErrorCode::Internal,
          "FFTW planning failed");
  return cache.emplace(std::make_pair(rows, cols), p).first->second;
}

}  // namespace

void fft2(const Grid& grid, Spectrum& out) {
  require(grid.rows > 0 && grid.cols > 0, ErrorCode::Dimension, "fft2: empty grid");
  if (out.rows != grid.rows || out.cols != grid.cols) out = Spectrum(grid.rows, grid.cols);
  const PlanPair& p = plans_for(grid.rows, grid.cols);
  // r2c with out-of-place arrays leaves the input untouched.
  fftw_execute_dft_r2c(p.forward, const_cast<double*>(grid.data()),
                       reinterpret_cast<fftw_complex*>(out.bins.data()));
}

Spectrum fft2(const Grid& grid) {
  Spectrum out(grid.rows, grid.cols);
  fft2(grid, out);
  return out;
}

void ifft2(const Spectrum& spectrum, Grid& out, std::vector<Complex>& scratch) {
  require(spectrum.rows > 0 && spectrum.cols > 0, ErrorCode::Dimension, "ifft2: empty spectrum");
  if (!(out.rows == spectrum.rows && out.cols == spectrum.cols)) {
    out = Grid(spectrum.rows, spectrum.cols);
  }
  // Multi-dimensional c2r destroys its input.
  scratch.assign(spectrum.bins.begin(), spectrum.bins.end());
  const PlanPair& p = plans_for(spectrum.rows, spectrum.cols);
  fftw_execute_dft_c2r(p.inverse, reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
  const double scale = 1.0 / static_cast<double>(out.size());
  for (double& v : out.values) v *= scale;
}

Grid ifft2(const Spectrum& spectrum) {
  Grid out(spectrum.rows, spectrum.cols);
  std::vector<Complex> scratch;
  ifft2(spectrum, out, scratch);
  return out;
}

Grid pad_kernel(const Grid& kernel, std::size_t rows, std::size_t cols) {
  require(kernel.rows <= rows && kernel.cols <= cols, ErrorCode::Dimension,
          "kernel larger than the target grid");
  Grid padded(rows, cols);
  for (std::size_t i = 0; i < kernel.rows; ++i) {
    std::copy_n(kernel.data() + i * kernel.cols, kernel.cols, padded.data() + i * cols);
  }
  return padded;
}

}  // namespace spi
