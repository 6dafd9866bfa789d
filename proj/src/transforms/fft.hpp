#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "core/grid.hpp"

namespace spi {

using Complex = std::complex<double>;

// Half-plane spectrum of a real H x W grid: H rows of W/2+1 bins (FFTW r2c
// layout). Unnormalized: inverse() divides by H*W.
struct Spectrum {
  std::size_t rows = 0;
  std::size_t cols = 0;  // spatial width W
  std::vector<Complex> bins;

  Spectrum() = default;
  Spectrum(std::size_t r, std::size_t c)
      : rows(r), cols(c), bins(r * (c / 2 + 1)) {}

  std::size_t half_cols() const { return cols / 2 + 1; }
  std::size_t size() const { return bins.size(); }
};

// Thread-safe: plans are created once per shape under a lock and executed
// with FFTW's new-array interface.
Spectrum fft2(const Grid& grid);
Grid ifft2(const Spectrum& spectrum);

// Writes into preallocated outputs to avoid per-call allocation in hot loops.
void fft2(const Grid& grid, Spectrum& out);
void ifft2(const Spectrum& spectrum, Grid& out, std::vector<Complex>& scratch);

// Zero-pads an m x m kernel anchored at (0,0) to rows x cols.
Grid pad_kernel(const Grid& kernel, std::size_t rows, std::size_t cols);

}  // namespace spi
