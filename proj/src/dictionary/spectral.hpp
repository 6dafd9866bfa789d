#pragma once

#include <vector>

#include "core/grid.hpp"
#include "transforms/fft.hpp"

namespace spi {

// Spectra of a kernel bank zero-padded to a fixed H x W grid, laid out
// bin-major (all K values of one frequency are contiguous) for the
// per-frequency solves.
class KernelBank {
 public:
  KernelBank(const std::vector<Grid>& kernels, std::size_t rows, std::size_t cols);

  std::size_t count() const { return count_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t bins() const { return bins_; }
  const Complex* at(std::size_t bin) const { return &spectra_[bin * count_]; }
  // sum_k |d_k(w)|^2
  double energy(std::size_t bin) const { return energy_[bin]; }

  // Spectrum of sum_k d_k * s_k given the map spectra.
  void synthesize(const std::vector<Spectrum>& maps, Spectrum& out) const;

 private:
  std::size_t count_, rows_, cols_, bins_;
  std::vector<Complex> spectra_;
  std::vector<double> energy_;
};

// Per frequency: argmin_s |s - r|^2 + weight |d^T s - t|^2 over the K-vector
// s, by Sherman-Morrison. `maps` holds r on entry and s on exit.
void solve_rank_one(const KernelBank& bank, std::vector<Spectrum>& maps, const Spectrum& target,
                    const std::vector<double>& weight);

}  // namespace spi
