#include "dictionary/spectral.hpp"

#include "core/error.hpp"

namespace spi {

KernelBank::KernelBank(const std::vector<Grid>& kernels, std::size_t rows, std::size_t cols)
    : count_(kernels.size()), rows_(rows), cols_(cols), bins_(rows * (cols / 2 + 1)) {
  require(count_ > 0, ErrorCode::InvalidArgument, "empty kernel bank");
  spectra_.resize(bins_ * count_);
  energy_.assign(bins_, 0.0);
  for (std::size_t k = 0; k < count_; ++k) {
    const Spectrum s = fft2(pad_kernel(kernels[k], rows, cols));
    for (std::size_t b = 0; b < bins_; ++b) {
      spectra_[b * count_ + k] = s.bins[b];
      energy_[b] += std::norm(s.bins[b]);
    }
  }
}

void KernelBank::synthesize(const std::vector<Spectrum>& maps, Spectrum& out) const {
  if (out.rows != rows_ || out.cols != cols_) out = Spectrum(rows_, cols_);
  for (std::size_t b = 0; b < bins_; ++b) {
    const Complex* d = at(b);
    Complex acc = 0.0;
    for (std::size_t k = 0; k < count_; ++k) acc += d[k] * maps[k].bins[b];
    out.bins[b] = acc;
  }
}

void solve_rank_one(const KernelBank& bank, std::vector<Spectrum>& maps, const Spectrum& target,
                    const std::vector<double>& weight) {
  const std::size_t K = bank.count();
  for (std::size_t b = 0; b < bank.bins(); ++b) {
    const Complex* d = bank.at(b);
    const double w = weight.size() == 1 ? weight[0] : weight[b];
    // rhs = r + w conj(d) t ; s = rhs - w conj(d) (d^T rhs) / (1 + w |d|^2)
    const Complex wt = w * target.bins[b];
    Complex dot = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      Complex& s = maps[k].bins[b];
      s += std::conj(d[k]) * wt;
      dot += d[k] * s;
    }
    const Complex scale = w * dot / (1.0 + w * bank.energy(b));
    for (std::size_t k = 0; k < K; ++k) maps[k].bins[b] -= std::conj(d[k]) * scale;
  }
}

}  // namespace spi
