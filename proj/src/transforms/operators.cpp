#include "transforms/operators.hpp"

#include <cmath>
#include <numbers>

#include "core/error.hpp"

namespace spi {

GradientStack gradient(const Grid& x) {
  const std::size_t h = x.rows, w = x.cols;
  GradientStack g{Grid(h, w), Grid(h, w)};
  for (std::size_t i = 0; i < h; ++i) {
    const std::size_t ip = (i + 1) % h;
    for (std::size_t j = 0; j < w; ++j) {
      const std::size_t jp = (j + 1) % w;
      g.gx(i, j) = x(i, jp) - x(i, j);
      g.gy(i, j) = x(ip, j) - x(i, j);
    }
  }
  return g;
}

Grid divergence(const GradientStack& p) {
  require(p.gx.same_shape(p.gy), ErrorCode::Dimension, "divergence: gx/gy shape mismatch");
  const std::size_t h = p.gx.rows, w = p.gx.cols;
  Grid d(h, w);
  for (std::size_t i = 0; i < h; ++i) {
    const std::size_t im = (i + h - 1) % h;
    for (std::size_t j = 0; j < w; ++j) {
      const std::size_t jm = (j + w - 1) % w;
      d(i, j) = p.gx(i, j) - p.gx(i, jm) + p.gy(i, j) - p.gy(im, j);
    }
  }
  return d;
}

std::vector<double> laplacian_symbol(std::size_t rows, std::size_t cols) {
  const std::size_t half = cols / 2 + 1;
  std::vector<double> sym(rows * half);
  for (std::size_t k = 0; k < rows; ++k) {
    const double sk = std::sin(std::numbers::pi * static_cast<double>(k) / static_cast<double>(rows));
    for (std::size_t l = 0; l < half; ++l) {
      const double sl = std::sin(std::numbers::pi * static_cast<double>(l) / static_cast<double>(cols));
      sym[k * half + l] = 4.0 * (sk * sk + sl * sl);
    }
  }
  return sym;
}

Grid conv_circular(const Grid& map, const Grid& kernel) {
  require(kernel.rows <= map.rows && kernel.cols <= map.cols, ErrorCode::Dimension,
          "conv_circular: kernel larger than map");
  Spectrum a = fft2(map);
  const Spectrum b = fft2(pad_kernel(kernel, map.rows, map.cols));
  for (std::size_t i = 0; i < a.size(); ++i) a.bins[i] *= b.bins[i];
  return ifft2(a);
}

void soft_threshold_inplace(std::span<double> values, double tau) {
  require(tau >= 0.0, ErrorCode::InvalidArgument, "soft_threshold: negative threshold");
  for (double& v : values) {
    const double mag = std::abs(v) - tau;
    v = mag > 0.0 ? std::copysign(mag, v) : 0.0;
  }
}

Grid soft_threshold(const Grid& values, double tau) {
  Grid out = values;
  soft_threshold_inplace(out.span(), tau);
  return out;
}

}  // namespace spi
