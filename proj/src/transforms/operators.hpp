#pragma once

#include <span>

#include "core/grid.hpp"
#include "transforms/fft.hpp"

namespace spi {

// Horizontal and vertical periodic forward differences of an H x W grid.
struct GradientStack {
  Grid gx;
  Grid gy;
};

GradientStack gradient(const Grid& image);

// Negative adjoint of gradient: <gradient(x), p> == -<x, divergence(p)>.
Grid divergence(const GradientStack& stack);

// Eigenvalues of gradient^T gradient (the periodic 5-point Laplacian) on the
// half-plane spectrum layout: 4 sin^2(pi k/H) + 4 sin^2(pi l/W).
std::vector<double> laplacian_symbol(std::size_t rows, std::size_t cols);

// Circular 2-D convolution by Hadamard product of spectra; the kernel is
// anchored at (0,0) and zero-padded to the map size.
Grid conv_circular(const Grid& map, const Grid& kernel);

// Elementwise sign(v) * max(|v| - tau, 0).
Grid soft_threshold(const Grid& values, double tau);
void soft_threshold_inplace(std::span<double> values, double tau);

}  // namespace spi
