#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace spi {

// Dense row-major H x W array of doubles. Used for images, feature maps,
// kernels and transform coefficients alike.
struct Grid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Grid() = default;
  Grid(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}
  Grid(std::size_t r, std::size_t c, std::vector<double> v)
      : rows(r), cols(c), values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  bool same_shape(const Grid& other) const {
    return rows == other.rows && cols == other.cols;
  }

  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

  double* data() { return values.data(); }
  const double* data() const { return values.data(); }
  std::span<double> span() { return values; }
  std::span<const double> span() const { return values; }

  bool operator==(const Grid&) const = default;
};

}  // namespace spi
