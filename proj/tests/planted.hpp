#pragma once

// Planted single-kernel corpus shared by the unit and acceptance tests.

#include <cmath>
#include <random>
#include <vector>

#include "core/image.hpp"
#include "oracles.hpp"

namespace spi::oracle {

// Zero-mean oriented kernel with its energy inside the central 5x5 of an
// 8x8 support, unit norm.
inline Grid planted_kernel() {
  Grid k(8, 8);
  double sq = 0.0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const double u = i - 2.0, v = j - 2.0;
      const double val = std::exp(-(u * u + v * v) / 4.0) * std::cos(1.3 * (u + 0.5 * v));
      k(i + 1, j + 1) = val;
    }
  double mean = 0.0;
  for (int i = 1; i < 6; ++i)
    for (int j = 1; j < 6; ++j) mean += k(i, j);
  mean /= 25.0;
  for (int i = 1; i < 6; ++i)
    for (int j = 1; j < 6; ++j) {
      k(i, j) -= mean;
      sq += k(i, j) * k(i, j);
    }
  for (double& v : k.values) v /= std::sqrt(sq);
  return k;
}

// 0.5 + d * s with a few well-separated spikes per image.
inline std::vector<Image> planted_corpus(const Grid& kernel, std::size_t count, std::size_t size,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pos(0, size - 1);
  std::uniform_real_distribution<double> amp(0.4, 0.8);
  std::vector<Image> corpus;
  for (std::size_t n = 0; n < count; ++n) {
    Grid s(size, size);
    for (int spike = 0; spike < 6; ++spike) s(pos(rng), pos(rng)) = (rng() & 1 ? 1.0 : -1.0) * amp(rng);
    Grid x = direct_circular_conv(s, kernel);
    for (double& v : x.values) v = std::clamp(0.5 + v, 0.0, 1.0);
    corpus.push_back(Image::from_grid(std::move(x)));
  }
  return corpus;
}

// max over cyclic shifts and sign of the normalized correlation of two
// equally sized kernels.
inline double aligned_correlation(const Grid& a, const Grid& b) {
  const double na = std::sqrt(dot(a, a)), nb = std::sqrt(dot(b, b));
  double best = 0.0;
  for (std::size_t di = 0; di < a.rows; ++di)
    for (std::size_t dj = 0; dj < a.cols; ++dj) {
      double acc = 0.0;
      for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) acc += a((i + di) % a.rows, (j + dj) % a.cols) * b(i, j);
      best = std::max(best, std::abs(acc) / (na * nb));
    }
  return best;
}

}  // namespace spi::oracle
