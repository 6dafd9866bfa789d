#include "transforms/dct.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "core/error.hpp"

namespace spi {
namespace {

struct DctPlans {
  fftw_plan forward = nullptr;  // REDFT10
  fftw_plan inverse = nullptr;  // REDFT01
};

const DctPlans& dct_plans(std::size_t rows, std::size_t cols) {
  static std::mutex mutex;
  static std::map<std::pair<std::size_t, std::size_t>, DctPlans> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find({rows, cols});
  if (it != cache.end()) return it->second;
  double* a = fftw_alloc_real(rows * cols);
  double* b = fftw_alloc_real(rows * cols);
  const int r = static_cast<int>(rows);
  const int c = static_cast<int>(cols);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  DctPlans p;
  p.forward = fftw_plan_r2r_2d(r, c, a, b, FFTW_REDFT10, FFTW_REDFT10, flags);
  p.inverse = fftw_plan_r2r_2d(r, c, a, b, FFTW_REDFT01, FFTW_REDFT01, flags);
  fftw_free(a);
  fftw_free(b);
  require(p.forward != nullptr && p.inverse != nullptr, ErrorCode::Internal,
          "FFTW DCT planning failed");
  return cache.emplace(std::make_pair(rows, cols), p).first->second;
}

// Per-axis factors turning FFTW's unnormalized REDFT10 into the orthonormal
// DCT-II: sqrt(1/4n) for the DC index, sqrt(1/2n) otherwise.
std::vector<double> ortho_factors(std::size_t n) {
  std::vector<double> f(n, std::sqrt(1.0 / (2.0 * static_cast<double>(n))));
  f[0] = std::sqrt(1.0 / (4.0 * static_cast<double>(n)));
  return f;
}

// Matching factors for REDFT01: sqrt(1/n) for the DC index, sqrt(1/2n) otherwise.
std::vector<double> inverse_factors(std::size_t n) {
  std::vector<double> f(n, std::sqrt(1.0 / (2.0 * static_cast<double>(n))));
  f[0] = std::sqrt(1.0 / static_cast<double>(n));
  return f;
}

}  // namespace

Grid dct2_forward(const Grid& image) {
  require(image.rows > 0 && image.cols > 0, ErrorCode::Dimension, "dct2_forward: empty grid");
  Grid out(image.rows, image.cols);
  const DctPlans& p = dct_plans(image.rows, image.cols);
  fftw_execute_r2r(p.forward, const_cast<double*>(image.data()), out.data());
  const auto fr = ortho_factors(image.rows);
  const auto fc = ortho_factors(image.cols);
  for (std::size_t i = 0; i < out.rows; ++i) {
    for (std::size_t j = 0; j < out.cols; ++j) out(i, j) *= fr[i] * fc[j];
  }
  return out;
}

Grid dct2_inverse(const Grid& coeffs) {
  require(coeffs.rows > 0 && coeffs.cols > 0, ErrorCode::Dimension, "dct2_inverse: empty grid");
  // REDFT01 computes X0 + 2 sum_k Xk cos(...); scale inputs so the result is
  // the orthonormal DCT-III.
  Grid scaled = coeffs;
  const auto fr = inverse_factors(coeffs.rows);
  const auto fc = inverse_factors(coeffs.cols);
  for (std::size_t i = 0; i < scaled.rows; ++i) {
    for (std::size_t j = 0; j < scaled.cols; ++j) scaled(i, j) *= fr[i] * fc[j];
  }
  Grid out(coeffs.rows, coeffs.cols);
  const DctPlans& p = dct_plans(coeffs.rows, coeffs.cols);
  fftw_execute_r2r(p.inverse, scaled.data(), out.data());
  return out;
}

}  // namespace spi
