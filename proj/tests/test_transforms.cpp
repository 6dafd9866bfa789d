#include <cmath>
#include <random>

#include "core/error.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "transforms/dct.hpp"
#include "transforms/operators.hpp"

using namespace spi;

namespace {

double norm(const Grid& g) { return std::sqrt(oracle::dot(g, g)); }

Grid cyclic_shift(const Grid& g, std::size_t di, std::size_t dj) {
  Grid out(g.rows, g.cols);
  for (std::size_t i = 0; i < g.rows; ++i)
    for (std::size_t j = 0; j < g.cols; ++j) out((i + di) % g.rows, (j + dj) % g.cols) = g(i, j);
  return out;
}

}  // namespace

TEST_CASE("dct2 concentrates a constant image at DC") {
  const Grid c(6, 10, 0.7);
  const Grid coeffs = dct2_forward(c);
  CHECK(coeffs(0, 0) == doctest::Approx(0.7 * std::sqrt(60.0)).epsilon(1e-13));
  for (std::size_t i = 1; i < coeffs.size(); ++i) CHECK(std::abs(coeffs.values[i]) < 1e-12);
}

TEST_CASE("dct2 matches the explicit cosine-matrix transform") {
  std::mt19937_64 rng(1);
  for (auto [h, w] : {std::pair{8, 8}, std::pair{5, 12}, std::pair{16, 3}}) {
    const Grid x = oracle::random_grid(h, w, rng);
    CHECK(oracle::max_abs_diff(dct2_forward(x), oracle::direct_dct2(x)) < 1e-12);
  }
}

TEST_CASE("dct2 inverse cases") {
  Grid delta(4, 9);
  delta(0, 0) = 6.0;  // sqrt(36)
  for (double v : dct2_inverse(delta).values) CHECK(v == doctest::Approx(1.0).epsilon(1e-13));
  for (double v : dct2_inverse(Grid(3, 3)).values) CHECK(v == 0.0);
}

TEST_CASE("dct2 round trip and Parseval over 100 random images") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    const Grid x = oracle::random_grid(16, 12, rng);
    const Grid c = dct2_forward(x);
    CHECK(oracle::max_abs_diff(dct2_inverse(c), x) < 1e-12);
    CHECK(oracle::max_abs_diff(dct2_forward(dct2_inverse(x)), x) < 1e-12);
    CHECK(std::abs(norm(c) - norm(x)) < 1e-10);
  }
}

TEST_CASE("gradient hand cases") {
  const GradientStack zero = gradient(Grid(5, 4, 3.25));
  for (double v : zero.gx.values) CHECK(v == 0.0);
  for (double v : zero.gy.values) CHECK(v == 0.0);

  const Grid row(1, 4, std::vector<double>{0, 1, 1, 0});
  CHECK(gradient(row).gx.values == std::vector<double>{1, 0, -1, 0});

  for (double v : divergence({Grid(3, 3), Grid(3, 3)}).values) CHECK(v == 0.0);
  for (double v : divergence(gradient(Grid(4, 6, 2.0))).values) CHECK(v == 0.0);
}

TEST_CASE("divergence is the negative adjoint of gradient (100 random pairs)") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const Grid x = oracle::random_grid(9, 7, rng);
    const GradientStack p{oracle::random_grid(9, 7, rng), oracle::random_grid(9, 7, rng)};
    const GradientStack gx = gradient(x);
    const double lhs = oracle::dot(gx.gx, p.gx) + oracle::dot(gx.gy, p.gy);
    const double rhs = -oracle::dot(x, divergence(p));
    CHECK(std::abs(lhs - rhs) < 1e-10);
  }
}

TEST_CASE("laplacian symbol is the spectrum of -divergence(gradient)") {
  std::mt19937_64 rng(4);
  const Grid x = oracle::random_grid(8, 6, rng);
  Grid lap = divergence(gradient(x));
  for (double& v : lap.values) v = -v;
  Spectrum xs = fft2(x);
  const auto sym = laplacian_symbol(8, 6);
  for (std::size_t i = 0; i < xs.size(); ++i) xs.bins[i] *= sym[i];
  CHECK(oracle::max_abs_diff(ifft2(xs), lap) < 1e-12);
}

TEST_CASE("conv_circular identities") {
  std::mt19937_64 rng(5);
  const Grid x = oracle::random_grid(8, 10, rng);
  Grid delta(3, 3);
  delta(0, 0) = 1.0;
  CHECK(oracle::max_abs_diff(conv_circular(x, delta), x) < 1e-12);

  const Grid c(8, 8, 0.3), ones(3, 3, 1.0);
  for (double v : conv_circular(c, ones).values) CHECK(v == doctest::Approx(0.3 * 9).epsilon(1e-12));

  CHECK_THROWS_AS(conv_circular(Grid(4, 4), Grid(5, 5)), Error);
}

TEST_CASE("conv_circular matches the nested-loop oracle (100 random 8x8/3x3 cases)") {
  std::mt19937_64 rng(6);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Grid x = oracle::random_grid(8, 8, rng);
    const Grid k = oracle::random_grid(3, 3, rng);
    worst = std::max(worst, oracle::max_abs_diff(conv_circular(x, k), oracle::direct_circular_conv(x, k)));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("conv_circular is linear and translation covariant") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    const Grid u = oracle::random_grid(12, 9, rng), w = oracle::random_grid(12, 9, rng);
    const Grid d = oracle::random_grid(4, 4, rng);
    const double a = 1.7, b = -0.4;
    Grid mix(12, 9);
    for (std::size_t i = 0; i < mix.size(); ++i) mix.values[i] = a * u.values[i] + b * w.values[i];
    const Grid lhs = conv_circular(mix, d);
    const Grid cu = conv_circular(u, d), cw = conv_circular(w, d);
    Grid rhs(12, 9);
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs.values[i] = a * cu.values[i] + b * cw.values[i];
    CHECK(oracle::max_abs_diff(lhs, rhs) < 1e-10);

    const Grid shifted = conv_circular(cyclic_shift(u, 3, 5), d);
    CHECK(oracle::max_abs_diff(shifted, cyclic_shift(cu, 3, 5)) < 1e-10);
  }
}

TEST_CASE("soft_threshold analytic cases") {
  CHECK(soft_threshold(Grid(1, 1, 2.0), 0.5).values[0] == doctest::Approx(1.5));
  CHECK(soft_threshold(Grid(1, 1, -0.3), 0.5).values[0] == 0.0);
  std::mt19937_64 rng(8);
  const Grid v = oracle::random_grid(3, 3, rng);
  CHECK(soft_threshold(v, 0.0) == v);
  CHECK_THROWS_AS(soft_threshold(v, -1.0), Error);
}

TEST_CASE("soft_threshold is the scalar l1 prox (grid search)") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> val(-3.0, 3.0), thr(0.0, 2.0);
  for (int t = 0; t < 30; ++t) {
    const double v = val(rng), tau = thr(rng);
    const double expected = oracle::prox_abs_grid_search(v, tau);
    CHECK(std::abs(soft_threshold(Grid(1, 1, v), tau).values[0] - expected) < 1e-6);
  }
}
