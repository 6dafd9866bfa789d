#include <cmath>
#include <filesystem>
#include <random>

#include "core/error.hpp"
#include "core/file_util.hpp"
#include "dictionary/dictionary.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "planted.hpp"
#include "transforms/fft.hpp"

using namespace spi;

namespace {

double kernel_norm(const Grid& k) { return std::sqrt(oracle::dot(k, k)); }

Dictionary random_dictionary(std::size_t count, std::size_t size, std::mt19937_64& rng) {
  Dictionary d;
  d.kernel_size = size;
  for (std::size_t k = 0; k < count; ++k) {
    Grid g = oracle::random_grid(size, size, rng);
    const double n = kernel_norm(g);
    for (double& v : g.values) v /= n;
    d.kernels.push_back(g);
  }
  return d;
}

FeatureMapSet random_maps(std::size_t count, std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  FeatureMapSet m;
  for (std::size_t k = 0; k < count; ++k) m.maps.push_back(oracle::random_grid(rows, cols, rng));
  return m;
}

}  // namespace

TEST_CASE("init_dictionary is deterministic and inside the unit ball") {
  const Dictionary a = init_dictionary(1, 3, 7);
  const Dictionary b = init_dictionary(1, 3, 7);
  CHECK(a.kernels == b.kernels);
  CHECK(a.id() == b.id());
  CHECK(init_dictionary(1, 3, 8).kernels != a.kernels);

  const Dictionary big = init_dictionary(100, 11, 3);
  CHECK(big.count() == 100);
  for (const Grid& k : big.kernels) {
    CHECK(k.rows == 11);
    CHECK(k.cols == 11);
    CHECK(kernel_norm(k) <= 1.0 + 1e-9);
  }
  CHECK_THROWS_AS(init_dictionary(0, 3, 1), Error);
  CHECK_THROWS_AS(init_dictionary(2, 1, 1), Error);
}

TEST_CASE("decode hand cases") {
  std::mt19937_64 rng(11);
  const Dictionary dict = random_dictionary(2, 4, rng);
  FeatureMapSet zero;
  zero.maps = {Grid(9, 7), Grid(9, 7)};
  for (double v : decode(zero, dict).values) CHECK(v == 0.0);

  FeatureMapSet delta = zero;
  delta.maps[0](0, 0) = 1.0;
  CHECK(oracle::max_abs_diff(decode(delta, dict), pad_kernel(dict.kernels[0], 9, 7)) < 1e-14);

  FeatureMapSet wrong;
  wrong.maps = {Grid(9, 7)};
  CHECK_THROWS_AS(decode(wrong, dict), Error);
}

TEST_CASE("decode matches direct convolution and is linear") {
  std::mt19937_64 rng(12);
  const Dictionary dict = random_dictionary(3, 5, rng);
  const FeatureMapSet s = random_maps(3, 12, 10, rng);
  const FeatureMapSet t = random_maps(3, 12, 10, rng);

  Grid expected(12, 10);
  for (std::size_t k = 0; k < 3; ++k) {
    const Grid c = oracle::direct_circular_conv(s.maps[k], dict.kernels[k]);
    for (std::size_t i = 0; i < c.size(); ++i) expected.values[i] += c.values[i];
  }
  CHECK(oracle::max_abs_diff(decode(s, dict), expected) < 1e-10);

  const double a = 0.7, b = -2.3;
  FeatureMapSet combo = s;
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < combo.maps[k].size(); ++i)
      combo.maps[k].values[i] = a * s.maps[k].values[i] + b * t.maps[k].values[i];
  const Grid ds = decode(s, dict), dt = decode(t, dict);
  Grid lin(12, 10);
  for (std::size_t i = 0; i < lin.size(); ++i) lin.values[i] = a * ds.values[i] + b * dt.values[i];
  CHECK(oracle::max_abs_diff(decode(combo, dict), lin) < 1e-10);
}

TEST_CASE("encode edge cases") {
  std::mt19937_64 rng(13);
  const Dictionary dict = random_dictionary(4, 5, rng);
  LearnConfig cfg;
  cfg.inner_iterations = 500;
  cfg.inner_tolerance = 1e-5;

  const FeatureMapSet zero = encode(Grid(16, 16), dict, 1.0, cfg);
  CHECK(zero.maps.size() == 4);
  for (const Grid& m : zero.maps)
    for (double v : m.values) CHECK(v == 0.0);
  CHECK(zero.objective == 0.0);
  CHECK(zero.dictionary_id == dict.id());

  const Grid x = pad_kernel(dict.kernels[0], 16, 16);
  const FeatureMapSet huge = encode(x, dict, 1e6, cfg);
  CHECK(huge.sparsity() == 0.0);

  const FeatureMapSet small = encode(x, dict, 0.01, cfg);
  const Grid recon = decode(small, dict);
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sq += (x.values[i] - recon.values[i]) * (x.values[i] - recon.values[i]);
  CHECK(std::sqrt(sq / x.size()) < 0.05);
  CHECK(small.objective == doctest::Approx(csc_objective(x, dict, small.maps, 0.01)).epsilon(1e-12));
  CHECK(small.primal_residuals.size() == static_cast<std::size_t>(small.iterations));

  const FeatureMapSet again = encode(x, dict, 0.01, cfg);
  for (std::size_t k = 0; k < 4; ++k) CHECK(again.maps[k] == small.maps[k]);

  CHECK_THROWS_AS(encode(Grid(3, 3), dict, 1.0, cfg), Error);
  CHECK_THROWS_AS(encode(x, dict, 0.0, cfg), Error);
}

TEST_CASE("encode approaches the l1 optimum") {
  // With a single delta kernel the problem separates per pixel and the
  // minimizer is the soft-thresholded image.
  Dictionary dict;
  dict.kernel_size = 2;
  Grid delta(2, 2);
  delta(0, 0) = 1.0;
  dict.kernels = {delta};
  std::mt19937_64 rng(14);
  const Grid x = oracle::random_grid(8, 8, rng);
  LearnConfig cfg;
  cfg.inner_iterations = 1000;
  cfg.inner_tolerance = 1e-9;
  const FeatureMapSet s = encode(x, dict, 0.3, cfg);
  CHECK(s.converged);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x.values[i];
    const double expected = std::abs(v) > 0.3 ? std::copysign(std::abs(v) - 0.3, v) : 0.0;
    CHECK(s.maps[0].values[i] == doctest::Approx(expected).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("learn recovers a planted kernel with a monotone objective") {
  const Grid truth = oracle::planted_kernel();
  const auto corpus = oracle::planted_corpus(truth, 6, 32, 21);
  LearnConfig cfg;
  cfg.beta = 0.05;
  cfg.outer_iterations = 60;
  const Dictionary d = learn(corpus, 1, 8, cfg, {"a", "b", "c", "d", "e", "f"});

  CHECK(oracle::aligned_correlation(d.kernels[0], truth) >= 0.95);
  REQUIRE(d.meta.objective_history.size() == 61);
  for (std::size_t t = 1; t < d.meta.objective_history.size(); ++t) {
    CHECK(d.meta.objective_history[t] <= d.meta.objective_history[t - 1] + 1e-6);
  }
  CHECK(d.meta.objective_history.back() < d.meta.objective_history.front());
  CHECK(kernel_norm(d.kernels[0]) <= 1.0 + 1e-9);
  CHECK(d.meta.corpus_ids.size() == 6);
  CHECK(d.meta.beta == 0.05);
}

TEST_CASE("learn with several kernels and threads is deterministic") {
  const auto corpus = oracle::planted_corpus(oracle::planted_kernel(), 3, 24, 4);
  LearnConfig cfg;
  cfg.outer_iterations = 3;
  cfg.beta = 0.1;
  cfg.jobs = 1;
  const Dictionary serial = learn(corpus, 4, 6, cfg);
  cfg.jobs = 3;
  const Dictionary threaded = learn(corpus, 4, 6, cfg);
  CHECK(serial.kernels == threaded.kernels);
  CHECK(serial.meta.objective_history == threaded.meta.objective_history);
  for (const Grid& k : serial.kernels) CHECK(kernel_norm(k) <= 1.0 + 1e-9);
}

TEST_CASE("learn rejects bad input") {
  LearnConfig cfg;
  CHECK_THROWS_AS(learn({}, 1, 4, cfg), Error);
  const std::vector<Image> mixed{Image::from_grid(Grid(8, 8, 0.5)), Image::from_grid(Grid(8, 9, 0.5))};
  CHECK_THROWS_AS(learn(mixed, 1, 4, cfg), Error);
  cfg.beta = 0.0;
  CHECK_THROWS_AS(learn({Image::from_grid(Grid(8, 8, 0.5))}, 1, 4, cfg), Error);
}

TEST_CASE("dictionary file round trip is bit exact") {
  const auto corpus = oracle::planted_corpus(oracle::planted_kernel(), 2, 16, 9);
  LearnConfig cfg;
  cfg.outer_iterations = 2;
  Dictionary d = learn(corpus, 3, 5, cfg, {"x0", "x1"});
  d.kernels[0](1, 1) *= 0.1 + 0.2;  // awkward decimal expansion
  const auto path = std::filesystem::temp_directory_path() / "spi_test_dict.cscd";
  save_dictionary(d, path);
  const Dictionary back = load_dictionary(path);
  CHECK(back == d);
  CHECK(back.id() == d.id());

  const auto bytes = read_file_bytes(path);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "CSCD");
  CHECK(bytes.size() > 16 + 3 * 25 * 8);

  write_file_bytes(path, bytes.data(), 30);
  CHECK_THROWS_AS(load_dictionary(path), Error);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_dictionary(path), Error);
}
