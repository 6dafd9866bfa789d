#include <fstream>
#include <cmath>
#include <filesystem>
#include <random>

#include "core/error.hpp"
#include "doctest.h"
#include "forward/measurement.hpp"
#include "forward/patterns.hpp"
#include "oracles.hpp"

using namespace spi;

namespace {

Image random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return Image::from_grid(oracle::random_grid(h, w, rng, 0.0, 1.0));
}

}  // namespace

TEST_CASE("gen_patterns is deterministic per seed and kind") {
  for (PatternKind kind : {PatternKind::Bernoulli01, PatternKind::Rademacher, PatternKind::Gaussian}) {
    const PatternSet a = gen_patterns(20, 8, 6, kind, 42);
    const PatternSet b = gen_patterns(20, 8, 6, kind, 42);
    CHECK(a.rows == b.rows);
    CHECK(a.rows != gen_patterns(20, 8, 6, kind, 43).rows);
    // Rows do not depend on M.
    CHECK(gen_patterns(5, 8, 6, kind, 42).rows == a.rows.topRows(5));
  }
}

TEST_CASE("pattern entries follow their ensembles") {
  const PatternSet bern = gen_patterns(1000, 32, 32, PatternKind::Bernoulli01, 1);
  // 1024000 fair bits: 6 sigma = 6 * 0.5 / sqrt(1024000) ~ 0.003.
  const double mean = bern.rows.mean();
  CHECK(mean >= 0.48);
  CHECK(mean <= 0.52);
  CHECK((bern.rows.array() * (bern.rows.array() - 1.0)).abs().maxCoeff() == 0.0);

  const PatternSet rad = gen_patterns(50, 10, 10, PatternKind::Rademacher, 2);
  CHECK((rad.rows.array().abs() - 1.0).abs().maxCoeff() == 0.0);

  const PatternSet gauss = gen_patterns(200, 16, 16, PatternKind::Gaussian, 3);
  const double m = gauss.rows.mean();
  const double var = (gauss.rows.array() - m).square().mean();
  CHECK(std::abs(m) < 6.0 / std::sqrt(51200.0));
  CHECK(var == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("compression ratio follows the pattern count") {
  const PatternSet full = gen_patterns(64 * 64, 64, 64, PatternKind::Bernoulli01, 0);
  CHECK(full.compression_ratio() == 1.0);
  CHECK(pattern_count_for_ratio(0.25, 64, 64) == 1024);
  CHECK(pattern_count_for_ratio(1.0, 16, 16) == 256);
  CHECK_THROWS_AS(pattern_count_for_ratio(0.0, 8, 8), Error);
  CHECK_THROWS_AS(gen_patterns(0, 8, 8, PatternKind::Gaussian, 0), Error);
}

TEST_CASE("measure: identity and all-ones patterns") {
  const Image x = random_image(5, 4, 9);
  const Measurement id = measure(x, gen_patterns(20, 5, 4, PatternKind::Identity, 0));
  CHECK(id.values == std::vector<double>(x.pixels().begin(), x.pixels().end()));
  CHECK(!id.noise.snr_db.has_value());

  PatternSet ones{PatternRef{PatternKind::Identity, 1, 5, 4, 0}, RowMatrix::Ones(1, 20)};
  double total = 0.0;
  for (double v : x.pixels()) total += v;
  CHECK(measure(x, ones).values[0] == doctest::Approx(total).epsilon(1e-14));

  CHECK_THROWS_AS(measure(random_image(4, 4, 1), gen_patterns(3, 5, 4, PatternKind::Gaussian, 0)), Error);
}

TEST_CASE("measure matches direct dot products and is linear") {
  const PatternSet p = gen_patterns(37, 9, 7, PatternKind::Gaussian, 11);
  const Image x = random_image(9, 7, 12), z = random_image(9, 7, 13);
  const auto y = measure(x, p).values;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < x.pixel_count(); ++j) acc += p.rows(i, j) * x.pixels()[j];
    CHECK(std::abs(y[i] - acc) < 1e-10);
  }
  Grid mix(9, 7);
  for (std::size_t j = 0; j < mix.size(); ++j) mix.values[j] = 2.0 * x.pixels()[j] - 0.5 * z.pixels()[j];
  const auto ym = measure_grid(mix, p), yz = measure(z, p).values;
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(ym[i] - (2.0 * y[i] - 0.5 * yz[i])) < 1e-10);
}

TEST_CASE("add_noise hits the requested SNR") {
  const PatternSet p = gen_patterns(10000, 4, 4, PatternKind::Gaussian, 5);
  const Measurement clean = measure(random_image(4, 4, 6), p);

  const Measurement quiet = add_noise(clean, 300.0, 1);
  for (std::size_t i = 0; i < clean.values.size(); ++i) {
    CHECK(std::abs(quiet.values[i] - clean.values[i]) <= 1e-10 * std::abs(clean.values[i]) + 1e-300);
  }

  const Measurement noisy = add_noise(clean, 20.0, 7);
  CHECK(std::abs(empirical_snr_db(clean.values, noisy.values) - 20.0) < 0.5);
  CHECK(noisy.noise.snr_db == 20.0);
  CHECK(noisy.noise.noise_seed == 7u);
  CHECK(add_noise(clean, 20.0, 7) == noisy);

  Measurement empty;
  CHECK_THROWS_AS(add_noise(empty, 20.0, 1), Error);
  CHECK_THROWS_AS(add_noise(clean, NAN, 1), Error);
}

TEST_CASE("average_samplings reduces noise by the sampling count") {
  const Image x = random_image(4, 4, 8);
  const PatternSet p = gen_patterns(10000, 4, 4, PatternKind::Gaussian, 9);
  const Measurement clean = measure(x, p);

  CHECK(average_samplings(x, p, 20.0, 1, 3) == add_noise(clean, 20.0, 3));

  const Measurement avg = average_samplings(x, p, 20.0, 100, 4);
  CHECK(avg.noise.samplings == 100u);
  CHECK(std::abs(empirical_snr_db(clean.values, avg.values) - 40.0) < 1.0);

  const Measurement lab = average_samplings(x, gen_patterns(50, 4, 4, PatternKind::Bernoulli01, 1), 30.0, 200, 4);
  CHECK(lab.noise.samplings == 200u);
  CHECK_THROWS_AS(average_samplings(x, p, 20.0, 0, 4), Error);
}

TEST_CASE("SPIM round trip and header layout") {
  const auto dir = std::filesystem::temp_directory_path() / "spi_forward_tests";
  std::filesystem::create_directories(dir);
  const PatternSet p = gen_patterns(24, 6, 5, PatternKind::Rademacher, 77);
  const Measurement m = average_samplings(random_image(6, 5, 1), p, 35.0, 3, 99);
  save_measurement(m, dir / "m.spim");
  const Measurement back = load_measurement(dir / "m.spim");
  CHECK(back == m);
  CHECK(gen_patterns(back.pattern_ref).rows == p.rows);

  const Measurement clean = measure(random_image(6, 5, 1), p);
  save_measurement(clean, dir / "c.spim");
  CHECK(!load_measurement(dir / "c.spim").noise.snr_db.has_value());

  std::ifstream in(dir / "m.spim", std::ios::binary);
  char header[29];
  in.read(header, sizeof(header));
  CHECK(std::string(header, 4) == "SPIM");
  CHECK(header[4] == 1);                    // version
  CHECK(static_cast<unsigned char>(header[8]) == 24);   // M
  CHECK(header[12] == 6);                   // H
  CHECK(header[16] == 5);                   // W
  CHECK(header[20] == 1);                   // kind = rademacher
  CHECK(static_cast<unsigned char>(header[21]) == 77);  // seed (low byte)

  std::ofstream(dir / "bad.spim", std::ios::binary) << "SPIX";
  CHECK_THROWS_AS(load_measurement(dir / "bad.spim"), Error);
}
