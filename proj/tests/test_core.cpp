#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "core/error.hpp"
#include "core/image.hpp"
#include "core/metrics.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace spi;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  auto dir = fs::temp_directory_path() / "spi_core_tests";
  fs::create_directories(dir);
  return dir / name;
}

Image constant(std::size_t h, std::size_t w, double v) { return Image::from_grid(Grid(h, w, v)); }

Image random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return Image::from_grid(oracle::random_grid(h, w, rng, 0.0, 1.0));
}

}  // namespace

TEST_CASE("load_image scales ASCII PGM by maxval") {
  const auto path = temp_path("tiny.pgm");
  std::ofstream(path) << "P2\n# comment\n2 2\n255\n0 255\n255 0\n";
  const Image img = load_image(path);
  CHECK(img.height() == 2);
  CHECK(img.width() == 2);
  CHECK(img.grid().values == std::vector<double>{0.0, 1.0, 1.0, 0.0});
}

TEST_CASE("load_image reads 8-bit binary PGM") {
  const auto path = temp_path("tiny8.pgm");
  std::ofstream out(path, std::ios::binary);
  out << "P5\n3 1\n200\n";
  out.put(0).put(100).put(static_cast<char>(200));
  out.close();
  const Image img = load_image(path);
  CHECK(img.grid().values == std::vector<double>{0.0, 0.5, 1.0});
}

TEST_CASE("load_image reads 8-bit grayscale PNG") {
  const Image img = load_image(fs::path(SPI_TEST_DATA_DIR) / "gray8.png");
  CHECK(img.height() == 2);
  CHECK(img.width() == 3);
  CHECK(img.grid().values == std::vector<double>{0.0, 0.2, 0.4, 0.6, 0.8, 1.0});
}

TEST_CASE("save/load round trip is exact on the 16-bit grid") {
  for (const char* ext : {".pgm", ".png"}) {
    CAPTURE(ext);
    const Image q = Image::quantized16(random_image(7, 5, 3).grid());
    const auto path = temp_path(std::string("rt") + ext);
    save_image(q, path);
    CHECK(load_image(path) == q);

    // Arbitrary doubles stay within one quantization step.
    const Image raw = random_image(6, 9, 11);
    save_image(raw, path);
    const Image back = load_image(path);
    CHECK(oracle::max_abs_diff(raw.grid(), back.grid()) <= 0.5 / 65535.0 + 1e-15);
  }
}

TEST_CASE("save_image extremes and clamping") {
  const auto path = temp_path("ext.pgm");
  save_image(constant(2, 3, 0.0), path);
  CHECK(load_image(path).grid().values == std::vector<double>(6, 0.0));
  save_image(constant(2, 3, 1.0), path);
  {
    std::ifstream in(path, std::ios::binary);
    std::string magic, dims_w, dims_h, maxval;
    in >> magic >> dims_w >> dims_h >> maxval;
    in.get();
    CHECK(maxval == "65535");
    for (int i = 0; i < 12; ++i) CHECK(static_cast<unsigned char>(in.get()) == 0xff);
  }
  save_grid(Grid(1, 2, std::vector<double>{1.5, -0.25}), path);
  CHECK(load_image(path).grid().values == std::vector<double>{1.0, 0.0});
}

TEST_CASE("color and malformed inputs are rejected") {
  const auto ppm = temp_path("color.ppm");
  std::ofstream(ppm) << "P3\n1 1\n255\n1 2 3\n";
  CHECK_THROWS_AS(load_image(ppm), Error);
  try {
    load_image(ppm);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Format);
  }

  const fs::path png = fs::path(SPI_TEST_DATA_DIR) / "rgb.png";
  try {
    load_image(png);
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Format);
  }

  const auto missing = temp_path("does_not_exist.pgm");
  try {
    load_image(missing);
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }

  const auto truncated = temp_path("trunc.pgm");
  std::ofstream(truncated, std::ios::binary) << "P5\n4 4\n255\nab";
  CHECK_THROWS_AS(load_image(truncated), Error);
}

TEST_CASE("rmse and psnr analytic values") {
  const Image zeros = constant(4, 4, 0.0), ones = constant(4, 4, 1.0);
  const Image x = random_image(4, 4, 5);
  Grid shifted = x.grid();
  for (double& v : shifted.values) v += 0.1;

  CHECK(rmse(x, x) == 0.0);
  CHECK(rmse(zeros, ones) == doctest::Approx(1.0));
  CHECK(rmse(x.grid(), shifted) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(std::isinf(psnr(x, x)));
  CHECK(psnr(zeros, ones) == doctest::Approx(0.0));
  const Image half = constant(4, 4, 0.5), half_plus = constant(4, 4, 0.6);
  CHECK(psnr(half, half_plus) == doctest::Approx(20.0).epsilon(1e-12));

  CHECK_THROWS_AS(rmse(zeros, constant(4, 5, 0.0)), Error);
}

TEST_CASE("psnr/rmse consistency and symmetry over random pairs") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Image a = random_image(8, 6, seed), b = random_image(8, 6, seed + 1000);
    const double r = rmse(a, b);
    CHECK(r == rmse(b, a));
    CHECK(std::abs(psnr(a, b) + 20.0 * std::log10(r)) < 1e-10);
  }
}

TEST_CASE("algorithm names parse in both spellings") {
  CHECK(parse_algorithm("tv-csc") == Algorithm::TV_CSC);
  CHECK(parse_algorithm("DCT_CSC") == Algorithm::DCT_CSC);
  CHECK(parse_algorithm("ls") == Algorithm::LS);
  CHECK_THROWS_AS(parse_algorithm("wavelet"), Error);
}
