#include <cmath>
#include <bit>
#include <cstdio>

#include "core/error.hpp"
#include "dictionary/coding.hpp"
#include "dictionary/dictionary.hpp"
#include "forward/rng.hpp"
#include "transforms/operators.hpp"

namespace spi {

void validate(const LearnConfig& cfg) {
  require(cfg.beta > 0.0, ErrorCode::InvalidArgument, "beta must be > 0");
  require(cfg.admm_rho > 0.0, ErrorCode::InvalidArgument, "admm_rho must be > 0");
  require(cfg.outer_iterations >= 1, ErrorCode::InvalidArgument, "outer_iterations must be >= 1");
  require(cfg.inner_iterations >= 1, ErrorCode::InvalidArgument, "inner_iterations must be >= 1");
  require(cfg.inner_tolerance > 0.0, ErrorCode::InvalidArgument, "inner_tolerance must be > 0");
}

std::string Dictionary::id() const {
  // FNV-1a over the little-endian kernel bytes, prefixed by K and m.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  mix(count());
  mix(kernel_size);
  for (const Grid& k : kernels) {
    for (double v : k.values) mix(std::bit_cast<std::uint64_t>(v));
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "cscd-%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double FeatureMapSet::sparsity() const {
  std::size_t total = 0, active = 0;
  for (const Grid& m : maps) {
    total += m.size();
    for (double v : m.values) active += std::abs(v) > 1e-8;
  }
  return total == 0 ? 0.0 : static_cast<double>(active) / static_cast<double>(total);
}

void validate(const Dictionary& dict) {
  require(dict.count() >= 1, ErrorCode::InvalidArgument, "dictionary has no kernels");
  for (const Grid& k : dict.kernels) {
    require(k.rows == dict.kernel_size && k.cols == dict.kernel_size, ErrorCode::Dimension,
            "kernel shape does not match kernel_size");
    double sq = 0.0;
    for (double v : k.values) {
      require(std::isfinite(v), ErrorCode::Numeric, "non-finite kernel value");
      sq += v * v;
    }
    require(std::sqrt(sq) <= 1.0 + 1e-9, ErrorCode::InvalidArgument, "kernel outside the unit ball");
  }
}

Dictionary init_dictionary(std::size_t count, std::size_t size, std::uint64_t seed) {
  require(count >= 1, ErrorCode::InvalidArgument, "kernel count must be >= 1");
  require(size >= 2, ErrorCode::InvalidArgument, "kernel size must be >= 2");
  Dictionary dict;
  dict.kernel_size = size;
  for (std::size_t k = 0; k < count; ++k) {
    RandomStream rng(derive_seed(seed, k));
    Grid kernel(size, size);
    double sq = 0.0;
    for (double& v : kernel.values) {
      v = rng.normal();
      sq += v * v;
    }
    const double norm = std::sqrt(sq);
    if (norm > 1.0) {
      for (double& v : kernel.values) v /= norm;
    }
    dict.kernels.push_back(std::move(kernel));
  }
  dict.meta.seed = seed;
  dict.meta.rng = std::string(kRngName);
  return dict;
}

CodingState zero_coding_state(std::size_t count, std::size_t rows, std::size_t cols) {
  return CodingState{std::vector<Grid>(count, Grid(rows, cols)), std::vector<Grid>(count, Grid(rows, cols))};
}

Grid synthesize(const KernelBank& bank, const std::vector<Grid>& maps) {
  std::vector<Spectrum> spectra(maps.size());
  for (std::size_t k = 0; k < maps.size(); ++k) fft2(maps[k], spectra[k]);
  Spectrum out;
  bank.synthesize(spectra, out);
  return ifft2(out);
}

CodingStats sparse_code(const KernelBank& bank, const Spectrum& image_spectrum, double beta,
                        double rho, int max_iterations, double tolerance, CodingState& state) {
  const std::size_t K = bank.count();
  const std::size_t rows = bank.rows(), cols = bank.cols();
  std::vector<Spectrum> spectra(K, Spectrum(rows, cols));
  std::vector<Grid> s(K, Grid(rows, cols));
  std::vector<Complex> scratch;
  const std::vector<double> weight{1.0 / rho};
  CodingStats stats;

  Grid r(rows, cols);
  for (int it = 0; it < max_iterations; ++it) {
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < r.size(); ++i) r.values[i] = state.z[k].values[i] - state.u[k].values[i];
      fft2(r, spectra[k]);
    }
    solve_rank_one(bank, spectra, image_spectrum, weight);

    double primal = 0.0, dual = 0.0, s_norm = 0.0, z_norm = 0.0, u_norm = 0.0;
    const double tau = beta / rho;
    for (std::size_t k = 0; k < K; ++k) {
      ifft2(spectra[k], s[k], scratch);
      auto& z = state.z[k].values;
      auto& u = state.u[k].values;
      const auto& sk = s[k].values;
      for (std::size_t i = 0; i < sk.size(); ++i) {
        const double v = sk[i] + u[i];
        const double mag = std::abs(v) - tau;
        const double znew = mag > 0.0 ? std::copysign(mag, v) : 0.0;
        dual += (znew - z[i]) * (znew - z[i]);
        z[i] = znew;
        u[i] += sk[i] - znew;
        primal += (sk[i] - znew) * (sk[i] - znew);
        s_norm += sk[i] * sk[i];
        z_norm += znew * znew;
        u_norm += u[i] * u[i];
      }
    }
    primal = std::sqrt(primal);
    dual = rho * std::sqrt(dual);
    require(std::isfinite(primal) && std::isfinite(dual), ErrorCode::Numeric,
            "sparse coding diverged at iteration " + std::to_string(it + 1));
    stats.primal.push_back(primal);
    stats.dual.push_back(dual);
    stats.iterations = it + 1;
    if (primal <= tolerance * std::sqrt(std::max(s_norm, z_norm)) &&
        dual <= tolerance * rho * std::sqrt(u_norm)) {
      stats.converged = true;
      break;
    }
  }
  return stats;
}

FeatureMapSet encode(const Grid& image, const Dictionary& dict, double beta, const LearnConfig& cfg) {
  validate(dict);
  require(beta > 0.0, ErrorCode::InvalidArgument, "beta must be > 0");
  require(image.rows >= dict.kernel_size && image.cols >= dict.kernel_size, ErrorCode::Dimension,
          "image smaller than the dictionary kernels");
  const KernelBank bank(dict.kernels, image.rows, image.cols);
  CodingState state = zero_coding_state(dict.count(), image.rows, image.cols);
  const CodingStats stats = sparse_code(bank, fft2(image), beta, cfg.admm_rho, cfg.inner_iterations,
                                        cfg.inner_tolerance, state);
  FeatureMapSet out;
  out.maps = std::move(state.z);
  out.dictionary_id = dict.id();
  out.iterations = stats.iterations;
  out.converged = stats.converged;
  out.primal_residuals = stats.primal;
  out.dual_residuals = stats.dual;
  out.objective = csc_objective(image, dict, out.maps, beta);
  return out;
}

Grid decode(const FeatureMapSet& maps, const Dictionary& dict) {
  require(maps.maps.size() == dict.count(), ErrorCode::InvalidArgument,
          "feature map count does not match the dictionary");
  require(!maps.maps.empty(), ErrorCode::InvalidArgument, "no feature maps");
  const KernelBank bank(dict.kernels, maps.maps[0].rows, maps.maps[0].cols);
  return synthesize(bank, maps.maps);
}

double csc_objective(const Grid& image, const Dictionary& dict, const std::vector<Grid>& maps,
                     double beta) {
  require(maps.size() == dict.count(), ErrorCode::InvalidArgument,
          "feature map count does not match the dictionary");
  const KernelBank bank(dict.kernels, image.rows, image.cols);
  const Grid recon = synthesize(bank, maps);
  double fit = 0.0, l1 = 0.0;
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double d = image.values[i] - recon.values[i];
    fit += d * d;
  }
  for (const Grid& m : maps)
    for (double v : m.values) l1 += std::abs(v);
  return 0.5 * fit + beta * l1;
}

}  // namespace spi
