#pragma once

#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "core/grid.hpp"
#include "core/image.hpp"
#include "core/metrics.hpp"
#include "dictionary/dictionary.hpp"
#include "forward/measurement.hpp"
#include "solver/data_term.hpp"

namespace spi {

enum class Prior { TV, DCT };
std::string_view to_string(Prior p);
Prior parse_prior(std::string_view text);

struct SolverConfig {
  Prior prior = Prior::TV;
  bool use_csc = false;
  double lambda = 1.0;        // l1 weight on the feature maps
  std::optional<double> mu;   // data weight; unset picks it from the SNR
  double mu_noiseless = 1e3;
  double mu_gain = 0.3;       // noisy: mu = mu_gain / sigma^2 in normalized units
  double rho = 10.0;
  int max_iterations = 300;
  double tolerance = 1e-4;
  std::shared_ptr<const Dictionary> dictionary;
};

void validate(const SolverConfig& cfg);

// Data weight actually used for a measurement: the explicit mu if set,
// otherwise mu_noiseless or mu_gain / sigma^2 clamped to [1, 1e6].
double resolve_mu(const SolverConfig& cfg, const Measurement& m, const DataTerm& data);

struct ReconResult {
  Grid grid;    // unclamped
  Image image;  // clamped copy
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_history;
  std::vector<double> primal_residuals;
  std::vector<double> dual_residuals;
  std::vector<double> data_residuals;   // ||A x - b|| (normalized rows)
  std::vector<double> prior_residuals;  // ||Psi x - v||
  SolverConfig config;                  // echo, with mu resolved
  double feature_sparsity = 0.0;        // CSC only
};

// Minimum-norm solution of Phi x = y by conjugate gradients on
// Phi Phi^T z = y, x = Phi^T z. Stops at relative residual 1e-10.
ReconResult reconstruct_ls(const Measurement& m, const PatternSet& patterns);

// min ||Psi x||_1 + (mu/2)||A x - b||^2
ReconResult reconstruct_global(const Measurement& m, const PatternSet& patterns,
                               const SolverConfig& cfg);
ReconResult reconstruct_global(const Measurement& m, DataTerm& data, std::size_t rows,
                               std::size_t cols, const SolverConfig& cfg);

// min ||Psi x||_1 + lambda sum_k ||s_k||_1 + (mu/2)||A x - b||^2,
// x = c + sum_k d_k * s_k with a free constant c.
ReconResult reconstruct_csc(const Measurement& m, const PatternSet& patterns,
                            const SolverConfig& cfg);
ReconResult reconstruct_csc(const Measurement& m, DataTerm& data, std::size_t rows,
                            std::size_t cols, const SolverConfig& cfg);

// Dispatch on the benchmark algorithm names. `cfg` supplies the shared
// parameters; prior and use_csc are set from the algorithm.
ReconResult reconstruct(Algorithm algorithm, const Measurement& m, const PatternSet& patterns,
                        DataTerm& data, SolverConfig cfg);

}  // namespace spi
