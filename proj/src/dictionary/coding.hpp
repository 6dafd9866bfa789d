#pragma once

#include <vector>

#include "core/grid.hpp"
#include "dictionary/spectral.hpp"

namespace spi {

// ADMM iterates for min 1/2||x - Ds||^2 + beta||z||_1 s.t. s = z. Kept
// between calls so the dictionary learner can warm start.
struct CodingState {
  std::vector<Grid> z;  // sparse maps
  std::vector<Grid> u;  // scaled duals
};

struct CodingStats {
  int iterations = 0;
  bool converged = false;
  std::vector<double> primal;
  std::vector<double> dual;
};

CodingState zero_coding_state(std::size_t count, std::size_t rows, std::size_t cols);

CodingStats sparse_code(const KernelBank& bank, const Spectrum& image_spectrum, double beta,
                        double rho, int max_iterations, double tolerance, CodingState& state);

// Spatial synthesis sum_k d_k * maps_k.
Grid synthesize(const KernelBank& bank, const std::vector<Grid>& maps);

}  // namespace spi
