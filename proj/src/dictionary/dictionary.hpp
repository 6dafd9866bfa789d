#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "core/grid.hpp"
#include "core/image.hpp"

namespace spi {

struct LearnConfig {
  double beta = 1.0;               // l1 weight on the feature maps
  int outer_iterations = 20;       // alternations of coding and dictionary steps
  double admm_rho = 1.0;
  double inner_tolerance = 1e-3;   // relative primal/dual residual
  int inner_iterations = 100;      // ADMM cap per coding or dictionary step
  std::uint64_t seed = 0;
  unsigned jobs = 1;               // worker threads for per-image coding
};

void validate(const LearnConfig& cfg);

struct TrainingMeta {
  std::vector<std::string> corpus_ids;
  double beta = 0.0;
  int iterations = 0;
  std::uint64_t seed = 0;
  std::vector<double> objective_history;  // entry 0 is the initial objective
  std::vector<int> coding_iterations;     // inner ADMM steps used per outer iteration
  std::vector<int> dictionary_iterations;
  bool inner_converged = true;            // every inner solve met its tolerance
  std::string rng;

  bool operator==(const TrainingMeta&) const = default;
};

// K square m x m kernels, each with l2 norm <= 1.
struct Dictionary {
  std::size_t kernel_size = 0;
  std::vector<Grid> kernels;
  TrainingMeta meta;

  std::size_t count() const { return kernels.size(); }
  // Content hash of K, m and the kernel values.
  std::string id() const;

  bool operator==(const Dictionary&) const = default;
};

struct FeatureMapSet {
  std::vector<Grid> maps;
  std::string dictionary_id;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> primal_residuals;
  std::vector<double> dual_residuals;

  // Fraction of entries with |s| > 1e-8.
  double sparsity() const;
};

// Kernels drawn i.i.d. N(0,1) from per-kernel streams, then scaled onto the
// unit l2 ball.
Dictionary init_dictionary(std::size_t count, std::size_t size, std::uint64_t seed);

// Alternating minimization of
//   sum_j 1/2 ||x_j - sum_k d_k * s_kj||^2 + beta sum_kj ||s_kj||_1,  ||d_k|| <= 1
// on mean-subtracted training images.
Dictionary learn(const std::vector<Image>& corpus, std::size_t count, std::size_t size,
                 const LearnConfig& cfg, std::vector<std::string> corpus_ids = {});

// Convolutional sparse code of a single grid (no mean handling).
FeatureMapSet encode(const Grid& image, const Dictionary& dict, double beta,
                     const LearnConfig& cfg);

// sum_k conv_circular(s_k, d_k)
Grid decode(const FeatureMapSet& maps, const Dictionary& dict);

// 1/2 ||x - decode(maps)||^2 + beta ||maps||_1
double csc_objective(const Grid& image, const Dictionary& dict, const std::vector<Grid>& maps,
                     double beta);

// Throws unless every kernel is finite and inside the unit ball (1e-9 slack).
void validate(const Dictionary& dict);

// CSCD container: "CSCD", u32 version, u32 K, u32 m, K*m*m float64 kernel
// values (row-major, kernel by kernel), then a UTF-8 JSON trailer to EOF.
inline constexpr std::uint32_t kCscdVersion = 1;
void save_dictionary(const Dictionary& dict, const std::filesystem::path& path);
Dictionary load_dictionary(const std::filesystem::path& path);

}  // namespace spi
