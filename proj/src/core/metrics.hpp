#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "core/grid.hpp"
#include "core/image.hpp"

namespace spi {

enum class Algorithm { LS, TV, DCT, TV_CSC, DCT_CSC };

std::string_view to_string(Algorithm a);
// Accepts the canonical names (TV_CSC) and the CLI spellings (tv-csc).
Algorithm parse_algorithm(std::string_view text);

// Peak is fixed at 1.0. Identical inputs give +infinity.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

double rmse(const Grid& a, const Grid& b);
double rmse(const Image& a, const Image& b);
double psnr(const Image& reference, const Image& candidate);
double psnr_from_rmse(double rmse_value);

struct MetricsRecord {
  std::string image_id;
  Algorithm algorithm = Algorithm::LS;
  double compression_ratio = 0.0;
  std::optional<double> snr_db;  // empty = noiseless
  int repetition = 0;
  double psnr_db = 0.0;
  double rmse = 0.0;
  int iterations = 0;
  bool converged = false;
  bool failed = false;
  std::string error;
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;
  std::string dictionary_id;
};

}  // namespace spi
