#include "core/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "core/error.hpp"

namespace spi {

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::LS: return "LS";
    case Algorithm::TV: return "TV";
    case Algorithm::DCT: return "DCT";
    case Algorithm::TV_CSC: return "TV_CSC";
    case Algorithm::DCT_CSC: return "DCT_CSC";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view text) {
  std::string key(text);
  for (char& c : key) c = c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (Algorithm a : {Algorithm::LS, Algorithm::TV, Algorithm::DCT, Algorithm::TV_CSC, Algorithm::DCT_CSC}) {
    if (key == to_string(a)) return a;
  }
  fail(ErrorCode::InvalidArgument, "unknown algorithm '" + std::string(text) + "'");
}

double rmse(const Grid& a, const Grid& b) {
  require(a.same_shape(b), ErrorCode::Dimension, "rmse: dimension mismatch");
  require(a.size() > 0, ErrorCode::InvalidArgument, "rmse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(a.size()));
}

double rmse(const Image& a, const Image& b) { return rmse(a.grid(), b.grid()); }

double psnr_from_rmse(double rmse_value) {
  if (rmse_value == 0.0) return kPsnrIdentical;
  return -20.0 * std::log10(rmse_value);
}

double psnr(const Image& reference, const Image& candidate) {
  return psnr_from_rmse(rmse(reference, candidate));
}

}  // namespace spi
