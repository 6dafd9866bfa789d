#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string_view>

namespace spi {

// Identity rows are the first M canonical basis vectors; they are handy for
// pipeline checks and are not a physical illumination ensemble.
enum class PatternKind : std::uint8_t { Bernoulli01 = 0, Rademacher = 1, Gaussian = 2, Identity = 3 };

std::string_view to_string(PatternKind kind);
PatternKind parse_pattern_kind(std::string_view text);

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Everything needed to regenerate a PatternSet bit-for-bit.
struct PatternRef {
  PatternKind kind = PatternKind::Bernoulli01;
  std::uint32_t count = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint64_t seed = 0;

  bool operator==(const PatternRef&) const = default;
};

// M illumination patterns stored as the rows of the M x (H*W) sampling matrix.
struct PatternSet {
  PatternRef ref;
  RowMatrix rows;

  std::size_t count() const { return ref.count; }
  std::size_t pixel_count() const { return std::size_t{ref.height} * ref.width; }
  double compression_ratio() const {
    return static_cast<double>(ref.count) / static_cast<double>(pixel_count());
  }
};

// Row i is drawn from its own stream derive_seed(seed, i), so rows are
// independent of M and of generation order.
PatternSet gen_patterns(std::uint32_t count, std::uint32_t height, std::uint32_t width,
                        PatternKind kind, std::uint64_t seed);
PatternSet gen_patterns(const PatternRef& ref);

// round(cr * H * W), at least 1.
std::uint32_t pattern_count_for_ratio(double cr, std::uint32_t height, std::uint32_t width);

}  // namespace spi
