#include "forward/patterns.hpp"

#include <cmath>
#include <string>

#include "core/error.hpp"
#include "forward/rng.hpp"

namespace spi {

std::string_view to_string(PatternKind kind) {
  switch (kind) {
    case PatternKind::Bernoulli01: return "bernoulli01";
    case PatternKind::Rademacher: return "rademacher";
    case PatternKind::Gaussian: return "gaussian";
    case PatternKind::Identity: return "identity";
  }
  return "?";
}

PatternKind parse_pattern_kind(std::string_view text) {
  for (PatternKind k : {PatternKind::Bernoulli01, PatternKind::Rademacher, PatternKind::Gaussian,
                        PatternKind::Identity}) {
    if (text == to_string(k)) return k;
  }
  fail(ErrorCode::InvalidArgument, "unknown pattern kind '" + std::string(text) + "'");
}

PatternSet gen_patterns(std::uint32_t count, std::uint32_t height, std::uint32_t width,
                        PatternKind kind, std::uint64_t seed) {
  return gen_patterns(PatternRef{kind, count, height, width, seed});
}

PatternSet gen_patterns(const PatternRef& ref) {
  require(ref.count >= 1, ErrorCode::InvalidArgument, "pattern count must be >= 1");
  require(ref.height >= 1 && ref.width >= 1, ErrorCode::InvalidArgument, "pattern size must be >= 1");
  require(static_cast<std::uint8_t>(ref.kind) <= 3, ErrorCode::InvalidArgument, "invalid pattern kind");
  const std::size_t n = std::size_t{ref.height} * ref.width;
  if (ref.kind == PatternKind::Identity) {
    require(ref.count <= n, ErrorCode::InvalidArgument, "identity patterns need M <= H*W");
  }

  PatternSet set{ref, RowMatrix::Zero(ref.count, static_cast<Eigen::Index>(n))};
  for (std::uint32_t i = 0; i < ref.count; ++i) {
    double* row = set.rows.row(i).data();
    if (ref.kind == PatternKind::Identity) {
      row[i] = 1.0;
      continue;
    }
    RandomStream rng(derive_seed(ref.seed, i));
    switch (ref.kind) {
      case PatternKind::Bernoulli01:
      case PatternKind::Rademacher: {
        const double lo = ref.kind == PatternKind::Bernoulli01 ? 0.0 : -1.0;
        std::uint64_t word = 0;
        for (std::size_t j = 0; j < n; ++j) {
          if (j % 64 == 0) word = rng.bits();
          row[j] = (word >> (j % 64)) & 1 ? 1.0 : lo;
        }
        break;
      }
      case PatternKind::Gaussian:
        for (std::size_t j = 0; j < n; ++j) row[j] = rng.normal();
        break;
      case PatternKind::Identity:
        break;
    }
  }
  return set;
}

std::uint32_t pattern_count_for_ratio(double cr, std::uint32_t height, std::uint32_t width) {
  require(cr > 0.0 && cr <= 1.0, ErrorCode::InvalidArgument, "compression ratio must be in (0,1]");
  const double n = static_cast<double>(height) * width;
  return static_cast<std::uint32_t>(std::max(1.0, std::round(cr * n)));
}

}  // namespace spi
