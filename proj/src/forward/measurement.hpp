#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "core/image.hpp"
#include "forward/patterns.hpp"

namespace spi {

struct NoiseMeta {
  std::optional<double> snr_db;  // empty = noiseless
  std::uint64_t noise_seed = 0;
  std::uint32_t samplings = 1;

  bool operator==(const NoiseMeta&) const = default;
};

// Bucket readings y plus enough provenance to regenerate the patterns and
// replay the noise.
struct Measurement {
  std::vector<double> values;
  PatternRef pattern_ref;
  NoiseMeta noise;

  bool operator==(const Measurement&) const = default;
};

// y_i = <row_i, vec(image)>, noiseless.
Measurement measure(const Image& image, const PatternSet& patterns);
std::vector<double> measure_grid(const Grid& x, const PatternSet& patterns);

// Additive white Gaussian noise with variance mean(y^2) / 10^(snr/10).
Measurement add_noise(const Measurement& clean, double snr_db, std::uint64_t noise_seed);

// Mean of n independent noisy readings of the same clean measurement. For
// n = 1 this is bit-identical to add_noise(measure(...)).
Measurement average_samplings(const Image& image, const PatternSet& patterns, double snr_db,
                              std::uint32_t n, std::uint64_t seed);

// 10 log10(mean(clean^2) / mean((noisy-clean)^2)).
double empirical_snr_db(const std::vector<double>& clean, const std::vector<double>& noisy);

// SPIM container: "SPIM", u32 version, u32 M, u32 H, u32 W, u8 kind,
// u64 pattern seed, M float64 values, then a UTF-8 JSON trailer to EOF.
inline constexpr std::uint32_t kSpimVersion = 1;
void save_measurement(const Measurement& m, const std::filesystem::path& path);
Measurement load_measurement(const std::filesystem::path& path);

}  // namespace spi
