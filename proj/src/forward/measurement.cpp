#include "forward/measurement.hpp"

#include <cmath>
#include "json.hpp"

#include "core/binary_io.hpp"
#include "core/error.hpp"
#include "core/file_util.hpp"
#include "forward/rng.hpp"

namespace spi {
namespace {

double mean_square(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s / static_cast<double>(v.size());
}

double noise_sigma(const std::vector<double>& clean, double snr_db) {
  require(std::isfinite(snr_db), ErrorCode::InvalidArgument, "snr_db must be finite");
  require(!clean.empty(), ErrorCode::InvalidArgument, "cannot add noise to an empty measurement");
  return std::sqrt(mean_square(clean) / std::pow(10.0, snr_db / 10.0));
}

// Adds the mean of n independent N(0, sigma^2) draws to each value.
std::vector<double> with_averaged_noise(std::vector<double> values, double sigma, std::uint32_t n,
                                        std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<double> acc(values.size(), 0.0);
  for (std::uint32_t k = 0; k < n; ++k) {
    for (double& a : acc) a += sigma * rng.normal();
  }
  for (std::size_t i = 0; i < acc.size(); ++i) values[i] += acc[i] / static_cast<double>(n);
  return values;
}

}  // namespace

std::vector<double> measure_grid(const Grid& x, const PatternSet& patterns) {
  require(x.rows == patterns.ref.height && x.cols == patterns.ref.width, ErrorCode::Dimension,
          "measure: pattern size does not match the image");
  const Eigen::Map<const Eigen::VectorXd> vec(x.data(), static_cast<Eigen::Index>(x.size()));
  std::vector<double> y(patterns.count());
  Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())).noalias() =
      patterns.rows * vec;
  return y;
}

Measurement measure(const Image& image, const PatternSet& patterns) {
  return Measurement{measure_grid(image.grid(), patterns), patterns.ref, NoiseMeta{}};
}

Measurement add_noise(const Measurement& clean, double snr_db, std::uint64_t noise_seed) {
  const double sigma = noise_sigma(clean.values, snr_db);
  Measurement out = clean;
  out.values = with_averaged_noise(clean.values, sigma, 1, noise_seed);
  out.noise = NoiseMeta{snr_db, noise_seed, 1};
  return out;
}

Measurement average_samplings(const Image& image, const PatternSet& patterns, double snr_db,
                              std::uint32_t n, std::uint64_t seed) {
  require(n >= 1, ErrorCode::InvalidArgument, "samplings must be >= 1");
  Measurement out = measure(image, patterns);
  const double sigma = noise_sigma(out.values, snr_db);
  out.values = with_averaged_noise(std::move(out.values), sigma, n, seed);
  out.noise = NoiseMeta{snr_db, seed, n};
  return out;
}

double empirical_snr_db(const std::vector<double>& clean, const std::vector<double>& noisy) {
  require(clean.size() == noisy.size() && !clean.empty(), ErrorCode::Dimension,
          "empirical_snr_db: size mismatch");
  double noise = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) noise += (noisy[i] - clean[i]) * (noisy[i] - clean[i]);
  return 10.0 * std::log10(mean_square(clean) / (noise / static_cast<double>(clean.size())));
}

void save_measurement(const Measurement& m, const std::filesystem::path& path) {
  require(m.values.size() == m.pattern_ref.count, ErrorCode::InvalidArgument,
          "measurement length does not match its pattern count");
  ByteWriter w;
  w.raw("SPIM");
  w.u32(kSpimVersion);
  w.u32(m.pattern_ref.count);
  w.u32(m.pattern_ref.height);
  w.u32(m.pattern_ref.width);
  w.u8(static_cast<std::uint8_t>(m.pattern_ref.kind));
  w.u64(m.pattern_ref.seed);
  for (double v : m.values) w.f64(v);
  nlohmann::ordered_json meta;
  meta["snr_db"] = m.noise.snr_db ? nlohmann::ordered_json(*m.noise.snr_db)
                                  : nlohmann::ordered_json("noiseless");
  meta["noise_seed"] = m.noise.noise_seed;
  meta["samplings"] = m.noise.samplings;
  meta["pattern_kind"] = to_string(m.pattern_ref.kind);
  meta["rng"] = kRngName;
  w.raw(meta.dump());
  write_file_bytes(path, w.bytes().data(), w.bytes().size());
}

Measurement load_measurement(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  ByteReader r(bytes, path.string());
  require(r.raw(4) == "SPIM", ErrorCode::Format, path.string() + ": not a SPIM file");
  const std::uint32_t version = r.u32();
  require(version == kSpimVersion, ErrorCode::Format,
          path.string() + ": unsupported SPIM version " + std::to_string(version));
  Measurement m;
  m.pattern_ref.count = r.u32();
  m.pattern_ref.height = r.u32();
  m.pattern_ref.width = r.u32();
  const std::uint8_t kind = r.u8();
  require(kind <= 3, ErrorCode::Format, path.string() + ": invalid pattern kind");
  m.pattern_ref.kind = static_cast<PatternKind>(kind);
  m.pattern_ref.seed = r.u64();
  require(r.remaining() >= std::size_t{m.pattern_ref.count} * 8, ErrorCode::Format,
          path.string() + ": truncated values");
  m.values.resize(m.pattern_ref.count);
  for (double& v : m.values) v = r.f64();
  const std::string trailer = r.rest();
  try {
    const auto meta = nlohmann::json::parse(trailer);
    const auto& snr = meta.at("snr_db");
    if (snr.is_number()) m.noise.snr_db = snr.get<double>();
    m.noise.noise_seed = meta.at("noise_seed").get<std::uint64_t>();
    m.noise.samplings = meta.at("samplings").get<std::uint32_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, path.string() + ": bad JSON trailer: " + e.what());
  }
  return m;
}

}  // namespace spi
