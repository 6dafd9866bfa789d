#include <cmath>

#include "core/binary_io.hpp"
#include "core/error.hpp"
#include "core/file_util.hpp"
#include "dictionary/dictionary.hpp"
#include "json.hpp"

namespace spi {

void save_dictionary(const Dictionary& dict, const std::filesystem::path& path) {
  validate(dict);
  ByteWriter w;
  w.raw("CSCD");
  w.u32(kCscdVersion);
  w.u32(static_cast<std::uint32_t>(dict.count()));
  w.u32(static_cast<std::uint32_t>(dict.kernel_size));
  for (const Grid& k : dict.kernels)
    for (double v : k.values) w.f64(v);

  const TrainingMeta& m = dict.meta;
  nlohmann::ordered_json meta;
  meta["beta"] = m.beta;
  meta["seed"] = m.seed;
  meta["corpus_ids"] = m.corpus_ids;
  meta["iterations"] = m.iterations;
  meta["objective_history"] = m.objective_history;
  meta["coding_iterations"] = m.coding_iterations;
  meta["dictionary_iterations"] = m.dictionary_iterations;
  meta["inner_converged"] = m.inner_converged;
  meta["rng"] = m.rng;
  meta["id"] = dict.id();
  w.raw(meta.dump());
  write_file_bytes(path, w.bytes().data(), w.bytes().size());
}

Dictionary load_dictionary(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  const std::string name = path.string();
  ByteReader r(bytes, name);
  require(r.raw(4) == "CSCD", ErrorCode::Format, name + ": not a CSCD file");
  const std::uint32_t version = r.u32();
  require(version == kCscdVersion, ErrorCode::Format,
          name + ": unsupported CSCD version " + std::to_string(version));
  const std::uint32_t count = r.u32();
  const std::uint32_t size = r.u32();
  require(count >= 1 && size >= 1, ErrorCode::Format, name + ": empty dictionary");
  require(r.remaining() / 8 / size / size >= count, ErrorCode::Format, name + ": truncated kernels");

  Dictionary dict;
  dict.kernel_size = size;
  for (std::uint32_t k = 0; k < count; ++k) {
    Grid kernel(size, size);
    for (double& v : kernel.values) v = r.f64();
    dict.kernels.push_back(std::move(kernel));
  }
  try {
    const auto meta = nlohmann::json::parse(r.rest());
    TrainingMeta& m = dict.meta;
    m.beta = meta.at("beta").get<double>();
    m.seed = meta.at("seed").get<std::uint64_t>();
    m.corpus_ids = meta.at("corpus_ids").get<std::vector<std::string>>();
    m.iterations = meta.at("iterations").get<int>();
    m.objective_history = meta.value("objective_history", std::vector<double>{});
    m.coding_iterations = meta.value("coding_iterations", std::vector<int>{});
    m.dictionary_iterations = meta.value("dictionary_iterations", std::vector<int>{});
    m.inner_converged = meta.value("inner_converged", true);
    m.rng = meta.value("rng", std::string{});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, name + ": bad JSON trailer: " + e.what());
  }
  try {
    validate(dict);
  } catch (const Error& e) {
    fail(ErrorCode::Format, name + ": " + e.what());
  }
  return dict;
}

}  // namespace spi
