#include "bench/sweep.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

#include "core/error.hpp"
#include "core/parallel.hpp"
#include "dictionary/dictionary.hpp"
#include "forward/measurement.hpp"
#include "forward/rng.hpp"
#include "json.hpp"
#include "solver/data_term.hpp"

namespace spi {
namespace {

using Json = nlohmann::ordered_json;

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool is_csc(Algorithm a) { return a == Algorithm::TV_CSC || a == Algorithm::DCT_CSC; }

bool needs_dictionary(const SweepSpec& spec) {
  return std::any_of(spec.algorithms.begin(), spec.algorithms.end(), is_csc);
}

struct Cell {
  std::size_t image = 0;
  double cr = 0.0;
  std::optional<double> snr;
  int rep = 0;
};

struct Context {
  const SweepSpec& spec;
  std::vector<Image> images;
  std::vector<std::string> ids;
  std::shared_ptr<const Dictionary> dictionary;
};

Context load_context(const SweepSpec& spec) {
  validate(spec);
  Context ctx{spec, {}, {}, nullptr};
  for (const auto& path : spec.image_paths) {
    ctx.images.push_back(load_image(path));
    ctx.ids.push_back(image_id(path));
  }
  if (needs_dictionary(spec)) {
    ctx.dictionary = std::make_shared<const Dictionary>(load_dictionary(*spec.dictionary_path));
  }
  return ctx;
}

MetricsRecord failed_record(MetricsRecord r, const std::string& message) {
  r.failed = true;
  r.error = message;
  r.psnr_db = std::numeric_limits<double>::quiet_NaN();
  r.rmse = std::numeric_limits<double>::quiet_NaN();
  r.iterations = 0;
  r.converged = false;
  return r;
}

// Runs the listed algorithms on one shared measurement.
std::vector<MetricsRecord> run_cell(const Context& ctx, const Cell& cell,
                                    const std::vector<Algorithm>& algorithms) {
  const SweepSpec& spec = ctx.spec;
  const Image& truth = ctx.images[cell.image];
  const std::uint64_t seed = cell_seed(spec.base_seed, ctx.ids[cell.image], cell.cr, cell.rep);

  std::vector<MetricsRecord> out;
  for (Algorithm a : algorithms) {
    MetricsRecord r;
    r.image_id = ctx.ids[cell.image];
    r.algorithm = a;
    r.compression_ratio = cell.cr;
    r.snr_db = cell.snr;
    r.repetition = cell.rep;
    r.seed = seed;
    if (is_csc(a)) r.dictionary_id = ctx.dictionary->id();
    out.push_back(std::move(r));
  }

  std::optional<PatternSet> patterns;
  Measurement m;
  try {
    const auto h = static_cast<std::uint32_t>(truth.height());
    const auto w = static_cast<std::uint32_t>(truth.width());
    patterns = gen_patterns(pattern_count_for_ratio(cell.cr, h, w), h, w, spec.pattern_kind, seed);
    m = cell.snr ? average_samplings(truth, *patterns, *cell.snr, spec.samplings,
                                     noise_seed(seed, cell.snr))
                 : measure(truth, *patterns);
  } catch (const std::exception& e) {
    for (auto& r : out) r = failed_record(std::move(r), e.what());
    return out;
  }

  std::optional<DataTerm> data;
  SolverConfig cfg = spec.solver;
  cfg.dictionary = ctx.dictionary;
  for (auto& r : out) {
    const auto start = std::chrono::steady_clock::now();
    try {
      ReconResult result;
      if (r.algorithm == Algorithm::LS) {
        result = reconstruct_ls(m, *patterns);
      } else {
        if (!data) data.emplace(*patterns, m.values);
        result = reconstruct(r.algorithm, m, *patterns, *data, cfg);
      }
      // Scored on the 16-bit image that gets saved, so the file reproduces
      // the row exactly.
      const Image recon = Image::quantized16(result.grid);
      r.rmse = rmse(truth, recon);
      r.psnr_db = psnr(truth, recon);
      r.iterations = result.iterations;
      r.converged = result.converged;
      if (spec.save_dir) save_image(recon, *spec.save_dir / reconstruction_name(r));
    } catch (const std::exception& e) {
      r = failed_record(std::move(r), e.what());
    }
    r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return out;
}

std::optional<double> snr_from_json(const Json& j) {
  if (j.is_null() || (j.is_string() && j.get<std::string>() == "noiseless")) return std::nullopt;
  require(j.is_number(), ErrorCode::Format, "snr entries must be numbers or \"noiseless\"");
  return j.get<double>();
}

void reject_unknown(const Json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (const auto& item : j.items()) {
    const bool known = std::any_of(keys.begin(), keys.end(),
                                   [&](const char* k) { return item.key() == k; });
    require(known, ErrorCode::Format, "unknown key '" + item.key() + "' in " + where);
  }
}

}  // namespace

void validate(const SweepSpec& spec) {
  require(!spec.image_paths.empty(), ErrorCode::InvalidArgument, "sweep needs at least one image");
  require(!spec.algorithms.empty(), ErrorCode::InvalidArgument, "sweep needs at least one algorithm");
  require(!spec.compression_ratios.empty(), ErrorCode::InvalidArgument,
          "sweep needs at least one compression ratio");
  require(!spec.snr_list.empty(), ErrorCode::InvalidArgument, "sweep needs at least one SNR entry");
  require(spec.repetitions >= 1, ErrorCode::InvalidArgument, "repetitions must be >= 1");
  require(spec.samplings >= 1, ErrorCode::InvalidArgument, "samplings must be >= 1");
  for (double cr : spec.compression_ratios) {
    require(cr > 0.0 && cr <= 1.0, ErrorCode::InvalidArgument,
            fmt::format("compression ratio {} is outside (0, 1]", cr));
  }
  for (const auto& snr : spec.snr_list) {
    require(!snr || std::isfinite(*snr), ErrorCode::InvalidArgument, "SNR values must be finite");
  }
  std::set<std::string> ids;
  for (const auto& path : spec.image_paths) {
    require(std::filesystem::exists(path), ErrorCode::Io, "no such image: " + path.string());
    require(ids.insert(image_id(path)).second, ErrorCode::InvalidArgument,
            "duplicate image id '" + image_id(path) + "'");
  }
  std::set<Algorithm> algs(spec.algorithms.begin(), spec.algorithms.end());
  require(algs.size() == spec.algorithms.size(), ErrorCode::InvalidArgument,
          "algorithms must not repeat");
  if (needs_dictionary(spec)) {
    require(spec.dictionary_path.has_value(), ErrorCode::InvalidArgument,
            "CSC algorithms need a dictionary");
    require(std::filesystem::exists(*spec.dictionary_path), ErrorCode::Io,
            "no such dictionary: " + spec.dictionary_path->string());
  }
  validate(spec.solver);
}

std::string image_id(const std::filesystem::path& path) { return path.stem().string(); }

std::uint64_t cell_seed(std::uint64_t base_seed, const std::string& id, double cr, int rep) {
  std::uint64_t s = derive_seed(base_seed, fnv1a(id));
  s = derive_seed(s, std::bit_cast<std::uint64_t>(cr));
  return derive_seed(s, static_cast<std::uint64_t>(rep));
}

std::uint64_t noise_seed(std::uint64_t seed, std::optional<double> snr_db) {
  return derive_seed(seed, snr_db ? std::bit_cast<std::uint64_t>(*snr_db) : ~0ULL);
}

std::string snr_label(std::optional<double> snr_db) {
  return snr_db ? fmt::format("{}", *snr_db) : "noiseless";
}

std::string reconstruction_name(const MetricsRecord& r) {
  return fmt::format("{}_{}_cr{}_snr{}_rep{}.png", r.image_id, to_string(r.algorithm),
                     r.compression_ratio, snr_label(r.snr_db), r.repetition);
}

std::vector<MetricsRecord> run_sweep(const SweepSpec& spec, unsigned jobs) {
  const Context ctx = load_context(spec);
  if (spec.save_dir) std::filesystem::create_directories(*spec.save_dir);

  std::vector<Cell> cells;
  for (std::size_t i = 0; i < spec.image_paths.size(); ++i)
    for (double cr : spec.compression_ratios)
      for (const auto& snr : spec.snr_list)
        for (int rep = 0; rep < spec.repetitions; ++rep) cells.push_back({i, cr, snr, rep});

  std::vector<std::vector<MetricsRecord>> results(cells.size());
  parallel_for(cells.size(), jobs,
               [&](std::size_t c) { results[c] = run_cell(ctx, cells[c], spec.algorithms); });

  // Cells are rep-major inside (image, cr, snr); rows put the algorithm
  // before the repetition.
  std::vector<MetricsRecord> records;
  records.reserve(cells.size() * spec.algorithms.size());
  const auto reps = static_cast<std::size_t>(spec.repetitions);
  for (std::size_t group = 0; group < cells.size(); group += reps)
    for (std::size_t a = 0; a < spec.algorithms.size(); ++a)
      for (std::size_t r = 0; r < reps; ++r) records.push_back(results[group + r][a]);
  return records;
}

std::vector<MetricsRecord> run_cr_sweep(const SweepSpec& spec, unsigned jobs) {
  return run_sweep(spec, jobs);
}

std::vector<MetricsRecord> run_noise_sweep(const SweepSpec& spec, unsigned jobs) {
  require(spec.compression_ratios.size() == 1, ErrorCode::InvalidArgument,
          "a noise sweep uses exactly one compression ratio");
  return run_sweep(spec, jobs);
}

MetricsRecord replay_record(const SweepSpec& spec, const MetricsRecord& row) {
  SweepSpec one = spec;
  std::optional<std::filesystem::path> path;
  for (const auto& p : spec.image_paths)
    if (image_id(p) == row.image_id) path = p;
  require(path.has_value(), ErrorCode::InvalidArgument,
          "image '" + row.image_id + "' is not part of the sweep");
  one.image_paths = {*path};
  one.save_dir.reset();
  const Context ctx = load_context(one);
  MetricsRecord r = run_cell(ctx, Cell{0, row.compression_ratio, row.snr_db, row.repetition},
                             {row.algorithm})
                        .front();
  require(r.seed == row.seed, ErrorCode::InvalidArgument,
          fmt::format("row seed {} does not match the sweep seed {}", row.seed, r.seed));
  return r;
}

std::string sweep_spec_to_json(const SweepSpec& spec) {
  Json j;
  j["images"] = Json::array();
  for (const auto& p : spec.image_paths) j["images"].push_back(p.string());
  j["compression_ratios"] = spec.compression_ratios;
  j["snr_db"] = Json::array();
  for (const auto& s : spec.snr_list) j["snr_db"].push_back(s ? Json(*s) : Json("noiseless"));
  j["algorithms"] = Json::array();
  for (Algorithm a : spec.algorithms) j["algorithms"].push_back(std::string(to_string(a)));
  j["dictionary"] = spec.dictionary_path ? Json(spec.dictionary_path->string()) : Json(nullptr);
  j["pattern_kind"] = std::string(to_string(spec.pattern_kind));
  j["base_seed"] = spec.base_seed;
  j["repetitions"] = spec.repetitions;
  j["samplings"] = spec.samplings;
  const SolverConfig& s = spec.solver;
  j["solver"] = Json{{"lambda", s.lambda},
                     {"mu", s.mu ? Json(*s.mu) : Json(nullptr)},
                     {"mu_noiseless", s.mu_noiseless},
                     {"mu_gain", s.mu_gain},
                     {"rho", s.rho},
                     {"max_iterations", s.max_iterations},
                     {"tolerance", s.tolerance}};
  j["record_wall_time"] = spec.record_wall_time;
  j["save_dir"] = spec.save_dir ? Json(spec.save_dir->string()) : Json(nullptr);
  return j.dump(2) + "\n";
}

SweepSpec sweep_spec_from_json(const std::string& text) {
  SweepSpec spec;
  try {
    const Json j = Json::parse(text);
    require(j.is_object(), ErrorCode::Format, "sweep spec must be a JSON object");
    reject_unknown(j, {"images", "compression_ratios", "snr_db", "algorithms", "dictionary",
                       "pattern_kind", "base_seed", "repetitions", "samplings", "solver",
                       "record_wall_time", "save_dir"},
                   "sweep spec");
    spec.image_paths.clear();
    for (const auto& p : j.at("images")) spec.image_paths.emplace_back(p.get<std::string>());
    if (j.contains("compression_ratios"))
      spec.compression_ratios = j["compression_ratios"].get<std::vector<double>>();
    if (j.contains("snr_db")) {
      spec.snr_list.clear();
      for (const auto& s : j["snr_db"]) spec.snr_list.push_back(snr_from_json(s));
    }
    if (j.contains("algorithms")) {
      spec.algorithms.clear();
      for (const auto& a : j["algorithms"]) spec.algorithms.push_back(parse_algorithm(a.get<std::string>()));
    }
    if (j.contains("dictionary") && !j["dictionary"].is_null())
      spec.dictionary_path = j["dictionary"].get<std::string>();
    if (j.contains("pattern_kind"))
      spec.pattern_kind = parse_pattern_kind(j["pattern_kind"].get<std::string>());
    if (j.contains("base_seed")) spec.base_seed = j["base_seed"].get<std::uint64_t>();
    if (j.contains("repetitions")) spec.repetitions = j["repetitions"].get<int>();
    if (j.contains("samplings")) spec.samplings = j["samplings"].get<std::uint32_t>();
    if (j.contains("solver")) {
      const Json& s = j["solver"];
      reject_unknown(s, {"lambda", "mu", "mu_noiseless", "mu_gain", "rho", "max_iterations",
                         "tolerance"},
                     "solver settings");
      SolverConfig& c = spec.solver;
      if (s.contains("lambda")) c.lambda = s["lambda"].get<double>();
      if (s.contains("mu") && !s["mu"].is_null()) c.mu = s["mu"].get<double>();
      if (s.contains("mu_noiseless")) c.mu_noiseless = s["mu_noiseless"].get<double>();
      if (s.contains("mu_gain")) c.mu_gain = s["mu_gain"].get<double>();
      if (s.contains("rho")) c.rho = s["rho"].get<double>();
      if (s.contains("max_iterations")) c.max_iterations = s["max_iterations"].get<int>();
      if (s.contains("tolerance")) c.tolerance = s["tolerance"].get<double>();
    }
    if (j.contains("record_wall_time")) spec.record_wall_time = j["record_wall_time"].get<bool>();
    if (j.contains("save_dir") && !j["save_dir"].is_null())
      spec.save_dir = j["save_dir"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, std::string("sweep spec: ") + e.what());
  }
  return spec;
}

}  // namespace spi
