#include "spi/spi.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "bench/report.hpp"
#include "bench/sweep.hpp"
#include "core/error.hpp"
#include "core/file_util.hpp"
#include "core/metrics.hpp"
#include "dictionary/dictionary.hpp"
#include "forward/measurement.hpp"
#include "json.hpp"
#include "solver/solver.hpp"

struct spi_image {
  spi::Image image;
};

struct spi_dictionary {
  std::shared_ptr<const spi::Dictionary> dict;
  std::string id;
};

struct spi_measurement {
  spi::Measurement m;
};

struct spi_result {
  spi_image image;
  int iterations = 0;
  bool converged = false;
  std::string json;
};

struct spi_sweep {
  spi::SweepSpec spec;
  std::string spec_json;
  std::vector<spi::MetricsRecord> records;
  bool ran = false;
};

struct spi_records {
  std::vector<spi::MetricsRecord> records;
};

namespace {

using Json = nlohmann::ordered_json;

thread_local std::string g_last_error;

spi_status to_status(spi::ErrorCode code) { return static_cast<spi_status>(code); }

// Runs `body`, translating exceptions into a status and the thread's error text.
template <class Body>
spi_status guarded(Body&& body) {
  try {
    body();
    g_last_error.clear();
    return SPI_OK;
  } catch (const spi::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SPI_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SPI_ERR_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  spi::require(p != nullptr, spi::ErrorCode::InvalidArgument, std::string(name) + " is null");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

spi::Algorithm to_cpp(spi_algorithm a) {
  spi::require(a >= SPI_ALG_LS && a <= SPI_ALG_DCT_CSC, spi::ErrorCode::InvalidArgument,
               "unknown algorithm code");
  return static_cast<spi::Algorithm>(a);
}

spi::PatternKind to_cpp(spi_pattern_kind k) {
  spi::require(k >= SPI_PATTERN_BERNOULLI01 && k <= SPI_PATTERN_IDENTITY,
               spi::ErrorCode::InvalidArgument, "unknown pattern kind code");
  return static_cast<spi::PatternKind>(k);
}

spi::LearnConfig to_cpp(const spi_learn_config& c) {
  spi::LearnConfig cfg;
  cfg.beta = c.beta;
  cfg.outer_iterations = c.outer_iterations;
  cfg.admm_rho = c.admm_rho;
  cfg.inner_tolerance = c.inner_tolerance;
  cfg.inner_iterations = c.inner_iterations;
  cfg.seed = c.seed;
  cfg.jobs = c.jobs;
  return cfg;
}

spi::SolverConfig to_cpp(const spi_solver_config& c) {
  spi::SolverConfig cfg;
  cfg.lambda = c.lambda;
  if (c.has_mu) cfg.mu = c.mu;
  cfg.mu_noiseless = c.mu_noiseless;
  cfg.mu_gain = c.mu_gain;
  cfg.rho = c.rho;
  cfg.max_iterations = c.max_iterations;
  cfg.tolerance = c.tolerance;
  return cfg;
}

std::string result_json(const spi::ReconResult& r, spi::Algorithm algorithm,
                        const spi::Measurement& m) {
  const spi::SolverConfig& c = r.config;
  Json j;
  j["algorithm"] = std::string(spi::to_string(algorithm));
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  Json cfg{{"lambda", c.lambda},
           {"mu", c.mu ? Json(*c.mu) : Json(nullptr)},
           {"mu_noiseless", c.mu_noiseless},
           {"mu_gain", c.mu_gain},
           {"rho", c.rho},
           {"max_iterations", c.max_iterations},
           {"tolerance", c.tolerance}};
  if (algorithm != spi::Algorithm::LS) cfg["prior"] = std::string(spi::to_string(c.prior));
  cfg["dictionary_id"] = c.dictionary ? Json(c.dictionary->id()) : Json(nullptr);
  j["config"] = std::move(cfg);
  const spi::PatternRef& p = m.pattern_ref;
  j["measurement"] = Json{{"pattern_kind", std::string(spi::to_string(p.kind))},
                          {"pattern_count", p.count},
                          {"height", p.height},
                          {"width", p.width},
                          {"pattern_seed", p.seed},
                          {"snr_db", m.noise.snr_db ? Json(*m.noise.snr_db) : Json("noiseless")},
                          {"noise_seed", m.noise.noise_seed},
                          {"samplings", m.noise.samplings}};
  if (c.use_csc) j["feature_sparsity"] = r.feature_sparsity;
  j["objective_history"] = r.objective_history;
  j["primal_residuals"] = r.primal_residuals;
  j["dual_residuals"] = r.dual_residuals;
  j["data_residuals"] = r.data_residuals;
  j["prior_residuals"] = r.prior_residuals;
  return j.dump(2) + "\n";
}

}  // namespace

extern "C" {

const char* spi_version(void) { return "1.0.0"; }

const char* spi_status_string(spi_status status) {
  switch (status) {
    case SPI_OK: return "ok";
    case SPI_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SPI_ERR_IO: return "i/o error";
    case SPI_ERR_FORMAT: return "format error";
    case SPI_ERR_DIMENSION: return "dimension mismatch";
    case SPI_ERR_NUMERIC: return "numerical failure";
    case SPI_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* spi_last_error(void) { return g_last_error.c_str(); }

void spi_string_free(char* s) { std::free(s); }

spi_status spi_algorithm_parse(const char* text, spi_algorithm* out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = static_cast<spi_algorithm>(spi::parse_algorithm(text));
  });
}

const char* spi_algorithm_name(spi_algorithm algorithm) {
  if (algorithm < SPI_ALG_LS || algorithm > SPI_ALG_DCT_CSC) return "";
  return spi::to_string(static_cast<spi::Algorithm>(algorithm)).data();
}

spi_status spi_pattern_kind_parse(const char* text, spi_pattern_kind* out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = static_cast<spi_pattern_kind>(spi::parse_pattern_kind(text));
  });
}

const char* spi_pattern_kind_name(spi_pattern_kind kind) {
  if (kind < SPI_PATTERN_BERNOULLI01 || kind > SPI_PATTERN_IDENTITY) return "";
  return spi::to_string(static_cast<spi::PatternKind>(kind)).data();
}

// ---- images

spi_status spi_image_load(const char* path, spi_image** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new spi_image{spi::load_image(path)};
  });
}

spi_status spi_image_from_pixels(size_t height, size_t width, const double* pixels, spi_image** out) {
  return guarded([&] {
    need(pixels, "pixels");
    need(out, "out");
    spi::require(height > 0 && width > 0, spi::ErrorCode::InvalidArgument, "empty image");
    spi::Grid g(height, width);
    std::copy(pixels, pixels + g.size(), g.values.begin());
    *out = new spi_image{spi::Image::clamped(g)};
  });
}

spi_status spi_image_save(const spi_image* image, const char* path) {
  return guarded([&] {
    need(image, "image");
    need(path, "path");
    spi::save_image(image->image, path);
  });
}

size_t spi_image_height(const spi_image* image) { return image ? image->image.height() : 0; }
size_t spi_image_width(const spi_image* image) { return image ? image->image.width() : 0; }
const double* spi_image_pixels(const spi_image* image) {
  return image ? image->image.pixels().data() : nullptr;
}

spi_status spi_image_compare(const spi_image* reference, const spi_image* candidate, double* psnr_db,
                             double* rmse) {
  return guarded([&] {
    need(reference, "reference");
    need(candidate, "candidate");
    const double e = spi::rmse(reference->image, candidate->image);
    if (rmse) *rmse = e;
    if (psnr_db) *psnr_db = spi::psnr_from_rmse(e);
  });
}

void spi_image_free(spi_image* image) { delete image; }

// ---- dictionaries

spi_learn_config spi_learn_config_default(void) {
  const spi::LearnConfig d;
  return spi_learn_config{16,
                          8,
                          d.beta,
                          d.outer_iterations,
                          d.admm_rho,
                          d.inner_tolerance,
                          d.inner_iterations,
                          d.seed,
                          d.jobs};
}

spi_status spi_dictionary_learn(const char* const* paths, size_t count, const spi_learn_config* config,
                                spi_dictionary** out) {
  return guarded([&] {
    need(paths, "paths");
    need(config, "config");
    need(out, "out");
    spi::require(count > 0, spi::ErrorCode::InvalidArgument, "training corpus is empty");
    std::vector<spi::Image> corpus;
    std::vector<std::string> ids;
    for (size_t i = 0; i < count; ++i) {
      need(paths[i], "corpus path");
      corpus.push_back(spi::load_image(paths[i]));
      ids.push_back(std::filesystem::path(paths[i]).stem().string());
    }
    auto dict = std::make_shared<const spi::Dictionary>(
        spi::learn(corpus, config->kernels, config->kernel_size, to_cpp(*config), std::move(ids)));
    std::string id = dict->id();
    *out = new spi_dictionary{std::move(dict), std::move(id)};
  });
}

spi_status spi_dictionary_load(const char* path, spi_dictionary** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto dict = std::make_shared<const spi::Dictionary>(spi::load_dictionary(path));
    std::string id = dict->id();
    *out = new spi_dictionary{std::move(dict), std::move(id)};
  });
}

spi_status spi_dictionary_save(const spi_dictionary* dict, const char* path) {
  return guarded([&] {
    need(dict, "dict");
    need(path, "path");
    spi::save_dictionary(*dict->dict, path);
  });
}

size_t spi_dictionary_count(const spi_dictionary* dict) { return dict ? dict->dict->count() : 0; }
size_t spi_dictionary_kernel_size(const spi_dictionary* dict) {
  return dict ? dict->dict->kernel_size : 0;
}
const char* spi_dictionary_id(const spi_dictionary* dict) { return dict ? dict->id.c_str() : ""; }

double spi_dictionary_kernel_norm(const spi_dictionary* dict, size_t k) {
  if (dict == nullptr || k >= dict->dict->count()) return std::nan("");
  double s = 0.0;
  for (double v : dict->dict->kernels[k].values) s += v * v;
  return std::sqrt(s);
}

size_t spi_dictionary_history_length(const spi_dictionary* dict) {
  return dict ? dict->dict->meta.objective_history.size() : 0;
}
const double* spi_dictionary_history(const spi_dictionary* dict) {
  return dict ? dict->dict->meta.objective_history.data() : nullptr;
}

void spi_dictionary_free(spi_dictionary* dict) { delete dict; }

// ---- measurements

spi_simulate_config spi_simulate_config_default(void) {
  return spi_simulate_config{0.25, 0, SPI_PATTERN_BERNOULLI01, 0, 0, 0.0, 1};
}

spi_status spi_simulate(const spi_image* scene, const spi_simulate_config* config, spi_measurement** out) {
  return guarded([&] {
    need(scene, "scene");
    need(config, "config");
    need(out, "out");
    const auto h = static_cast<std::uint32_t>(scene->image.height());
    const auto w = static_cast<std::uint32_t>(scene->image.width());
    const std::uint32_t count = config->pattern_count
                                    ? config->pattern_count
                                    : spi::pattern_count_for_ratio(config->compression_ratio, h, w);
    const spi::PatternSet ps = spi::gen_patterns(count, h, w, to_cpp(config->kind), config->seed);
    spi::Measurement m;
    if (config->has_snr) {
      spi::require(std::isfinite(config->snr_db), spi::ErrorCode::InvalidArgument, "SNR must be finite");
      m = spi::average_samplings(scene->image, ps, config->snr_db, config->samplings,
                                 spi::noise_seed(config->seed, config->snr_db));
    } else {
      spi::require(config->samplings >= 1, spi::ErrorCode::InvalidArgument, "samplings must be >= 1");
      m = spi::measure(scene->image, ps);
      m.noise.samplings = config->samplings;
    }
    *out = new spi_measurement{std::move(m)};
  });
}

spi_status spi_measurement_load(const char* path, spi_measurement** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new spi_measurement{spi::load_measurement(path)};
  });
}

spi_status spi_measurement_save(const spi_measurement* m, const char* path) {
  return guarded([&] {
    need(m, "measurement");
    need(path, "path");
    spi::save_measurement(m->m, path);
  });
}

size_t spi_measurement_count(const spi_measurement* m) { return m ? m->m.values.size() : 0; }
size_t spi_measurement_height(const spi_measurement* m) { return m ? m->m.pattern_ref.height : 0; }
size_t spi_measurement_width(const spi_measurement* m) { return m ? m->m.pattern_ref.width : 0; }
const double* spi_measurement_values(const spi_measurement* m) {
  return m ? m->m.values.data() : nullptr;
}
void spi_measurement_free(spi_measurement* m) { delete m; }

// ---- reconstruction

spi_solver_config spi_solver_config_default(void) {
  const spi::SolverConfig d;
  return spi_solver_config{SPI_ALG_TV,     d.lambda, 0, 0.0, d.mu_noiseless, d.mu_gain,
                           d.rho,          d.max_iterations, d.tolerance};
}

spi_status spi_reconstruct(const spi_measurement* m, const spi_solver_config* config,
                           const spi_dictionary* dict, spi_result** out) {
  return guarded([&] {
    need(m, "measurement");
    need(config, "config");
    need(out, "out");
    const spi::Algorithm algorithm = to_cpp(config->algorithm);
    const spi::PatternSet ps = spi::gen_patterns(m->m.pattern_ref);
    spi::ReconResult r;
    if (algorithm == spi::Algorithm::LS) {
      r = spi::reconstruct_ls(m->m, ps);
    } else {
      spi::SolverConfig cfg = to_cpp(*config);
      if (algorithm == spi::Algorithm::TV_CSC || algorithm == spi::Algorithm::DCT_CSC) {
        spi::require(dict != nullptr, spi::ErrorCode::InvalidArgument,
                     std::string(spi::to_string(algorithm)) + " needs a dictionary");
        cfg.dictionary = dict->dict;
      }
      spi::DataTerm data(ps, m->m.values);
      r = spi::reconstruct(algorithm, m->m, ps, data, cfg);
    }
    auto result = std::make_unique<spi_result>();
    result->json = result_json(r, algorithm, m->m);
    result->image.image = std::move(r.image);
    result->iterations = r.iterations;
    result->converged = r.converged;
    *out = result.release();
  });
}

const spi_image* spi_result_image(const spi_result* r) { return r ? &r->image : nullptr; }
int32_t spi_result_iterations(const spi_result* r) { return r ? r->iterations : 0; }
int spi_result_converged(const spi_result* r) { return r && r->converged ? 1 : 0; }
const char* spi_result_json(const spi_result* r) { return r ? r->json.c_str() : ""; }
void spi_result_free(spi_result* r) { delete r; }

// ---- sweeps

spi_status spi_sweep_from_json(const char* spec_json, spi_sweep** out) {
  return guarded([&] {
    need(spec_json, "spec_json");
    need(out, "out");
    auto sweep = std::make_unique<spi_sweep>();
    sweep->spec = spi::sweep_spec_from_json(spec_json);
    sweep->spec_json = spi::sweep_spec_to_json(sweep->spec);
    *out = sweep.release();
  });
}

spi_status spi_sweep_from_manifest(const char* manifest_path, spi_sweep** out) {
  return guarded([&] {
    need(manifest_path, "manifest_path");
    need(out, "out");
    auto sweep = std::make_unique<spi_sweep>();
    sweep->spec = spi::spec_from_manifest(spi::read_file_text(manifest_path));
    sweep->spec_json = spi::sweep_spec_to_json(sweep->spec);
    *out = sweep.release();
  });
}

const char* spi_sweep_spec_json(const spi_sweep* sweep) { return sweep ? sweep->spec_json.c_str() : ""; }

spi_status spi_sweep_run(spi_sweep* sweep, uint32_t jobs) {
  return guarded([&] {
    need(sweep, "sweep");
    sweep->records = spi::run_sweep(sweep->spec, jobs);
    sweep->ran = true;
  });
}

size_t spi_sweep_record_count(const spi_sweep* sweep) { return sweep ? sweep->records.size() : 0; }

size_t spi_sweep_failed_count(const spi_sweep* sweep) {
  if (sweep == nullptr) return 0;
  size_t n = 0;
  for (const auto& r : sweep->records) n += r.failed;
  return n;
}

spi_status spi_sweep_emit(const spi_sweep* sweep, const char* out_dir) {
  return guarded([&] {
    need(sweep, "sweep");
    need(out_dir, "out_dir");
    spi::require(sweep->ran, spi::ErrorCode::InvalidArgument, "sweep has not been run");
    spi::emit_report(sweep->records, out_dir, &sweep->spec);
  });
}

spi_status spi_sweep_replay_row(const spi_sweep* sweep, const char* records_csv_path, size_t row,
                                int* identical, char** replayed_line) {
  return guarded([&] {
    need(sweep, "sweep");
    need(records_csv_path, "records_csv_path");
    const auto rows = spi::records_from_csv(spi::read_file_text(records_csv_path));
    spi::require(row >= 1 && row <= rows.size(), spi::ErrorCode::InvalidArgument,
                 "row " + std::to_string(row) + " is outside 1.." + std::to_string(rows.size()));
    const spi::MetricsRecord& want = rows[row - 1];
    const spi::MetricsRecord got = spi::replay_record(sweep->spec, want);
    // Compare without the timing column, which is never reproducible.
    auto line = [](const spi::MetricsRecord& r) {
      const std::string csv = spi::records_to_csv({r}, false);
      return csv.substr(csv.find('\n') + 1);
    };
    const std::string got_line = line(got);
    if (identical) *identical = got_line == line(want) ? 1 : 0;
    if (replayed_line) *replayed_line = copy_string(got_line.substr(0, got_line.size() - 1));
  });
}

void spi_sweep_free(spi_sweep* sweep) { delete sweep; }

spi_status spi_records_load(const char* records_csv_path, spi_records** out) {
  return guarded([&] {
    need(records_csv_path, "records_csv_path");
    need(out, "out");
    *out = new spi_records{spi::records_from_csv(spi::read_file_text(records_csv_path))};
  });
}

size_t spi_records_count(const spi_records* records) { return records ? records->records.size() : 0; }

spi_status spi_records_emit_charts(const spi_records* records, const char* out_dir) {
  return guarded([&] {
    need(records, "records");
    need(out_dir, "out_dir");
    spi::emit_charts(records->records, out_dir);
  });
}

void spi_records_free(spi_records* records) { delete records; }

}  // extern "C"
