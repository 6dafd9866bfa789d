// Command-line front end. Talks to the library only through spi/spi.h.
#include <spi/spi.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Failure {
  int code;
  std::string message;
};

[[noreturn]] void usage_error(const std::string& message) { throw Failure{kExitUsage, message}; }

void check(spi_status status, const std::string& what) {
  if (status != SPI_OK) {
    throw Failure{kExitFailure, what + ": " + spi_status_string(status) + ": " + spi_last_error()};
  }
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using ImagePtr = std::unique_ptr<spi_image, Deleter<spi_image, spi_image_free>>;
using DictPtr = std::unique_ptr<spi_dictionary, Deleter<spi_dictionary, spi_dictionary_free>>;
using MeasurementPtr = std::unique_ptr<spi_measurement, Deleter<spi_measurement, spi_measurement_free>>;
using ResultPtr = std::unique_ptr<spi_result, Deleter<spi_result, spi_result_free>>;
using SweepPtr = std::unique_ptr<spi_sweep, Deleter<spi_sweep, spi_sweep_free>>;
using RecordsPtr = std::unique_ptr<spi_records, Deleter<spi_records, spi_records_free>>;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kExitFailure, "cannot open " + path};
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Failure{kExitFailure, "cannot write " + path.string()};
}

// Deletes the file on scope exit unless released, so failed commands leave no
// partial outputs behind.
class OutputGuard {
 public:
  explicit OutputGuard(fs::path path) : path_(std::move(path)) {}
  ~OutputGuard() {
    if (armed_) {
      std::error_code ec;
      fs::remove(path_, ec);
    }
  }
  void release() { armed_ = false; }

 private:
  fs::path path_;
  bool armed_ = true;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

bool is_internal(const CLI::Option* o) {
  const auto& names = o->get_lnames();
  return names.empty() || names[0] == "help" || names[0] == "config" || names[0] == "print-config";
}

// key = value lines ('#' comments, optional quotes) fill options not given on
// the command line. Keys are option names with '_' or '-'.
void apply_config(CLI::App& cmd, const std::string& path) {
  std::istringstream in(read_text(path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos && line.find('"') > hash) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) usage_error(path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    std::replace(key.begin(), key.end(), '_', '-');
    CLI::Option* opt = cmd.get_option_no_throw("--" + key);
    if (opt == nullptr || is_internal(opt)) {
      usage_error(path + ":" + std::to_string(lineno) + ": unknown key '" + trim(line.substr(0, eq)) +
                  "' for " + cmd.get_name());
    }
    if (opt->count() > 0) continue;  // the command line wins
    opt->add_result(value);
    opt->run_callback();
  }
}

void apply_jobs_env(CLI::App& cmd) {
  CLI::Option* opt = cmd.get_option_no_throw("--jobs");
  const char* env = std::getenv("SPI_LAB_JOBS");
  if (opt == nullptr || opt->count() > 0 || env == nullptr || *env == '\0') return;
  opt->add_result(env);
  opt->run_callback();
}

void print_config(const CLI::App& cmd) {
  std::cout << "# effective configuration for '" << cmd.get_name() << "'\n";
  for (const CLI::Option* o : cmd.get_options()) {
    if (is_internal(o)) continue;
    std::string key = o->get_lnames()[0];
    std::replace(key.begin(), key.end(), '-', '_');
    std::string value;
    if (o->count() > 0) {
      for (const auto& r : o->results()) value += (value.empty() ? "" : ",") + r;
    } else {
      value = o->get_default_str();
    }
    if (o->get_expected_min() == 0) value = value.empty() || value == "false" ? "false" : "true";
    std::cout << key << " = \"" << value << "\"\n";
  }
}

std::optional<double> parse_snr(const std::string& text) {
  if (text == "noiseless" || text.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    usage_error("--snr expects decibels or 'noiseless', got '" + text + "'");
  }
}

struct Common {
  std::string config;
  bool print_config = false;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key = value file overlaid under the command line");
  cmd->add_flag("--print-config", c.print_config, "print the effective configuration and exit");
  cmd->add_option("--seed", c.seed, "random seed")->capture_default_str();
}

// ---------------------------------------------------------------- learn-dict

struct LearnArgs {
  Common common;
  std::string corpus, out;
  spi_learn_config cfg = spi_learn_config_default();
  unsigned jobs = 1;
};

int run_learn(const LearnArgs& a) {
  if (!fs::is_directory(a.corpus)) throw Failure{kExitFailure, "corpus directory not found: " + a.corpus};
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(a.corpus)) {
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (entry.is_regular_file() && (ext == ".pgm" || ext == ".png")) files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Failure{kExitFailure, "no .pgm or .png images in " + a.corpus};

  spi_learn_config cfg = a.cfg;
  cfg.seed = a.common.seed;
  cfg.jobs = a.jobs;
  std::vector<const char*> paths;
  for (const auto& f : files) paths.push_back(f.c_str());
  spi_dictionary* raw = nullptr;
  check(spi_dictionary_learn(paths.data(), paths.size(), &cfg, &raw), "learn-dict");
  DictPtr dict(raw);

  OutputGuard guard(a.out);
  check(spi_dictionary_save(dict.get(), a.out.c_str()), "learn-dict");
  guard.release();

  const std::size_t n = spi_dictionary_history_length(dict.get());
  const double* h = spi_dictionary_history(dict.get());
  double lo = INFINITY, hi = 0.0;
  for (std::size_t k = 0; k < spi_dictionary_count(dict.get()); ++k) {
    lo = std::min(lo, spi_dictionary_kernel_norm(dict.get(), k));
    hi = std::max(hi, spi_dictionary_kernel_norm(dict.get(), k));
  }
  std::printf("trained %zu kernels of %zux%zu on %zu images\n", spi_dictionary_count(dict.get()),
              spi_dictionary_kernel_size(dict.get()), spi_dictionary_kernel_size(dict.get()), files.size());
  std::printf("objective: initial %.6g, final %.6g\n", h[0], h[n - 1]);
  std::printf("kernel norms: min %.6f, max %.6f\n", lo, hi);
  std::printf("id %s -> %s\n", spi_dictionary_id(dict.get()), a.out.c_str());
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  Common common;
  std::string scene, out, kind = "bernoulli01", snr = "noiseless";
  double cr = 0.25;
  std::uint32_t patterns = 0;
  std::uint32_t samplings = 1;
};

int run_simulate(const SimulateArgs& a) {
  spi_image* raw_scene = nullptr;
  check(spi_image_load(a.scene.c_str(), &raw_scene), "simulate");
  ImagePtr scene(raw_scene);
  spi_simulate_config cfg = spi_simulate_config_default();
  cfg.compression_ratio = a.cr;
  cfg.pattern_count = a.patterns;
  check(spi_pattern_kind_parse(a.kind.c_str(), &cfg.kind), "simulate");
  cfg.seed = a.common.seed;
  const auto snr = parse_snr(a.snr);
  cfg.has_snr = snr.has_value();
  cfg.snr_db = snr.value_or(0.0);
  cfg.samplings = a.samplings;
  spi_measurement* raw = nullptr;
  check(spi_simulate(scene.get(), &cfg, &raw), "simulate");
  MeasurementPtr m(raw);

  OutputGuard guard(a.out);
  check(spi_measurement_save(m.get(), a.out.c_str()), "simulate");
  guard.release();
  std::printf("%zu patterns on %zux%zu (%s, %s) -> %s\n", spi_measurement_count(m.get()),
              spi_measurement_height(m.get()), spi_measurement_width(m.get()), a.kind.c_str(),
              snr ? (a.snr + " dB").c_str() : "noiseless", a.out.c_str());
  return 0;
}

// ---------------------------------------------------------------- reconstruct

struct ReconstructArgs {
  Common common;
  std::string measurement, algorithm = "tv", dict, out, sidecar, truth;
  spi_solver_config cfg = spi_solver_config_default();
  std::string mu = "auto";
};

fs::path sidecar_path(const ReconstructArgs& a) {
  if (!a.sidecar.empty()) return a.sidecar;
  fs::path p = a.out;
  return p.replace_extension(".json");
}

int run_reconstruct(const ReconstructArgs& a) {
  spi_solver_config cfg = a.cfg;
  check(spi_algorithm_parse(a.algorithm.c_str(), &cfg.algorithm), "reconstruct");
  const bool csc = cfg.algorithm == SPI_ALG_TV_CSC || cfg.algorithm == SPI_ALG_DCT_CSC;
  if (csc && a.dict.empty()) usage_error("--algorithm " + a.algorithm + " needs --dict");
  if (a.mu != "auto") {
    try {
      cfg.mu = std::stod(a.mu);
    } catch (const std::exception&) {
      usage_error("--mu expects a number or 'auto'");
    }
    cfg.has_mu = 1;
  }

  const fs::path side = sidecar_path(a);
  auto write_failure = [&](const std::string& message) {
    std::string escaped;
    for (char c : message) {
      if (c == '"' || c == '\\') escaped += '\\';
      escaped += c == '\n' ? ' ' : c;
    }
    std::ofstream s(side, std::ios::trunc);
    s << "{\n  \"algorithm\": \"" << spi_algorithm_name(cfg.algorithm) << "\",\n  \"error\": \"" << escaped
      << "\"\n}\n";
  };

  try {
    spi_measurement* raw_m = nullptr;
    check(spi_measurement_load(a.measurement.c_str(), &raw_m), "reconstruct");
    MeasurementPtr m(raw_m);
    DictPtr dict;
    if (csc) {
      spi_dictionary* raw_d = nullptr;
      check(spi_dictionary_load(a.dict.c_str(), &raw_d), "reconstruct");
      dict.reset(raw_d);
    }
    spi_result* raw_r = nullptr;
    check(spi_reconstruct(m.get(), &cfg, dict.get(), &raw_r), "reconstruct");
    ResultPtr r(raw_r);

    OutputGuard guard(a.out);
    check(spi_image_save(spi_result_image(r.get()), a.out.c_str()), "reconstruct");
    write_text(side, spi_result_json(r.get()));
    guard.release();

    std::printf("%s: %d iterations, %s -> %s\n", spi_algorithm_name(cfg.algorithm),
                spi_result_iterations(r.get()), spi_result_converged(r.get()) ? "converged" : "budget exhausted",
                a.out.c_str());
    if (!a.truth.empty()) {
      spi_image* raw_t = nullptr;
      check(spi_image_load(a.truth.c_str(), &raw_t), "reconstruct");
      ImagePtr truth(raw_t);
      spi_image* raw_q = nullptr;
      check(spi_image_load(a.out.c_str(), &raw_q), "reconstruct");
      ImagePtr saved(raw_q);
      double psnr = 0, rmse = 0;
      check(spi_image_compare(truth.get(), saved.get(), &psnr, &rmse), "reconstruct");
      std::printf("psnr %.4f dB, rmse %.6f\n", psnr, rmse);
    }
  } catch (const Failure& f) {
    write_failure(f.message);
    throw;
  }
  return 0;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
  Common common;
  std::string spec, manifest, out;
  unsigned jobs = 1;
  bool strict = false;
  CLI::Option* seed_opt = nullptr;
};

int run_sweep(const SweepArgs& a) {
  if (a.spec.empty() == a.manifest.empty()) usage_error("give exactly one of --spec or --manifest");
  spi_sweep* raw = nullptr;
  if (!a.spec.empty()) {
    std::string text = read_text(a.spec);
    if (a.seed_opt->count() > 0) {
      // Re-serialize with the overridden base seed.
      check(spi_sweep_from_json(text.c_str(), &raw), "sweep");
      SweepPtr tmp(raw);
      text = spi_sweep_spec_json(tmp.get());
      const std::string key = "\"base_seed\": ";
      const auto at = text.find(key);
      const auto end = text.find_first_of(",\n", at);
      text.replace(at + key.size(), end - at - key.size(), std::to_string(a.common.seed));
    }
    check(spi_sweep_from_json(text.c_str(), &raw), "sweep");
  } else {
    if (a.seed_opt->count() > 0) usage_error("--seed cannot override a manifest replay");
    check(spi_sweep_from_manifest(a.manifest.c_str(), &raw), "sweep");
  }
  SweepPtr sweep(raw);
  check(spi_sweep_run(sweep.get(), a.jobs), "sweep");
  check(spi_sweep_emit(sweep.get(), a.out.c_str()), "sweep");
  const std::size_t total = spi_sweep_record_count(sweep.get());
  const std::size_t failed = spi_sweep_failed_count(sweep.get());
  std::printf("%zu records (%zu failed) -> %s\n", total, failed, a.out.c_str());
  if (failed > 0) {
    std::fprintf(stderr, "%zu cell(s) failed; see %s\n", failed, (fs::path(a.out) / "manifest.json").c_str());
    if (a.strict) return kExitFailure;
  }
  return failed < total ? 0 : kExitFailure;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  Common common;
  std::string records, out, manifest;
  std::size_t row = 0;
};

int run_report(const ReportArgs& a) {
  if (a.row > 0) {
    if (a.manifest.empty()) usage_error("--row needs --manifest");
    spi_sweep* raw = nullptr;
    check(spi_sweep_from_manifest(a.manifest.c_str(), &raw), "report");
    SweepPtr sweep(raw);
    int identical = 0;
    char* line = nullptr;
    check(spi_sweep_replay_row(sweep.get(), a.records.c_str(), a.row, &identical, &line), "report");
    std::printf("%s\n%s\n", line, identical ? "row reproduced exactly" : "row differs");
    spi_string_free(line);
    return identical ? 0 : kExitFailure;
  }
  if (a.out.empty()) usage_error("report needs --out (or --manifest with --row)");
  spi_records* raw = nullptr;
  check(spi_records_load(a.records.c_str(), &raw), "report");
  RecordsPtr records(raw);
  check(spi_records_emit_charts(records.get(), a.out.c_str()), "report");
  std::printf("%zu records -> %s\n", spi_records_count(records.get()), a.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-pixel imaging with convolutional sparse coding priors"};
  app.require_subcommand(1);
  app.set_version_flag("--version", spi_version());

  LearnArgs learn;
  CLI::App* learn_cmd = app.add_subcommand("learn-dict", "train a convolutional dictionary");
  learn_cmd->add_option("--corpus", learn.corpus, "directory of training images")->required();
  learn_cmd->add_option("--kernels", learn.cfg.kernels, "number of kernels K")->capture_default_str();
  learn_cmd->add_option("--size", learn.cfg.kernel_size, "kernel side m")->capture_default_str();
  learn_cmd->add_option("--beta", learn.cfg.beta, "l1 weight on the feature maps")->capture_default_str();
  learn_cmd->add_option("--iters", learn.cfg.outer_iterations, "outer iterations")->capture_default_str();
  learn_cmd->add_option("--rho", learn.cfg.admm_rho, "ADMM penalty")->capture_default_str();
  learn_cmd->add_option("--inner-iters", learn.cfg.inner_iterations, "ADMM cap per step")->capture_default_str();
  learn_cmd->add_option("--inner-tol", learn.cfg.inner_tolerance, "ADMM relative tolerance")->capture_default_str();
  learn_cmd->add_option("--jobs", learn.jobs, "worker threads (env SPI_LAB_JOBS)")->capture_default_str();
  learn_cmd->add_option("--out", learn.out, "output .cscd path")->required();
  add_common(learn_cmd, learn.common);

  SimulateArgs sim;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "generate patterns and bucket measurements");
  sim_cmd->add_option("--scene", sim.scene, "scene image")->required();
  sim_cmd->add_option("--cr", sim.cr, "compression ratio, patterns / pixels")->capture_default_str();
  sim_cmd->add_option("--patterns", sim.patterns, "pattern count (overrides --cr when > 0)")->capture_default_str();
  sim_cmd->add_option("--pattern-kind", sim.kind, "bernoulli01, rademacher, gaussian or identity")
      ->capture_default_str();
  sim_cmd->add_option("--snr", sim.snr, "SNR in dB, or 'noiseless'")->capture_default_str();
  sim_cmd->add_option("--samplings", sim.samplings, "noisy readings averaged per pattern")->capture_default_str();
  sim_cmd->add_option("--out", sim.out, "output .spim path")->required();
  add_common(sim_cmd, sim.common);

  ReconstructArgs rec;
  CLI::App* rec_cmd = app.add_subcommand("reconstruct", "reconstruct a scene from a measurement");
  rec_cmd->add_option("--measurement", rec.measurement, "input .spim")->required();
  rec_cmd->add_option("--algorithm", rec.algorithm, "ls, tv, dct, tv-csc or dct-csc")->capture_default_str();
  rec_cmd->add_option("--dict", rec.dict, "dictionary for the CSC algorithms");
  rec_cmd->add_option("--lambda", rec.cfg.lambda, "l1 weight on the feature maps")->capture_default_str();
  rec_cmd->add_option("--mu", rec.mu, "data weight, or 'auto'")->capture_default_str();
  rec_cmd->add_option("--mu-noiseless", rec.cfg.mu_noiseless, "auto data weight without noise")
      ->capture_default_str();
  rec_cmd->add_option("--mu-gain", rec.cfg.mu_gain, "auto data weight times the noise variance")
      ->capture_default_str();
  rec_cmd->add_option("--rho", rec.cfg.rho, "ADMM penalty")->capture_default_str();
  rec_cmd->add_option("--max-iterations", rec.cfg.max_iterations, "ADMM iteration cap")->capture_default_str();
  rec_cmd->add_option("--tolerance", rec.cfg.tolerance, "relative stopping tolerance")->capture_default_str();
  rec_cmd->add_option("--truth", rec.truth, "reference image; prints PSNR and RMSE");
  rec_cmd->add_option("--sidecar", rec.sidecar, "JSON report path (default: --out with .json)");
  rec_cmd->add_option("--out", rec.out, "output image (.png or .pgm)")->required();
  add_common(rec_cmd, rec.common);

  SweepArgs sw;
  CLI::App* sw_cmd = app.add_subcommand("sweep", "run a benchmark sweep and write its report");
  sw_cmd->add_option("--spec", sw.spec, "sweep spec (JSON)");
  sw_cmd->add_option("--manifest", sw.manifest, "replay the sweep recorded in a manifest");
  sw_cmd->add_option("--jobs", sw.jobs, "worker threads (env SPI_LAB_JOBS)")->capture_default_str();
  sw_cmd->add_flag("--strict", sw.strict, "exit nonzero if any cell fails");
  sw_cmd->add_option("--out", sw.out, "output directory")->required();
  add_common(sw_cmd, sw.common);
  sw.seed_opt = sw_cmd->get_option("--seed");
  sw.seed_opt->description("base seed (default: the spec's base_seed)")->default_str("spec");

  ReportArgs rep;
  CLI::App* rep_cmd = app.add_subcommand("report", "charts from records.csv, or replay one row");
  rep_cmd->add_option("--records", rep.records, "records.csv")->required();
  rep_cmd->add_option("--out", rep.out, "output directory for charts");
  rep_cmd->add_option("--manifest", rep.manifest, "manifest.json of the sweep");
  rep_cmd->add_option("--row", rep.row, "data row to replay (1-based)");
  add_common(rep_cmd, rep.common);

  const std::vector<std::pair<CLI::App*, Common*>> commands{
      {learn_cmd, &learn.common}, {sim_cmd, &sim.common}, {rec_cmd, &rec.common},
      {sw_cmd, &sw.common},       {rep_cmd, &rep.common}};

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    for (auto [cmd, common] : commands) {
      if (!cmd->parsed()) continue;
      if (!common->config.empty()) apply_config(*cmd, common->config);
      apply_jobs_env(*cmd);
      if (common->print_config) {
        print_config(*cmd);
        return 0;
      }
      if (cmd == learn_cmd) return run_learn(learn);
      if (cmd == sim_cmd) return run_simulate(sim);
      if (cmd == rec_cmd) return run_reconstruct(rec);
      if (cmd == sw_cmd) return run_sweep(sw);
      if (cmd == rep_cmd) return run_report(rep);
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "spi: %s\n", f.message.c_str());
    return f.code;
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "spi: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
