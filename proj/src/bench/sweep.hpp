#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "core/metrics.hpp"
#include "forward/patterns.hpp"
#include "solver/solver.hpp"

namespace spi {

struct SweepSpec {
  std::vector<std::filesystem::path> image_paths;
  std::vector<double> compression_ratios{0.1, 0.25, 0.5, 1.0};
  std::vector<std::optional<double>> snr_list{std::nullopt};  // nullopt = noiseless
  std::vector<Algorithm> algorithms{Algorithm::TV, Algorithm::TV_CSC};
  std::optional<std::filesystem::path> dictionary_path;
  PatternKind pattern_kind = PatternKind::Bernoulli01;
  std::uint64_t base_seed = 0;
  int repetitions = 3;
  std::uint32_t samplings = 1;
  SolverConfig solver;  // dictionary is filled in from dictionary_path
  // Wall time is the only nondeterministic column; it is left empty in
  // records.csv unless asked for and always goes to timings.csv.
  bool record_wall_time = false;
  // Reconstructions are written here as 16-bit PNG when set.
  std::optional<std::filesystem::path> save_dir;
};

void validate(const SweepSpec& spec);

// File stem; must be unique within a spec.
std::string image_id(const std::filesystem::path& path);

// Pattern seed for one cell. The algorithm is excluded so every algorithm
// sees the same patterns, and the SNR only enters the noise seed so a noise
// sweep perturbs one fixed measurement.
std::uint64_t cell_seed(std::uint64_t base_seed, const std::string& image_id, double cr, int rep);
std::uint64_t noise_seed(std::uint64_t cell_seed, std::optional<double> snr_db);

std::string snr_label(std::optional<double> snr_db);
std::string reconstruction_name(const MetricsRecord& r);

// One row per (image, cr, snr, algorithm, rep) in that nesting order.
// Solver failures become rows with failed = true and NaN metrics.
std::vector<MetricsRecord> run_sweep(const SweepSpec& spec, unsigned jobs = 1);
std::vector<MetricsRecord> run_cr_sweep(const SweepSpec& spec, unsigned jobs = 1);
// Requires exactly one compression ratio.
std::vector<MetricsRecord> run_noise_sweep(const SweepSpec& spec, unsigned jobs = 1);

// Recomputes a single row of a sweep in isolation.
MetricsRecord replay_record(const SweepSpec& spec, const MetricsRecord& row);

// JSON form used by sweep spec files and manifests. Unknown keys are rejected.
std::string sweep_spec_to_json(const SweepSpec& spec);
SweepSpec sweep_spec_from_json(const std::string& text);

}  // namespace spi
