#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bench/sweep.hpp"
#include "core/metrics.hpp"
#include "solver/solver.hpp"

namespace spi {

// records.csv columns, in order.
inline constexpr const char* kRecordsHeader =
    "image_id,algorithm,cr,snr_db,rep,psnr_db,rmse,iterations,converged,wall_time_s,seed,dictionary_id";

// Doubles are written in shortest round-trip form, so parsing gives back the
// exact values. wall_time_s is left empty unless with_wall_time is set.
std::string records_to_csv(const std::vector<MetricsRecord>& records, bool with_wall_time);
std::vector<MetricsRecord> records_from_csv(const std::string& text);

// Difference (prior+CSC) - (prior) over pairs matched on image, CR, SNR,
// repetition and seed.
struct PromotionRow {
  Prior family = Prior::TV;
  double cr = 0.0;
  std::optional<double> snr_db;
  std::size_t pairs = 0;
  std::size_t skipped = 0;  // pairs with a failed member
  double mean_dpsnr = 0.0, min_dpsnr = 0.0, max_dpsnr = 0.0;
  double mean_drmse = 0.0, min_drmse = 0.0, max_drmse = 0.0;
};

// Throws listing every orphan: a CSC row without its prior row, or a prior
// row without a CSC partner when the family has CSC rows at all.
std::vector<PromotionRow> summarize_promotion(const std::vector<MetricsRecord>& records);
std::string promotion_to_csv(const std::vector<PromotionRow>& rows);

// Writes records.csv, timings.csv, promotion.csv (when pairs exist), the SVG
// charts and manifest.json. Returns the names of the files written.
std::vector<std::string> emit_report(const std::vector<MetricsRecord>& records,
                                     const std::filesystem::path& out_dir,
                                     const SweepSpec* spec = nullptr);

// Charts and promotion table from a records list alone (the `report` command).
std::vector<std::string> emit_charts(const std::vector<MetricsRecord>& records,
                                     const std::filesystem::path& out_dir);

// The sweep spec embedded in a manifest.
SweepSpec spec_from_manifest(const std::string& manifest_text);

}  // namespace spi
