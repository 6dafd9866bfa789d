#include "bench/report.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "bench/svg.hpp"
#include "core/error.hpp"
#include "core/file_util.hpp"
#include "forward/rng.hpp"
#include "json.hpp"

namespace spi {
namespace {

using Json = nlohmann::ordered_json;

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// RFC 4180 records; a trailing newline does not start a new record.
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
      continue;
    }
    any = true;
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      field += c;
    }
  }
  require(!quoted, ErrorCode::Format, "csv: unterminated quoted field");
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

double parse_double(const std::string& s, const char* column) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  require(!s.empty() && end == s.c_str() + s.size(), ErrorCode::Format,
          fmt::format("csv: bad {} value '{}'", column, s));
  return v;
}

template <class Int>
Int parse_int(const std::string& s, const char* column) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && ptr == s.data() + s.size(), ErrorCode::Format,
          fmt::format("csv: bad {} value '{}'", column, s));
  return v;
}

bool is_csc(Algorithm a) { return a == Algorithm::TV_CSC || a == Algorithm::DCT_CSC; }

std::optional<Prior> family_of(Algorithm a) {
  switch (a) {
    case Algorithm::TV:
    case Algorithm::TV_CSC: return Prior::TV;
    case Algorithm::DCT:
    case Algorithm::DCT_CSC: return Prior::DCT;
    case Algorithm::LS: return std::nullopt;
  }
  return std::nullopt;
}

// Noiseless sorts last, as the cleanest setting.
double snr_key(std::optional<double> s) { return s ? *s : std::numeric_limits<double>::infinity(); }

using PairKey = std::tuple<std::string, double, double, int, std::uint64_t>;

PairKey pair_key(const MetricsRecord& r) {
  return {r.image_id, r.compression_ratio, snr_key(r.snr_db), r.repetition, r.seed};
}

std::string describe(const MetricsRecord& r) {
  return fmt::format("{} {} cr={} snr={} rep={}", r.image_id, to_string(r.algorithm),
                     r.compression_ratio, snr_label(r.snr_db), r.repetition);
}

struct Stats {
  double sum = 0.0, min = std::numeric_limits<double>::infinity(), max = -min;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    min = std::min(min, v);
    max = std::max(max, v);
    ++n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : std::nan(""); }
};

template <class T>
std::vector<T> distinct_sorted(const std::vector<MetricsRecord>& records, T (*get)(const MetricsRecord&)) {
  std::set<T> s;
  for (const auto& r : records) s.insert(get(r));
  return {s.begin(), s.end()};
}

double get_cr(const MetricsRecord& r) { return r.compression_ratio; }
double get_snr(const MetricsRecord& r) { return snr_key(r.snr_db); }
std::string get_image(const MetricsRecord& r) { return r.image_id; }

std::vector<Algorithm> algorithms_in_order(const std::vector<MetricsRecord>& records) {
  std::vector<Algorithm> out;
  for (const auto& r : records)
    if (std::find(out.begin(), out.end(), r.algorithm) == out.end()) out.push_back(r.algorithm);
  return out;
}

std::string snr_file_label(double key) {
  return std::isinf(key) ? "noiseless" : fmt::format("{}dB", key);
}

std::string snr_title(double key) {
  return std::isinf(key) ? "noiseless" : fmt::format("{} dB", key);
}

// Mean of a metric over the selected successful records, one series per
// algorithm, as a function of `x`.
LineChart metric_chart(const std::vector<MetricsRecord>& records, std::string title,
                       std::string x_label, std::string y_label,
                       double (*x)(const MetricsRecord&), double (*y)(const MetricsRecord&)) {
  LineChart chart{std::move(title), std::move(x_label), std::move(y_label), {}};
  for (Algorithm a : algorithms_in_order(records)) {
    std::map<double, Stats> by_x;
    for (const auto& r : records)
      if (r.algorithm == a && !r.failed && std::isfinite(x(r))) by_x[x(r)].add(y(r));
    ChartSeries s{std::string(to_string(a)), {}, {}};
    for (const auto& [xv, st] : by_x) s.points.emplace_back(xv, st.mean());
    chart.series.push_back(std::move(s));
  }
  return chart;
}

double get_psnr(const MetricsRecord& r) { return r.psnr_db; }
double get_rmse(const MetricsRecord& r) { return r.rmse; }

void write_chart(const std::filesystem::path& dir, const std::string& name, const LineChart& chart,
                 std::vector<std::string>& written) {
  write_file_text(dir / name, render_svg(chart));
  written.push_back(name);
}

}  // namespace

std::string records_to_csv(const std::vector<MetricsRecord>& records, bool with_wall_time) {
  std::string out = std::string(kRecordsHeader) + "\n";
  for (const auto& r : records) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(r.image_id),
                       to_string(r.algorithm), r.compression_ratio, snr_label(r.snr_db),
                       r.repetition, r.psnr_db, r.rmse, r.iterations,
                       r.converged ? "true" : "false",
                       with_wall_time ? fmt::format("{}", r.wall_time_s) : std::string(), r.seed,
                       csv_field(r.dictionary_id));
  }
  return out;
}

std::vector<MetricsRecord> records_from_csv(const std::string& text) {
  const auto rows = parse_csv(text);
  require(!rows.empty(), ErrorCode::Format, "csv: missing header");
  std::string header;
  for (std::size_t i = 0; i < rows[0].size(); ++i) header += (i ? "," : "") + rows[0][i];
  require(header == kRecordsHeader, ErrorCode::Format, "csv: unexpected header '" + header + "'");
  std::vector<MetricsRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    require(f.size() == 12, ErrorCode::Format, fmt::format("csv: row {} has {} fields", i, f.size()));
    MetricsRecord r;
    r.image_id = f[0];
    r.algorithm = parse_algorithm(f[1]);
    r.compression_ratio = parse_double(f[2], "cr");
    if (f[3] != "noiseless") r.snr_db = parse_double(f[3], "snr_db");
    r.repetition = parse_int<int>(f[4], "rep");
    r.psnr_db = parse_double(f[5], "psnr_db");
    r.rmse = parse_double(f[6], "rmse");
    r.iterations = parse_int<int>(f[7], "iterations");
    require(f[8] == "true" || f[8] == "false", ErrorCode::Format, "csv: bad converged value");
    r.converged = f[8] == "true";
    if (!f[9].empty()) r.wall_time_s = parse_double(f[9], "wall_time_s");
    r.seed = parse_int<std::uint64_t>(f[10], "seed");
    r.dictionary_id = f[11];
    r.failed = std::isnan(r.rmse);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<PromotionRow> summarize_promotion(const std::vector<MetricsRecord>& records) {
  std::map<Prior, std::map<PairKey, const MetricsRecord*>> base, csc;
  for (const auto& r : records) {
    const auto fam = family_of(r.algorithm);
    if (!fam) continue;
    auto& side = is_csc(r.algorithm) ? csc[*fam] : base[*fam];
    require(side.emplace(pair_key(r), &r).second, ErrorCode::InvalidArgument,
            "promotion: duplicate record " + describe(r));
  }

  std::vector<std::string> orphans;
  for (const auto& [fam, rows] : csc)
    for (const auto& [key, r] : rows)
      if (!base[fam].count(key)) orphans.push_back(describe(*r));
  for (const auto& [fam, rows] : base) {
    if (!csc.count(fam)) continue;
    for (const auto& [key, r] : rows)
      if (!csc[fam].count(key)) orphans.push_back(describe(*r));
  }
  if (!orphans.empty()) {
    std::string msg = "promotion: unmatched records:";
    for (const auto& o : orphans) msg += "\n  " + o;
    fail(ErrorCode::InvalidArgument, msg);
  }

  std::vector<PromotionRow> out;
  for (const auto& [fam, rows] : csc) {
    std::map<std::pair<double, double>, std::pair<Stats, Stats>> groups;
    std::map<std::pair<double, double>, std::size_t> skipped;
    for (const auto& [key, c] : rows) {
      const MetricsRecord* b = base[fam].at(key);
      const std::pair<double, double> g{c->compression_ratio, snr_key(c->snr_db)};
      if (c->failed || b->failed) {
        ++skipped[g];
        groups[g];
        continue;
      }
      groups[g].first.add(c->psnr_db - b->psnr_db);
      groups[g].second.add(c->rmse - b->rmse);
    }
    for (const auto& [g, st] : groups) {
      PromotionRow row;
      row.family = fam;
      row.cr = g.first;
      if (std::isfinite(g.second)) row.snr_db = g.second;
      row.pairs = st.first.n;
      row.skipped = skipped[g];
      row.mean_dpsnr = st.first.mean();
      row.min_dpsnr = st.first.n ? st.first.min : std::nan("");
      row.max_dpsnr = st.first.n ? st.first.max : std::nan("");
      row.mean_drmse = st.second.mean();
      row.min_drmse = st.second.n ? st.second.min : std::nan("");
      row.max_drmse = st.second.n ? st.second.max : std::nan("");
      out.push_back(row);
    }
  }
  return out;
}

std::string promotion_to_csv(const std::vector<PromotionRow>& rows) {
  std::string out =
      "family,cr,snr_db,pairs,skipped,mean_dpsnr,min_dpsnr,max_dpsnr,mean_drmse,min_drmse,max_drmse\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", to_string(r.family), r.cr,
                       snr_label(r.snr_db), r.pairs, r.skipped, r.mean_dpsnr, r.min_dpsnr,
                       r.max_dpsnr, r.mean_drmse, r.min_drmse, r.max_drmse);
  }
  return out;
}

std::vector<std::string> emit_charts(const std::vector<MetricsRecord>& records,
                                     const std::filesystem::path& out_dir) {
  require(!records.empty(), ErrorCode::InvalidArgument, "report: no records");
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;

  const auto crs = distinct_sorted(records, get_cr);
  const auto snrs = distinct_sorted(records, get_snr);

  if (crs.size() > 1) {
    for (double snr : snrs) {
      std::vector<MetricsRecord> level;
      for (const auto& r : records)
        if (get_snr(r) == snr) level.push_back(r);
      const std::string tag = snr_file_label(snr);
      write_chart(out_dir, "psnr_vs_cr_" + tag + ".svg",
                  metric_chart(level, "Mean PSNR vs compression ratio, " + snr_title(snr),
                               "compression ratio", "PSNR (dB)", get_cr, get_psnr),
                  written);
      write_chart(out_dir, "rmse_vs_cr_" + tag + ".svg",
                  metric_chart(level, "Mean RMSE vs compression ratio, " + snr_title(snr),
                               "compression ratio", "RMSE", get_cr, get_rmse),
                  written);
      for (const auto& id : distinct_sorted(level, get_image)) {
        std::vector<MetricsRecord> one;
        for (const auto& r : level)
          if (r.image_id == id) one.push_back(r);
        write_chart(out_dir, "psnr_vs_cr_" + id + "_" + tag + ".svg",
                    metric_chart(one, id + ": PSNR vs compression ratio, " + snr_title(snr),
                                 "compression ratio", "PSNR (dB)", get_cr, get_psnr),
                    written);
      }
    }
  }

  std::size_t finite_snrs = 0;
  for (double s : snrs) finite_snrs += std::isfinite(s);
  if (finite_snrs > 1) {
    for (double cr : crs) {
      std::vector<MetricsRecord> level;
      for (const auto& r : records)
        if (r.compression_ratio == cr && r.snr_db) level.push_back(r);
      write_chart(out_dir, fmt::format("rmse_vs_snr_cr{}.svg", cr),
                  metric_chart(level, fmt::format("Mean RMSE vs SNR, CR {}", cr), "SNR (dB)",
                               "RMSE", get_snr, get_rmse),
                  written);
    }
  }

  const auto promotion = summarize_promotion(records);
  if (!promotion.empty()) {
    write_file_text(out_dir / "promotion.csv", promotion_to_csv(promotion));
    written.push_back("promotion.csv");
    for (Prior fam : {Prior::TV, Prior::DCT}) {
      LineChart chart{fmt::format("CSC promotion over {} (mean, min-max band)", to_string(fam)),
                      "compression ratio", "PSNR gain (dB)", {}};
      for (double snr : snrs) {
        ChartSeries s{snr_title(snr), {}, {}};
        for (const auto& row : promotion) {
          if (row.family != fam || snr_key(row.snr_db) != snr) continue;
          s.points.emplace_back(row.cr, row.mean_dpsnr);
          s.band.emplace_back(row.min_dpsnr, row.max_dpsnr);
        }
        if (!s.points.empty()) chart.series.push_back(std::move(s));
      }
      if (chart.series.empty()) continue;
      write_chart(out_dir, fmt::format("promotion_{}.svg", to_string(fam)), chart, written);
    }
  }
  return written;
}

std::vector<std::string> emit_report(const std::vector<MetricsRecord>& records,
                                     const std::filesystem::path& out_dir, const SweepSpec* spec) {
  require(!records.empty(), ErrorCode::InvalidArgument, "report: no records");
  std::filesystem::create_directories(out_dir);
  // Charts first: an unmatched-pair error then leaves no CSV behind.
  std::vector<std::string> written = emit_charts(records, out_dir);

  const bool with_time = spec && spec->record_wall_time;
  write_file_text(out_dir / "records.csv", records_to_csv(records, with_time));
  written.insert(written.begin(), "records.csv");

  std::string timings = "image_id,algorithm,cr,snr_db,rep,wall_time_s\n";
  for (const auto& r : records)
    timings += fmt::format("{},{},{},{},{},{}\n", csv_field(r.image_id), to_string(r.algorithm),
                           r.compression_ratio, snr_label(r.snr_db), r.repetition, r.wall_time_s);
  write_file_text(out_dir / "timings.csv", timings);
  written.push_back("timings.csv");

  Json manifest;
  manifest["format"] = "spi-sweep-manifest";
  manifest["version"] = 1;
  manifest["rng"] = std::string(kRngName);
  if (spec) manifest["spec"] = Json::parse(sweep_spec_to_json(*spec));
  manifest["record_count"] = records.size();
  Json rows = Json::array();
  Json failures = Json::array();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const MetricsRecord& r = records[i];
    rows.push_back(Json{{"row", i + 1},
                        {"image_id", r.image_id},
                        {"algorithm", std::string(to_string(r.algorithm))},
                        {"cr", r.compression_ratio},
                        {"snr_db", snr_label(r.snr_db)},
                        {"rep", r.repetition},
                        {"pattern_seed", r.seed},
                        {"noise_seed", r.snr_db ? Json(noise_seed(r.seed, r.snr_db)) : Json(nullptr)},
                        {"dictionary_id", r.dictionary_id}});
    if (r.failed) failures.push_back(Json{{"row", i + 1}, {"record", describe(r)}, {"error", r.error}});
  }
  manifest["rows"] = std::move(rows);
  manifest["failures"] = std::move(failures);
  written.push_back("manifest.json");
  manifest["files"] = written;
  write_file_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return written;
}

SweepSpec spec_from_manifest(const std::string& manifest_text) {
  Json j;
  try {
    j = Json::parse(manifest_text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, std::string("manifest: ") + e.what());
  }
  require(j.is_object() && j.value("format", "") == "spi-sweep-manifest", ErrorCode::Format,
          "not a sweep manifest");
  require(j.contains("spec"), ErrorCode::Format, "manifest carries no sweep spec");
  return sweep_spec_from_json(j["spec"].dump());
}

}  // namespace spi
