/* C interface to the single-pixel imaging library.
 *
 * Objects are opaque handles released with the matching *_free function.
 * Every fallible call returns an spi_status; on failure spi_last_error()
 * describes the problem for the calling thread. Strings returned as
 * `const char*` are owned by the handle they came from; strings returned
 * through `char**` are owned by the caller and released with spi_string_free.
 */
#ifndef SPI_SPI_H
#define SPI_SPI_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define SPI_API __declspec(dllexport)
#else
#  define SPI_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum spi_status {
  SPI_OK = 0,
  SPI_ERR_INVALID_ARGUMENT = 1,
  SPI_ERR_IO = 2,
  SPI_ERR_FORMAT = 3,
  SPI_ERR_DIMENSION = 4,
  SPI_ERR_NUMERIC = 5,
  SPI_ERR_INTERNAL = 6
} spi_status;

typedef enum spi_algorithm {
  SPI_ALG_LS = 0,
  SPI_ALG_TV = 1,
  SPI_ALG_DCT = 2,
  SPI_ALG_TV_CSC = 3,
  SPI_ALG_DCT_CSC = 4
} spi_algorithm;

typedef enum spi_pattern_kind {
  SPI_PATTERN_BERNOULLI01 = 0,
  SPI_PATTERN_RADEMACHER = 1,
  SPI_PATTERN_GAUSSIAN = 2,
  SPI_PATTERN_IDENTITY = 3
} spi_pattern_kind;

typedef struct spi_image spi_image;
typedef struct spi_dictionary spi_dictionary;
typedef struct spi_measurement spi_measurement;
typedef struct spi_result spi_result;
typedef struct spi_sweep spi_sweep;
typedef struct spi_records spi_records;

SPI_API const char* spi_version(void);
SPI_API const char* spi_status_string(spi_status status);
/* Message for the last failed call on this thread; "" if none. */
SPI_API const char* spi_last_error(void);
SPI_API void spi_string_free(char* s);

/* Name lookups accept the canonical names ("TV_CSC", "bernoulli01") and the
 * command-line spellings ("tv-csc"). */
SPI_API spi_status spi_algorithm_parse(const char* text, spi_algorithm* out);
SPI_API const char* spi_algorithm_name(spi_algorithm algorithm);
SPI_API spi_status spi_pattern_kind_parse(const char* text, spi_pattern_kind* out);
SPI_API const char* spi_pattern_kind_name(spi_pattern_kind kind);

/* ---- images: grayscale, values in [0,1] ---- */

SPI_API spi_status spi_image_load(const char* path, spi_image** out);
/* Values outside [0,1] are clamped; non-finite values are rejected. */
SPI_API spi_status spi_image_from_pixels(size_t height, size_t width, const double* pixels,
                                         spi_image** out);
/* 16-bit PGM, or PNG when the path ends in ".png". */
SPI_API spi_status spi_image_save(const spi_image* image, const char* path);
SPI_API size_t spi_image_height(const spi_image* image);
SPI_API size_t spi_image_width(const spi_image* image);
SPI_API const double* spi_image_pixels(const spi_image* image);
SPI_API spi_status spi_image_compare(const spi_image* reference, const spi_image* candidate,
                                     double* psnr_db, double* rmse);
SPI_API void spi_image_free(spi_image* image);

/* ---- dictionaries ---- */

typedef struct spi_learn_config {
  uint32_t kernels;
  uint32_t kernel_size;
  double beta;
  int32_t outer_iterations;
  double admm_rho;
  double inner_tolerance;
  int32_t inner_iterations;
  uint64_t seed;
  uint32_t jobs;
} spi_learn_config;

SPI_API spi_learn_config spi_learn_config_default(void);
/* Trains on every listed image; file stems are recorded as corpus ids. */
SPI_API spi_status spi_dictionary_learn(const char* const* paths, size_t count,
                                        const spi_learn_config* config, spi_dictionary** out);
SPI_API spi_status spi_dictionary_load(const char* path, spi_dictionary** out);
SPI_API spi_status spi_dictionary_save(const spi_dictionary* dict, const char* path);
SPI_API size_t spi_dictionary_count(const spi_dictionary* dict);
SPI_API size_t spi_dictionary_kernel_size(const spi_dictionary* dict);
SPI_API const char* spi_dictionary_id(const spi_dictionary* dict);
SPI_API double spi_dictionary_kernel_norm(const spi_dictionary* dict, size_t k);
/* Learning objective per outer iteration; entry 0 is the initial value. */
SPI_API size_t spi_dictionary_history_length(const spi_dictionary* dict);
SPI_API const double* spi_dictionary_history(const spi_dictionary* dict);
SPI_API void spi_dictionary_free(spi_dictionary* dict);

/* ---- measurements ---- */

typedef struct spi_simulate_config {
  double compression_ratio; /* used when pattern_count is 0 */
  uint32_t pattern_count;
  spi_pattern_kind kind;
  uint64_t seed;            /* pattern seed; the noise seed is derived from it */
  int has_snr;              /* 0 = noiseless */
  double snr_db;
  uint32_t samplings;       /* readings averaged per pattern */
} spi_simulate_config;

SPI_API spi_simulate_config spi_simulate_config_default(void);
SPI_API spi_status spi_simulate(const spi_image* scene, const spi_simulate_config* config,
                                spi_measurement** out);
SPI_API spi_status spi_measurement_load(const char* path, spi_measurement** out);
SPI_API spi_status spi_measurement_save(const spi_measurement* m, const char* path);
SPI_API size_t spi_measurement_count(const spi_measurement* m);
SPI_API size_t spi_measurement_height(const spi_measurement* m);
SPI_API size_t spi_measurement_width(const spi_measurement* m);
SPI_API const double* spi_measurement_values(const spi_measurement* m);
SPI_API void spi_measurement_free(spi_measurement* m);

/* ---- reconstruction ---- */

typedef struct spi_solver_config {
  spi_algorithm algorithm;
  double lambda;
  int has_mu;               /* 0 = pick the data weight from the noise level */
  double mu;
  double mu_noiseless;
  double mu_gain;
  double rho;
  int32_t max_iterations;
  double tolerance;
} spi_solver_config;

SPI_API spi_solver_config spi_solver_config_default(void);
/* `dict` is required for the CSC algorithms and ignored otherwise. */
SPI_API spi_status spi_reconstruct(const spi_measurement* m, const spi_solver_config* config,
                                   const spi_dictionary* dict, spi_result** out);
SPI_API const spi_image* spi_result_image(const spi_result* r);
SPI_API int32_t spi_result_iterations(const spi_result* r);
SPI_API int spi_result_converged(const spi_result* r);
/* Objective and residual histories plus the effective configuration. */
SPI_API const char* spi_result_json(const spi_result* r);
SPI_API void spi_result_free(spi_result* r);

/* ---- benchmark sweeps ---- */

SPI_API spi_status spi_sweep_from_json(const char* spec_json, spi_sweep** out);
SPI_API spi_status spi_sweep_from_manifest(const char* manifest_path, spi_sweep** out);
/* The effective spec with every default filled in. */
SPI_API const char* spi_sweep_spec_json(const spi_sweep* sweep);
SPI_API spi_status spi_sweep_run(spi_sweep* sweep, uint32_t jobs);
SPI_API size_t spi_sweep_record_count(const spi_sweep* sweep);
SPI_API size_t spi_sweep_failed_count(const spi_sweep* sweep);
/* records.csv, timings.csv, promotion.csv, SVG charts and manifest.json. */
SPI_API spi_status spi_sweep_emit(const spi_sweep* sweep, const char* out_dir);
/* Recomputes data row `row` (1-based) of a records.csv in isolation and
 * returns it as a CSV line; *identical is set when it matches the file. */
SPI_API spi_status spi_sweep_replay_row(const spi_sweep* sweep, const char* records_csv_path,
                                        size_t row, int* identical, char** replayed_line);
SPI_API void spi_sweep_free(spi_sweep* sweep);

SPI_API spi_status spi_records_load(const char* records_csv_path, spi_records** out);
SPI_API size_t spi_records_count(const spi_records* records);
/* Promotion table and charts from a records file (no manifest). */
SPI_API spi_status spi_records_emit_charts(const spi_records* records, const char* out_dir);
SPI_API void spi_records_free(spi_records* records);

#ifdef __cplusplus
}
#endif

#endif /* SPI_SPI_H */
