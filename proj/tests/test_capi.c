/* Exercises the C interface from C. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "spi/spi.h"

static int failures = 0;

#define CHECK(cond)                                                    \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: CHECK(%s) failed\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

static void test_names(void) {
  spi_algorithm a;
  CHECK(spi_algorithm_parse("tv-csc", &a) == SPI_OK && a == SPI_ALG_TV_CSC);
  CHECK(strcmp(spi_algorithm_name(SPI_ALG_DCT_CSC), "DCT_CSC") == 0);
  CHECK(spi_algorithm_parse("wavelet", &a) == SPI_ERR_INVALID_ARGUMENT);
  CHECK(strstr(spi_last_error(), "wavelet") != NULL);
  CHECK(spi_algorithm_parse(NULL, &a) == SPI_ERR_INVALID_ARGUMENT);

  spi_pattern_kind k;
  CHECK(spi_pattern_kind_parse("gaussian", &k) == SPI_OK && k == SPI_PATTERN_GAUSSIAN);
  CHECK(strcmp(spi_status_string(SPI_ERR_IO), "i/o error") == 0);
  CHECK(spi_version()[0] != '\0');
}

static void test_errors_reset(void) {
  spi_image* img = NULL;
  CHECK(spi_image_load("/nonexistent/scene.pgm", &img) == SPI_ERR_IO);
  CHECK(img == NULL);
  CHECK(strstr(spi_last_error(), "scene.pgm") != NULL);
  spi_algorithm a;
  CHECK(spi_algorithm_parse("TV", &a) == SPI_OK);
  CHECK(spi_last_error()[0] == '\0');
}

static spi_image* make_scene(size_t n) {
  double* px = malloc(n * n * sizeof(double));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) px[i * n + j] = (i < n / 2 ? 0.3 : 0.7) + ((i + j) % 4 == 0 ? 0.1 : 0.0);
  spi_image* img = NULL;
  CHECK(spi_image_from_pixels(n, n, px, &img) == SPI_OK);
  free(px);
  return img;
}

static void test_identity_pipeline(const char* tmp) {
  spi_image* scene = make_scene(8);
  spi_simulate_config sc = spi_simulate_config_default();
  sc.kind = SPI_PATTERN_IDENTITY;
  sc.compression_ratio = 1.0;
  spi_measurement* m = NULL;
  CHECK(spi_simulate(scene, &sc, &m) == SPI_OK);
  CHECK(spi_measurement_count(m) == 64);

  char path[512];
  snprintf(path, sizeof path, "%s/capi.spim", tmp);
  CHECK(spi_measurement_save(m, path) == SPI_OK);
  spi_measurement* back = NULL;
  CHECK(spi_measurement_load(path, &back) == SPI_OK);
  CHECK(memcmp(spi_measurement_values(m), spi_measurement_values(back), 64 * sizeof(double)) == 0);

  spi_solver_config cfg = spi_solver_config_default();
  cfg.algorithm = SPI_ALG_LS;
  spi_result* r = NULL;
  CHECK(spi_reconstruct(back, &cfg, NULL, &r) == SPI_OK);
  double psnr = 0, rmse = 1;
  CHECK(spi_image_compare(scene, spi_result_image(r), &psnr, &rmse) == SPI_OK);
  CHECK(rmse < 1e-12);
  CHECK(spi_result_converged(r) == 1);
  CHECK(strstr(spi_result_json(r), "\"algorithm\": \"LS\"") != NULL);

  cfg.algorithm = SPI_ALG_TV_CSC;
  spi_result* none = NULL;
  CHECK(spi_reconstruct(back, &cfg, NULL, &none) == SPI_ERR_INVALID_ARGUMENT);
  CHECK(none == NULL);
  CHECK(strstr(spi_last_error(), "dictionary") != NULL);

  spi_result_free(r);
  spi_measurement_free(back);
  spi_measurement_free(m);
  spi_image_free(scene);
}

static void test_dictionary(const char* data_dir, const char* tmp) {
  char path[512];
  snprintf(path, sizeof path, "%s/dict_k16_m8.cscd", data_dir);
  spi_dictionary* d = NULL;
  CHECK(spi_dictionary_load(path, &d) == SPI_OK);
  CHECK(spi_dictionary_count(d) == 16);
  CHECK(spi_dictionary_kernel_size(d) == 8);
  CHECK(strncmp(spi_dictionary_id(d), "cscd-", 5) == 0);
  for (size_t k = 0; k < spi_dictionary_count(d); ++k) CHECK(spi_dictionary_kernel_norm(d, k) <= 1.0 + 1e-9);
  CHECK(isnan(spi_dictionary_kernel_norm(d, 99)));

  spi_image* scene = make_scene(16);
  spi_simulate_config sc = spi_simulate_config_default();
  sc.has_snr = 1;
  sc.snr_db = 40.0;
  sc.seed = 5;
  spi_measurement* m = NULL;
  CHECK(spi_simulate(scene, &sc, &m) == SPI_OK);
  CHECK(spi_measurement_count(m) == 64);
  spi_solver_config cfg = spi_solver_config_default();
  cfg.algorithm = SPI_ALG_DCT_CSC;
  cfg.max_iterations = 20;
  spi_result* r = NULL;
  CHECK(spi_reconstruct(m, &cfg, d, &r) == SPI_OK);
  CHECK(spi_result_iterations(r) >= 1 && spi_result_iterations(r) <= 20);
  CHECK(strstr(spi_result_json(r), spi_dictionary_id(d)) != NULL);
  spi_result_free(r);
  spi_measurement_free(m);
  spi_image_free(scene);

  snprintf(path, sizeof path, "%s/capi_copy.cscd", tmp);
  CHECK(spi_dictionary_save(d, path) == SPI_OK);
  spi_dictionary* copy = NULL;
  CHECK(spi_dictionary_load(path, &copy) == SPI_OK);
  CHECK(strcmp(spi_dictionary_id(copy), spi_dictionary_id(d)) == 0);
  spi_dictionary_free(copy);
  spi_dictionary_free(d);
}

static void test_sweep_errors(void) {
  spi_sweep* s = NULL;
  CHECK(spi_sweep_from_json("{\"images\": [\"a.pgm\"], \"bogus\": 1}", &s) == SPI_ERR_FORMAT);
  CHECK(strstr(spi_last_error(), "bogus") != NULL);
  CHECK(spi_sweep_from_json("{\"images\": [\"/nonexistent/a.pgm\"]}", &s) == SPI_OK);
  CHECK(spi_sweep_emit(s, "/tmp") == SPI_ERR_INVALID_ARGUMENT);
  CHECK(spi_sweep_run(s, 1) == SPI_ERR_IO);
  CHECK(strstr(spi_sweep_spec_json(s), "\"repetitions\": 3") != NULL);
  spi_sweep_free(s);
  spi_records* rec = NULL;
  CHECK(spi_records_load("/nonexistent/records.csv", &rec) == SPI_ERR_IO);
}

int main(int argc, char** argv) {
  if (argc < 3) {
    fprintf(stderr, "usage: %s DATA_DIR TMP_DIR\n", argv[0]);
    return 2;
  }
  test_names();
  test_errors_reset();
  test_identity_pipeline(argv[2]);
  test_dictionary(argv[1], argv[2]);
  test_sweep_errors();
  /* Null handles are tolerated by accessors and free functions. */
  spi_image_free(NULL);
  CHECK(spi_image_height(NULL) == 0);
  CHECK(spi_result_image(NULL) == NULL);
  if (failures) {
    fprintf(stderr, "%d check(s) failed\n", failures);
    return 1;
  }
  printf("capi: all checks passed\n");
  return 0;
}
