/*
 * deband C API
 *
 * Opaque handles plus status codes. Every function that can fail returns a
 * deband_status; on failure deband_last_error() describes the problem for the
 * calling thread until its next failing call. Objects returned through an
 * out-pointer are owned by the caller and released with the matching _free.
 * Strings returned through char** are released with deband_string_free().
 */
#ifndef DEBAND_DEBAND_H
#define DEBAND_DEBAND_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(DEBAND_BUILDING_LIBRARY)
#    define DEBAND_API __declspec(dllexport)
#  else
#    define DEBAND_API __declspec(dllimport)
#  endif
#else
#  define DEBAND_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum deband_status {
  DEBAND_OK = 0,
  DEBAND_ERR_INVALID_ARGUMENT = 1,
  DEBAND_ERR_IO = 2,
  DEBAND_ERR_FORMAT = 3,
  DEBAND_ERR_CONTRACT = 4,
  DEBAND_ERR_PROCESSING = 5,
  DEBAND_ERR_INTERNAL = 6
} deband_status;

typedef enum deband_mode {
  DEBAND_MODE_FULL = 0,    /* pad, one backend call, crop */
  DEBAND_MODE_WEIGHTED = 1 /* 256/128 tiles merged by reciprocal distance */
} deband_mode;

typedef struct deband_image deband_image;
typedef struct deband_backend deband_backend;

DEBAND_API const char* deband_version(void);
DEBAND_API const char* deband_status_string(deband_status status);
DEBAND_API const char* deband_last_error(void);
DEBAND_API void deband_string_free(char* str);

/* ---- images (8-bit interleaved RGB) ---- */

/* rgb may be NULL for a zero-filled image; otherwise width*height*3 bytes. */
DEBAND_API deband_status deband_image_create(uint32_t width, uint32_t height, const uint8_t* rgb,
                                             deband_image** out);
DEBAND_API deband_status deband_image_load_png(const char* path, deband_image** out);
DEBAND_API deband_status deband_image_save_png(const deband_image* img, const char* path);
DEBAND_API uint32_t deband_image_width(const deband_image* img);
DEBAND_API uint32_t deband_image_height(const deband_image* img);
DEBAND_API const uint8_t* deband_image_data(const deband_image* img);
DEBAND_API void deband_image_free(deband_image* img);

/* ---- backends ---- */

typedef struct deband_classic_params {
  int threshold; /* 8-bit units, default 5 */
  int range;     /* pixels, default 16 */
  uint64_t seed; /* default 0 */
} deband_classic_params;

DEBAND_API void deband_classic_params_default(deband_classic_params* params);

DEBAND_API deband_status deband_backend_identity(deband_backend** out);
/* params may be NULL for defaults. */
DEBAND_API deband_status deband_backend_classic(const deband_classic_params* params,
                                                deband_backend** out);
/* Loads and validates a DBW1 weight file. */
DEBAND_API deband_status deband_backend_unet(const char* weights_path, deband_backend** out);
DEBAND_API const char* deband_backend_name(const deband_backend* backend);
DEBAND_API void deband_backend_free(deband_backend* backend);

/* Runs a backend through one of the two application modes. threads >= 1. */
DEBAND_API deband_status deband_run(const deband_backend* backend, deband_mode mode,
                                    unsigned threads, const deband_image* in,
                                    deband_image** out);

/* ---- weight files ---- */

/* Writes a DBW1 file matching the generator architecture: all zeros
 * (random == 0) or seeded uniform weights (random != 0). */
DEBAND_API deband_status deband_weights_write_synthetic(const char* path, int random,
                                                        uint64_t seed);
/* Structural and architecture validation only. */
DEBAND_API deband_status deband_weights_validate(const char* path);
/* Checks a cross-implementation fixture (see README). worst_error receives the
 * largest per-case mean absolute error; passed is set to 1 when every case is
 * within the fixture tolerance. */
DEBAND_API deband_status deband_fixture_check(const char* fixture_json, unsigned threads,
                                              double* worst_error, int* passed);

/* ---- dataset ---- */

typedef struct deband_extract_params {
  int patch;  /* default 256 */
  int stride; /* default 75 */
  double tau; /* minimum banded fraction, default 0.5 */
} deband_extract_params;

DEBAND_API void deband_extract_params_default(deband_extract_params* params);

/* Writes out_dir/manifest.jsonl and out_dir/patches/. n_records may be NULL. */
DEBAND_API deband_status deband_dataset_extract(const char* banded_dir, const char* pristine_dir,
                                                const char* masks_dir, const char* out_dir,
                                                const deband_extract_params* params,
                                                unsigned threads, size_t* n_records);
/* ratios: train, val, test. Patch paths stay relative to the input manifest's
 * directory, so manifest_out should live next to it. split_counts may be NULL. */
DEBAND_API deband_status deband_dataset_split(const char* manifest_in, const char* manifest_out,
                                              const double ratios[3], uint64_t seed,
                                              size_t split_counts[3]);
/* report_json may be NULL. A non-empty violation list is still DEBAND_OK. */
DEBAND_API deband_status deband_dataset_verify(const char* manifest, double max_mean_abs_diff,
                                               size_t* n_violations, char** report_json);

/* ---- metrics and reports ---- */

DEBAND_API deband_status deband_band_edge_density(const deband_image* img, int flat_window,
                                                  int step_max, double* out);
/* Identical images yield +infinity. */
DEBAND_API deband_status deband_psnr(const deband_image* a, const deband_image* b, double* out);

typedef struct deband_evaluate_options {
  const char* in_dir;      /* required */
  const char* ref_dir;     /* optional: adds PSNR against same-named images */
  const char* scores_csv;  /* optional: image_id,metric,score rows merged in */
  const char* context_csv; /* optional: method,metric,mean,sd,n context rows */
  const char* label;       /* optional method name, default "evaluated" */
  unsigned threads;
} deband_evaluate_options;

/* Writes the JSON report to report_path and the text table to
 * report_path + ".txt"; table_text may be NULL. */
DEBAND_API deband_status deband_evaluate(const deband_evaluate_options* options,
                                         const char* report_path, char** table_text);

typedef struct deband_bench_options {
  const char* in_dir;      /* required */
  int repeats;             /* >= 1 */
  unsigned threads;        /* pipeline workers recorded in the report */
  const char* context_csv; /* optional: method,seconds reference rows */
  const char* label;       /* optional method name */
} deband_bench_options;

DEBAND_API deband_status deband_bench(const deband_backend* backend, deband_mode mode,
                                      const deband_bench_options* options,
                                      const char* report_path, char** table_text);

#ifdef __cplusplus
}
#endif

#endif /* DEBAND_DEBAND_H */
