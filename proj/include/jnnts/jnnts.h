/* C interface to the JNNTs sampler. Every call returns a jnnts_status; on
 * failure jnnts_last_error() describes it (thread-local, valid until the next
 * call on the same thread). Strings returned through char** are owned by the
 * caller and released with jnnts_string_free. */
#ifndef JNNTS_JNNTS_H
#define JNNTS_JNNTS_H

#include <stddef.h>
#include <stdint.h>

#if defined(JNNTS_BUILDING_LIBRARY)
#define JNNTS_API __attribute__((visibility("default")))
#else
#define JNNTS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values match the CLI exit codes. */
typedef enum jnnts_status {
  JNNTS_OK = 0,
  JNNTS_ERROR_INPUT = 2,
  JNNTS_ERROR_CONFIGURATION = 3,
  JNNTS_ERROR_NUMERICAL = 4,
  JNNTS_ERROR_NONCONVERGENCE = 5,
  JNNTS_ERROR_DIAGNOSTIC = 6,
  JNNTS_ERROR_INTERNAL = 7
} jnnts_status;

typedef struct jnnts_config jnnts_config;
typedef struct jnnts_dataset jnnts_dataset;
typedef struct jnnts_fit jnnts_fit;

JNNTS_API const char* jnnts_version(void);
JNNTS_API const char* jnnts_last_error(void);
JNNTS_API void jnnts_string_free(char* s);

/* Warnings go to stderr unless silenced. */
JNNTS_API void jnnts_set_quiet(int quiet);

/* Run configuration. Relative paths resolve against the file's directory
 * (or base_dir for the string form). */
JNNTS_API jnnts_status jnnts_config_load(const char* path, jnnts_config** out);
JNNTS_API jnnts_status jnnts_config_parse(const char* json, const char* base_dir, jnnts_config** out);
JNNTS_API jnnts_status jnnts_config_set_seed(jnnts_config* config, uint64_t seed);
JNNTS_API jnnts_status jnnts_config_set_output_dir(jnnts_config* config, const char* dir);
JNNTS_API jnnts_status jnnts_config_to_json(const jnnts_config* config, char** out);
JNNTS_API void jnnts_config_free(jnnts_config* config);

/* Runs simulate, fit, tune, evaluate or diagnose. With strict set, a
 * Gelman-Rubin statistic above the threshold yields JNNTS_ERROR_NONCONVERGENCE
 * (artifacts are kept). The JSON report is returned through report if non-null. */
JNNTS_API jnnts_status jnnts_run(const char* command, const jnnts_config* config, int strict, char** report);

/* z_layout: "auto", "stacked" or "upper-triangle". W and coords may be null. */
JNNTS_API jnnts_status jnnts_dataset_load(const char* y, const char* w, const char* x, const char* z,
                                          const char* coords, const char* z_layout, jnnts_dataset** out);
JNNTS_API jnnts_status jnnts_dataset_dims(const jnnts_dataset* data, size_t* n, size_t* p, size_t* q);
JNNTS_API void jnnts_dataset_free(jnnts_dataset* data);

/* In-memory fit with the model, chain count, run length and seed of config. */
JNNTS_API jnnts_status jnnts_fit_run(const jnnts_dataset* data, const jnnts_config* config, jnnts_fit** out);
JNNTS_API jnnts_status jnnts_fit_draws(const jnnts_fit* fit, size_t* draws);
/* len must be P. */
JNNTS_API jnnts_status jnnts_fit_node_mpp(const jnnts_fit* fit, double* out, size_t len);
/* Row-major P x P; len must be P * P. */
JNNTS_API jnnts_status jnnts_fit_edge_mpp(const jnnts_fit* fit, double* out, size_t len);
JNNTS_API jnnts_status jnnts_fit_beta_hat(const jnnts_fit* fit, double* out, size_t len);
/* Largest PSRF over the monitored scalars; needs at least two chains. */
JNNTS_API jnnts_status jnnts_fit_max_psrf(const jnnts_fit* fit, double* out);
JNNTS_API jnnts_status jnnts_fit_summary_json(const jnnts_fit* fit, char** out);
JNNTS_API void jnnts_fit_free(jnnts_fit* fit);

#ifdef __cplusplus
}
#endif

#endif
