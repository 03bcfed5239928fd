#ifndef HETCOV_HETCOV_H
#define HETCOV_HETCOV_H

/* C interface to the hetcov library: covariance estimation from tomographic
 * projections and heterogeneity analysis. All functions return a status code;
 * on failure a message for the calling thread is available from
 * hetcov_last_error(). Strings returned through char** are owned by the
 * caller and released with hetcov_string_free. */

#include <stddef.h>

#if defined(_WIN32)
#define HETCOV_API __declspec(dllexport)
#elif defined(HETCOV_BUILDING_LIBRARY)
#define HETCOV_API __attribute__((visibility("default")))
#else
#define HETCOV_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hetcov_status {
  HETCOV_OK = 0,
  HETCOV_ERR_INVALID_ARGUMENT = 1,
  HETCOV_ERR_DOMAIN = 2,
  HETCOV_ERR_CONFIG = 3,
  HETCOV_ERR_IO = 4,
  HETCOV_ERR_FORMAT = 5,
  HETCOV_ERR_CONSTRUCTION = 6,
  HETCOV_ERR_SOLVER = 7,
  HETCOV_ERR_INTERNAL = 8
} hetcov_status;

typedef struct hetcov_config hetcov_config;
typedef struct hetcov_basis hetcov_basis;
typedef struct hetcov_dataset hetcov_dataset;
typedef struct hetcov_estimate hetcov_estimate;

HETCOV_API const char* hetcov_version(void);
HETCOV_API int hetcov_format_version(void);
HETCOV_API const char* hetcov_status_name(hetcov_status status);
/* Message of the last failed call on this thread; empty when none. */
HETCOV_API const char* hetcov_last_error(void);
HETCOV_API void hetcov_string_free(char* s);

/* Worker threads for parallel loops; 0 uses every core. */
HETCOV_API hetcov_status hetcov_set_threads(int threads);

/* Configuration documents. */
HETCOV_API hetcov_status hetcov_config_create(hetcov_config** out);
HETCOV_API hetcov_status hetcov_config_load(const char* path, hetcov_config** out);
HETCOV_API hetcov_status hetcov_config_parse(const char* json_text, hetcov_config** out);
/* key is "section.key"; value is JSON text, or a bare string. */
HETCOV_API hetcov_status hetcov_config_set(hetcov_config* cfg, const char* key, const char* value);
HETCOV_API hetcov_status hetcov_config_to_json(const hetcov_config* cfg, char** out);
HETCOV_API hetcov_status hetcov_config_hash(const hetcov_config* cfg, char** out);
HETCOV_API void hetcov_config_free(hetcov_config* cfg);

/* Subcommands. On success *summary (if not NULL) receives a JSON summary. */
HETCOV_API hetcov_status hetcov_run_simulate(const hetcov_config* cfg, char** summary);
HETCOV_API hetcov_status hetcov_run_precompute(const hetcov_config* cfg, char** summary);
HETCOV_API hetcov_status hetcov_run_estimate(const hetcov_config* cfg, char** summary);
HETCOV_API hetcov_status hetcov_run_analyze(const hetcov_config* cfg, char** summary);
HETCOV_API hetcov_status hetcov_run_report(const hetcov_config* cfg, char** summary);
HETCOV_API hetcov_status hetcov_run_plot_data(const hetcov_config* cfg, char** summary);

/* Radial basis and index sets for a bandlimit; quad_order 0 picks the default. */
HETCOV_API hetcov_status hetcov_basis_create(int K, double omega_max, int quad_order, hetcov_basis** out);
HETCOV_API int hetcov_basis_p_hat(const hetcov_basis* b);
HETCOV_API int hetcov_basis_q_hat(const hetcov_basis* b);
/* f_k(r) for k = 0..K written to out[0..K]. */
HETCOV_API hetcov_status hetcov_basis_eval(const hetcov_basis* b, double r, double* out, size_t len);
HETCOV_API void hetcov_basis_free(hetcov_basis* b);

/* Degree-l coefficient of the kernel expansion; zero for odd l. */
HETCOV_API hetcov_status hetcov_funk_hecke_coeff(int l, double* out);

HETCOV_API hetcov_status hetcov_dataset_load(const char* path, hetcov_dataset** out);
HETCOV_API size_t hetcov_dataset_size(const hetcov_dataset* d);
HETCOV_API int hetcov_dataset_image_size(const hetcov_dataset* d);
HETCOV_API double hetcov_dataset_sigma2(const hetcov_dataset* d);
/* Copies image s (N*N floats, row-major y then x). */
HETCOV_API hetcov_status hetcov_dataset_image(const hetcov_dataset* d, size_t s, float* out, size_t len);
HETCOV_API void hetcov_dataset_free(hetcov_dataset* d);

HETCOV_API hetcov_status hetcov_estimate_load(const char* path, hetcov_estimate** out);
HETCOV_API int hetcov_estimate_rank(const hetcov_estimate* e);
HETCOV_API int hetcov_estimate_p_hat(const hetcov_estimate* e);
/* Copies up to len descending eigenvalues; *written receives the count. */
HETCOV_API hetcov_status hetcov_estimate_eigenvalues(const hetcov_estimate* e, double* out, size_t len,
                                                     size_t* written);
/* Mean coefficients as interleaved (re, im) pairs; len counts doubles. */
HETCOV_API hetcov_status hetcov_estimate_mean(const hetcov_estimate* e, double* out, size_t len);
HETCOV_API void hetcov_estimate_free(hetcov_estimate* e);

#ifdef __cplusplus
}
#endif

#endif
