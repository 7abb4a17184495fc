/* C interface to the doamp receiver library.
 *
 * Every function returns a doamp_status; on failure doamp_last_error()
 * describes the problem (thread-local, valid until the next call on the same
 * thread). Handles are opaque and must be released with their _free function.
 * Strings returned through char** are heap-allocated; release them with
 * doamp_string_free.
 */
#ifndef DOAMP_H
#define DOAMP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(DOAMP_BUILDING)
#    define DOAMP_API __declspec(dllexport)
#  else
#    define DOAMP_API __declspec(dllimport)
#  endif
#else
#  define DOAMP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum doamp_status {
  DOAMP_OK = 0,
  DOAMP_ERR_INVALID_DIMENSION = 1,
  DOAMP_ERR_INVALID_PARAMETER = 2,
  DOAMP_ERR_INVALID_MESSAGE = 3,
  DOAMP_ERR_SINGULAR_SYSTEM = 4,
  DOAMP_ERR_NO_INFORMATION = 5,
  DOAMP_ERR_DEGENERATE_NLE = 6,
  DOAMP_ERR_NLE_FAILURE = 7,
  DOAMP_ERR_BRIDGE_FAILURE = 8,
  DOAMP_ERR_INTEGRATION_FAILURE = 9,
  DOAMP_ERR_IO = 10,
  DOAMP_ERR_FORMAT = 11,
  DOAMP_ERR_NULL_ARGUMENT = 12,
  DOAMP_ERR_BUFFER_TOO_SMALL = 13,
  DOAMP_ERR_INTERNAL = 14
} doamp_status;

typedef struct doamp_config doamp_config;
typedef struct doamp_report doamp_report;
typedef struct doamp_rm doamp_rm;
typedef struct doamp_channel doamp_channel;

DOAMP_API const char* doamp_version(void);
DOAMP_API const char* doamp_status_string(doamp_status status);
DOAMP_API const char* doamp_last_error(void);
DOAMP_API void doamp_string_free(char* s);

/* ---- experiment configuration ------------------------------------------ */

DOAMP_API doamp_status doamp_config_new(doamp_config** out);
/* key=value lines or a JSON object. */
DOAMP_API doamp_status doamp_config_parse(const char* text, doamp_config** out);
DOAMP_API doamp_status doamp_config_load(const char* path, doamp_config** out);
DOAMP_API doamp_status doamp_config_set(doamp_config* cfg, const char* key, const char* value);
DOAMP_API doamp_status doamp_config_to_json(const doamp_config* cfg, char** json_out);
DOAMP_API void doamp_config_free(doamp_config* cfg);

/* ---- experiments ---------------------------------------------------------- */

/* Runs every trial; writes trace, metric and reconstruction files when the
 * config has an output directory. */
DOAMP_API doamp_status doamp_run(const doamp_config* cfg, doamp_report** out);
DOAMP_API size_t doamp_report_trials(const doamp_report* report);
DOAMP_API doamp_status doamp_report_summary(const doamp_report* report, double* psnr_mean,
                                            double* ssim_mean, double* iters_mean,
                                            double* nfe_mean, size_t* failures);
DOAMP_API doamp_status doamp_report_trial(const doamp_report* report, size_t trial,
                                          double* psnr, double* ssim, size_t* iterations,
                                          uint64_t* nfe);
/* Summary CSV (header plus one row), identical to a one-point sweep. */
DOAMP_API doamp_status doamp_report_csv(const doamp_report* report, char** csv_out);
DOAMP_API void doamp_report_free(doamp_report* report);

/* Expands the grid file (comma lists on beta, sigma, channel, prior), applies
 * `overrides` ("key=value" strings) to every point and returns the
 * consolidated CSV ordered by (beta, sigma). workers = 0 uses all cores. */
DOAMP_API doamp_status doamp_sweep(const char* grid_path, const char* const* overrides,
                                   size_t num_overrides, size_t workers, char** csv_out);

/* ---- random-multiplexing operator ------------------------------------------ */

DOAMP_API doamp_status doamp_rm_new(size_t n, size_t m, uint64_t seed, doamp_rm** out);
DOAMP_API doamp_status doamp_rm_dims(const doamp_rm* op, size_t* n, size_t* m);
/* x = F s; s has n entries, x has m. */
DOAMP_API doamp_status doamp_rm_forward(const doamp_rm* op, const double* s, size_t n, double* x,
                                        size_t m);
/* s = F^+ x (zero-filled inverse). */
DOAMP_API doamp_status doamp_rm_inverse(const doamp_rm* op, const double* x, size_t m, double* s,
                                        size_t n);
DOAMP_API void doamp_rm_free(doamp_rm* op);

/* ---- channels --------------------------------------------------------------- */

/* The channel a config would use for `trial`. dim = 0 takes the compressed
 * length implied by the source size and beta. */
DOAMP_API doamp_status doamp_channel_from_config(const doamp_config* cfg, size_t trial, size_t dim,
                                                 doamp_channel** out);
DOAMP_API doamp_status doamp_channel_dims(const doamp_channel* ch, size_t* rows, size_t* cols);
/* Writes min(capacity, rank) values; *count receives the rank. */
DOAMP_API doamp_status doamp_channel_singular_values(const doamp_channel* ch, double* values,
                                                     size_t capacity, size_t* count);
DOAMP_API doamp_status doamp_channel_condition_number(const doamp_channel* ch, double* kappa);
/* Dense matrix in the OAMPMAT1 format. */
DOAMP_API doamp_status doamp_channel_export(const doamp_channel* ch, const char* path);
DOAMP_API void doamp_channel_free(doamp_channel* ch);

/* Kolmogorov-Smirnov test of `samples` normalized fading-tap amplitudes from
 * the config's fading profile against the Rayleigh CDF. Returns
 * DOAMP_ERR_INVALID_PARAMETER when the config's channel is not fading. */
DOAMP_API doamp_status doamp_fading_ks(const doamp_config* cfg, size_t samples, uint64_t seed,
                                       double* statistic, double* p_value);

#ifdef __cplusplus
}
#endif

#endif /* DOAMP_H */
