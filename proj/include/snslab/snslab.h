#ifndef SNSLAB_SNSLAB_H
#define SNSLAB_SNSLAB_H

/* C interface to the snslab studies. Handles are opaque; every call that can
   fail returns a status code and leaves a message for snslab_last_error(). */

#include <stddef.h>
#include <stdint.h>

#if defined(SNSLAB_BUILDING) && defined(__GNUC__)
#define SNSLAB_API __attribute__((visibility("default")))
#else
#define SNSLAB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum snslab_status {
  SNSLAB_OK = 0,
  SNSLAB_INVARIANT_FAILURE = 1,
  SNSLAB_CONFIG_ERROR = 2,
  SNSLAB_SOLVER_FAILURE = 3,
  SNSLAB_IO_ERROR = 4,
  SNSLAB_INVALID_ARGUMENT = 5,
  SNSLAB_INTERNAL_ERROR = 6
} snslab_status;

typedef struct snslab_config snslab_config;
typedef struct snslab_result snslab_result;

/* Message of the most recent failure on this thread ("" if none). */
SNSLAB_API const char* snslab_last_error(void);
SNSLAB_API const char* snslab_version(void);

/* study: "temporal", "spatial", "stopping" or "invariants". */
SNSLAB_API snslab_status snslab_config_default(const char* study, snslab_config** out);
SNSLAB_API snslab_status snslab_config_load(const char* study, const char* path, snslab_config** out);
/* Same keys and value syntax as the config file. */
SNSLAB_API snslab_status snslab_config_set(snslab_config* cfg, const char* key, const char* value);
SNSLAB_API snslab_status snslab_config_validate(const snslab_config* cfg);
SNSLAB_API void snslab_config_free(snslab_config* cfg);

/* Runs the configured study. On SNSLAB_OK *out owns the result. */
SNSLAB_API snslab_status snslab_run(const snslab_config* cfg, snslab_result** out);
/* Writes the CSV files into the configured output directory. */
SNSLAB_API snslab_status snslab_result_write(const snslab_result* result);
/* 1 when the study's own verdict holds (all invariants, monotone stopping
   trend); rate studies always report 1 here and expose the slope instead. */
SNSLAB_API int snslab_result_passed(const snslab_result* result);
/* Fitted slope of log median error vs log step; rate studies only. */
SNSLAB_API snslab_status snslab_result_slope(const snslab_result* result, double* slope, double* slope_se,
                                  double* slope_without_coarsest);
/* Human-readable multi-line summary, valid until the result is freed. */
SNSLAB_API const char* snslab_result_summary(const snslab_result* result);
SNSLAB_API void snslab_result_free(snslab_result* result);

#ifdef __cplusplus
}
#endif

#endif
