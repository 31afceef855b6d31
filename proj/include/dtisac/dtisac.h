#ifndef DTISAC_H
#define DTISAC_H

#include <stddef.h>
#include <stdint.h>

#if defined(DTISAC_BUILDING)
#define DTISAC_API __attribute__((visibility("default")))
#else
#define DTISAC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct dtisac_config dtisac_config;
typedef struct dtisac_result dtisac_result;

typedef enum dtisac_status {
    DTISAC_OK = 0,
    DTISAC_ERR_NULL = 1,            /* a required pointer was NULL */
    DTISAC_ERR_CONFIG = 2,          /* parse error, unknown key or bad value */
    DTISAC_ERR_INVALID = 3,         /* config or argument violates a rule */
    DTISAC_ERR_IO = 4,
    DTISAC_ERR_NOT_FOUND = 5,       /* no such table or key */
    DTISAC_ERR_INTERNAL = 6
} dtisac_status;

/* Message of the last failing call on this thread; empty after success. */
DTISAC_API const char* dtisac_last_error(void);
DTISAC_API const char* dtisac_version(void);
DTISAC_API const char* dtisac_status_name(dtisac_status status);

DTISAC_API dtisac_status dtisac_config_default(dtisac_config** out);
DTISAC_API dtisac_status dtisac_config_load_file(const char* path, dtisac_config** out);
DTISAC_API dtisac_status dtisac_config_load_string(const char* text, dtisac_config** out);
DTISAC_API dtisac_status dtisac_config_set(dtisac_config* cfg, const char* key, const char* value);
/* *value is owned by the caller; release with dtisac_string_free. */
DTISAC_API dtisac_status dtisac_config_get(const dtisac_config* cfg, const char* key, char** value);
DTISAC_API dtisac_status dtisac_config_canonical(const dtisac_config* cfg, char** out);
DTISAC_API dtisac_status dtisac_config_validate(const dtisac_config* cfg);
DTISAC_API uint64_t dtisac_config_hash(const dtisac_config* cfg);
DTISAC_API void dtisac_config_free(dtisac_config* cfg);

/* Tables "trials" and "summary". */
DTISAC_API dtisac_status dtisac_run(const dtisac_config* cfg, dtisac_result** out);
/* axis NULL or values NULL take sweep.axis / sweep.values from the config. */
DTISAC_API dtisac_status dtisac_sweep(const dtisac_config* cfg, const char* axis, const double* values,
                                      size_t count, dtisac_result** out);
/* Tables "ccdf" and "papr_summary". */
DTISAC_API dtisac_status dtisac_papr(const dtisac_config* cfg, dtisac_result** out);
/* Table "checks"; *all_passed (optional) is 1 when every check passed. */
DTISAC_API dtisac_status dtisac_validate(const dtisac_config* cfg, dtisac_result** out, int* all_passed);

DTISAC_API size_t dtisac_result_table_count(const dtisac_result* result);
/* Borrowed pointer, valid until the result is freed; NULL when out of range. */
DTISAC_API const char* dtisac_result_table_name(const dtisac_result* result, size_t index);
DTISAC_API dtisac_status dtisac_result_to_csv(const dtisac_result* result, const char* table, char** out);
/* One JSON object with an array of row objects per table. */
DTISAC_API dtisac_status dtisac_result_to_json(const dtisac_result* result, char** out);
/* Sidecar manifest: config hash, seed, versions, wall time, command. */
DTISAC_API dtisac_status dtisac_result_manifest(const dtisac_result* result, char** out);
DTISAC_API double dtisac_result_wall_time(const dtisac_result* result);
DTISAC_API void dtisac_result_free(dtisac_result* result);

DTISAC_API void dtisac_string_free(char* s);

/* Scalar helpers. NaN on invalid input (see dtisac_last_error). */
DTISAC_API double dtisac_path_invariant_time(double v_max, double bandwidth, size_t antennas, double r_min);
/* mode 0: Clarke, 1: ratio xi / nu_max. */
DTISAC_API double dtisac_coherence_time(double nu_max, int mode, double xi);
/* Worker-pool width after the DTISAC_WORKERS override. */
DTISAC_API size_t dtisac_worker_count(void);

#ifdef __cplusplus
}
#endif

#endif
