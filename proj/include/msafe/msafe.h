#ifndef MSAFE_MSAFE_H
#define MSAFE_MSAFE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define MSAFE_API __declspec(dllexport)
#elif defined(__GNUC__)
#  define MSAFE_API __attribute__((visibility("default")))
#else
#  define MSAFE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes; the CLI uses them as exit codes. */
typedef enum msafe_status
{
    MSAFE_OK = 0,
    MSAFE_USAGE = 1,     /* bad arguments or configuration */
    MSAFE_DATA = 2,      /* malformed or out-of-domain data */
    MSAFE_NUMERICAL = 3, /* factorization failure, non-finite values */
    MSAFE_INTERNAL = 4
} msafe_status;

typedef struct msafe_dataset msafe_dataset;
typedef struct msafe_design msafe_design;
typedef struct msafe_run msafe_run;

/* Message of the last failed call on this thread; empty after success. */
MSAFE_API const char* msafe_last_error(void);
MSAFE_API const char* msafe_version(void);

/* Strings returned through char** are owned by the caller. */
MSAFE_API void msafe_string_free(char* s);

/* Configs are JSON objects (see README); NULL or "" means defaults. The
 * "mode" key selects the defaults the other keys apply to. */
MSAFE_API msafe_status msafe_config_resolve(const char* config_json, char** resolved_json);

/* ---- datasets ---- */

/* Signals CSV (time,<sensors>) and positions CSV (time,position[,response]).
 * Without a response column, velocities come from the penalized smoother. */
MSAFE_API msafe_status msafe_dataset_load(const char* signals_path, const char* positions_path, double window,
                                          msafe_dataset** out);
/* Seeded synthetic recording; options JSON keys: sensors, rows, seed,
 * smoothing, shared, window. Responses are zero. */
MSAFE_API msafe_status msafe_dataset_synthetic(const char* options_json, msafe_dataset** out);
/* Replaces the responses with truth signal plus correlated noise. truth_json
 * NULL uses the built-in kernels; options JSON keys: theta, eta, snr, seed. */
MSAFE_API msafe_status msafe_dataset_plant(msafe_dataset* data, const char* truth_json, const char* options_json);
MSAFE_API msafe_status msafe_dataset_save(const msafe_dataset* data, const char* signals_path,
                                          const char* positions_path);
MSAFE_API msafe_status msafe_dataset_shape(const msafe_dataset* data, size_t* rows, size_t* sensors);
MSAFE_API msafe_status msafe_dataset_set_responses(msafe_dataset* data, const double* y, size_t n);
MSAFE_API msafe_status msafe_dataset_responses(const msafe_dataset* data, double* y, size_t n);
MSAFE_API void msafe_dataset_free(msafe_dataset* data);

/* ---- bases and assembly ---- */

/* Basis properties as JSON: sizes, levels, moments, Gram orthogonality. */
MSAFE_API msafe_status msafe_basis_inspect(const char* config_json, char** report_json);

MSAFE_API msafe_status msafe_design_assemble(const msafe_dataset* data, const char* config_json,
                                             msafe_design** out);
/* Per-block shape, stored entries and truncation level as JSON. */
MSAFE_API msafe_status msafe_design_summary(const msafe_design* design, char** summary_json);
/* Triplet text dump of one block (sensor is one-based). */
MSAFE_API msafe_status msafe_design_write_block(const msafe_design* design, size_t sensor, const char* path);
MSAFE_API void msafe_design_free(msafe_design* design);

/* ---- pipeline ---- */

/* Selection stages as a JSON array. */
MSAFE_API msafe_status msafe_select(const msafe_dataset* data, const msafe_design* design, const char* config_json,
                                    char** stages_json);
/* Ridge estimation on the given one-based sensors. */
MSAFE_API msafe_status msafe_estimate(const msafe_dataset* data, const msafe_design* design, const char* config_json,
                                      const size_t* sensors, size_t count, msafe_run** out);
/* Assembly, selection and estimation. */
MSAFE_API msafe_status msafe_run_full(const msafe_dataset* data, const char* config_json, msafe_run** out);

/* Deterministic report (config, stages, selection, fit); no timings. */
MSAFE_API msafe_status msafe_run_report(const msafe_run* run, char** report_json);
MSAFE_API msafe_status msafe_run_timings(const msafe_run* run, char** timings_json);
/* n must equal the dataset's rows. */
MSAFE_API msafe_status msafe_run_predict(const msafe_run* run, const msafe_dataset* data, double* y_hat, size_t n);
/* gamma(tau, z) of the index-th selected sensor (zero-based index into the
 * selection), z in raw position units. */
MSAFE_API msafe_status msafe_run_kernel(const msafe_run* run, size_t index, double tau, double z, double* value);
MSAFE_API void msafe_run_free(msafe_run* run);

/* ---- studies ---- */

/* Simulation over (theta, eta) settings. truth_json NULL uses the built-in
 * kernels. Outputs the JSON report and the per-replicate CSV. */
MSAFE_API msafe_status msafe_simulate(const msafe_dataset* data, const char* truth_json, const char* settings_json,
                                      char** report_json, char** replicates_csv);
/* Both configs on the same data; JSON report and CSV table. */
MSAFE_API msafe_status msafe_bench(const msafe_dataset* data, const char* baseline_json, const char* candidate_json,
                                   char** report_json, char** table_csv);

/* ---- provenance ---- */

/* Git blob SHA-1 of a file as 40 hex digits plus terminator. */
MSAFE_API msafe_status msafe_file_hash(const char* path, char hex[41]);

#ifdef __cplusplus
}
#endif

#endif
