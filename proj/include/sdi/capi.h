/* C interface to the inclusion simulator. All functionality is reached
 * through an opaque scenario handle plus status codes; the CLI and any
 * foreign-language callers link against this surface only.
 *
 * Status codes double as process exit codes: 2 config error, 3 simulation
 * blow-up, 4 I/O failure, 5 hypothesis verification failure, 1 anything else.
 * On failure sdi_last_error() returns a thread-local message with line/step
 * attribution where available.
 */
#ifndef SDI_CAPI_H
#define SDI_CAPI_H

#include <stdint.h>

#if defined(_WIN32) || defined(__CYGWIN__)
#define SDI_API __declspec(dllexport)
#elif defined(__GNUC__) || defined(__clang__)
#define SDI_API __attribute__((visibility("default")))
#else
#define SDI_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sdi_status {
    SDI_OK = 0,
    SDI_ERROR = 1,
    SDI_CONFIG_ERROR = 2,
    SDI_BLOWUP_ERROR = 3,
    SDI_IO_ERROR = 4,
    SDI_HYPOTHESIS_FAIL = 5
} sdi_status;

typedef struct sdi_scenario sdi_scenario;

/* Parses and validates a scenario file; the handle owns the parsed config. */
SDI_API sdi_status sdi_scenario_open(const char* config_path, sdi_scenario** out);
SDI_API void sdi_scenario_close(sdi_scenario* scenario);

/* Overrides applied to subsequent runs on this handle. */
SDI_API sdi_status sdi_scenario_set_seed(sdi_scenario* scenario, uint64_t seed);
SDI_API sdi_status sdi_scenario_set_threads(sdi_scenario* scenario, int threads);

/* Commands. out_dir may be NULL to use the scenario's [output] dir. */
SDI_API sdi_status sdi_run_simulate(sdi_scenario* scenario, const char* out_dir);
SDI_API sdi_status sdi_run_convergence(sdi_scenario* scenario, const char* out_dir);
SDI_API sdi_status sdi_run_verify(sdi_scenario* scenario, const char* out_dir);

/* Plot-ready columnar files from a report.json or ensemble_<n>.bin. */
SDI_API sdi_status sdi_run_plotdata(const char* input_path, const char* out_dir);

/* Thread-local message for the last failing call on this thread. */
SDI_API const char* sdi_last_error(void);

SDI_API const char* sdi_version(void);

#ifdef __cplusplus
}
#endif

#endif /* SDI_CAPI_H */
