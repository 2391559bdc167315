/* C interface to the aqm-sim pipeline simulator. */

#ifndef AQM_SIM_H
#define AQM_SIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum AqmSimStatus {
  AQM_SIM_STATUS_OK = 0,
  AQM_SIM_STATUS_NULL_ARGUMENT = 1,
  AQM_SIM_STATUS_INVALID_UTF8 = 2,
  AQM_SIM_STATUS_BAD_CONFIG = 3,
  AQM_SIM_STATUS_NOT_RUN = 4,
  AQM_SIM_STATUS_RUN_FAILED = 5,
} AqmSimStatus;

/**
 * Opaque simulation handle: a configured scenario and, after
 * `aqm_sim_run`, its results.
 */
typedef struct AqmSimHandle AqmSimHandle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Build a handle from a scenario selector (preset numeral `I`..`XII` or a
 * scenario file path) and an AQM key (`ired-delay`, `ired-depth`,
 * `ired-ghost`, `codel`, `pi2`, `dualpi2`, `taildrop`). `scale` compresses
 * the load-phase timeline; pass 1.0 for the full run. On success `*out`
 * owns the handle; free it with `aqm_sim_free`.
 *
 * # Safety
 * `selector` and `aqm_key` must be valid NUL-terminated strings and `out`
 * a valid pointer.
 */
enum AqmSimStatus aqm_sim_new(const char *selector,
                              const char *aqm_key,
                              uint64_t seed,
                              double scale,
                              struct AqmSimHandle **out);

/**
 * Execute the scenario. Idempotent: running twice replaces the results.
 *
 * # Safety
 * `h` must be a handle from `aqm_sim_new` that has not been freed.
 */
enum AqmSimStatus aqm_sim_run(struct AqmSimHandle *h);

/**
 * Run summary as a JSON document. `*out` is owned by the caller; release
 * it with `aqm_sim_string_free`.
 *
 * # Safety
 * `h` must be a live handle and `out` a valid pointer.
 */
enum AqmSimStatus aqm_sim_summary_json(const struct AqmSimHandle *h, char **out);

/**
 * Event-stream hash of the finished run, for determinism checks across
 * processes. Caller frees with `aqm_sim_string_free`.
 *
 * # Safety
 * `h` must be a live handle and `out` a valid pointer.
 */
enum AqmSimStatus aqm_sim_trace_hash(const struct AqmSimHandle *h, char **out);

/**
 * Jain fairness index of phase `phase` (0-based). Fails with `NotRun`
 * before `aqm_sim_run` and `BadConfig` for an out-of-range phase.
 *
 * # Safety
 * `h` must be a live handle and `out` a valid pointer.
 */
enum AqmSimStatus aqm_sim_jain_phase(const struct AqmSimHandle *h, uintptr_t phase, double *out);

/**
 * Release a string returned by this library. NULL is a no-op.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void aqm_sim_string_free(char *s);

/**
 * Release a handle. NULL is a no-op.
 *
 * # Safety
 * `h` must come from `aqm_sim_new` and not have been freed already.
 */
void aqm_sim_free(struct AqmSimHandle *h);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AQM_SIM_H */
