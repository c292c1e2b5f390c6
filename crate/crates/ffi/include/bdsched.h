#ifndef BDSCHED_H
#define BDSCHED_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BdStatus {
  BD_STATUS_OK = 0,
  BD_STATUS_NULL_POINTER = 1,
  BD_STATUS_INVALID_UTF8 = 2,
  BD_STATUS_PARSE_ERROR = 3,
  BD_STATUS_INVALID_INSTANCE = 4,
  BD_STATUS_SIMULATION_ERROR = 5,
  BD_STATUS_PANIC = 6,
} BdStatus;

/**
 * CP run, OPT schedule and interval report for one instance.
 */
typedef struct BdEvaluation BdEvaluation;

/**
 * Parsed and validated instance.
 */
typedef struct BdInstance BdInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parse and validate a JSON instance (`{"packets": [...]}`).
 *
 * # Safety
 * `json` must be null or a NUL-terminated string; `out` must be null or
 * writable.
 */
enum BdStatus bd_instance_from_json(const char *json, struct BdInstance **out);

/**
 * # Safety
 * `inst` must be null or come from [`bd_instance_from_json`], freed once.
 */
void bd_instance_free(struct BdInstance *inst);

/**
 * Number of packets, 0 for null.
 *
 * # Safety
 * `inst` must be null or a live handle.
 */
size_t bd_instance_len(const struct BdInstance *inst);

/**
 * Run CP, OPT and greedy and evaluate every interval check.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum BdStatus bd_evaluate(const struct BdInstance *inst, struct BdEvaluation **out);

/**
 * # Safety
 * `ev` must be null or come from [`bd_evaluate`], freed once.
 */
void bd_evaluation_free(struct BdEvaluation *ev);

/**
 * Profits of CP, OPT and greedy as exact `n` or `n/d` strings. Any output
 * pointer may be null to skip it.
 *
 * # Safety
 * `ev` must be a live handle; non-null outputs must be writable.
 */
enum BdStatus bd_evaluation_profits(const struct BdEvaluation *ev,
                                    char **v_cp,
                                    char **v_opt,
                                    char **v_greedy);

/**
 * Writes 1 when `V_OPT ≤ R·V_CP` holds exactly, else 0.
 *
 * # Safety
 * `ev` must be a live handle; `out` must be writable.
 */
enum BdStatus bd_evaluation_within_r(const struct BdEvaluation *ev, int32_t *out);

/**
 * Number of failed checks; 0 for null.
 *
 * # Safety
 * `ev` must be null or a live handle.
 */
size_t bd_evaluation_violations(const struct BdEvaluation *ev);

/**
 * CP case trace, one JSON object per line.
 *
 * # Safety
 * `ev` must be a live handle; `out` must be writable.
 */
enum BdStatus bd_evaluation_trace_json(const struct BdEvaluation *ev, char **out);

/**
 * Interval report and every evaluated check as one JSON object.
 *
 * # Safety
 * `ev` must be a live handle; `out` must be writable.
 */
enum BdStatus bd_evaluation_report_json(const struct BdEvaluation *ev, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void bd_string_free(char *s);

/**
 * Message for the last failing call on this thread, empty if none. Owned
 * by the library.
 */
const char *bd_last_error(void);

const char *bd_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BDSCHED_H */
