#ifndef IMPLANG_H
#define IMPLANG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define IMPLANG_REPLY_CAPACITY 65536

/**
 * Result of every fallible call.
 */
typedef enum ImplangStatus {
  IMPLANG_STATUS_OK = 0,
  IMPLANG_STATUS_NULL_ARGUMENT = 1,
  IMPLANG_STATUS_INVALID_UTF8 = 2,
  IMPLANG_STATUS_CONFIG = 3,
  /**
   * The learner failed mid-run; the run directory holds the partial transcript.
   */
  IMPLANG_STATUS_RUN_FAILED = 4,
  /**
   * The run has not completed, so it has no metrics yet.
   */
  IMPLANG_STATUS_NOT_READY = 5,
  IMPLANG_STATUS_INTERNAL = 6,
} ImplangStatus;

/**
 * One configured run.
 */
typedef struct ImplangRun ImplangRun;

/**
 * Host-side learner: write a NUL-terminated reply of at most
 * `reply_capacity - 1` bytes into `reply` and return its length, or return
 * a negative value to fail the run.
 */
typedef ptrdiff_t (*ImplangRespondFn)(void *user_data,
                                      const char *prompt,
                                      char *reply,
                                      size_t reply_capacity);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string.
 */
const char *implang_version(void);

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call into this library on the same thread.
 */
const char *implang_last_error(void);

/**
 * # Safety
 * `s` is null or a string returned by this library and not yet freed.
 */
void implang_string_free(char *s);

/**
 * Stimuli for one seed cell as JSON, written to `*out_json`.
 *
 * # Safety
 * String arguments are valid NUL-terminated strings; `out_json` is writable.
 */
enum ImplangStatus implang_generate(const char *experiment,
                                    const char *condition_label,
                                    uint64_t seed,
                                    uint32_t cell,
                                    char **out_json);

/**
 * Configures a run. `config_path` may be null for defaults. The learner
 * spec is used by [`implang_run_execute`] and recorded in the run config.
 *
 * # Safety
 * String arguments are valid NUL-terminated strings (or null where noted);
 * `out` is writable.
 */
enum ImplangStatus implang_run_new(const char *experiment,
                                   const char *condition_label,
                                   const char *learner,
                                   uint64_t seed,
                                   uint32_t cell,
                                   uint32_t rep,
                                   const char *out_dir,
                                   const char *config_path,
                                   struct ImplangRun **out);

/**
 * # Safety
 * `run` is null or a handle from [`implang_run_new`] not yet freed.
 */
void implang_run_free(struct ImplangRun *run);

/**
 * The run id, e.g. `morphology-5R4E-c0-r0`.
 *
 * # Safety
 * `run` is a live handle; `out` is writable.
 */
enum ImplangStatus implang_run_id(struct ImplangRun *run, char **out);

/**
 * Runs the session with the configured learner spec.
 *
 * # Safety
 * `run` is a live handle.
 */
enum ImplangStatus implang_run_execute(struct ImplangRun *run);

/**
 * Runs the session with a host-provided learner; the configured learner
 * spec is only recorded.
 *
 * # Safety
 * `run` is a live handle; `respond` follows [`ImplangRespondFn`] and may be
 * called with `user_data` until this function returns.
 */
enum ImplangStatus implang_run_execute_with(struct ImplangRun *run,
                                            ImplangRespondFn respond,
                                            void *user_data);

/**
 * Metrics of a completed run as JSON.
 *
 * # Safety
 * `run` is a live handle; `out_json` is writable.
 */
enum ImplangStatus implang_run_metrics_json(struct ImplangRun *run, char **out_json);

/**
 * Directory the run writes into, for locating transcripts and CSVs.
 *
 * # Safety
 * `run` is a live handle; `out` is writable.
 */
enum ImplangStatus implang_run_dir(struct ImplangRun *run, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IMPLANG_H */
