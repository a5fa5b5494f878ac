#ifndef HANDOVER_CDV_H
#define HANDOVER_CDV_H

/* Generated by cbindgen from handover-cdv-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of cross-product tuples reported by `hcdv_check_model`.
 */
#define HCDV_TUPLE_COUNT 33

/**
 * Number of requirement monitors.
 */
#define HCDV_REQUIREMENT_COUNT 11

/**
 * Status codes returned by every fallible call.
 */
typedef enum HcdvStatus {
  /**
   * The call succeeded.
   */
  HcdvStatus_Ok = 0,
  /**
   * The campaign ran but at least one assertion monitor failed.
   */
  HcdvStatus_MonitorFailed = 1,
  /**
   * The call failed; see `hcdv_last_error`.
   */
  HcdvStatus_Error = 2,
  /**
   * A pointer or index argument was invalid.
   */
  HcdvStatus_InvalidArgument = 3,
} HcdvStatus;

/**
 * Opaque handle to a loaded coverage report.
 */
typedef struct HcdvReport HcdvReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *hcdv_version(void);

/**
 * Copies the last error message of this thread into `buffer` (truncated,
 * always NUL-terminated when `length > 0`) and returns the full message
 * length in bytes.
 *
 * # Safety
 * `buffer` must point to at least `length` writable bytes, or be null.
 */
uintptr_t hcdv_last_error(char *buffer, uintptr_t length);

/**
 * Runs a full campaign from a key-value config file.
 *
 * `out_dir` overrides the config's output directory when non-null;
 * `override_seed` replaces the config's master seed when `use_seed` is
 * nonzero; `jobs` overrides the worker count when nonzero. Returns `Ok`
 * when every monitor passed, `MonitorFailed` when the campaign ran but
 * found violations.
 *
 * # Safety
 * `config_path` must be a valid NUL-terminated string; `out_dir` must be
 * one or null.
 */
enum HcdvStatus hcdv_run_campaign(const char *config_path,
                                  const char *out_dir,
                                  uint8_t use_seed,
                                  uint64_t override_seed,
                                  uint32_t jobs);

/**
 * Checks reachability of all 33 cross-product tuples on the protocol
 * model and writes one flag per tuple (1 reachable, 0 not) in the
 * canonical universe order.
 *
 * # Safety
 * `reachable_out` must point to at least `length` writable bytes.
 */
enum HcdvStatus hcdv_check_model(uint8_t *reachable_out, uintptr_t length);

/**
 * Loads `report.json` from a campaign directory. Returns null on failure
 * (see `hcdv_last_error`). Free with `hcdv_report_close`.
 *
 * # Safety
 * `campaign_dir` must be a valid NUL-terminated string.
 */
struct HcdvReport *hcdv_report_open(const char *campaign_dir);

/**
 * Releases a report handle.
 *
 * # Safety
 * `handle` must come from `hcdv_report_open` and not be used afterwards.
 */
void hcdv_report_close(struct HcdvReport *handle);

/**
 * Total and conclusive run counts of the report.
 *
 * # Safety
 * `handle` must be a live report handle; out pointers must be writable
 * or null.
 */
enum HcdvStatus hcdv_report_runs(const struct HcdvReport *handle,
                                 uint32_t *total_out,
                                 uint32_t *conclusive_out);

/**
 * Covered/passed/failed counters for one requirement, indexed in the
 * fixed order R1, R2, R3, R4, R5, R6, R7, R8a, R8b, R8c, R8d.
 *
 * # Safety
 * `handle` must be a live report handle; out pointers must be writable
 * or null.
 */
enum HcdvStatus hcdv_report_requirement(const struct HcdvReport *handle,
                                        uint32_t index,
                                        uint32_t *covered_out,
                                        uint32_t *passed_out,
                                        uint32_t *failed_out);

/**
 * Hit count of one cross-product tuple in the canonical universe order.
 *
 * # Safety
 * `handle` must be a live report handle; `hits_out` must be writable.
 */
enum HcdvStatus hcdv_report_tuple_hits(const struct HcdvReport *handle,
                                       uint32_t index,
                                       uint32_t *hits_out);

/**
 * Statement coverage of the report: hit and total counts.
 *
 * # Safety
 * `handle` must be a live report handle; out pointers must be writable
 * or null.
 */
enum HcdvStatus hcdv_report_statements(const struct HcdvReport *handle,
                                       uint32_t *hit_out,
                                       uint32_t *total_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HANDOVER_CDV_H */
