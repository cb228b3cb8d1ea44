#ifndef HEATREC_H
#define HEATREC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum HrStatus {
  /**
   * success
   */
  HrStatusOk = 0,
  /**
   * a required pointer argument was NULL
   */
  HrStatusNullPointer = 1,
  /**
   * a string argument was not valid UTF-8
   */
  HrStatusInvalidUtf8 = 2,
  /**
   * the config failed to load, parse, or validate; see `hr_last_error`
   */
  HrStatusInvalidConfig = 3,
  /**
   * the reconstruction itself failed; see `hr_last_error`
   */
  HrStatusRunFailed = 4,
  /**
   * an index was out of range
   */
  HrStatusOutOfRange = 5,
  /**
   * the caller's buffer was too small; required size is reported instead
   */
  HrStatusBufferTooSmall = 6,
} HrStatus;

/**
 * Opaque handle: a loaded and field-checked experiment configuration.
 */
typedef struct HrConfig HrConfig;

/**
 * Opaque handle: a completed reconstruction run.
 */
typedef struct HrSweep HrSweep;

/**
 * One row of a τ-sweep, in the same order as the CSV report.
 */
typedef struct HrSweepRow {
  double tau;
  double re_estimate;
  double im_estimate;
  /**
   * NaN when the config supplies no reference value
   */
  double reference;
  /**
   * NaN when the config supplies no reference value
   */
  double rel_error;
  double quad_error;
  double wall_ms;
} HrSweepRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the message of the most recent error on this thread into `buf`
 * (NUL-terminated, truncated to `cap`). Returns the full message length in
 * bytes, excluding the NUL; 0 means no error has occurred yet.
 *
 * # Safety
 * `buf` must point to `cap` writable bytes, or be NULL (query length only).
 */
uintptr_t hr_last_error(char *buf, uintptr_t cap);

/**
 * Load a config from a TOML file at `path`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be a valid pointer.
 * On success `*out` owns the handle; release it with [`hr_config_free`].
 */
enum HrStatus hr_config_load(const char *path, struct HrConfig **out);

/**
 * Parse a config from TOML text (for callers that manage files themselves).
 *
 * # Safety
 * As [`hr_config_load`], with `text` a NUL-terminated TOML document.
 */
enum HrStatus hr_config_parse(const char *text, struct HrConfig **out);

/**
 * Release a config handle. NULL is a no-op.
 *
 * # Safety
 * `cfg` must come from `hr_config_load`/`hr_config_parse` and not have been
 * freed already.
 */
void hr_config_free(struct HrConfig *cfg);

/**
 * Check scenario admissibility without running anything. On rejection the
 * error message names the violated condition.
 *
 * # Safety
 * `cfg` must be a live config handle.
 */
enum HrStatus hr_config_validate(const struct HrConfig *cfg);

/**
 * Run the reconstruction described by `cfg`. On success `*out` owns the
 * sweep handle; release it with [`hr_sweep_free`].
 *
 * # Safety
 * `cfg` must be a live config handle and `out` a valid pointer.
 */
enum HrStatus hr_reconstruct(const struct HrConfig *cfg, struct HrSweep **out);

/**
 * Number of rows in the sweep (0 for NULL).
 *
 * # Safety
 * `sweep` must be a live sweep handle or NULL.
 */
uintptr_t hr_sweep_len(const struct HrSweep *sweep);

/**
 * Copy row `index` into `*row`.
 *
 * # Safety
 * `sweep` must be a live sweep handle and `row` a valid pointer.
 */
enum HrStatus hr_sweep_row(const struct HrSweep *sweep, uintptr_t index, struct HrSweepRow *row);

/**
 * Index of the best stable row, or the row count when the sweep is empty of
 * a best row (should not happen for a successful run).
 *
 * # Safety
 * `sweep` must be a live sweep handle.
 */
uintptr_t hr_sweep_best_row(const struct HrSweep *sweep);

/**
 * Copy the CSV report into `buf` (NUL-terminated). Returns the full CSV
 * length in bytes excluding the NUL; if it exceeds `cap - 1` nothing beyond
 * the truncation point is written — call again with a larger buffer.
 *
 * # Safety
 * `sweep` must be a live sweep handle; `buf` must point to `cap` writable
 * bytes, or be NULL (query length only).
 */
uintptr_t hr_sweep_csv(const struct HrSweep *sweep, char *buf, uintptr_t cap);

/**
 * Release a sweep handle. NULL is a no-op.
 *
 * # Safety
 * `sweep` must come from `hr_reconstruct` and not have been freed already.
 */
void hr_sweep_free(struct HrSweep *sweep);

/**
 * Evaluate the 1-d probe kernel in split form: `K = exp(*exponent) * *k`,
 * with `*dk` the matching x-derivative factor. Direct passthrough for
 * callers embedding the kernel in their own quadrature.
 *
 * # Safety
 * `exponent`, `k`, `dk` must be valid pointers.
 */
enum HrStatus hr_kernel_pair_1d(double a,
                                double b,
                                double x,
                                double t,
                                double *exponent,
                                double *k,
                                double *dk);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HEATREC_H */
