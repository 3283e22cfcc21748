#ifndef STRATCAST_H
#define STRATCAST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum StratStatus {
  STRAT_STATUS_OK = 0,
  /**
   * A required pointer was null or a string was not UTF-8.
   */
  STRAT_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Bad configuration JSON or an invalid setting.
   */
  STRAT_STATUS_CONFIG = 2,
  /**
   * The data cannot be used (parse errors, too short, not aligned, ...).
   */
  STRAT_STATUS_DATA = 3,
  /**
   * Fitting or prediction failed.
   */
  STRAT_STATUS_MODEL = 4,
  STRAT_STATUS_IO = 5,
  /**
   * The output buffer is smaller than the forecast.
   */
  STRAT_STATUS_BUFFER_TOO_SMALL = 6,
  /**
   * An internal panic was caught.
   */
  STRAT_STATUS_INTERNAL = 7,
} StratStatus;

/**
 * Opaque fitted forecaster (one model set per cross-validation fold).
 */
typedef struct StratForecaster StratForecaster;

/**
 * Opaque multi-series dataset.
 */
typedef struct StratFrame StratFrame;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or an empty string.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *strat_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *strat_version(void);

/**
 * Loads a long-format CSV. `roles_json` names the columns, e.g.
 * `{"id":"id","datetime":"date","target":"y"}`; `frequency` is a step such
 * as `"1"`, `"1d"` or `"1w"`.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
enum StratStatus strat_frame_from_csv(const char *path,
                                      const char *roles_json,
                                      const char *frequency,
                                      struct StratFrame **out);

/**
 * Builds a target-only frame on an integer time grid starting at 0 with
 * step 1. Series `i` is named `ids[i]` and holds `lengths[i]` values taken
 * consecutively from `values`.
 *
 * # Safety
 * `ids` and `lengths` must hold `n_series` entries and `values` the sum of
 * `lengths`; `out` must be writable.
 */
enum StratStatus strat_frame_from_arrays(size_t n_series,
                                         const char *const *ids,
                                         const size_t *lengths,
                                         const double *values,
                                         struct StratFrame **out);

/**
 * Number of series in a frame (0 for a null handle).
 *
 * # Safety
 * `frame` must be null or a live handle.
 */
size_t strat_frame_n_series(const struct StratFrame *frame);

/**
 * # Safety
 * `frame` must be null or a handle not yet freed.
 */
void strat_frame_free(struct StratFrame *frame);

/**
 * Fits a forecaster on `frame`. `spec_json` describes the cell, e.g.
 * `{"history":24,"horizon":12,"strategy":{"kind":"mimo"},"model":{"kind":"ridge"}}`.
 *
 * # Safety
 * `frame` must be a live handle, `spec_json` NUL-terminated and `out`
 * writable.
 */
enum StratStatus strat_forecaster_fit(const struct StratFrame *frame,
                                      const char *spec_json,
                                      struct StratForecaster **out);

/**
 * Forecast horizon of a fitted forecaster (0 for a null handle).
 *
 * # Safety
 * `fc` must be null or a live handle.
 */
size_t strat_forecaster_horizon(const struct StratForecaster *fc);

/**
 * Forecasts past the end of every series in `context`. Values are written
 * series by series (sorted by id), `horizon` per series. `written` receives
 * the number of values needed, also when the buffer is too small.
 *
 * # Safety
 * Handles must be live, `out` must hold `capacity` doubles and `written`
 * must be writable.
 */
enum StratStatus strat_forecaster_predict(const struct StratForecaster *fc,
                                          const struct StratFrame *context,
                                          double *out,
                                          size_t capacity,
                                          size_t *written);

/**
 * # Safety
 * `fc` must be null or a handle not yet freed.
 */
void strat_forecaster_free(struct StratForecaster *fc);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STRATCAST_H */
