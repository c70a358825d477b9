#ifndef WISENSE_H
#define WISENSE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum WsStatus {
  WS_STATUS_OK = 0,
  WS_STATUS_NULL_POINTER = 1,
  WS_STATUS_INVALID_ARGUMENT = 2,
  WS_STATUS_IO = 3,
  WS_STATUS_FORMAT = 4,
  WS_STATUS_CONFIG = 5,
  /**
   * No periodicity, flat baseline, constant or too-short series.
   */
  WS_STATUS_DETECTION_NEGATIVE = 6,
  WS_STATUS_BUFFER_TOO_SMALL = 7,
  WS_STATUS_PANIC = 8,
} WsStatus;

typedef enum WsAggregationKind {
  WS_AGGREGATION_KIND_MEAN = 0,
  WS_AGGREGATION_KIND_MAX_VARIANCE = 1,
  /**
   * Uses the `subcarrier` argument.
   */
  WS_AGGREGATION_KIND_SINGLE = 2,
} WsAggregationKind;

typedef enum WsBand {
  WS_BAND_GHZ2_4 = 0,
  WS_BAND_GHZ6 = 1,
} WsBand;

typedef enum WsEventKind {
  WS_EVENT_KIND_BREATH_HOLD = 0,
  WS_EVENT_KIND_MOTION = 1,
} WsEventKind;

/**
 * Opaque streaming moving-average handle.
 */
typedef struct WsMovingAverage WsMovingAverage;

/**
 * Opaque trace handle.
 */
typedef struct WsTrace WsTrace;

typedef struct WsDetectorParams {
  double flat_var_threshold;
  double min_hold_s;
  double motion_energy_threshold;
  double hysteresis_ratio;
  double min_peak_distance_s;
  double min_prominence;
} WsDetectorParams;

typedef struct WsEvent {
  double start_s;
  double end_s;
  enum WsEventKind kind;
  double score;
} WsEvent;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ws_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length including the NUL.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t ws_last_error_message(char *buf, size_t len);

struct WsDetectorParams ws_detector_params_default(void);

/**
 * Reads a trace file; the format follows the extension (`.csv` or binary).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum WsStatus ws_trace_read(const char *path, struct WsTrace **out);

/**
 * Writes a trace; the format follows the extension (`.csv` or binary).
 *
 * # Safety
 * `trace` must be a live handle; `path` a NUL-terminated string.
 */
enum WsStatus ws_trace_write(const struct WsTrace *trace, const char *path);

/**
 * Releases a trace handle. Null is ignored.
 *
 * # Safety
 * `trace` must be null or a handle not yet freed.
 */
void ws_trace_free(struct WsTrace *trace);

/**
 * Number of slots; 0 for a null handle.
 *
 * # Safety
 * `trace` must be null or a live handle.
 */
size_t ws_trace_len(const struct WsTrace *trace);

/**
 * # Safety
 * `trace` must be null or a live handle.
 */
size_t ws_trace_num_subcarriers(const struct WsTrace *trace);

/**
 * # Safety
 * `trace` must be null or a live handle.
 */
double ws_trace_sample_rate_hz(const struct WsTrace *trace);

/**
 * # Safety
 * `trace` must be null or a live handle.
 */
double ws_trace_center_frequency_hz(const struct WsTrace *trace);

/**
 * # Safety
 * `trace` must be null or a live handle.
 */
bool ws_trace_has_cfr(const struct WsTrace *trace);

/**
 * # Safety
 * `trace` must be null or a live handle.
 */
bool ws_trace_has_rssi(const struct WsTrace *trace);

/**
 * Per-frame CFR amplitude reduced across subcarriers.
 *
 * # Safety
 * `trace` must be a live handle, `out` valid for `capacity` doubles and
 * `count` valid for a write.
 */
enum WsStatus ws_trace_amplitude_series(const struct WsTrace *trace,
                                        enum WsAggregationKind kind,
                                        size_t subcarrier,
                                        double *out,
                                        size_t capacity,
                                        size_t *count);

/**
 * RSSI stream in dBm.
 *
 * # Safety
 * As [`ws_trace_amplitude_series`].
 */
enum WsStatus ws_trace_rssi_series(const struct WsTrace *trace,
                                   double *out,
                                   size_t capacity,
                                   size_t *count);

/**
 * Synthesizes a trace from a TOML scenario document.
 *
 * # Safety
 * `scenario_toml` must be a NUL-terminated string; `out` valid for writes.
 */
enum WsStatus ws_simulate(const char *scenario_toml,
                          enum WsBand band,
                          uint64_t seed,
                          struct WsTrace **out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum WsStatus ws_ma_new(size_t window, struct WsMovingAverage **out);

/**
 * Pushes one sample and writes the current average to `out`.
 *
 * # Safety
 * `ma` must be a live handle and `out` valid for a write.
 */
enum WsStatus ws_ma_update(struct WsMovingAverage *ma, double sample, double *out);

/**
 * # Safety
 * `ma` must be null or a live handle.
 */
void ws_ma_reset(struct WsMovingAverage *ma);

/**
 * # Safety
 * `ma` must be null or a handle not yet freed.
 */
void ws_ma_free(struct WsMovingAverage *ma);

/**
 * Smooths `len` samples into `out` (also `len` long).
 *
 * # Safety
 * `series` and `out` must be valid for `len` doubles.
 */
enum WsStatus ws_smooth_series(const double *series, size_t len, size_t window, double *out);

/**
 * # Safety
 * `out` must be valid for a write.
 */
enum WsStatus ws_quantize_rssi(double power_mw, int32_t *out);

/**
 * Breathing rate of a smoothed series. `params` may be null for defaults.
 *
 * # Safety
 * `series` valid for `len` doubles, `params` null or valid, `out_hz` valid.
 */
enum WsStatus ws_estimate_respiration_rate(const double *series,
                                           size_t len,
                                           double sample_rate_hz,
                                           const struct WsDetectorParams *params,
                                           double *out_hz);

/**
 * Breath holds in a smoothed series.
 *
 * # Safety
 * `series` valid for `len` doubles, `params` null or valid, `events` valid
 * for `capacity` entries, `count` valid.
 */
enum WsStatus ws_detect_breath_holds(const double *series,
                                     size_t len,
                                     double sample_rate_hz,
                                     const struct WsDetectorParams *params,
                                     struct WsEvent *events,
                                     size_t capacity,
                                     size_t *count);

/**
 * Motion episodes in a smoothed series.
 *
 * # Safety
 * As [`ws_detect_breath_holds`].
 */
enum WsStatus ws_detect_motion(const double *series,
                               size_t len,
                               double sample_rate_hz,
                               const struct WsDetectorParams *params,
                               struct WsEvent *events,
                               size_t capacity,
                               size_t *count);

/**
 * Full respiration analysis of a trace with the default reductions:
 * rate into `out_rate_hz`, breath holds (trace time) into `events`.
 *
 * # Safety
 * `trace` a live handle, `params` null or valid, `out_rate_hz` and `count`
 * valid, `events` valid for `capacity` entries.
 */
enum WsStatus ws_analyze_respiration(const struct WsTrace *trace,
                                     size_t window,
                                     const struct WsDetectorParams *params,
                                     double *out_rate_hz,
                                     struct WsEvent *events,
                                     size_t capacity,
                                     size_t *count);

/**
 * Motion episodes (trace time) of a trace with the default reduction.
 *
 * # Safety
 * As [`ws_analyze_respiration`] without the rate output.
 */
enum WsStatus ws_analyze_motion(const struct WsTrace *trace,
                                size_t window,
                                const struct WsDetectorParams *params,
                                struct WsEvent *events,
                                size_t capacity,
                                size_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WISENSE_H */
