#ifndef GSP_H
#define GSP_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum GspStatus {
  GSP_STATUS_OK = 0,
  GSP_STATUS_NULL_POINTER = 1,
  GSP_STATUS_CONFIG = 2,
  GSP_STATUS_NUMERICAL = 3,
  GSP_STATUS_BUDGET_EXCEEDED = 4,
  GSP_STATUS_INVALID_ARGUMENT = 5,
  GSP_STATUS_PANIC = 6,
} GspStatus;

/**
 * Grid, scenarios, sizing and search settings ready for evaluation.
 */
typedef struct GspEvaluator GspEvaluator;

/**
 * Parsed grid.
 */
typedef struct GspGrid GspGrid;

/**
 * Cross-entropy search settings.
 */
typedef struct GspCeConfig {
  uint32_t iterations;
  uint32_t samples;
  double elite_fraction;
  double smoothing;
  uint64_t seed;
} GspCeConfig;

/**
 * Load step: `mw` of extra demand at `bus` from `onset_s` on.
 */
typedef struct GspEvent {
  uint32_t bus;
  double mw;
  double onset_s;
} GspEvent;

/**
 * Worst-case outcome of one placement. Frequencies in Hz.
 */
typedef struct GspEvaluation {
  double cost_hz;
  double nadir_hz;
  double coi_min_hz;
  double steady_state_hz;
  bool mixed_sign;
  bool settled;
} GspEvaluation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread, or null. Valid until the next call
 * on the same thread.
 */
const char *gsp_last_error_message(void);

/**
 * Parses grid-file text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` a valid pointer.
 */
enum GspStatus gsp_grid_parse(const char *text, struct GspGrid **out);

/**
 * # Safety
 * `grid` must come from [`gsp_grid_parse`] or be null.
 */
void gsp_grid_free(struct GspGrid *grid);

/**
 * # Safety
 * `grid` must be a live handle; `out` a valid pointer.
 */
enum GspStatus gsp_grid_bus_count(const struct GspGrid *grid, size_t *out);

/**
 * # Safety
 * `grid` must be a live handle; `out` a valid pointer.
 */
enum GspStatus gsp_grid_generator_count(const struct GspGrid *grid, size_t *out);

/**
 * Total storage inverse damping, W s, that holds the steady-state
 * deviation after a loss of `p_trans_w` within `delta_omega_max` rad/s.
 *
 * # Safety
 * `dampings` must point to `n_generators` values; `out` a valid pointer.
 */
enum GspStatus gsp_total_storage_bound(double p_trans_w,
                                       double delta_omega_max,
                                       const double *dampings,
                                       size_t n_generators,
                                       double *out);

/**
 * Per-unit share of `total` over `n_storage` units.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum GspStatus gsp_split_capacity(double total, uint32_t n_storage, double *out);

/**
 * Number of placements of `units` identical units over `buses` buses.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum GspStatus gsp_distribution_count(size_t buses, uint32_t units, uint64_t *out);

/**
 * Placements divided by CE evaluations.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum GspStatus gsp_complexity_ratio(size_t buses,
                                    uint32_t units,
                                    uint32_t iterations,
                                    uint32_t samples,
                                    double *out);

/**
 * Default CE settings.
 */
struct GspCeConfig gsp_ce_config_default(void);

/**
 * Builds an evaluator from a run configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` a valid pointer.
 */
enum GspStatus gsp_evaluator_from_config(const char *path, struct GspEvaluator **out);

/**
 * Builds an evaluator for `n_storage` units sized against the largest
 * event and a steady-state limit of `delta_f_ss_max_hz`. Each event is
 * its own scenario; the cost is the worst of them.
 *
 * # Safety
 * `grid` must be a live handle, `events` point to `n_events` entries and
 * `out` be a valid pointer.
 */
enum GspStatus gsp_evaluator_new(const struct GspGrid *grid,
                                 const struct GspEvent *events,
                                 size_t n_events,
                                 uint32_t n_storage,
                                 double delta_f_ss_max_hz,
                                 double dt,
                                 double horizon,
                                 struct GspEvaluator **out);

/**
 * # Safety
 * `ev` must come from an evaluator constructor or be null.
 */
void gsp_evaluator_free(struct GspEvaluator *ev);

/**
 * Bus count of the evaluator's grid.
 *
 * # Safety
 * `ev` must be a live handle; `out` a valid pointer.
 */
enum GspStatus gsp_evaluator_bus_count(const struct GspEvaluator *ev, size_t *out);

/**
 * Scores one placement given as units per bus, in bus order.
 *
 * # Safety
 * `ev` must be a live handle, `counts` point to `n_buses` values and
 * `out` be a valid pointer.
 */
enum GspStatus gsp_evaluate(const struct GspEvaluator *ev,
                            const uint32_t *counts,
                            size_t n_buses,
                            struct GspEvaluation *out);

/**
 * Exhaustive search. Writes the best placement into `best_counts`.
 *
 * # Safety
 * `ev` must be a live handle, `best_counts` hold `n_buses` values and
 * `out` be a valid pointer.
 */
enum GspStatus gsp_brute_force(const struct GspEvaluator *ev,
                               uint32_t *best_counts,
                               size_t n_buses,
                               struct GspEvaluation *out);

/**
 * Cross-entropy search with `config`, or the evaluator's own settings
 * when `config` is null.
 *
 * # Safety
 * `ev` must be a live handle, `config` valid or null, `best_counts` hold
 * `n_buses` values and `out` be a valid pointer.
 */
enum GspStatus gsp_ce_search(const struct GspEvaluator *ev,
                             const struct GspCeConfig *config,
                             uint32_t *best_counts,
                             size_t n_buses,
                             struct GspEvaluation *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GSP_H */
