#ifndef MATCHED_WR_H
#define MATCHED_WR_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum MwrStatus {
  MWR_STATUS_OK = 0,
  MWR_STATUS_NULL_POINTER = 1,
  MWR_STATUS_EMPTY_DATA = 2,
  MWR_STATUS_ALL_TIES = 3,
  MWR_STATUS_UNDEFINED_RATIO = 4,
  MWR_STATUS_DEGENERATE_VARIANCE = 5,
  MWR_STATUS_INVALID_ARGUMENT = 6,
  MWR_STATUS_NO_EFFECT = 7,
  MWR_STATUS_INFEASIBLE = 8,
  MWR_STATUS_UNKNOWN_METHOD = 9,
  MWR_STATUS_INTERNAL = 10,
} MwrStatus;

/**
 * Shape of a confidence set.
 */
typedef enum MwrSetKind {
  /**
   * `[lower, upper]`.
   */
  MWR_SET_KIND_BOUNDED = 0,
  /**
   * `(-inf, upper]`.
   */
  MWR_SET_KIND_LOWER_UNBOUNDED = 1,
  /**
   * `[lower, +inf)`.
   */
  MWR_SET_KIND_UPPER_UNBOUNDED = 2,
  /**
   * `(-inf, lower] U [upper, +inf)`.
   */
  MWR_SET_KIND_RAY_UNION = 3,
  MWR_SET_KIND_WHOLE_LINE = 4,
  /**
   * No usable set; see `mwr_last_error_message`.
   */
  MWR_SET_KIND_UNDEFINED = 5,
} MwrSetKind;

typedef enum MwrTestMethod {
  MWR_TEST_METHOD_Z = 0,
  MWR_TEST_METHOD_Z_POCOCK = 1,
  MWR_TEST_METHOD_EXACT = 2,
} MwrTestMethod;

typedef enum MwrNbMethod {
  MWR_NB_METHOD_WALD = 0,
  MWR_NB_METHOD_MOVER_AC = 1,
  MWR_NB_METHOD_MOVER_WILSON = 2,
} MwrNbMethod;

typedef enum MwrWrMethod {
  MWR_WR_METHOD_POCOCK = 0,
  MWR_WR_METHOD_WALD = 1,
  MWR_WR_METHOD_WALD_LOG = 2,
  MWR_WR_METHOD_FIELLER = 3,
  MWR_WR_METHOD_MOVER_AC = 4,
  MWR_WR_METHOD_MOVER_WILSON = 5,
} MwrWrMethod;

typedef enum MwrDesignKind {
  /**
   * `p1` = net benefit, `p2` = decided probability.
   */
  MWR_DESIGN_KIND_NET_BENEFIT = 0,
  /**
   * `p1` = win ratio, `p2` = decided probability.
   */
  MWR_DESIGN_KIND_WIN_RATIO = 1,
  /**
   * `p1` = win probability, `p2` = loss probability.
   */
  MWR_DESIGN_KIND_RAW = 2,
} MwrDesignKind;

/**
 * Opaque handle holding counts and a significance level.
 */
typedef struct MwrAnalysis MwrAnalysis;

typedef struct MwrTestResult {
  /**
   * NaN for the exact test.
   */
  double statistic;
  double p_value;
} MwrTestResult;

/**
 * A confidence set. Unused endpoints are NaN.
 */
typedef struct MwrSet {
  enum MwrSetKind kind;
  double lower;
  double upper;
} MwrSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *mwr_last_error_message(void);

/**
 * Create an analysis handle from counts.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle pointer.
 */
enum MwrStatus mwr_analysis_new(uint64_t n_win,
                                uint64_t n_loss,
                                uint64_t n_tie,
                                double alpha,
                                bool rounded_z,
                                struct MwrAnalysis **out);

/**
 * Free a handle. NULL is ignored.
 *
 * # Safety
 * `h` must be NULL or a handle from `mwr_analysis_new` not yet freed.
 */
void mwr_analysis_free(struct MwrAnalysis *h);

/**
 * Net benefit `(n_w - n_l) / N`.
 *
 * # Safety
 * `h` must be a live handle and `out` a valid pointer.
 */
enum MwrStatus mwr_analysis_net_benefit(const struct MwrAnalysis *h, double *out);

/**
 * Win ratio `n_w / n_l`; `MWR_STATUS_UNDEFINED_RATIO` when there are no losses.
 *
 * # Safety
 * `h` must be a live handle and `out` a valid pointer.
 */
enum MwrStatus mwr_analysis_win_ratio(const struct MwrAnalysis *h, double *out);

/**
 * Run a test; `method` is an `MwrTestMethod` value.
 *
 * # Safety
 * `h` must be a live handle and `out` a valid pointer.
 */
enum MwrStatus mwr_analysis_test(const struct MwrAnalysis *h,
                                 uint32_t method,
                                 struct MwrTestResult *out);

/**
 * Net benefit confidence set; `method` is an `MwrNbMethod` value.
 *
 * # Safety
 * `h` must be a live handle and `out` a valid pointer.
 */
enum MwrStatus mwr_analysis_nb_interval(const struct MwrAnalysis *h,
                                        uint32_t method,
                                        struct MwrSet *out);

/**
 * Win ratio confidence set; `method` is an `MwrWrMethod` value. A method
 * that cannot be computed for these counts returns an error status.
 *
 * # Safety
 * `h` must be a live handle and `out` a valid pointer.
 */
enum MwrStatus mwr_analysis_wr_interval(const struct MwrAnalysis *h,
                                        uint32_t method,
                                        struct MwrSet *out);

/**
 * Full report with every method, as JSON. Free with `mwr_string_free`.
 *
 * # Safety
 * `h` must be a live handle and `out` a valid pointer.
 */
enum MwrStatus mwr_analysis_report_json(const struct MwrAnalysis *h, char **out);

/**
 * Pairs needed for `target_power`; `kind` is an `MwrDesignKind` value.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MwrStatus mwr_sample_size(uint32_t kind,
                               double p1,
                               double p2,
                               double alpha,
                               double target_power,
                               uint64_t *out);

/**
 * Approximate power with `n_pairs` pairs.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MwrStatus mwr_power(uint32_t kind,
                         double p1,
                         double p2,
                         double alpha,
                         uint64_t n_pairs,
                         double *out);

/**
 * Run a simulation grid given as TOML text; writes the CSV report.
 * `threads` = 0 uses every core. Free the result with `mwr_string_free`.
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string and `out_csv` a valid pointer.
 */
enum MwrStatus mwr_simulate(const char *config_toml, uint32_t threads, char **out_csv);

/**
 * Free a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void mwr_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MATCHED_WR_H */
