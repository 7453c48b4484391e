#ifndef NEGDYN_H
#define NEGDYN_H

/* Generated from the negdyn-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Excitation case selector for [`negdyn_model_new`]: 0 places the
 * initial excitation on a shared qubit, 1 inside one ensemble.
 */
#define NEGDYN_CASE_COMMON 0

/**
 * See [`NEGDYN_CASE_COMMON`].
 */
#define NEGDYN_CASE_SIDE 1

/**
 * Number of coefficient slots written by [`negdyn_coefficients`].
 * Spelled as a literal so the generated header carries the value.
 */
#define NEGDYN_COEFF_COUNT 11

/**
 * Result of every fallible call. Zero means success; anything else
 * leaves the output parameters untouched.
 */
typedef enum NegdynStatus {
  NEGDYN_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  NEGDYN_STATUS_NULL_ARGUMENT = 1,
  /**
   * The case code or the ensemble sizes describe no valid model.
   */
  NEGDYN_STATUS_INVALID_CONFIG = 2,
  /**
   * The requested computation needs more qubits than the given cap.
   */
  NEGDYN_STATUS_CAP_EXCEEDED = 3,
  /**
   * Integration or eigensolving failed to converge.
   */
  NEGDYN_STATUS_NUMERICAL_FAILURE = 4,
  /**
   * An internal invariant was violated; the library state is still
   * sound, the call simply did nothing.
   */
  NEGDYN_STATUS_INTERNAL_PANIC = 5,
} NegdynStatus;

/**
 * Opaque model handle: one excitation case and one geometry.
 */
typedef struct NegdynModel NegdynModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a model. `case` is [`NEGDYN_CASE_COMMON`] or
 * [`NEGDYN_CASE_SIDE`]; `side_count` is the qubits per ensemble and
 * `common_count` the qubits shared by both environments. On success
 * writes a handle to `out`; release it with [`negdyn_model_free`].
 */
enum NegdynStatus negdyn_model_new(uint32_t case_,
                                   uint32_t side_count,
                                   uint32_t common_count,
                                   struct NegdynModel **out);

/**
 * Releases a handle from [`negdyn_model_new`]. Null is a no-op.
 */
void negdyn_model_free(struct NegdynModel *model);

/**
 * Closed-form negativity between the two ensembles at time `t`.
 */
enum NegdynStatus negdyn_negativity(const struct NegdynModel *model, double t, double *out);

/**
 * Long-time limit of the negativity.
 */
enum NegdynStatus negdyn_stationary_negativity(const struct NegdynModel *model, double *out);

/**
 * Closed-form state coefficients at time `t`, written into an
 * `out` buffer of [`NEGDYN_COEFF_COUNT`] doubles.
 */
enum NegdynStatus negdyn_coefficients(const struct NegdynModel *model, double t, double *out);

/**
 * Brute-force negativity from integrating the full master equation,
 * for cross-checking the closed form. Refuses models with more than
 * `cap` total qubits.
 */
enum NegdynStatus negdyn_oracle_negativity(const struct NegdynModel *model,
                                           double t,
                                           uint32_t cap,
                                           double *out);

/**
 * Total qubit count 2N + n of the model.
 */
enum NegdynStatus negdyn_total_qubits(const struct NegdynModel *model, uint32_t *out);

/**
 * Library version as a static NUL-terminated string; never null, never
 * freed by the caller.
 */
const char *negdyn_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEGDYN_H */
