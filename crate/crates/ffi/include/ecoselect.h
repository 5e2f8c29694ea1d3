#ifndef ECOSELECT_H
#define ECOSELECT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum EcoStatus {
  ECO_OK = 0,
  // Invalid configuration or argument.
  ECO_ERR_CONFIG = 1,
  // Malformed or insufficient data.
  ECO_ERR_DATA = 2,
  // Numerical failure (collinearity, conditioning).
  ECO_ERR_NUMERIC = 3,
  // More predictors than the engine supports.
  ECO_ERR_CAPACITY = 4,
  // A required pointer was null or a string was not UTF-8.
  ECO_ERR_ARGUMENT = 5,
  // An internal panic was caught.
  ECO_ERR_PANIC = 6,
} EcoStatus;

// Cross-validated losses and inclusion probabilities of every purchased
// set.
typedef struct EcoAnalysis EcoAnalysis;

// A dataset: one response and up to 24 named predictors.
typedef struct EcoDataset EcoDataset;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on this thread, or null if the last
// call succeeded. Valid until the next call into this library on the same
// thread.
const char *eco_last_error(void);

// Library version as a static NUL-terminated string.
const char *eco_version(void);

// Build a dataset from `n` responses and an `n × p` row-major predictor
// matrix. Predictors are named `x1..xp`.
//
// # Safety
// `y` must point to `n` doubles, `x` to `n * p` doubles, and `out` to
// writable storage for one handle.
enum EcoStatus eco_dataset_new(const double *y,
                               const double *x,
                               size_t n,
                               size_t p,
                               struct EcoDataset **out);

// Load a CSV file with a header row.
//
// # Safety
// String arguments must be NUL-terminated; `predictors` must point to `p`
// such strings; `out` must be writable.
enum EcoStatus eco_dataset_load_csv(const char *path,
                                    const char *response,
                                    const char *const *predictors,
                                    size_t p,
                                    struct EcoDataset **out);

// A copy of `ds` with every predictor centered and scaled to unit
// variance.
//
// # Safety
// `ds` must be a live dataset handle and `out` writable.
enum EcoStatus eco_dataset_standardize(const struct EcoDataset *ds, struct EcoDataset **out);

// Number of cases, or 0 for a null handle.
//
// # Safety
// `ds` must be null or a live dataset handle.
size_t eco_dataset_rows(const struct EcoDataset *ds);

// Number of predictors, or 0 for a null handle.
//
// # Safety
// `ds` must be null or a live dataset handle.
size_t eco_dataset_predictors(const struct EcoDataset *ds);

// # Safety
// `ds` must be null or a handle not yet freed.
void eco_dataset_free(struct EcoDataset *ds);

// Cross-validate every purchased set. `g <= 0` selects `g = n`;
// `prior_p` is the prior inclusion probability of each predictor.
//
// # Safety
// `ds` must be a live dataset handle and `out` writable.
enum EcoStatus eco_analyze(const struct EcoDataset *ds,
                           size_t folds,
                           uint64_t seed,
                           double g,
                           double prior_p,
                           struct EcoAnalysis **out);

// # Safety
// `a` must be null or a handle not yet freed.
void eco_analysis_free(struct EcoAnalysis *a);

// Cross-validated loss of the purchased set with bitmask `bits` (bit `j`
// set when predictor `j + 1` is purchased).
//
// # Safety
// `a` must be a live analysis handle and `loss` writable.
enum EcoStatus eco_analysis_loss(const struct EcoAnalysis *a, uint32_t bits, double *loss);

// Inclusion probability of every predictor inside the purchased set
// `bits`, written to `probs[0..len]`; `len` must equal the predictor
// count.
//
// # Safety
// `a` must be a live analysis handle and `probs` must hold `len` doubles.
enum EcoStatus eco_analysis_inclusion(const struct EcoAnalysis *a,
                                      uint32_t bits,
                                      double *probs,
                                      size_t len);

// Optimal purchased set when every predictor costs `price`.
//
// # Safety
// `a` must be a live analysis handle; `bits` and `total` writable.
enum EcoStatus eco_analysis_optimal_uniform(const struct EcoAnalysis *a,
                                            double price,
                                            uint32_t *bits,
                                            double *total);

// Best wave to start buying a predictor, given per-wave least losses
// without it (`without[0..waves]`) and with it (`with[0..waves]`).
// Writes the earliest minimizing wave (1-based) or 0 for no purchase.
//
// # Safety
// `without` and `with` must each hold `waves` doubles; `wave` and
// `objective` must be writable.
enum EcoStatus eco_optimal_wave(const double *without,
                                const double *with,
                                size_t waves,
                                double discount,
                                double price,
                                uint32_t *wave,
                                double *objective);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ECOSELECT_H */
