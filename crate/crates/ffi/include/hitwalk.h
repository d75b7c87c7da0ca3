#ifndef HITWALK_H
#define HITWALK_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. The numeric values of the first four match the CLI exit codes.
 */
typedef enum HwStatus {
  HW_STATUS_OK = 0,
  HW_STATUS_INVALID_INPUT = 2,
  HW_STATUS_HYPOTHESIS_VIOLATION = 3,
  HW_STATUS_NUMERICAL_FAILURE = 4,
  HW_STATUS_NULL_POINTER = 5,
  HW_STATUS_BUFFER_TOO_SMALL = 6,
  HW_STATUS_PANIC = 7,
} HwStatus;

/**
 * The walk on a graph with one target node made absorbing.
 */
typedef struct HwAbsorbing HwAbsorbing;

/**
 * A graph together with its simple random walk.
 */
typedef struct HwGraph HwGraph;

typedef struct HwSimSummary {
  uint64_t trials;
  uint64_t completed;
  uint64_t capped_count;
  double mean;
  double variance;
  uint64_t min;
  uint64_t max;
} HwSimSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or an empty string. Valid
 * until the next `hw_` call on the same thread.
 */
const char *hw_last_error(void);

/**
 * Builds a preset graph from `name:args`, e.g. `"hypercube:3"`.
 */
enum HwStatus hw_graph_from_preset(const char *preset, struct HwGraph **out);

/**
 * Builds a graph from a JSON graph spec.
 */
enum HwStatus hw_graph_from_json(const char *json, struct HwGraph **out);

/**
 * Node count, or 0 for a null handle.
 */
size_t hw_graph_node_count(const struct HwGraph *graph);

void hw_graph_free(struct HwGraph *graph);

enum HwStatus hw_absorbing_new(const struct HwGraph *graph,
                               size_t target,
                               struct HwAbsorbing **out);

void hw_absorbing_free(struct HwAbsorbing *system);

/**
 * Number of non-target nodes, or 0 for a null handle.
 */
size_t hw_absorbing_dim(const struct HwAbsorbing *system);

/**
 * Writes `P(tau = n)` for `n = 1..=horizon` into `out[0..horizon]`.
 */
enum HwStatus hw_pmf(const struct HwAbsorbing *system,
                     size_t start,
                     size_t horizon,
                     double *out,
                     size_t out_len);

/**
 * Mean, second moment and variance of the hitting time from `start`. Any of
 * the output pointers may be null.
 */
enum HwStatus hw_moments(const struct HwAbsorbing *system,
                         size_t start,
                         double *mean,
                         double *second,
                         double *variance);

/**
 * `P(tau^c <= t)` for the rate-1 continuous-time walk.
 */
enum HwStatus hw_ct_cdf(const struct HwAbsorbing *system,
                        size_t start,
                        double t,
                        double tol,
                        double *out);

/**
 * Density of `tau^c` at `t`.
 */
enum HwStatus hw_ct_pdf(const struct HwAbsorbing *system,
                        size_t start,
                        double t,
                        double tol,
                        double *out);

/**
 * Seeded simulation; the result does not depend on `workers`.
 */
enum HwStatus hw_simulate(const struct HwGraph *graph,
                          size_t start,
                          size_t target,
                          uint64_t trials,
                          uint64_t seed,
                          uint32_t workers,
                          struct HwSimSummary *out);

/**
 * Generating-function coefficients `P(tau = n)`, `n = 0..=horizon`, by the
 * trace recursion. Needs `out_len >= horizon + 1` and a vertex-transitive graph.
 */
enum HwStatus hw_gf_series(const struct HwGraph *graph,
                           size_t start,
                           size_t target,
                           size_t horizon,
                           double *out,
                           size_t out_len);

/**
 * Library version as a static string.
 */
const char *hw_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HITWALK_H */
