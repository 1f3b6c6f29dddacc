/* SPDX-License-Identifier: Apache-2.0 */

#ifndef HFP_H
#define HFP_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by fallible calls.
 */
typedef enum HfpStatus {
  HFP_STATUS_OK = 0,
  HFP_STATUS_NULL_ARGUMENT = 1,
  HFP_STATUS_INVALID_UTF8 = 2,
  HFP_STATUS_PARSE = 3,
  HFP_STATUS_SCHEMA = 4,
  HFP_STATUS_INTEGRITY = 5,
  HFP_STATUS_IO = 6,
  HFP_STATUS_INFEASIBLE = 7,
  HFP_STATUS_CONFIG = 8,
  HFP_STATUS_INTERNAL = 9,
  HFP_STATUS_PANIC = 10,
} HfpStatus;

typedef enum HfpMethod {
  HFP_METHOD_BASELINE = 0,
  HFP_METHOD_SA = 1,
  HFP_METHOD_RL = 2,
} HfpMethod;

/**
 * Opaque design handle.
 */
typedef struct HfpDesign HfpDesign;

/**
 * Opaque solution handle.
 */
typedef struct HfpSolution HfpSolution;

/**
 * Run options; start from [`hfp_run_options_default`].
 */
typedef struct HfpRunOptions {
  /**
   * One of the [`HfpMethod`] values.
   */
  uint32_t method;
  uint64_t seed;
  double omega;
  double beta;
  double gamma;
  double tau;
  uint32_t n_max;
  uint32_t k_interval;
  uint32_t max_steps;
} HfpRunOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a design from a NUL-terminated JSON string.
 *
 * # Safety
 * `json` must be a valid C string and `out` a valid pointer.
 */
enum HfpStatus hfp_design_from_json(const char *json, struct HfpDesign **out);

/**
 * Loads a design file.
 *
 * # Safety
 * `path` must be a valid C string and `out` a valid pointer.
 */
enum HfpStatus hfp_design_load(const char *path, struct HfpDesign **out);

/**
 * # Safety
 * `design` must come from this library and not be freed twice; null is ignored.
 */
void hfp_design_free(struct HfpDesign *design);

/**
 * Number of blocks; 0 for null.
 *
 * # Safety
 * `design` must be null or a live handle.
 */
size_t hfp_design_block_count(const struct HfpDesign *design);

struct HfpRunOptions hfp_run_options_default(void);

/**
 * Floorplans `design`. A null `options` uses the defaults.
 *
 * # Safety
 * `design` must be a live handle, `options` null or valid, `out` valid.
 */
enum HfpStatus hfp_run(const struct HfpDesign *design,
                       const struct HfpRunOptions *options,
                       struct HfpSolution **out);

/**
 * Objective `f` of the solution; NaN for null.
 *
 * # Safety
 * `solution` must be null or a live handle.
 */
double hfp_solution_objective(const struct HfpSolution *solution);

/**
 * 1 when all constraints hold, 0 otherwise or for null.
 *
 * # Safety
 * `solution` must be null or a live handle.
 */
int32_t hfp_solution_feasible(const struct HfpSolution *solution);

/**
 * Result JSON; free the string with [`hfp_string_free`].
 *
 * # Safety
 * `solution` must be a live handle and `out` valid.
 */
enum HfpStatus hfp_solution_to_json(const struct HfpSolution *solution, char **out);

/**
 * # Safety
 * `s` must come from this library; null is ignored.
 */
void hfp_string_free(char *s);

/**
 * Writes an SVG rendering of the solution.
 *
 * # Safety
 * `solution` must be a live handle and `path` a valid C string.
 */
enum HfpStatus hfp_solution_write_svg(const struct HfpSolution *solution, const char *path);

/**
 * # Safety
 * `solution` must come from this library and not be freed twice; null is ignored.
 */
void hfp_solution_free(struct HfpSolution *solution);

/**
 * Message for the last failed call on this thread; empty after a success. The
 * pointer stays valid until the next library call on the same thread.
 */
const char *hfp_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HFP_H */
