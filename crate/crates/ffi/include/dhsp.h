#ifndef DHSP_H
#define DHSP_H

/* Generated by cbindgen from the dhsp-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every API call.
typedef enum DhspStatus {
  DHSP_STATUS_OK = 0,
  // A pointer was null or an argument failed to parse or validate.
  DHSP_STATUS_INVALID_ARGUMENT = 1,
  // The requested index or object does not exist.
  DHSP_STATUS_NOT_FOUND = 2,
  // The configuration is outside the supported range.
  DHSP_STATUS_UNSUPPORTED = 3,
  // An internal invariant failed.
  DHSP_STATUS_INTERNAL = 4,
} DhspStatus;

// An owned set of verified subset sum solutions.
typedef struct DhspSolutions DhspSolutions;

// Outcome of one pipeline run.
typedef struct DhspRunSummary {
  // True when some attempt completed and `parity` is meaningful.
  bool completed;
  // Recovered parity of the slope (0 or 1) when completed.
  uint8_t parity;
  uint32_t attempts;
  uint32_t retries;
  uint32_t failed_too_few_survivors;
  uint32_t failed_no_valid_pair;
  uint32_t failed_projection_missed;
  uint32_t failed_sv_not_found;
} DhspRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent error on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *dhsp_last_error(void);

// Library version as a static string.
const char *dhsp_version(void);

// Solve a subset sum instance.
//
// `weights` points to `weight_count` decimal strings; `target` is a decimal
// string. `lll_delta` ("p/q") and `lambda_policy` ("auto" or a decimal)
// may be null for the defaults. On success `*out` owns the solution set
// and must be released with `dhsp_solutions_free`. Finding no solution is
// still `DHSP_STATUS_OK`; the set is just empty.
//
// # Safety
// All pointers must be valid for the duration of the call.
enum DhspStatus dhsp_subset_sum_solve(const char *const *weights,
                                      size_t weight_count,
                                      const char *target,
                                      const char *lll_delta,
                                      const char *lambda_policy,
                                      struct DhspSolutions **out);

// Number of solutions in the set.
//
// # Safety
// `set` must be a live handle from `dhsp_subset_sum_solve`.
size_t dhsp_solutions_count(const struct DhspSolutions *set);

// Number of bits per solution (the instance size m).
//
// # Safety
// `set` must be a live handle from `dhsp_subset_sum_solve`.
size_t dhsp_solutions_arity(const struct DhspSolutions *set);

// Copy solution `index` into `buf` as one 0/1 byte per weight.
//
// # Safety
// `set` must be live and `buf` must hold at least `buf_len` bytes.
enum DhspStatus dhsp_solutions_bits(const struct DhspSolutions *set,
                                    size_t index,
                                    uint8_t *buf,
                                    size_t buf_len);

// Release a solution set.
//
// # Safety
// `set` must be null or a handle not freed before.
void dhsp_solutions_free(struct DhspSolutions *set);

// Run the end-to-end parity recovery for a width-n instance.
//
// `slope_decimal` fixes the hidden slope; pass null to draw it from the
// seed. The run itself is deterministic given (n, slope, seed,
// max_retries).
//
// # Safety
// `out` must point to writable memory; `slope_decimal` may be null.
enum DhspStatus dhsp_pipeline_run(uint32_t n,
                                  const char *slope_decimal,
                                  uint64_t seed,
                                  uint32_t max_retries,
                                  struct DhspRunSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DHSP_H */
