#ifndef EVALCONTRACT_H
#define EVALCONTRACT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Juror vote codes accepted by the consensus functions.
 */
#define EC_VOTE_PASS 1

#define EC_VOTE_FAIL 0

#define EC_VOTE_UNUSABLE -1

typedef enum EcStatus {
  EC_STATUS_OK = 0,
  EC_STATUS_NULL_ARGUMENT = 1,
  EC_STATUS_INVALID_UTF8 = 2,
  EC_STATUS_PARSE_ERROR = 3,
  EC_STATUS_INVALID_ARGUMENT = 4,
  EC_STATUS_IO_ERROR = 5,
  EC_STATUS_GRADING_ERROR = 6,
  EC_STATUS_PANIC = 7,
} EcStatus;

typedef enum EcVotePattern {
  EC_VOTE_PATTERN_UNANIMOUS = 0,
  EC_VOTE_PATTERN_ONE_DISSENTER = 1,
  EC_VOTE_PATTERN_SPLIT = 2,
  EC_VOTE_PATTERN_REDUCED = 3,
} EcVotePattern;

/**
 * Opaque parsed contract.
 */
typedef struct EcContract EcContract;

/**
 * Opaque run trace read from disk.
 */
typedef struct EcTrace EcTrace;

/**
 * Population-level cumulative-logit coefficients with the run effect
 * already resolved to a scalar.
 */
typedef struct EcOrdinalCoefficients {
  double alpha;
  double beta_length;
  double beta_compact;
  double beta_interaction;
  double run_effect;
  double random_intercept;
  double tau0;
  double tau1;
} EcOrdinalCoefficients;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *ec_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void ec_string_free(char *s);

/**
 * Parse one contract document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum EcStatus ec_contract_parse(const char *json, struct EcContract **out);

/**
 * Rescale criterion weights in place so they sum to 100.
 *
 * # Safety
 * `contract` must be a live handle.
 */
enum EcStatus ec_contract_normalize(struct EcContract *contract);

/**
 * Validation report as JSON; `runnable` receives 1 when there are no violations.
 *
 * # Safety
 * `contract` must be a live handle; out-pointers must be writable.
 */
enum EcStatus ec_contract_validate(const struct EcContract *contract,
                                   int32_t *runnable,
                                   char **report_json);

/**
 * # Safety
 * `contract` must be a live handle; `out` must be writable.
 */
enum EcStatus ec_contract_to_json(const struct EcContract *contract, char **out);

/**
 * # Safety
 * `contract` must be null or a live handle; it is invalid afterwards.
 */
void ec_contract_free(struct EcContract *contract);

/**
 * Strict-majority decision over vote codes; `decision` receives 1 for pass, 0 for fail.
 *
 * # Safety
 * `votes` must point to `len` values (may be null when `len` is 0).
 */
enum EcStatus ec_jury_consensus(const int32_t *votes, size_t len, int32_t *decision);

/**
 * # Safety
 * `votes` must point to `len` values (may be null when `len` is 0).
 */
enum EcStatus ec_classify_vote_pattern(const int32_t *votes,
                                       size_t len,
                                       enum EcVotePattern *pattern);

/**
 * Grade a submission with scripted judges. `pool_json` is a pool config and
 * `script_json` a script document; the task result is returned as JSON.
 *
 * # Safety
 * All pointers must be valid; `result_json` must be writable.
 */
enum EcStatus ec_grade_scripted(const struct EcContract *contract,
                                const char *submission,
                                const char *pool_json,
                                const char *script_json,
                                char **result_json);

/**
 * Category probabilities `Pr(D=0), Pr(D=1), Pr(D=2)` written to `probs[0..3]`.
 *
 * # Safety
 * `coefficients` must be valid; `probs` must point to three writable doubles.
 */
enum EcStatus ec_ordinal_predict(const struct EcOrdinalCoefficients *coefficients,
                                 double length,
                                 double compact,
                                 double *probs);

/**
 * # Safety
 * `root` and `run_id` must be NUL-terminated; `out` must be writable.
 */
enum EcStatus ec_trace_read(const char *root, const char *run_id, struct EcTrace **out);

/**
 * Recompute task scores for `pool_id` from raw votes; JSON object task_id → score.
 *
 * # Safety
 * `trace` must be a live handle; `pool_id` NUL-terminated; `scores_json` writable.
 */
enum EcStatus ec_trace_replay(const struct EcTrace *trace, const char *pool_id, char **scores_json);

/**
 * Number of integrity findings in a trace; 0 means stored scores replay exactly.
 *
 * # Safety
 * `trace` must be a live handle; `findings` writable.
 */
enum EcStatus ec_trace_audit(const struct EcTrace *trace, size_t *findings);

/**
 * # Safety
 * `trace` must be null or a live handle; it is invalid afterwards.
 */
void ec_trace_free(struct EcTrace *trace);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EVALCONTRACT_H */
