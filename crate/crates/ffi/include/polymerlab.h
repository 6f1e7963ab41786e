#ifndef POLYMERLAB_H
#define POLYMERLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes; 0 is success.
typedef enum PlStatus {
  PL_STATUS_OK = 0,
  PL_STATUS_NULL_POINTER = 1,
  PL_STATUS_INVALID_ARGUMENT = 2,
  PL_STATUS_BETA_OUT_OF_RANGE = 3,
  PL_STATUS_BUDGET_EXHAUSTED = 4,
  PL_STATUS_HORIZON_EXCEEDED = 5,
  PL_STATUS_NOT_APPLICABLE = 6,
  PL_STATUS_TIE_DETECTED = 7,
  PL_STATUS_CRITERIA_CONFLICT = 8,
  PL_STATUS_CONFIG = 9,
  PL_STATUS_IO = 10,
  PL_STATUS_PANIC = 11,
} PlStatus;

// Slowly varying factor of the jump law.
typedef enum PlEll {
  PL_ELL_CONSTANT = 0,
  // (log(e + x))^gamma.
  PL_ELL_LOG_POWER = 1,
} PlEll;

// Environment law.
typedef enum PlEnvFamily {
  PL_ENV_FAMILY_GAUSSIAN = 0,
  PL_ENV_FAMILY_RADEMACHER = 1,
} PlEnvFamily;

// Environment law.
typedef struct PlEnv PlEnv;

// One seed-keyed environment realization.
typedef struct PlField PlField;

// Heavy-tailed jump law with its truncated kernel.
typedef struct PlWalk PlWalk;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static nul-terminated string.
const char *pl_version(void);

// Copies the calling thread's last error message into `buf` (truncated and
// always nul-terminated when `len > 0`). Returns the full message length
// including the terminator, or 0 when there is no message.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t pl_last_error_message(char *buf, size_t len);

// Builds a normalized jump law. `gamma` is ignored for the constant family.
// `tail_cut` > 0 fixes the support; 0 chooses it from `tail_tolerance`.
//
// # Safety
// `out` must point to writable storage for one handle.
enum PlStatus pl_walk_new(double alpha,
                          enum PlEll ell,
                          double gamma,
                          double p0,
                          double tail_tolerance,
                          uint64_t tail_cut,
                          struct PlWalk **out_walk);

// # Safety
// `walk` must be null or a handle from [`pl_walk_new`] not yet freed.
void pl_walk_free(struct PlWalk *walk);

// Untruncated q(k) for |k| ≤ K and 0 beyond; these sum to 1 − ε_tail
// (see [`pl_walk_info`]). NaN for a null handle.
//
// # Safety
// `walk` must be null or a live handle.
double pl_walk_pmf(const struct PlWalk *walk, int64_t k);

// Support bound K, the analytic tail mass beyond it and the normalizing
// constant c. Any output pointer may be null.
//
// # Safety
// `walk` must be a live handle; non-null outputs must be writable.
enum PlStatus pl_walk_info(const struct PlWalk *walk,
                           uint64_t *out_tail_cut,
                           double *out_eps_tail,
                           double *out_c);

// Minimal a with n·P(|X| > a) ≤ 1.
//
// # Safety
// `walk` must be a live handle and `out_a` writable.
enum PlStatus pl_walk_scaling(const struct PlWalk *walk, uint64_t n, uint64_t *out_a);

// Entropy of the truncated law and the analytic bound on the neglected tail.
//
// # Safety
// `walk` must be a live handle; outputs writable.
enum PlStatus pl_walk_entropy(const struct PlWalk *walk, double *out_truncated, double *out_tail);

// Writes 1 for a recurrent walk and 0 for a transient one.
//
// # Safety
// `walk` must be a live handle and `out_recurrent` writable.
enum PlStatus pl_walk_is_recurrent(const struct PlWalk *walk, int32_t *out_recurrent);

// `beta_max` ≤ 0 selects the default finiteness interval.
//
// # Safety
// `out_env` must be writable.
enum PlStatus pl_env_new(enum PlEnvFamily family, double beta_max, struct PlEnv **out_env);

// Finite law given by `len` values and probabilities; standardized to mean
// 0 and variance 1.
//
// # Safety
// `values` and `probs` must each point to `len` readable doubles;
// `out_env` must be writable.
enum PlStatus pl_env_new_tabulated(const double *values,
                                   const double *probs,
                                   size_t len,
                                   double beta_max,
                                   struct PlEnv **out_env);

// # Safety
// `env` must be null or a handle not yet freed. Fields created from it
// stay valid after it is freed.
void pl_env_free(struct PlEnv *env);

// λ(β) = log E[exp(βω)].
//
// # Safety
// `env` must be a live handle and `out_lambda` writable.
enum PlStatus pl_env_lambda(const struct PlEnv *env, double beta, double *out_lambda);

// # Safety
// `env` must be a live handle and `out_field` writable.
enum PlStatus pl_field_new(const struct PlEnv *env,
                           uint64_t seed,
                           uint64_t replica,
                           struct PlField **out_field);

// # Safety
// `field` must be null or a handle not yet freed.
void pl_field_free(struct PlField *field);

// ω(n, x); NaN for a null handle.
//
// # Safety
// `field` must be null or a live handle.
double pl_field_omega(const struct PlField *field, uint64_t n, int64_t x);

// Runs the polymer for `n` steps and writes log Ẑ_k and the overlap I_k for
// k = 1..=n. Either output array may be null.
//
// # Safety
// Handles must be live; non-null outputs must hold `n` doubles.
enum PlStatus pl_polymer_trace(const struct PlWalk *walk,
                               const struct PlField *field,
                               double beta,
                               uint64_t n,
                               double *out_log_zhat,
                               double *out_overlap);

// Endpoint law after `n` steps on the window starting at `*out_x_lo`.
// Writes the window length to `*out_len`; when it exceeds `cap` nothing
// else is written and the call fails with `PL_STATUS_INVALID_ARGUMENT`, so
// callers can size a buffer with a first call using `cap = 0`.
//
// # Safety
// Handles must be live; `buf` must hold `cap` doubles (or be null with
// `cap = 0`); `out_x_lo` and `out_len` must be writable.
enum PlStatus pl_endpoint_law(const struct PlWalk *walk,
                              const struct PlField *field,
                              double beta,
                              uint64_t n,
                              double *buf,
                              size_t cap,
                              int64_t *out_x_lo,
                              size_t *out_len);

// Replica mean of (1/N) log Ẑ_N over `replicas` fields keyed by `seed`,
// with its standard error.
//
// # Safety
// Handles must be live; outputs writable.
enum PlStatus pl_free_energy(const struct PlWalk *walk,
                             const struct PlEnv *env,
                             uint64_t seed,
                             uint64_t replicas,
                             double beta,
                             uint64_t n,
                             double *out_mean,
                             double *out_se);

// Runs a batch experiment as the command-line tool would. `kind` is the
// experiment name (e.g. "free-energy"), `config_toml` the config text;
// `out_dir` may be null to use the directory named in the config.
// Fails with `PL_STATUS_CONFIG` on validation errors and with
// `PL_STATUS_NOT_APPLICABLE` when some cells failed (outputs are written).
//
// # Safety
// String arguments must be null or nul-terminated.
enum PlStatus pl_run_experiment(const char *kind, const char *config_toml, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POLYMERLAB_H */
