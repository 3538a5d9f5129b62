#ifndef NQS_H
#define NQS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum NqsStatus {
  NQS_STATUS_OK = 0,
  NQS_STATUS_NULL_POINTER = 1,
  NQS_STATUS_INVALID_UTF8 = 2,
  NQS_STATUS_DOMAIN = 3,
  NQS_STATUS_RESOURCE = 4,
  NQS_STATUS_PARSE = 5,
  NQS_STATUS_VALIDATION = 6,
  NQS_STATUS_NUMERICAL = 7,
  NQS_STATUS_CONFIG = 8,
  NQS_STATUS_IO = 9,
  NQS_STATUS_SERIALIZATION = 10,
  NQS_STATUS_OUT_OF_RANGE = 11,
  NQS_STATUS_PANIC = 12,
} NqsStatus;

/**
 * Experiment configuration.
 */
typedef struct NqsConfig NqsConfig;

/**
 * Hamiltonian as a sum of Pauli strings.
 */
typedef struct NqsHamiltonian NqsHamiltonian;

/**
 * Record of one training run.
 */
typedef struct NqsRun NqsRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next call into this library from the same thread.
 */
const char *nqs_last_error(void);

/**
 * Library version as a static string.
 */
const char *nqs_version(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void nqs_string_free(char *s);

/**
 * Transverse-field Ising ring with `n_sites` sites and field `h`.
 *
 * # Safety
 * `out` must be a valid pointer to write a handle into.
 */
enum NqsStatus nqs_hamiltonian_tfi(size_t n_sites, double h, struct NqsHamiltonian **out);

/**
 * J1-J2 Heisenberg ring, optionally with the Marshall sign rotation applied.
 *
 * # Safety
 * `out` must be a valid pointer to write a handle into.
 */
enum NqsStatus nqs_hamiltonian_j1j2(size_t n_sites,
                                    double j2,
                                    bool marshall,
                                    struct NqsHamiltonian **out);

/**
 * Loads a Pauli-sum text file.
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` a valid pointer.
 */
enum NqsStatus nqs_hamiltonian_load(const char *path, struct NqsHamiltonian **out);

/**
 * # Safety
 * `h` must be NULL or a handle from this library that has not been freed.
 */
void nqs_hamiltonian_free(struct NqsHamiltonian *h);

/**
 * # Safety
 * `h` must be a live handle; `out` a valid pointer.
 */
enum NqsStatus nqs_hamiltonian_n_sites(const struct NqsHamiltonian *h, size_t *out);

/**
 * # Safety
 * `h` must be a live handle; `out` a valid pointer.
 */
enum NqsStatus nqs_hamiltonian_n_terms(const struct NqsHamiltonian *h, size_t *out);

/**
 * Exact ground-state energy over the full Hilbert space.
 *
 * # Safety
 * `h` must be a live handle; `out` a valid pointer.
 */
enum NqsStatus nqs_hamiltonian_ground_energy(const struct NqsHamiltonian *h, double *out);

/**
 * Parses a TOML experiment configuration; absent keys take preset values.
 *
 * # Safety
 * `toml` must be a nul-terminated string; `out` a valid pointer.
 */
enum NqsStatus nqs_config_from_toml(const char *toml, struct NqsConfig **out);

/**
 * Serializes the full configuration as TOML into a new string.
 *
 * # Safety
 * `cfg` must be a live handle; `out` a valid pointer.
 */
enum NqsStatus nqs_config_to_toml(const struct NqsConfig *cfg, char **out);

/**
 * # Safety
 * `cfg` must be NULL or a handle from this library that has not been freed.
 */
void nqs_config_free(struct NqsConfig *cfg);

/**
 * Trains one seed of `cfg`. A run that fails part way still produces a
 * handle; its summary carries the failure.
 *
 * # Safety
 * `cfg` must be a live handle; `out` a valid pointer.
 */
enum NqsStatus nqs_train(const struct NqsConfig *cfg, uint64_t seed, struct NqsRun **out);

/**
 * # Safety
 * `run` must be NULL or a handle from this library that has not been freed.
 */
void nqs_run_free(struct NqsRun *run);

/**
 * # Safety
 * `run` must be a live handle; `out` a valid pointer.
 */
enum NqsStatus nqs_run_epochs(const struct NqsRun *run, size_t *out);

/**
 * Batch energy of the 0-based epoch `index`.
 *
 * # Safety
 * `run` must be a live handle; `out` a valid pointer.
 */
enum NqsStatus nqs_run_energy(const struct NqsRun *run, size_t index, double *out);

/**
 * First epoch at which the run met its threshold, or 0 when it never did.
 *
 * # Safety
 * `run` must be a live handle; `out` a valid pointer.
 */
enum NqsStatus nqs_run_n_conv(const struct NqsRun *run, size_t *out);

/**
 * Run summary as a JSON document in a new string.
 *
 * # Safety
 * `run` must be a live handle; `out` a valid pointer.
 */
enum NqsStatus nqs_run_summary_json(const struct NqsRun *run, char **out);

/**
 * Writes the per-epoch CSV, summary and parameters into directory `dir`.
 *
 * # Safety
 * `run` must be a live handle; `dir` a nul-terminated string.
 */
enum NqsStatus nqs_run_write(const struct NqsRun *run, const char *dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NQS_H */
