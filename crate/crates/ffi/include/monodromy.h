#ifndef MONODROMY_H
#define MONODROMY_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Probe classification codes.
 */
typedef enum MonoClassification {
  MONO_CLASSIFICATION_TRIVIAL = 0,
  MONO_CLASSIFICATION_GENERATOR = 1,
  MONO_CLASSIFICATION_NON_RETURNING = 2,
  MONO_CLASSIFICATION_ABORTED = 3,
  MONO_CLASSIFICATION_SKIPPED = 4,
} MonoClassification;

/**
 * Result codes.
 */
typedef enum MonoStatus {
  MONO_STATUS_OK = 0,
  MONO_STATUS_NULL_POINTER = 1,
  MONO_STATUS_INVALID_UTF8 = 2,
  /**
   * Unknown catalog name or malformed system text.
   */
  MONO_STATUS_SYSTEM = 3,
  /**
   * Input lengths disagree with the system or with each other.
   */
  MONO_STATUS_DIMENSION = 4,
  /**
   * Invalid probe geometry or options.
   */
  MONO_STATUS_PROBE = 5,
  /**
   * Invalid run configuration.
   */
  MONO_STATUS_CONFIG = 6,
  /**
   * Output buffer too small.
   */
  MONO_STATUS_BUFFER_TOO_SMALL = 7,
  /**
   * The handle holds no such data (for example no matrix).
   */
  MONO_STATUS_UNAVAILABLE = 8,
  /**
   * A Rust panic was caught at the boundary.
   */
  MONO_STATUS_INTERNAL = 9,
} MonoStatus;

/**
 * Opaque probe result handle.
 */
typedef struct MonoProbe MonoProbe;

/**
 * Opaque system handle.
 */
typedef struct MonoSystem MonoSystem;

typedef struct MonoComplex {
  double re;
  double im;
} MonoComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null. Valid until the next
 * call into the library on the same thread; do not free it.
 */
const char *mono_last_error(void);

/**
 * Build a catalog system with default parameters.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MonoStatus mono_system_from_catalog(const char *name, struct MonoSystem **out);

/**
 * Build a system from DSL text.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MonoStatus mono_system_from_dsl(const char *text, struct MonoSystem **out);

/**
 * State dimension, or 0 for a null handle.
 *
 * # Safety
 * `sys` must be null or a handle from this library.
 */
uintptr_t mono_system_dim(const struct MonoSystem *sys);

/**
 * # Safety
 * `sys` must be null or a handle from this library, not yet freed.
 */
void mono_system_free(struct MonoSystem *sys);

/**
 * Probe `candidate` with a counterclockwise loop based at `t0`.
 *
 * `radius <= 0` selects the default radius. `x0` holds `x0_len` entries,
 * which must equal the system dimension.
 *
 * # Safety
 * Pointers must be valid for the stated lengths; `out` must be writable.
 */
enum MonoStatus mono_probe(const struct MonoSystem *sys,
                           const struct MonoComplex *x0,
                           uintptr_t x0_len,
                           struct MonoComplex t0,
                           struct MonoComplex candidate,
                           double radius,
                           struct MonoProbe **out);

/**
 * # Safety
 * `p` must be a live handle from [`mono_probe`].
 */
enum MonoClassification mono_probe_classification(const struct MonoProbe *p);

/**
 * Laps used before `x` returned, or the last lap attempted.
 *
 * # Safety
 * `p` must be a live handle from [`mono_probe`].
 */
uint32_t mono_probe_traversals(const struct MonoProbe *p);

/**
 * Copy the accumulated loop matrix (row-major, `dim*dim` entries) into
 * `buf`. Fails with `Unavailable` when `x` did not return.
 *
 * # Safety
 * `p` must be a live handle; `buf` must hold `buf_len` entries.
 */
enum MonoStatus mono_probe_matrix(const struct MonoProbe *p,
                                  struct MonoComplex *buf,
                                  uintptr_t buf_len);

/**
 * # Safety
 * `p` must be null or a handle from [`mono_probe`], not yet freed.
 */
void mono_probe_free(struct MonoProbe *p);

/**
 * `out = a·b − b·a` for row-major `n×n` matrices.
 *
 * # Safety
 * `a`, `b` and `out` must each hold `n*n` entries.
 */
enum MonoStatus mono_commutator(const struct MonoComplex *a,
                                const struct MonoComplex *b,
                                uintptr_t n,
                                struct MonoComplex *out);

/**
 * Run a JSON run configuration and return the JSON report in `*out`.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out` writable. Free the
 * result with [`mono_string_free`].
 */
enum MonoStatus mono_run_json(const char *config_json, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void mono_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MONODROMY_H */
