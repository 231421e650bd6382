#ifndef BANDSPEC_H
#define BANDSPEC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum BsStatus {
  BS_STATUS_OK = 0,
  BS_STATUS_NULL_POINTER = 1,
  BS_STATUS_INVALID_UTF8 = 2,
  BS_STATUS_PARSE = 3,
  BS_STATUS_SCHEMA = 4,
  // Input is outside the banded or measure class.
  BS_STATUS_VALIDATION = 5,
  // Numerical breakdown (singular factor, conditioning guard, ...).
  BS_STATUS_NUMERICAL = 6,
  BS_STATUS_INVALID_ARGUMENT = 7,
  BS_STATUS_BUFFER_TOO_SMALL = 8,
  BS_STATUS_PANIC = 9,
} BsStatus;

// Toda solver selection for [`bs_toda_flow`].
typedef enum BsTodaMethod {
  BS_TODA_METHOD_QR = 0,
  BS_TODA_METHOD_SPECTRAL = 1,
} BsTodaMethod;

// Opaque handle to a banded Hermitian matrix.
typedef struct BsMatrix BsMatrix;

// Opaque handle to a matrix-valued measure.
typedef struct BsMeasure BsMeasure;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *bs_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *bs_version(void);

// Releases a string returned by the library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void bs_string_free(char *s);

// Parses a matrix in block JSON form and checks the class conditions.
// `rank_tol <= 0` selects the default tolerance.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum BsStatus bs_matrix_from_json(const char *json, double rank_tol, struct BsMatrix **out);

// Serializes a matrix to block JSON; free the result with `bs_string_free`.
//
// # Safety
// `m` must be a live handle and `out` a valid pointer.
enum BsStatus bs_matrix_to_json(const struct BsMatrix *m, char **out);

// # Safety
// `m` must be NULL or a live handle; it is invalid afterwards.
void bs_matrix_free(struct BsMatrix *m);

// Block size `k` and matrix size `N`.
//
// # Safety
// All pointers must be valid.
enum BsStatus bs_matrix_dims(const struct BsMatrix *m, size_t *k, size_t *n);

// Writes the dense matrix in row-major order into `re` and `im`, each of
// length at least `N*N`.
//
// # Safety
// `re` and `im` must point to `len` writable doubles.
enum BsStatus bs_matrix_dense(const struct BsMatrix *m, double *re, double *im, size_t len);

// Parses a measure `{k, atoms: [{x, W}]}`.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum BsStatus bs_measure_from_json(const char *json, double rank_tol, struct BsMeasure **out);

// # Safety
// `mu` must be a live handle and `out` a valid pointer.
enum BsStatus bs_measure_to_json(const struct BsMeasure *mu, char **out);

// # Safety
// `mu` must be NULL or a live handle; it is invalid afterwards.
void bs_measure_free(struct BsMeasure *mu);

// Weight size `k` and number of atoms.
//
// # Safety
// All pointers must be valid.
enum BsStatus bs_measure_dims(const struct BsMeasure *mu, size_t *k, size_t *atoms);

// Support point and weight (row-major, `k*k` entries) of atom `index`.
//
// # Safety
// `x` must be valid; `re` and `im` must point to `len` writable doubles.
enum BsStatus bs_measure_atom(const struct BsMeasure *mu,
                              size_t index,
                              double *x,
                              double *re,
                              double *im,
                              size_t len);

// Spectral measure of a matrix.
//
// # Safety
// `m` must be a live handle and `out` a valid pointer.
enum BsStatus bs_spectral_map(const struct BsMatrix *m, double rank_tol, struct BsMeasure **out);

// Banded matrix with the given spectral measure.
//
// # Safety
// `mu` must be a live handle and `out` a valid pointer.
enum BsStatus bs_inverse_spectral_map(const struct BsMeasure *mu,
                                      double rank_tol,
                                      struct BsMatrix **out);

// Toda flow of `m` at time `t`.
//
// # Safety
// `m` must be a live handle and `out` a valid pointer.
enum BsStatus bs_toda_flow(const struct BsMatrix *m,
                           double t,
                           enum BsTodaMethod method,
                           double rank_tol,
                           struct BsMatrix **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BANDSPEC_H */
