#ifndef HILL_OCTANT_H
#define HILL_OCTANT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes. Zero is success.
typedef enum HoStatus {
  HO_STATUS_OK = 0,
  HO_STATUS_NULL_POINTER = 1,
  HO_STATUS_INVALID_UTF8 = 2,
  HO_STATUS_INVALID_ARGUMENT = 3,
  HO_STATUS_INVALID_SPEC = 4,
  HO_STATUS_NUMERICAL = 5,
  HO_STATUS_NO_CONVERGENCE = 6,
  HO_STATUS_OUT_OF_RANGE = 7,
  HO_STATUS_PANIC = 8,
} HoStatus;

// Opaque band structure computed for gaps `1..=n`.
typedef struct HoBandStructure HoBandStructure;

// Opaque periodic potential.
typedef struct HoPotential HoPotential;

// One gap as plain data.
typedef struct HoGap {
  double lower;
  double upper;
  double mu;
  // `+1`, `-1`, or `0` when `mu` sits on an edge.
  int sign;
  double xi1;
  double xi2;
} HoGap;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next call into this library from the same thread.
const char *ho_last_error_message(void);

// Parses a JSON potential spec.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable pointer.
enum HoStatus ho_potential_from_json(const char *json, struct HoPotential **out);

// `v(x) = c_0 + Σ_k cos[k-1] cos(2πkx) + sin[k-1] sin(2πkx)`, `k = 1..=len`.
//
// # Safety
// `cos` and `sin` must each point to `len` doubles (either may be null when
// `len` is zero); `out` must be writable.
enum HoStatus ho_potential_fourier(double constant,
                                   const double *cos,
                                   const double *sin,
                                   size_t len,
                                   struct HoPotential **out);

// # Safety
// `p` must come from this library and not be used afterwards.
void ho_potential_free(struct HoPotential *p);

// Serializes the potential; release the string with [`ho_string_free`].
//
// # Safety
// `p` must be a live handle and `out` writable.
enum HoStatus ho_potential_to_json(const struct HoPotential *p, char **out);

// # Safety
// `s` must come from this library and not be used afterwards.
void ho_string_free(char *s);

// Floquet discriminant at `lambda`. Deep wells may overflow to infinity.
//
// # Safety
// `p` must be a live handle and `out` writable.
enum HoStatus ho_discriminant(const struct HoPotential *p, double lambda, double *out);

// Band edges and Dirichlet data for gaps `1..=n`, with Neumann data when
// `with_neumann` is non-zero.
//
// # Safety
// `p` must be a live handle and `out` writable.
enum HoStatus ho_bands_compute(const struct HoPotential *p,
                               size_t n,
                               int with_neumann,
                               struct HoBandStructure **out);

// # Safety
// `bs` must come from this library and not be used afterwards.
void ho_bands_free(struct HoBandStructure *bs);

// Number of gaps held, or zero for a null handle.
//
// # Safety
// `bs` must be null or a live handle.
size_t ho_bands_gap_count(const struct HoBandStructure *bs);

// Bottom of the spectrum, `λ_0^+`.
//
// # Safety
// `bs` must be a live handle and `out` writable.
enum HoStatus ho_bands_ground_edge(const struct HoBandStructure *bs, double *out);

// Gap `n`, counted from 1.
//
// # Safety
// `bs` must be a live handle and `out` writable.
enum HoStatus ho_bands_gap(const struct HoBandStructure *bs, size_t n, struct HoGap *out);

// Neumann eigenvalue `ν_n`, `n = 0..=gap_count`. Fails when the structure
// was computed without Neumann data.
//
// # Safety
// `bs` must be a live handle and `out` writable.
enum HoStatus ho_bands_neumann(const struct HoBandStructure *bs, size_t n, double *out);

// Eigenvalues of the half-solid operator with step `tau` in gaps `1..=n`.
// Writes at most `cap` pairs into `gaps`/`values` and the number found
// into `found`; call again with a larger buffer if `found > cap`.
//
// # Safety
// `p` must be a live handle; `gaps` and `values` must hold `cap` entries
// (they may be null when `cap` is zero); `found` must be writable.
enum HoStatus ho_halfsolid_eigenvalues(const struct HoPotential *p,
                                       double tau,
                                       size_t n,
                                       size_t *gaps,
                                       double *values,
                                       size_t cap,
                                       size_t *found);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HILL_OCTANT_H */
