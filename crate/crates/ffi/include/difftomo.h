#ifndef DIFFTOMO_H
#define DIFFTOMO_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum {
  DT_STATUS_OK = 0,
  DT_STATUS_NULL_POINTER = 1,
  DT_STATUS_INVALID_ARGUMENT = 2,
  DT_STATUS_CONFIG = 3,
  DT_STATUS_DOMAIN = 4,
  DT_STATUS_NUMERICAL = 5,
  DT_STATUS_SIZE_MISMATCH = 6,
  DT_STATUS_IO = 7,
  DT_STATUS_FORMAT = 8,
  DT_STATUS_PANIC = 9,
} DtStatus;

typedef enum {
  DT_X_GRID_UNIFORM = 0,
  DT_X_GRID_CHEBYSHEV = 1,
} DtXGrid;

typedef struct DtField DtField;

typedef struct DtPath DtPath;

typedef struct DtPhantom DtPhantom;

typedef struct DtSinogram DtSinogram;

typedef struct DtVolume DtVolume;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread; empty if none. Valid
 * until the next failing call on the same thread.
 */
const char *dt_last_error(void);

/**
 * Build an experiment path from its JSON description.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` writable.
 */
DtStatus dt_path_from_json(const char *json, DtPath **out);

/**
 * # Safety
 * `path` must be null or a handle from `dt_path_from_json`.
 */
void dt_path_free(DtPath *path);

/**
 * Largest wavenumber along the path, or a negative value for a null handle.
 *
 * # Safety
 * `path` must be null or a live handle.
 */
double dt_path_k_max(const DtPath *path);

/**
 * Phantom on the `P^dim` grid of half width `r_m`, from its JSON
 * generator description.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` writable.
 */
DtStatus dt_phantom_from_json(const char *json, size_t dim, size_t p, double r_m, DtPhantom **out);

/**
 * Phantom from interleaved complex voxel values; voxels outside
 * `support_radius` are zeroed.
 *
 * # Safety
 * `values` must point to `len` readable doubles and `out` be writable.
 */
DtStatus dt_phantom_from_values(size_t dim,
                                size_t p,
                                double r_m,
                                double support_radius,
                                const double *values,
                                size_t len,
                                DtPhantom **out);

/**
 * Number of voxels, 0 for a null handle.
 *
 * # Safety
 * `phantom` must be null or a live handle.
 */
size_t dt_phantom_len(const DtPhantom *phantom);

/**
 * # Safety
 * `out` must point to `len` writable doubles, `len = 2 * dt_phantom_len`.
 */
DtStatus dt_phantom_values(const DtPhantom *phantom, double *out, size_t len);

/**
 * # Safety
 * `phantom` must be null or a live handle.
 */
void dt_phantom_free(DtPhantom *phantom);

/**
 * Born data by the NDFT forward model, `m` transverse and `n` time samples.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
DtStatus dt_forward_ndft(const DtPhantom *phantom,
                         const DtPath *path,
                         size_t m,
                         size_t n,
                         double r_m,
                         DtXGrid x_grid,
                         DtSinogram **out);

/**
 * Number of complex samples, 0 for a null handle.
 *
 * # Safety
 * `sino` must be null or a live handle.
 */
size_t dt_sinogram_len(const DtSinogram *sino);

/**
 * # Safety
 * `out` must point to `len` writable doubles, `len = 2 * dt_sinogram_len`.
 */
DtStatus dt_sinogram_values(const DtSinogram *sino, double *out, size_t len);

/**
 * # Safety
 * `sino` must be null or a live handle.
 */
void dt_sinogram_free(DtSinogram *sino);

/**
 * Estimated indicatrix on a `q^dim` grid over `[-2 k_max, 2 k_max]^dim`
 * using `n_est` time samples per smooth piece.
 *
 * # Safety
 * `path` must be live and `out` writable.
 */
DtStatus dt_indicatrix(const DtPath *path, size_t q, size_t n_est, bool sym, DtField **out);

/**
 * Rasterized coverage mask on the same grid as [`dt_indicatrix`].
 *
 * # Safety
 * `path` must be live and `out` writable.
 */
DtStatus dt_coverage(const DtPath *path, size_t q, size_t n_est, bool sym, DtField **out);

/**
 * Field value at frequency `y` (length = dimension); 0 off the grid.
 *
 * # Safety
 * `field` must be live and `y` point to `dim` doubles.
 */
DtStatus dt_field_lookup(const DtField *field, const double *y, size_t dim, uint32_t *out);

/**
 * # Safety
 * `field` must be null or a live handle.
 */
void dt_field_free(DtField *field);

/**
 * Filtered backpropagation onto a `p^dim` grid. With `sym` the field
 * must have been estimated with `sym` as well and the result is real.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
DtStatus dt_backpropagate(const DtSinogram *sino,
                          const DtPath *path,
                          size_t p,
                          const DtField *field,
                          bool sym,
                          DtVolume **out);

/**
 * Inverse NDFT by conjugate gradients. `converged` receives whether the
 * tolerance was reached.
 *
 * # Safety
 * Handles must be live; `out` writable; `converged` null or writable.
 */
DtStatus dt_inverse_ndft(const DtSinogram *sino,
                         const DtPath *path,
                         size_t p,
                         double tol,
                         size_t max_iter,
                         bool real_constraint,
                         bool *converged,
                         DtVolume **out);

/**
 * Number of voxels, 0 for a null handle.
 *
 * # Safety
 * `vol` must be null or a live handle.
 */
size_t dt_volume_len(const DtVolume *vol);

/**
 * # Safety
 * `out` must point to `len` writable doubles, `len = 2 * dt_volume_len`.
 */
DtStatus dt_volume_values(const DtVolume *vol, double *out, size_t len);

/**
 * # Safety
 * `vol` must be null or a live handle.
 */
void dt_volume_free(DtVolume *vol);

/**
 * PSNR in dB of two real images of `len` pixels (`+inf` when identical).
 *
 * # Safety
 * `reference` and `candidate` must point to `len` doubles, `out` writable.
 */
DtStatus dt_psnr(const double *reference, const double *candidate, size_t len, double *out);

/**
 * Mean SSIM of two real `rows x cols` images.
 *
 * # Safety
 * `reference` and `candidate` must point to `rows * cols` doubles, `out`
 * writable.
 */
DtStatus dt_ssim(const double *reference,
                 const double *candidate,
                 size_t rows,
                 size_t cols,
                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIFFTOMO_H */
