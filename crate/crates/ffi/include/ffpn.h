#ifndef FFPN_H
#define FFPN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum FfpnStatus {
  FFPN_STATUS_OK = 0,
  FFPN_STATUS_NULL_POINTER = 1,
  FFPN_STATUS_INVALID_ARGUMENT = 2,
  FFPN_STATUS_DIMENSION_MISMATCH = 3,
  FFPN_STATUS_IO = 4,
  FFPN_STATUS_FORMAT = 5,
  FFPN_STATUS_NUMERICAL = 6,
  FFPN_STATUS_PANIC = 7,
} FfpnStatus;

// A scan geometry with its raw and row-normalized system matrices.
typedef struct FfpnSystem FfpnSystem;

// Trained regularizer weights.
typedef struct FfpnWeights FfpnWeights;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null if none. The pointer
// stays valid until the next failing call on the same thread.
const char *ffpn_last_error(void);

// Builds the parallel-beam system for a `side × side` image with detector
// span `side·√2` and DROP relaxation `relaxation`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum FfpnStatus ffpn_system_new(size_t n_angles,
                                size_t n_beams,
                                size_t side,
                                double relaxation,
                                struct FfpnSystem **out);

// Releases a system. Null is ignored.
//
// # Safety
// `system` must come from [`ffpn_system_new`] and not be used afterwards.
void ffpn_system_free(struct FfpnSystem *system);

// Number of rays (sinogram length) and pixels of a system.
//
// # Safety
// `system` must be a live handle; `n_rays` and `n_pixels` must be writable.
enum FfpnStatus ffpn_system_dims(const struct FfpnSystem *system, size_t *n_rays, size_t *n_pixels);

// Raw forward projection `d = Au`.
//
// # Safety
// `image` must hold `n_pixels` values and `sinogram` room for `n_rays`.
enum FfpnStatus ffpn_system_forward(const struct FfpnSystem *system,
                                    const double *image,
                                    size_t n_pixels,
                                    double *sinogram,
                                    size_t n_rays);

// `iterations` DROP steps from zero, clipped to `[0, 1]`.
//
// # Safety
// `sinogram` must hold `n_rays` values and `image` room for `n_pixels`.
enum FfpnStatus ffpn_reconstruct_drop(const struct FfpnSystem *system,
                                      const double *sinogram,
                                      size_t n_rays,
                                      size_t iterations,
                                      double *image,
                                      size_t n_pixels);

// TV superiorization with perturbation scale `alpha`, decay `beta` and
// `iterations` steps, clipped to `[0, 1]`.
//
// # Safety
// `sinogram` must hold `n_rays` values and `image` room for `n_pixels`.
enum FfpnStatus ffpn_reconstruct_tvs(const struct FfpnSystem *system,
                                     const double *sinogram,
                                     size_t n_rays,
                                     double alpha,
                                     double beta,
                                     size_t iterations,
                                     double *image,
                                     size_t n_pixels);

// TV minimization by linearized ADMM on the row-normalized system with
// data-ball radius `eps`.
//
// # Safety
// `sinogram` must hold `n_rays` values and `image` room for `n_pixels`.
enum FfpnStatus ffpn_reconstruct_tvm(const struct FfpnSystem *system,
                                     const double *sinogram,
                                     size_t n_rays,
                                     double alpha,
                                     double beta,
                                     double lambda,
                                     double eps,
                                     size_t iterations,
                                     double *image,
                                     size_t n_pixels);

// Fixed-point network reconstruction from zero, stopping when successive
// iterates differ by less than `delta` or after `max_iter` steps. The result
// is clipped to `[0, 1]`. `iterations` (may be null) receives the step count.
//
// # Safety
// Handles must be live; `sinogram` must hold `n_rays` values and `image`
// room for `n_pixels`.
enum FfpnStatus ffpn_reconstruct_ffpn(const struct FfpnSystem *system,
                                      const struct FfpnWeights *weights,
                                      const double *sinogram,
                                      size_t n_rays,
                                      double delta,
                                      size_t max_iter,
                                      double *image,
                                      size_t n_pixels,
                                      size_t *iterations);

// Loads an FWTS weights file.
//
// # Safety
// `path` must be a nul-terminated string and `out` writable.
enum FfpnStatus ffpn_weights_load(const char *path, struct FfpnWeights **out);

// Releases weights. Null is ignored.
//
// # Safety
// `weights` must come from [`ffpn_weights_load`] and not be used afterwards.
void ffpn_weights_free(struct FfpnWeights *weights);

// Number of trainable parameters, or 0 for a null handle.
//
// # Safety
// `weights` must be null or a live handle.
size_t ffpn_weights_parameter_count(const struct FfpnWeights *weights);

// Peak signal-to-noise ratio in dB (`+inf` for identical inputs).
//
// # Safety
// `image` and `reference` must hold `len` values; `out` must be writable.
enum FfpnStatus ffpn_psnr(const double *image,
                          const double *reference,
                          size_t len,
                          double max_val,
                          double *out);

// Structural similarity of two `height × width` images.
//
// # Safety
// `image` and `reference` must hold `height·width` values; `out` writable.
enum FfpnStatus ffpn_ssim(const double *image,
                          const double *reference,
                          size_t height,
                          size_t width,
                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FFPN_H */
