#ifndef MATTE_H
#define MATTE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MatteStage {
  MATTE_STAGE_INITIAL = 0,
  MATTE_STAGE_SMOOTHED = 1,
} MatteStage;

typedef enum MatteStatus {
  MATTE_STATUS_OK = 0,
  MATTE_STATUS_NULL_POINTER = 1,
  MATTE_STATUS_INVALID_ARGUMENT = 2,
  MATTE_STATUS_INVALID_TRIMAP = 3,
  MATTE_STATUS_DIMENSION_MISMATCH = 4,
  MATTE_STATUS_IO = 5,
  MATTE_STATUS_NOT_READY = 6,
  MATTE_STATUS_INTERNAL = 7,
  MATTE_STATUS_PANIC = 8,
} MatteStatus;

/**
 * Opaque handle holding frames, trimaps, and the mattes of the last run.
 */
typedef struct MatteSequence MatteSequence;

/**
 * Mirrors the pipeline configuration. `superpixels == 0` derives the count from region
 * area; `threads == 0` uses every core.
 */
typedef struct MatteParams {
  double lambda;
  double radius;
  size_t patch;
  size_t k;
  double gamma;
  size_t superpixels;
  double compactness;
  size_t csh_tables;
  uint32_t csh_bits;
  size_t csh_iterations;
  size_t csh_kernels;
  size_t threads;
  bool skip_nlm;
  uint64_t seed;
} MatteParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default parameters.
 */
struct MatteParams matte_params_default(void);

/**
 * Message for the most recent failure on this thread; empty after a success. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *matte_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *matte_version(void);

/**
 * Estimates the initial matte of a single frame into `alpha_out` (`width * height` doubles).
 *
 * # Safety
 * `rgb` must hold `3 * width * height` bytes, `trimap` and `alpha_out` `width * height`
 * elements. `params` may be null for defaults.
 */
enum MatteStatus matte_estimate_frame(size_t width,
                                      size_t height,
                                      const uint8_t *rgb,
                                      const uint8_t *trimap,
                                      const struct MatteParams *params,
                                      double *alpha_out);

/**
 * Runs the full pipeline on a directory of PNG frames and trimaps, writing mattes and
 * reports under `output_dir`.
 *
 * # Safety
 * `input_dir` and `output_dir` must be NUL-terminated strings; `params` may be null.
 */
enum MatteStatus matte_run_pipeline(const char *input_dir,
                                    const char *output_dir,
                                    const struct MatteParams *params);

/**
 * New empty sequence of `width x height` frames, or null if either is zero.
 */
struct MatteSequence *matte_sequence_new(size_t width, size_t height);

/**
 * Releases a sequence. Null is ignored.
 *
 * # Safety
 * `seq` must come from [`matte_sequence_new`] and not be used afterwards.
 */
void matte_sequence_free(struct MatteSequence *seq);

/**
 * Appends a frame and its trimap. Invalidates results of a previous run.
 *
 * # Safety
 * `seq` must be a live handle; buffers as in [`matte_estimate_frame`].
 */
enum MatteStatus matte_sequence_push_frame(struct MatteSequence *seq,
                                           const uint8_t *rgb,
                                           const uint8_t *trimap);

/**
 * Number of frames pushed so far, or 0 for a null handle.
 *
 * # Safety
 * `seq` must be null or a live handle.
 */
size_t matte_sequence_len(const struct MatteSequence *seq);

/**
 * Runs every stage over the pushed frames.
 *
 * # Safety
 * `seq` must be a live handle; `params` may be null.
 */
enum MatteStatus matte_sequence_run(struct MatteSequence *seq, const struct MatteParams *params);

/**
 * Copies the matte of frame `index` at `stage` into `alpha_out` (`width * height` doubles).
 *
 * # Safety
 * `seq` must be a live handle and `alpha_out` must hold `width * height` doubles.
 */
enum MatteStatus matte_sequence_alpha(const struct MatteSequence *seq,
                                      size_t index,
                                      enum MatteStage stage,
                                      double *alpha_out);

/**
 * Mean temporal flicker of the mattes at `stage` over unknown pixels.
 *
 * # Safety
 * `seq` must be a live handle and `flicker_out` a valid pointer.
 */
enum MatteStatus matte_sequence_flicker(const struct MatteSequence *seq,
                                        enum MatteStage stage,
                                        double *flicker_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MATTE_H */
