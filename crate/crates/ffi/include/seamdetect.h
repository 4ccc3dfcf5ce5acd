#ifndef SEAMDETECT_H
#define SEAMDETECT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Run edge detection only.
 */
#define SD_DEPTH_EDGES 0

/**
 * Run edge and corner detection.
 */
#define SD_DEPTH_CORNERS 1

/**
 * Run edges, corners and seams.
 */
#define SD_DEPTH_SEAMS 2

/**
 * Result code of every fallible call.
 */
typedef enum SdStatus {
  SD_STATUS_OK = 0,
  SD_STATUS_NULL_POINTER = 1,
  SD_STATUS_INVALID_ARGUMENT = 2,
  SD_STATUS_IO = 3,
  SD_STATUS_PARSE = 4,
  SD_STATUS_TOO_FEW_POINTS = 5,
  SD_STATUS_DEGENERATE = 6,
  SD_STATUS_PANIC = 7,
} SdStatus;

/**
 * Opaque point cloud.
 */
typedef struct SdCloud SdCloud;

/**
 * Opaque detection result.
 */
typedef struct SdResult SdResult;

/**
 * Detector parameters. Fill with [`sd_params_default`] and adjust.
 * Non-positive `corner_radius`, `merge_radius` and `seam_delta` mean
 * "derive from edge spacing".
 */
typedef struct SdParams {
  size_t edge_k;
  double edge_lambda;
  size_t corner_k;
  double corner_radius;
  double rho;
  double epsilon;
  double theta1_deg;
  double theta2_deg;
  double merge_radius;
  double seam_delta;
  size_t seam_bins;
  double seam_gamma;
} SdParams;

/**
 * One seam: indices into the corner list and the covered fraction.
 */
typedef struct SdSeam {
  size_t a;
  size_t b;
  double coverage;
} SdSeam;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *sd_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sd_version(void);

/**
 * Writes the default parameters to `out`.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `SdParams`.
 */
enum SdStatus sd_params_default(struct SdParams *out);

/**
 * Copies `n_points` points from `xyz` (x, y, z interleaved) into a new
 * cloud.
 *
 * # Safety
 * `xyz` must point to `3 * n_points` readable doubles; `out` must be
 * writable. On failure `*out` is set to null.
 */
enum SdStatus sd_cloud_from_xyz(const double *xyz, size_t n_points, struct SdCloud **out);

/**
 * Loads an ASCII PLY (`.ply`) or whitespace-separated XYZ file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable. On
 * failure `*out` is set to null.
 */
enum SdStatus sd_cloud_load(const char *path, struct SdCloud **out);

/**
 * Number of points, or 0 for a null handle.
 *
 * # Safety
 * `cloud` must be null or a live handle from this library.
 */
size_t sd_cloud_len(const struct SdCloud *cloud);

/**
 * Releases a cloud. Null is ignored.
 *
 * # Safety
 * `cloud` must be null or a live handle not freed before.
 */
void sd_cloud_free(struct SdCloud *cloud);

/**
 * Runs the pipeline up to `depth` (one of the `SD_DEPTH_*` constants).
 *
 * # Safety
 * `cloud` must be a live handle, `params` readable and `out` writable.
 * On failure `*out` is set to null.
 */
enum SdStatus sd_detect(const struct SdCloud *cloud,
                        const struct SdParams *params,
                        uint32_t depth,
                        struct SdResult **out);

/**
 * Number of points labeled edge.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
size_t sd_result_edge_count(const struct SdResult *result);

/**
 * Writes one flag per cloud point: 0 plain, 1 edge, 2 corner candidate.
 *
 * # Safety
 * `flags` must point to `len` writable bytes.
 */
enum SdStatus sd_result_labels(const struct SdResult *result, uint8_t *flags, size_t len);

/**
 * Number of merged corners (0 if corners were not requested).
 *
 * # Safety
 * `result` must be null or a live handle.
 */
size_t sd_result_corner_count(const struct SdResult *result);

/**
 * Writes corner positions (x, y, z interleaved) into `xyz`, which holds
 * `n_corners` points and must match [`sd_result_corner_count`].
 *
 * # Safety
 * `xyz` must point to `3 * n_corners` writable doubles.
 */
enum SdStatus sd_result_corners(const struct SdResult *result, double *xyz, size_t n_corners);

/**
 * Number of seams (0 if seams were not requested).
 *
 * # Safety
 * `result` must be null or a live handle.
 */
size_t sd_result_seam_count(const struct SdResult *result);

/**
 * Writes seams into `seams`, which holds `n_seams` entries and must match
 * [`sd_result_seam_count`].
 *
 * # Safety
 * `seams` must point to `n_seams` writable `SdSeam` values.
 */
enum SdStatus sd_result_seams(const struct SdResult *result, struct SdSeam *seams, size_t n_seams);

/**
 * Releases a result. Null is ignored.
 *
 * # Safety
 * `result` must be null or a live handle not freed before.
 */
void sd_result_free(struct SdResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEAMDETECT_H */
