#ifndef FASTCE_H
#define FASTCE_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum FastceStatus {
  FASTCE_STATUS_OK = 0,
  FASTCE_STATUS_NULL_POINTER = 1,
  FASTCE_STATUS_INVALID_ARGUMENT = 2,
  FASTCE_STATUS_IO = 3,
  FASTCE_STATUS_PARSE = 4,
  FASTCE_STATUS_NUMERIC = 5,
  FASTCE_STATUS_PANIC = 6,
} FastceStatus;

typedef enum FastceAlgorithm {
  FASTCE_ALGORITHM_HE = 0,
  FASTCE_ALGORITHM_FHE = 1,
  FASTCE_ALGORITHM_SMIRANK = 2,
  FASTCE_ALGORITHM_FSMIRANK = 3,
} FastceAlgorithm;

// Opaque 8-bit grayscale image.
typedef struct FastceImage FastceImage;

// Enhancement parameters; algorithms ignore the fields they do not use.
typedef struct FastceParams {
  // Spatial sampling step.
  size_t step;
  // Histogram bin count, a power of two in [2, 256].
  size_t bins;
  // Damping factor in [0, 1).
  double alpha;
  size_t blocks_y;
  size_t blocks_x;
} FastceParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Defaults: step 8, 64 bins, alpha 0.9, 8x8 blocks.
struct FastceParams fastce_params_default(void);

// Copies `len == width * height` bytes into a new image.
//
// # Safety
// `data` must point to `len` readable bytes; `out` must be writable.
enum FastceStatus fastce_image_new(size_t width,
                                   size_t height,
                                   const uint8_t *data,
                                   size_t len,
                                   struct FastceImage **out);

// Releases an image. Null is ignored.
//
// # Safety
// `img` must come from this library and not be used afterwards.
void fastce_image_free(struct FastceImage *img);

// Width in pixels, or 0 for a null handle.
//
// # Safety
// `img` must be null or a live handle.
size_t fastce_image_width(const struct FastceImage *img);

// Height in pixels, or 0 for a null handle.
//
// # Safety
// `img` must be null or a live handle.
size_t fastce_image_height(const struct FastceImage *img);

// Copies the pixels into `buf`, which must hold exactly `width * height` bytes.
//
// # Safety
// `buf` must point to `len` writable bytes.
enum FastceStatus fastce_image_copy_data(const struct FastceImage *img, uint8_t *buf, size_t len);

// Reads a binary PGM or PPM; color files yield their HSV value channel.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum FastceStatus fastce_image_read(const char *path, struct FastceImage **out);

// Writes the image as binary PGM.
//
// # Safety
// `img` must be a live handle; `path` a NUL-terminated string.
enum FastceStatus fastce_image_write(const struct FastceImage *img, const char *path);

// Runs `algorithm` on `img` and stores a new image in `*out`.
//
// # Safety
// `img` and `params` must be valid pointers; `out` must be writable.
enum FastceStatus fastce_enhance(const struct FastceImage *img,
                                 enum FastceAlgorithm algorithm,
                                 const struct FastceParams *params,
                                 struct FastceImage **out);

// Writes the 256-entry lookup table `algorithm` would apply to `img`.
//
// # Safety
// `lut` must point to `len` writable bytes, with `len == 256`.
enum FastceStatus fastce_lut(const struct FastceImage *img,
                             enum FastceAlgorithm algorithm,
                             const struct FastceParams *params,
                             uint8_t *lut,
                             size_t len);

// Copies the calling thread's last error message into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length excluding the NUL.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t fastce_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *fastce_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FASTCE_H */
