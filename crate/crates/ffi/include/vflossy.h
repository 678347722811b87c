#ifndef VFLOSSY_H
#define VFLOSSY_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call.
 */
typedef enum VflStatus {
  VFL_STATUS_OK = 0,
  VFL_STATUS_NULL_POINTER = 1,
  VFL_STATUS_INVALID_ARGUMENT = 2,
  VFL_STATUS_NUMERICAL = 3,
  VFL_STATUS_INTEGRITY = 4,
  VFL_STATUS_IO = 5,
  VFL_STATUS_STREAM_EXHAUSTED = 6,
  VFL_STATUS_BUFFER_TOO_SMALL = 7,
  VFL_STATUS_PANIC = 8,
} VflStatus;

/**
 * Opaque dictionary handle.
 */
typedef struct VflDictionary VflDictionary;

typedef struct VflDictionaryInfo {
  /**
   * Codewords stored.
   */
  uint64_t size;
  /**
   * Budget `M` the dictionary was built for.
   */
  uint64_t budget;
  /**
   * Bits per emitted index.
   */
  uint32_t index_width;
  /**
   * Longest segment.
   */
  uint32_t max_len;
  uint32_t source_size;
  uint32_t reproduction_size;
  double gamma;
  double level;
  uint32_t crc32;
} VflDictionaryInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes). Returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t vfl_last_error_message(char *buf, size_t len);

/**
 * Rate-distortion function in bits of a source with `rows` letters under a
 * row-major `rows x cols` distortion matrix at `level`.
 *
 * # Safety
 * `probs` must hold `rows` values, `matrix` `rows * cols` values, and
 * `out_rate` must be writable.
 */
enum VflStatus vfl_rate_distortion(const double *probs,
                                   size_t rows,
                                   const double *matrix,
                                   size_t cols,
                                   double level,
                                   double *out_rate);

/**
 * Build a dictionary of at most `budget` codewords for the row-major
 * `rows x cols` distortion matrix at `level`, choosing the largest
 * threshold that fits.
 *
 * # Safety
 * `matrix` must hold `rows * cols` values and `out` must be writable.
 */
enum VflStatus vfl_dictionary_build(const double *matrix,
                                    size_t rows,
                                    size_t cols,
                                    double level,
                                    uint64_t budget,
                                    uint64_t seed,
                                    struct VflDictionary **out);

/**
 * Load a dictionary file.
 *
 * # Safety
 * `file` must be a NUL-terminated path and `out` writable.
 */
enum VflStatus vfl_dictionary_load(const char *file, struct VflDictionary **out);

/**
 * Write a dictionary file.
 *
 * # Safety
 * `d` must be a live handle and `file` a NUL-terminated path.
 */
enum VflStatus vfl_dictionary_save(const struct VflDictionary *d, const char *file);

/**
 * Release a handle. Null is ignored.
 *
 * # Safety
 * `d` must be null or a live handle; it is invalid afterwards.
 */
void vfl_dictionary_free(struct VflDictionary *d);

/**
 * # Safety
 * `d` must be a live handle and `out` writable.
 */
enum VflStatus vfl_dictionary_info(const struct VflDictionary *d, struct VflDictionaryInfo *out);

/**
 * Parse `symbols` into codeword indices, writing at most `capacity` of
 * them. `out_count` receives the segments parsed and `out_consumed` the
 * symbols they cover; symbols after that do not complete a segment.
 *
 * # Safety
 * `symbols` must hold `len` bytes, `indices` `capacity` slots, and the
 * output pointers must be writable.
 */
enum VflStatus vfl_encode(const struct VflDictionary *d,
                          const uint8_t *symbols,
                          size_t len,
                          uint64_t *indices,
                          size_t capacity,
                          size_t *out_count,
                          size_t *out_consumed);

/**
 * Copy codeword `index` into `buf`; `out_len` receives its length.
 *
 * # Safety
 * `buf` must hold `capacity` bytes and `out_len` be writable.
 */
enum VflStatus vfl_decode_index(const struct VflDictionary *d,
                                uint64_t index,
                                uint8_t *buf,
                                size_t capacity,
                                size_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VFLOSSY_H */
