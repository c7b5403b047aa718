#ifndef PPGRAPH_H
#define PPGRAPH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of a call. Codes 2 to 4 match the command line exit codes.
typedef enum PpgStatus {
  PPG_STATUS_OK = 0,
  PPG_STATUS_NULL_POINTER = 1,
  PPG_STATUS_INVALID_INPUT = 2,
  PPG_STATUS_IO = 3,
  PPG_STATUS_INTERNAL = 4,
} PpgStatus;

// Opaque planar field handle.
typedef struct PpgField PpgField;

// Opaque graph handle.
typedef struct PpgGraph PpgGraph;

// Detection and evaluation parameters. Obtain defaults from
// [`ppg_pipeline_config_default`].
typedef struct PpgPipelineConfig {
  double tau;
  double epsilon;
  size_t max_junctions;
  // Nonzero accepts plateau maxima (greater or equal to neighbours).
  uint8_t plateau_ge;
  size_t samples;
  double quantile;
  double threshold;
  size_t block;
  double tol_frac;
  double collinear_tol;
} PpgPipelineConfig;

typedef struct PpgCanonConfig {
  double belt_width;
  double inner_dist;
  double min_angle_deg;
  double merge_tol;
} PpgCanonConfig;

typedef struct PpgEvalReport {
  double precision;
  double recall;
  double f1;
  size_t matches;
  size_t gt_pixels;
  size_t pred_pixels;
  double tolerance_px;
} PpgEvalReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty if none. The
// pointer stays valid until the next failing call on this thread.
const char *ppg_last_error(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void ppg_string_free(char *s);

struct PpgPipelineConfig ppg_pipeline_config_default(void);

struct PpgCanonConfig ppg_canon_config_default(void);

// Builds a graph from `k` junctions (`xy` holds `2k` values, x then y)
// and `e` edges (`edges` holds `2e` junction indices).
//
// # Safety
// `xy` and `edges` must point to at least `2k` and `2e` readable values;
// `out` must be writable.
enum PpgStatus ppg_graph_new(uint32_t width,
                             uint32_t height,
                             const double *xy,
                             size_t k,
                             const size_t *edges,
                             size_t e,
                             struct PpgGraph **out);

// Parses graph JSON.
//
// # Safety
// `json` must be a nul-terminated string; `out` must be writable.
enum PpgStatus ppg_graph_from_json(const char *json, struct PpgGraph **out);

// Serializes a graph to JSON; free the result with [`ppg_string_free`].
//
// # Safety
// `g` must be a live graph handle; `out` must be writable.
enum PpgStatus ppg_graph_to_json(const struct PpgGraph *g, char **out);

// # Safety
// `g` must be null or a live graph handle, not used afterwards.
void ppg_graph_free(struct PpgGraph *g);

// Junction count; 0 for null.
//
// # Safety
// `g` must be null or a live graph handle.
size_t ppg_graph_junction_count(const struct PpgGraph *g);

// Edge count; 0 for null.
//
// # Safety
// `g` must be null or a live graph handle.
size_t ppg_graph_edge_count(const struct PpgGraph *g);

// # Safety
// `g` must be a live graph handle; `width` and `height` writable.
enum PpgStatus ppg_graph_frame(const struct PpgGraph *g, uint32_t *width, uint32_t *height);

// Copies junctions in canonical order into `xy` as x, y pairs. `len` is
// the capacity of `xy` and must be at least twice the junction count.
//
// # Safety
// `g` must be a live graph handle; `xy` must hold `len` writable values.
enum PpgStatus ppg_graph_junctions(const struct PpgGraph *g, double *xy, size_t len);

// Copies edges as sorted `i, j` pairs with `i < j`. `len` must be at
// least twice the edge count.
//
// # Safety
// `g` must be a live graph handle; `ij` must hold `len` writable values.
enum PpgStatus ppg_graph_edges(const struct PpgGraph *g, size_t *ij, size_t len);

// Builds a field from `channels * height * width` values in channel, row,
// column order.
//
// # Safety
// `values` must point to that many readable floats; `out` must be
// writable.
enum PpgStatus ppg_field_new(size_t channels,
                             size_t height,
                             size_t width,
                             double stride,
                             const float *values,
                             struct PpgField **out);

// Reads a PPGF file.
//
// # Safety
// `path` must be a nul-terminated string; `out` must be writable.
enum PpgStatus ppg_field_read(const char *path, struct PpgField **out);

// # Safety
// `f` must be null or a live field handle, not used afterwards.
void ppg_field_free(struct PpgField *f);

// Canonicalizes endpoint annotation JSON. `cfg` may be null for defaults.
//
// # Safety
// `json` must be a nul-terminated string; `cfg` null or readable; `out`
// writable.
enum PpgStatus ppg_canonicalize(const char *json,
                                const struct PpgCanonConfig *cfg,
                                struct PpgGraph **out);

// Extracts junctions from a heatmap into `xy` (x, y pairs, capacity
// `len` values); the junction count goes to `count`. When `len` is too
// small nothing is copied, `count` is still set and the call fails.
//
// # Safety
// `heatmap` must be a live field; `xy` must hold `len` writable values;
// `cfg` null or readable; `count` writable.
enum PpgStatus ppg_extract(const struct PpgField *heatmap,
                           const struct PpgPipelineConfig *cfg,
                           double *xy,
                           size_t len,
                           size_t *count);

// Samples `samples` points from `(ax, ay)` to `(bx, by)` on every channel
// of `f`. `out` receives `channels * samples` values, channel-major.
//
// # Safety
// `f` must be a live field; `out` must hold `len` writable values.
enum PpgStatus ppg_lsam_sample(const struct PpgField *f,
                               double ax,
                               double ay,
                               double bx,
                               double by,
                               size_t samples,
                               double *out,
                               size_t len);

// Scores all pairs of `k` junctions (`xy`, x then y) on `line_map` with
// the quantile scorer. `out` receives the symmetric `k * k` matrix.
//
// # Safety
// `line_map` must be a live field; `xy` must hold `2k` readable values;
// `out` must hold `len` writable values; `cfg` null or readable.
enum PpgStatus ppg_score_pairs(const struct PpgField *line_map,
                               const double *xy,
                               size_t k,
                               const struct PpgPipelineConfig *cfg,
                               double *out,
                               size_t len);

// Detects a graph from junction and line heatmaps.
//
// # Safety
// Field handles must be live; `cfg` null or readable; `out` writable.
enum PpgStatus ppg_detect(const struct PpgField *junction_map,
                          const struct PpgField *line_map,
                          const struct PpgPipelineConfig *cfg,
                          struct PpgGraph **out);

// Evaluates `pred` against `gt`; both are reduced to maximal segments
// with `collinear_tol` first.
//
// # Safety
// Graph handles must be live; `out` writable.
enum PpgStatus ppg_evaluate(const struct PpgGraph *gt,
                            const struct PpgGraph *pred,
                            double tol_frac,
                            double collinear_tol,
                            struct PpgEvalReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PPGRAPH_H */
