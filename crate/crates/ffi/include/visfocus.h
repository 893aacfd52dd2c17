#ifndef VISFOCUS_H
#define VISFOCUS_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Bytes available to a predictor callback for its label, NUL included.
 */
#define VF_LABEL_CAPACITY 256

typedef enum VfStatus {
  VF_STATUS_OK = 0,
  VF_STATUS_NULL_ARGUMENT = 1,
  VF_STATUS_INVALID_ARGUMENT = 2,
  VF_STATUS_IO = 3,
  VF_STATUS_PREDICTOR = 4,
  /**
   * The query budget ran out; any result handle holds a partial set.
   */
  VF_STATUS_BUDGET = 5,
  VF_STATUS_PANIC = 6,
} VfStatus;

typedef enum VfBehavior {
  VF_BEHAVIOR_HOLISTIC = 0,
  VF_BEHAVIOR_COMPOSITIONAL = 1,
  VF_BEHAVIOR_NARROW = 2,
  VF_BEHAVIOR_DISTRACTED = 3,
  VF_BEHAVIOR_MISLED = 4,
  VF_BEHAVIOR_UNCLASSIFIED = 5,
} VfBehavior;

typedef enum VfBeamScope {
  VF_BEAM_SCOPE_ROUND = 0,
  VF_BEAM_SCOPE_PARENT = 1,
} VfBeamScope;

typedef enum VfCandidateOrder {
  VF_CANDIDATE_ORDER_LARGEST_AREA_FIRST = 0,
  VF_CANDIDATE_ORDER_ASCENDING_INDEX = 1,
} VfCandidateOrder;

typedef enum VfFillMode {
  VF_FILL_MODE_CONSTANT = 0,
  VF_FILL_MODE_MEAN = 1,
} VfFillMode;

typedef struct VfExpr VfExpr;

typedef struct VfFinalStates VfFinalStates;

typedef struct VfPartition VfPartition;

typedef struct VfThresholds {
  double precision_high;
  double recall_high;
  double divergence_high;
} VfThresholds;

typedef struct VfMetrics {
  double precision;
  double recall;
  double divergence;
  enum VfBehavior behavior;
  /**
   * Some state preserved nothing; its precision term counted as 0.
   */
  bool empty_focus_state;
  /**
   * The ground-truth state was empty; recall is 0.
   */
  bool no_ground_truth_match;
} VfMetrics;

typedef struct VfRefineOptions {
  /**
   * Children kept per state; 0 means unlimited.
   */
  size_t beam_size;
  enum VfBeamScope beam_scope;
  enum VfCandidateOrder candidate_order;
  uint64_t max_queries;
  enum VfFillMode fill_mode;
  /**
   * Used when `fill_mode` is constant.
   */
  uint8_t fill_rgb[3];
  /**
   * Pass composed pixels to the callback. When false the callback gets
   * only the state and `rgb` is null.
   */
  bool render_images;
} VfRefineOptions;

/**
 * Answers one probe.
 *
 * `state` holds `regions` bytes. `rgb` is the composed image as
 * `width * height * 3` bytes, or null when rendering is off. Write a
 * NUL-terminated UTF-8 label of at most `label_capacity` bytes into `label`
 * and return 0; any other return value aborts the search.
 */
typedef int32_t (*VfPredictFn)(void *user,
                               const uint8_t *state,
                               size_t regions,
                               const uint8_t *rgb,
                               uint32_t width,
                               uint32_t height,
                               char *label,
                               size_t label_capacity);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null if none.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *vf_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void vf_string_free(char *s);

/**
 * Loads a single-channel label-map PNG.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum VfStatus vf_partition_load(const char *path, struct VfPartition **out);

/**
 * Builds a partition from `width * height` row-major label values. Zero
 * marks unsegmented pixels; other values are renumbered by first
 * appearance.
 *
 * # Safety
 * `labels` must point to `width * height` values; `out` must be writable.
 */
enum VfStatus vf_partition_from_labels(uint32_t width,
                                       uint32_t height,
                                       const uint32_t *labels,
                                       struct VfPartition **out);

/**
 * New partition with regions below `min_area_fraction`, and unsegmented
 * pixels, folded into one last region.
 *
 * # Safety
 * `p` must be a live partition handle; `out` must be writable.
 */
enum VfStatus vf_partition_merge(const struct VfPartition *p,
                                 double min_area_fraction,
                                 struct VfPartition **out);

/**
 * # Safety
 * `p` must be null or a partition handle not yet freed.
 */
void vf_partition_free(struct VfPartition *p);

/**
 * Number of regions, or 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live partition handle.
 */
size_t vf_partition_region_count(const struct VfPartition *p);

/**
 * # Safety
 * `p` must be a live partition handle; `width` and `height` writable.
 */
enum VfStatus vf_partition_dimensions(const struct VfPartition *p,
                                      uint32_t *width,
                                      uint32_t *height);

/**
 * Area of region `region` (1-based) as a fraction of the image.
 *
 * # Safety
 * `p` must be a live partition handle; `out` must be writable.
 */
enum VfStatus vf_partition_area_fraction(const struct VfPartition *p, uint32_t region, double *out);

/**
 * Ground-truth state from `mask_count` binary masks of the partition's
 * size, stored one after another (nonzero is foreground). Writes one byte
 * per region into `out_state`.
 *
 * # Safety
 * `masks` must hold `mask_count * width * height` bytes and `out_state`
 * room for one byte per region.
 */
enum VfStatus vf_partition_ground_truth(const struct VfPartition *p,
                                        const uint8_t *masks,
                                        size_t mask_count,
                                        double iou_threshold,
                                        uint8_t *out_state);

/**
 * Factors a set of states into a logic expression.
 *
 * # Safety
 * `states` must hold `count * regions` bytes; `out` must be writable.
 */
enum VfStatus vf_translate(const uint8_t *states,
                           size_t count,
                           size_t regions,
                           struct VfExpr **out);

/**
 * Text form such as `I1 & (I2 | I3)`. Free with [`vf_string_free`].
 *
 * # Safety
 * `e` must be null or a live expression handle.
 */
char *vf_expr_render(const struct VfExpr *e);

/**
 * JSON tree form. Free with [`vf_string_free`].
 *
 * # Safety
 * `e` must be null or a live expression handle.
 */
char *vf_expr_to_json(const struct VfExpr *e);

/**
 * # Safety
 * `e` must be a live expression handle, `state` must hold `regions` bytes
 * and `out` must be writable.
 */
enum VfStatus vf_expr_eval(const struct VfExpr *e, const uint8_t *state, size_t regions, bool *out);

/**
 * # Safety
 * `e` must be null or an expression handle not yet freed.
 */
void vf_expr_free(struct VfExpr *e);

struct VfThresholds vf_thresholds_default(void);

/**
 * Classifies a metric triple. A null `thresholds` uses the defaults.
 *
 * # Safety
 * `thresholds` must be null or point to a valid value.
 */
enum VfBehavior vf_classify(double precision,
                            double recall,
                            double divergence,
                            const struct VfThresholds *thresholds);

/**
 * Precision, recall and divergence of `count` final states against the
 * ground-truth state `gt`, plus the behavior class.
 *
 * # Safety
 * `states` must hold `count * regions` bytes and `gt` `regions` bytes,
 * where `regions` is the partition's region count. `thresholds` may be
 * null; `out` must be writable.
 */
enum VfStatus vf_metrics(const struct VfPartition *p,
                         const uint8_t *states,
                         size_t count,
                         const uint8_t *gt,
                         const struct VfThresholds *thresholds,
                         struct VfMetrics *out);

struct VfRefineOptions vf_refine_options_default(void);

/**
 * Finds the final states of an image under a callback model.
 *
 * `rgb` is the image as `width * height * 3` bytes matching the partition.
 * A null `options` uses [`vf_refine_options_default`]. On
 * [`VfStatus::Budget`] `*out` still receives the partial result.
 *
 * # Safety
 * All pointers must be valid as described; `user` is passed through to
 * `predict` untouched.
 */
enum VfStatus vf_refine(const uint8_t *rgb,
                        const struct VfPartition *p,
                        VfPredictFn predict,
                        void *user,
                        const struct VfRefineOptions *options,
                        struct VfFinalStates **out);

/**
 * Number of final states, or 0 for a null handle.
 *
 * # Safety
 * `f` must be null or a live final-state handle.
 */
size_t vf_final_states_count(const struct VfFinalStates *f);

/**
 * # Safety
 * `f` must be null or a live final-state handle.
 */
size_t vf_final_states_region_count(const struct VfFinalStates *f);

/**
 * # Safety
 * `f` must be null or a live final-state handle.
 */
uint64_t vf_final_states_query_count(const struct VfFinalStates *f);

/**
 * # Safety
 * `f` must be null or a live final-state handle.
 */
bool vf_final_states_is_partial(const struct VfFinalStates *f);

/**
 * Copies state `index` into `out_bits`, one byte per region.
 *
 * # Safety
 * `f` must be a live final-state handle and `out_bits` hold `len` bytes.
 */
enum VfStatus vf_final_states_get(const struct VfFinalStates *f,
                                  size_t index,
                                  uint8_t *out_bits,
                                  size_t len);

/**
 * Label the model gave the full image. Free with [`vf_string_free`].
 *
 * # Safety
 * `f` must be null or a live final-state handle.
 */
char *vf_final_states_reference_label(const struct VfFinalStates *f);

/**
 * Same JSON document the command-line tool writes. Free with
 * [`vf_string_free`].
 *
 * # Safety
 * `f` must be null or a live final-state handle.
 */
char *vf_final_states_to_json(const struct VfFinalStates *f);

/**
 * # Safety
 * `f` must be null or a final-state handle not yet freed.
 */
void vf_final_states_free(struct VfFinalStates *f);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VISFOCUS_H */
