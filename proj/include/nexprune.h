/* C interface to the nexprune toolkit.
 *
 * All functions return nx_status; NX_OK means success. On failure the
 * thread-local message from nx_last_error() describes what went wrong and
 * output parameters are left untouched. Objects are opaque handles owned
 * by the caller and released with the matching _free function. Strings
 * returned through char** are heap-allocated; release with nx_string_free.
 *
 * Handles are not thread-safe; share nothing or clone per thread.
 */
#ifndef NEXPRUNE_H
#define NEXPRUNE_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nx_status {
  NX_OK = 0,
  NX_ERR_INVALID_ARGUMENT = 1,
  NX_ERR_SHAPE_MISMATCH = 2,
  NX_ERR_IO = 3,
  NX_ERR_NUMERIC = 4,
  NX_ERR_LAYER_COLLAPSE = 5,
  NX_ERR_KEY_MISMATCH = 6,
  NX_ERR_UNKNOWN = 7
} nx_status;

const char* nx_status_name(nx_status status);

/* Message for the most recent failure on this thread. */
const char* nx_last_error(void);

void nx_string_free(char* s);

const char* nx_version(void);

/* ---- networks ---- */

typedef struct nx_network nx_network;

/* Presets: "cnn-small", "vgg-small", "resnet-small". */
nx_status nx_network_build(const char* preset, int num_classes, uint64_t seed,
                           nx_network** out);
nx_status nx_network_from_json(const char* arch_json, uint64_t seed,
                               nx_network** out);
nx_status nx_network_to_json(const nx_network* net, char** out_json);
nx_status nx_network_load(const char* checkpoint_dir, nx_network** out);
nx_status nx_network_save(const nx_network* net, const char* checkpoint_dir);
nx_status nx_network_clone(const nx_network* net, nx_network** out);
void nx_network_free(nx_network* net);

/* Totals use multiply-accumulate counting for conv/linear layers; see the
 * README for the per-layer conventions. */
nx_status nx_network_cost(const nx_network* net, int64_t* flops,
                          int64_t* params, int64_t* buffers);
/* Per-layer breakdown: {"layers":[{name,kind,flops,params,buffers}...],
 * "total_flops":..,"total_params":..,"total_buffers":..} */
nx_status nx_network_cost_json(const nx_network* net, char** out_json);

/* ---- datasets ---- */

typedef struct nx_dataset nx_dataset;

/* config_json keys (all optional): num_samples, num_classes, channels,
 * height, width, jitter, blob_sigma, noise_sigma, seed. */
nx_status nx_dataset_synthesize(const char* config_json, nx_dataset** out);
nx_status nx_dataset_load(const char* dir, nx_dataset** out);
nx_status nx_dataset_save(const nx_dataset* data, const char* dir);
nx_status nx_dataset_split(const nx_dataset* data, float train_fraction,
                           uint64_t seed, nx_dataset** out_train,
                           nx_dataset** out_test);
nx_status nx_dataset_info(const nx_dataset* data, int* num_samples,
                          int* num_classes, int* channels, int* height,
                          int* width);
void nx_dataset_free(nx_dataset* data);

/* ---- training ---- */

/* config_json keys: epochs, batch_size, lr, decay_factor, decay_epochs
 * (array), seed. out_log_json (optional) receives per-epoch stats. */
nx_status nx_train(nx_network* net, const nx_dataset* data,
                   const char* config_json, char** out_log_json);
nx_status nx_evaluate(nx_network* net, const nx_dataset* data,
                      double* out_accuracy, double* out_loss);

/* ---- scoring ---- */

typedef struct nx_score_map nx_score_map;

/* config_json keys: criterion ("nexp"|"l1"|"hybrid"|"random"),
 * aggregation ("mean"|"min"|"max"|"median"), alpha, pre_binarize_scale,
 * seed, sampling {strategy ("random"|"kmeans"|"noise"|"full"),
 * num_samples, seed, kmeans_max_iters, noise_lo, noise_hi}.
 * `data` may be NULL for the l1 and random criteria. */
nx_status nx_score(nx_network* net, const nx_dataset* data,
                   const char* config_json, nx_score_map** out);

nx_status nx_score_map_save_json(const nx_score_map* map, const nx_network* net,
                                 const char* path);
nx_status nx_score_map_save_csv(const nx_score_map* map, const nx_network* net,
                                const char* path);
nx_status nx_score_map_load_json(const char* path, const nx_network* net,
                                 nx_score_map** out);
nx_status nx_score_map_num_layers(const nx_score_map* map, int* out_layers);
/* Identify the entry at position `index` (0-based, layer order). */
nx_status nx_score_map_layer(const nx_score_map* map, int index,
                             int* out_layer_id, int* out_num_filters);
/* Copy the per-filter scores of a layer into buf (buf_len floats). */
nx_status nx_score_map_values(const nx_score_map* map, int layer_id, float* buf,
                              int buf_len);
/* scope: "all" or "first-n". Result JSON: {euclidean, cosine, pearson
 * (number or null), ssim}. */
nx_status nx_score_map_compare(const nx_score_map* a, const nx_score_map* b,
                               const char* scope, int first_n, char** out_json);
/* Cosine over the flat per-filter vectors, no rasterization. */
nx_status nx_score_map_cosine(const nx_score_map* a, const nx_score_map* b,
                              double* out_cosine);
void nx_score_map_free(nx_score_map* map);

/* ---- pruning ---- */

typedef struct nx_prune_run nx_prune_run;

/* Mutates `net` in place. config_json adds to the scoring keys:
 * target_ratio, ratio_kind ("flops"|"params"), kappa, steps_max, scope
 * ("global"|"local"), schedule ("iterative"|"one-shot"),
 * score_update_every, fine_tune {epochs, batch_size, lr, decay_factor,
 * decay_epochs, seed} (omit to skip fine-tuning). */
nx_status nx_prune(nx_network* net, const nx_dataset* data,
                   const char* config_json, nx_prune_run** out);

/* {steps, shortfall, guard_skips, trajectory: [...], removals: [...],
 * report: {...}} */
nx_status nx_prune_run_summary_json(const nx_prune_run* run, char** out_json);
void nx_prune_run_free(nx_prune_run* run);

#ifdef __cplusplus
}
#endif

#endif /* NEXPRUNE_H */
