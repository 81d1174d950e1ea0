/* C interface to the 3-d depth-clip action recognition engine.
 *
 * Every function returns a d3f_status; 0 is success. On failure,
 * d3f_last_error() returns a thread-local message describing what went
 * wrong. Handles are opaque and must be released with their _free call.
 */
#ifndef D3FCNN_H
#define D3FCNN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum d3f_status {
  D3F_OK = 0,
  D3F_ERR_ARGUMENT = 1,   /* bad handle, pointer, or tensor shape */
  D3F_ERR_CONFIG = 2,     /* invalid configuration or protocol */
  D3F_ERR_DATA = 3,       /* dataset, image, or clip problems */
  D3F_ERR_CHECKPOINT = 4, /* unreadable or mismatched checkpoint */
  D3F_ERR_IO = 5,         /* file system failures */
  D3F_ERR_NUMERIC = 6,    /* non-finite values during training */
  D3F_ERR_INTERNAL = 7    /* anything unexpected */
} d3f_status;

/* Thread-local message for the most recent failure on this thread.
 * Valid until the next failing call on the same thread. Never NULL. */
const char* d3f_last_error(void);

/* Library version, e.g. "1.0.0". */
const char* d3f_version(void);

/* Frees a string returned through a char** out-parameter. NULL is a no-op. */
void d3f_string_free(char* s);

/* ---- configuration ---------------------------------------------------- */

/* A bag of key=value settings. Keys mirror the config file: root, naming,
 * protocol, pad, checkpoint, n_classes, tail, swap_head, batch_size,
 * epochs, seed, repetitions, warmup, bench_clips, clip, top_k, out_dir. */
typedef struct d3f_options d3f_options;

d3f_status d3f_options_new(d3f_options** out);
void d3f_options_free(d3f_options* opts);

/* Reads a key=value config file into the option set. */
d3f_status d3f_options_load_file(d3f_options* opts, const char* path);

/* Sets one key; later sets override earlier ones and the file. */
d3f_status d3f_options_set(d3f_options* opts, const char* key,
                           const char* value);

/* ---- workflows --------------------------------------------------------- */

/* Each runner validates the options, writes its artifacts under out_dir,
 * and (when report_out is non-NULL) returns a printable summary that the
 * caller frees with d3f_string_free. */
d3f_status d3f_run_scan(const d3f_options* opts, char** report_out);
d3f_status d3f_run_train(const d3f_options* opts, char** report_out);
d3f_status d3f_run_finetune(const d3f_options* opts, char** report_out);
d3f_status d3f_run_eval(const d3f_options* opts, char** report_out);
d3f_status d3f_run_predict(const d3f_options* opts, char** report_out);
d3f_status d3f_run_bench(const d3f_options* opts, char** report_out);

/* ---- direct model access ----------------------------------------------- */

typedef struct d3f_model d3f_model;

/* A freshly initialized network for n_classes actions, seeded layer init. */
d3f_status d3f_model_create(int64_t n_classes, uint64_t seed, d3f_model** out);

/* Restores a model from a checkpoint file. */
d3f_status d3f_model_load(const char* path, d3f_model** out);

void d3f_model_free(d3f_model* model);

d3f_status d3f_model_n_classes(const d3f_model* model, int64_t* out);
d3f_status d3f_model_param_count(d3f_model* model, int64_t* out);

/* Writes the model to a checkpoint file. */
d3f_status d3f_model_save(d3f_model* model, const char* path);

/* Class probabilities for one preprocessed clip. `clip` holds
 * 64*64*30 floats in row-major [height, width, frame] order, values in
 * [0, 1]. `probs_out` receives n_classes probabilities summing to 1. */
d3f_status d3f_predict_clip(d3f_model* model, const float* clip,
                            int64_t clip_len, float* probs_out,
                            int64_t probs_len);

/* Runs one clip directory through the ingestion pipeline (ROI crop, resize,
 * depth normalization, midpoint 30-frame selection) into the layout
 * d3f_predict_clip expects. clip_out must hold 64*64*30 floats. */
d3f_status d3f_load_clip_dir(const char* dir, float* clip_out,
                             int64_t clip_len);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* D3FCNN_H */
