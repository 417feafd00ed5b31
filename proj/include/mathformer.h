/*
 * mathformer C API.
 *
 * Symbolic math expression corpora, three transformer variants trained on
 * them from scratch, and evaluation/attention analysis, behind a plain C
 * surface: opaque handles, status codes, UTF-8 paths and strings.
 *
 * Every function that can fail returns mf_status; MF_OK is 0. On failure a
 * human-readable message is available from mf_last_error() until the next
 * call on the same thread. Handles are single-threaded; distinct handles may
 * be used from distinct threads.
 */
#ifndef MATHFORMER_H
#define MATHFORMER_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mf_status {
  MF_OK = 0,
  MF_ERR_USAGE = 1,    /* null pointer, bad argument, buffer too small */
  MF_ERR_PARSE = 2,    /* malformed expression, corpus file or JSON */
  MF_ERR_CONFIG = 3,   /* invalid or unknown configuration field */
  MF_ERR_CAPACITY = 4, /* sample_count exceeds the config's capacity */
  MF_ERR_IO = 5,       /* filesystem failure */
  MF_ERR_NUMERIC = 6,  /* non-finite values, training divergence */
  MF_ERR_RUNTIME = 7   /* any other library error */
} mf_status;

/* A trained (or freshly initialized) model loaded from a checkpoint. */
typedef struct mf_model mf_model;

const char* mf_version(void);
const char* mf_status_name(mf_status status);
/* Message of the most recent failure on this thread ("" if none). */
const char* mf_last_error(void);

/*
 * Exact evaluation of one expression string, e.g. "x=85,y=-523,x*y" -> "-44455".
 * Writes the NUL-terminated decimal result into out.
 */
mf_status mf_oracle_eval(const char* input_text, char* out, size_t out_size);

/*
 * Generates a corpus into out_dir (train.tsv, test.tsv, meta.json).
 * dataset_config_json_path: {"dataset": {"value_lo": -1000, "value_hi": 1000,
 * "ops": ["+","-","*"], "sample_count": N, "split_ratio": 0.9, "seed": S}}.
 */
mf_status mf_generate(const char* dataset_config_json_path, const char* out_dir);

/*
 * Applies the character bijection in map_json_path (object of single-char
 * keys/values) to the corpus in in_dir, writing a corpus directory to out_dir.
 */
mf_status mf_obfuscate(const char* map_json_path, const char* in_dir,
                       const char* out_dir);

/*
 * Trains a model of the given kind ("t", "ut" or "aut") on the corpus in
 * data_dir. run_config_json_path may be NULL for defaults; otherwise it is a
 * JSON object with optional "model", "ut" and "train" sections (unknown keys
 * rejected). Writes out_dir/model.ckpt and out_dir/metrics.csv.
 */
mf_status mf_train(const char* kind, const char* data_dir,
                   const char* run_config_json_path, const char* out_dir);

mf_status mf_model_load(const char* checkpoint_path, mf_model** out_model);
void mf_model_free(mf_model* model);

/* Model kind as "t", "ut" or "aut". */
mf_status mf_model_kind(const mf_model* model, char* out, size_t out_size);

/* Greedy decoding of one input expression string. */
mf_status mf_model_predict(const mf_model* model, const char* input_text,
                           char* out, size_t out_size);

/*
 * Scores the model on data_dir's test split and writes the report JSON
 * ({"overall", "per_type", "char_errors", "wrong_examples", ...}).
 */
mf_status mf_model_evaluate(const mf_model* model, const char* data_dir,
                            const char* report_json_path);

/*
 * One traced forward on input_text (teacher-forced on the model's own greedy
 * output); writes {"input", "output", "traces", "act"} JSON.
 */
mf_status mf_model_export_attention(const mf_model* model,
                                    const char* input_text,
                                    const char* out_json_path);

#ifdef __cplusplus
}
#endif

#endif /* MATHFORMER_H */
