/*
 * attriq - C API
 *
 * Evaluation toolkit for sentence-level attribution methods on
 * answerability classification derived from extractive QA data.
 *
 * All functions return ATTRIQ_OK on success. On failure the returned status
 * names the error class and attriq_last_error() carries a human-readable
 * message for the calling thread. Strings returned through char** out
 * parameters are owned by the caller and released with attriq_string_free.
 */

#ifndef ATTRIQ_H
#define ATTRIQ_H

#include <stddef.h>

#if defined(_WIN32)
#define ATTRIQ_API __declspec(dllexport)
#else
#define ATTRIQ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum attriq_status {
    ATTRIQ_OK = 0,
    ATTRIQ_ERR_IO = 1,
    ATTRIQ_ERR_PARSE = 2,
    ATTRIQ_ERR_VALIDATION = 3,
    ATTRIQ_ERR_CONFIG = 4,
    ATTRIQ_ERR_MODEL = 5,
    ATTRIQ_ERR_INTERPRETER = 6,
    ATTRIQ_ERR_INTERNAL = 7,
    ATTRIQ_ERR_ARGUMENT = 8
} attriq_status;

typedef struct attriq_dataset attriq_dataset; /* loaded + segmented samples */
typedef struct attriq_model attriq_model;     /* answerability classifier */

ATTRIQ_API const char* attriq_version(void);
ATTRIQ_API const char* attriq_status_name(attriq_status status);

/* Message of the last failing call on this thread; empty string if none. */
ATTRIQ_API const char* attriq_last_error(void);

ATTRIQ_API void attriq_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Datasets                                                            */

/* Opens a SQuAD v2 style JSON file, segments contexts into sentences and
 * derives ground-truth sentence labels. */
ATTRIQ_API attriq_status attriq_dataset_open_squad(const char* path, const char* split_name,
                                                   attriq_dataset** out);
ATTRIQ_API attriq_status attriq_dataset_size(const attriq_dataset* dataset, size_t* out);
/* One sample as JSON: id, question, context, sentence_spans, gt_sentence, flags. */
ATTRIQ_API attriq_status attriq_dataset_sample_json(const attriq_dataset* dataset, size_t index,
                                                    char** json_out);
ATTRIQ_API void attriq_dataset_free(attriq_dataset* dataset);

/* ------------------------------------------------------------------ */
/* Models                                                              */

/* spec_json examples:
 *   {"type":"keyword_oracle","path":"fixture.keywords.json"}
 *   {"type":"bag_embedding","path":"embeddings.json"}
 *   {"type":"external","command":"python3 serve_model.py"}
 */
ATTRIQ_API attriq_status attriq_model_open(const char* spec_json, attriq_model** out);
ATTRIQ_API attriq_status attriq_model_predict(const attriq_model* model, const char* question,
                                              const char* context, double* proba_out);
ATTRIQ_API void attriq_model_free(attriq_model* model);

/* P(answerable) from an extractive QA head's start/end token distributions:
 * the total probability of span pairs (i, j), i <= j, with both ends on
 * context positions (context_mask[k] nonzero). p_start and p_end must each
 * sum to 1 within 1e-6. Useful when adapting a QA checkpoint to the
 * answerability task. */
ATTRIQ_API attriq_status attriq_answerability_from_spans(const double* p_start, const double* p_end,
                                                         const int* context_mask, size_t n,
                                                         double* proba_out);

/* ------------------------------------------------------------------ */
/* Interpreter plug-ins                                                */

/* A sentence-level interpreter: receives the model, the question and the
 * context, and writes one importance score per sentence into scores_out
 * (length n_sentences). Return 0 on success, nonzero on failure. The model
 * handle is only valid for the duration of the call. */
typedef int (*attriq_interpreter_fn)(const attriq_model* model, const char* question, const char* context,
                                     size_t n_sentences, double* scores_out, void* user_data);

/* Registers a custom interpreter under a name usable in run configs.
 * needs_seed = 1 makes a per-run seed mandatory for this interpreter. */
ATTRIQ_API attriq_status attriq_interpreter_register(const char* name, attriq_interpreter_fn fn,
                                                     void* user_data, int needs_seed);

/* Names of all registered interpreters as a JSON array. */
ATTRIQ_API attriq_status attriq_interpreter_names(char** json_out);

/* ------------------------------------------------------------------ */
/* Pipelines (JSON in, JSON out)                                       */

/* Generates a synthetic planted-rationale dataset in SQuAD v2 JSON plus a
 * keyword side-car. spec_json:
 *   {"n_samples":200,"min_sentences":3,"max_sentences":8,"vocab_size":1000,
 *    "fraction_unanswerable":0.2,"seed":7,
 *    "dataset_path":"fixture.json","sidecar_path":"fixture.keywords.json"} */
ATTRIQ_API attriq_status attriq_fixture_generate(const char* spec_json, char** summary_json_out);

/* Runs the full pipeline described by config_json and returns the report
 * as JSON. When the config carries output_dir, report.json and
 * records.ldjson are persisted there. */
ATTRIQ_API attriq_status attriq_run(const char* config_json, char** report_json_out);

/* Ground-truth verification only (comprehensiveness / sufficiency). */
ATTRIQ_API attriq_status attriq_verify(const char* config_json, char** result_json_out);

/* Dataset statistics only (sample counts, sentence average, accuracy, recall). */
ATTRIQ_API attriq_status attriq_stats(const char* config_json, char** stats_json_out);

/* Re-renders a persisted report. format: "json", "csv" or "markdown". */
ATTRIQ_API attriq_status attriq_report_render(const char* report_json, const char* format,
                                              char** rendered_out);

#ifdef __cplusplus
}
#endif

#endif /* ATTRIQ_H */
