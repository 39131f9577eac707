/* C interface to the clarification-question selection engine.
 *
 * Every function returns a clarq_status. On failure the message is available
 * through clarq_last_error() on the calling thread until the next call.
 * Strings returned through char** out-parameters are owned by the caller and
 * must be released with clarq_string_free().
 *
 * Dataset paths accept an open-domain directory, a support-log JSONL file or a
 * dataset JSON file written by clarq_mine. Context arguments are JSON: either
 * an array of {"speaker": "USER"|"AGENT", "text": ...} or an object holding
 * such an array under "utterances" or "turns".
 */
#ifndef CLARQ_H
#define CLARQ_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CLARQ_API __declspec(dllexport)
#else
#define CLARQ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum clarq_status {
  CLARQ_OK = 0,
  CLARQ_E_ARGUMENT = 1,
  CLARQ_E_IO = 2,
  CLARQ_E_PARSE = 3,
  CLARQ_E_VALIDATION = 4,
  CLARQ_E_EMPTY_QUERY = 5,
  CLARQ_E_TRANSPORT = 6,
  CLARQ_E_PROTOCOL = 7,
  CLARQ_E_CONTRACT = 8,
  CLARQ_E_GENERATION = 9,
  CLARQ_E_INTERNAL = 100
} clarq_status;

typedef struct clarq_engine clarq_engine;

CLARQ_API const char* clarq_version(void);
CLARQ_API const char* clarq_last_error(void);
CLARQ_API const char* clarq_status_name(clarq_status status);
CLARQ_API void clarq_string_free(char* s);

/* Builds a document index over `field` ("text", "anchor" or "anchor_and_text")
 * and saves it to out_path. Anchors are built from the training split of
 * `conversations_path` when it is non-null. */
CLARQ_API clarq_status clarq_index_build(const char* docs_path, const char* field, const char* conversations_path,
                                         const char* out_path);
CLARQ_API clarq_status clarq_index_stats(const char* index_path, char** out_json);

/* Builds the clarification index from a pool TSV (id, text) into out_dir. */
CLARQ_API clarq_status clarq_cq_index_build(const char* pool_path, const char* out_dir);

/* Term weights of a context: [{"term", "fp_weight", "utterance_bias", "final_weight"}]. */
CLARQ_API clarq_status clarq_weigh_context(const char* index_path, const char* context_json, char** out_json);

/* Ranked passages for a context using default settings:
 * [{"doc_id", "char_start", "char_end", "init_score", "init_score_normalized",
 *   "doc_score", "final_score", "text"}]. top = 0 keeps the default (10). */
CLARQ_API clarq_status clarq_passages(const char* index_path, const char* docs_path, const char* context_json,
                                      size_t top, char** out_json);

/* Opens an engine over a saved document index, the documents TSV and a
 * clarification index directory. config_json may be null for defaults. */
CLARQ_API clarq_status clarq_engine_open(const char* doc_index_path, const char* docs_path, const char* cq_dir,
                                         const char* config_json, clarq_engine** out);
CLARQ_API void clarq_engine_close(clarq_engine* engine);
CLARQ_API clarq_status clarq_engine_config(const clarq_engine* engine, char** out_json);

CLARQ_API clarq_status clarq_engine_passages(const clarq_engine* engine, const char* context_json, size_t top,
                                             char** out_json);
/* {"candidates": [{"cq_id", "text", "fused_score", "retrieval_score", ...}]} */
CLARQ_API clarq_status clarq_engine_select(const clarq_engine* engine, const char* context_json, size_t top_k,
                                           char** out_json);
/* split: "train", "dev" or "test". ks may be null for {5, 10, 20, 30}. */
CLARQ_API clarq_status clarq_engine_evaluate(const clarq_engine* engine, const char* dataset_path, const char* split,
                                             const size_t* ks, size_t n_ks, char** out_json);
/* Serves POST /select and GET /health. Blocks. */
CLARQ_API clarq_status clarq_engine_serve(const clarq_engine* engine, const char* host, int port);

/* Mines clarification questions from support logs (JSONL) and writes the pool
 * TSV. When out_dataset_path is non-null the labelled dataset JSON is written
 * too. The report is {"conversations", "flagged_utterances", ...}. */
CLARQ_API clarq_status clarq_mine(const char* logs_path, const char* docs_path, const char* doc_index_path,
                                  const char* out_pool_path, const char* out_dataset_path, char** out_report_json);

/* Writes training triplets (JSONL) for kind "context" or "passage" from the
 * training split. doc_index_path and docs_path are required for "passage". */
CLARQ_API clarq_status clarq_triplets(const char* dataset_path, const char* docs_path, const char* doc_index_path,
                                      const char* kind, uint64_t seed, size_t negatives, const char* out_path,
                                      char** out_report_json);

#ifdef __cplusplus
}
#endif

#endif
