/*
 * C interface to the prompt-to-triple toolkit.
 *
 * Objects are opaque handles created by the _create and _load calls and freed by the
 * matching _free call. Every fallible call returns a p2t_status; on failure the
 * message is available from p2t_last_error() on the same thread until the
 * next call. Strings returned through `char**` are owned by the caller and
 * released with p2t_string_free.
 */
#ifndef P2T_P2T_H_
#define P2T_P2T_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define P2T_API __declspec(dllexport)
#else
#define P2T_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum p2t_status {
  P2T_OK = 0,
  P2T_ERR_INVALID_ARGUMENT = 1,
  P2T_ERR_IO = 2,
  P2T_ERR_SCHEMA = 3,
  P2T_ERR_DUPLICATE_ID = 4,
  P2T_ERR_EMPTY_VOCABULARY = 5,
  P2T_ERR_EMPTY_PROMPT = 6,
  P2T_ERR_MISSING_EXAMPLES = 7,
  P2T_ERR_MISSING_GROUND_TRUTH = 8,
  P2T_ERR_TEMPLATE = 9,
  P2T_ERR_INFEASIBLE_SPLIT = 10,
  P2T_ERR_MISSING_SPLIT = 11,
  P2T_ERR_GOLD_RELATION_UNKNOWN = 12,
  P2T_ERR_NO_EVALUATED_RECORDS = 13,
  P2T_ERR_PAIRING_MISMATCH = 14,
  P2T_ERR_NETWORK = 15,
  P2T_ERR_HTTP_STATUS = 16,
  P2T_ERR_MALFORMED_RESPONSE = 17,
  P2T_ERR_RATE_LIMITED = 18,
  P2T_ERR_TAPE_MISS = 19,
  P2T_ERR_INTERNAL = 99
} p2t_status;

typedef enum p2t_outcome_kind {
  P2T_EXTRACTED = 0,
  P2T_OUT_OF_CONTEXT = 1,
  P2T_UNPARSEABLE = 2
} p2t_outcome_kind;

typedef enum p2t_mode {
  P2T_MODE_ZERO_SHOT = 0,
  P2T_MODE_FEW_SHOT = 1,
  P2T_MODE_FINETUNED = 2
} p2t_mode;

typedef enum p2t_f1_mode {
  P2T_F1_HARMONIC_OF_MACRO = 0,
  P2T_F1_MEAN_OF_PER_CLASS = 1
} p2t_f1_mode;

typedef enum p2t_split_mode {
  P2T_SPLIT_RECORD_RANDOM = 0,
  P2T_SPLIT_GROUP_BY_BASE = 1
} p2t_split_mode;

typedef enum p2t_protocol {
  P2T_PROTOCOL_RELATION = 0,
  P2T_PROTOCOL_TRIPLE = 1
} p2t_protocol;

typedef struct p2t_vocabulary p2t_vocabulary;
typedef struct p2t_outcome p2t_outcome;
typedef struct p2t_backend p2t_backend;
typedef struct p2t_eval p2t_eval;

/* ---- errors and strings ---- */

P2T_API const char* p2t_status_name(p2t_status status);
P2T_API const char* p2t_last_error(void);
P2T_API void p2t_string_free(char* s);
P2T_API const char* p2t_version(void);

/* ---- vocabulary ---- */

/* JSONL, one {"name","description"} per line. NULL path loads the built-in
 * birthday/anniversary vocabulary. */
P2T_API p2t_status p2t_vocabulary_load(const char* path, p2t_vocabulary** out);
P2T_API void p2t_vocabulary_free(p2t_vocabulary* vocab);
P2T_API size_t p2t_vocabulary_size(const p2t_vocabulary* vocab);
P2T_API const char* p2t_vocabulary_name(const p2t_vocabulary* vocab, size_t index);
P2T_API p2t_status p2t_vocabulary_fingerprint(const p2t_vocabulary* vocab, char** out);

/* ---- terms and triples ---- */

/* Normalized tokens joined by single spaces. */
P2T_API p2t_status p2t_normalize_term(const char* text, char** out);
P2T_API int p2t_inclusion_match(const char* a, const char* b);
P2T_API p2t_status p2t_serialize_triple(const char* subject, const char* predicate, const char* object,
                                        char** out);

/* Parses a completion and applies relation post-processing. `cues_path` may
 * be NULL for the default out-of-context phrases. */
P2T_API p2t_status p2t_parse_completion(const char* raw, const p2t_vocabulary* vocab, const char* cues_path,
                                        p2t_outcome** out);
P2T_API void p2t_outcome_free(p2t_outcome* outcome);
P2T_API p2t_outcome_kind p2t_outcome_get_kind(const p2t_outcome* outcome);
/* NULL unless the outcome is P2T_EXTRACTED. */
P2T_API const char* p2t_outcome_subject(const p2t_outcome* outcome);
P2T_API const char* p2t_outcome_predicate(const p2t_outcome* outcome);
P2T_API const char* p2t_outcome_object(const p2t_outcome* outcome);
P2T_API const char* p2t_outcome_justification(const p2t_outcome* outcome);

/* ---- metrics ---- */

/* Macro metrics over `n` classes given per-class tp/fp/fn and gold support. */
P2T_API p2t_status p2t_compute_metrics(const long* tp, const long* fp, const long* fn, const long* support,
                                       size_t n, p2t_f1_mode mode, double* precision, double* recall,
                                       double* f1);
P2T_API double p2t_harmonic_f1(double precision, double recall);

/* ---- backend ---- */

typedef struct p2t_backend_options {
  const char* endpoint;  /* base URL; may be NULL when tape_path is set */
  const char* api_key;   /* NULL: use P2T_API_KEY */
  const char* model;     /* NULL: default model id */
  const char* tape_path; /* replay tape; NULL for live HTTP only */
  int record;            /* with tape_path + endpoint: append live answers on miss */
  double temperature;
  int max_tokens;
  int timeout_ms;
  int has_seed;
  int64_t seed;
  int max_in_flight;
  int max_retries;
  int initial_backoff_ms;
} p2t_backend_options;

P2T_API void p2t_backend_options_init(p2t_backend_options* opts);
P2T_API p2t_status p2t_backend_create(const p2t_backend_options* opts, p2t_backend** out);
P2T_API void p2t_backend_free(p2t_backend* backend);
/* Lookups served by the replay tape so far (0 without a tape). */
P2T_API size_t p2t_backend_tape_lookups(const p2t_backend* backend);

/* ---- dataset pipeline ---- */

P2T_API p2t_status p2t_datagen_expand(const char* templates_path, int variants, uint64_t seed,
                                      const char* out_path, size_t* n_templates, size_t* n_records);
/* rejects_path may be NULL (defaults to <out_path>.rejects.jsonl). */
P2T_API p2t_status p2t_datagen_paraphrase(p2t_backend* backend, const char* in_path, int per,
                                          int include_originals, const char* out_path, const char* rejects_path,
                                          size_t* n_inputs, size_t* n_written, size_t* n_rejects);
P2T_API p2t_status p2t_datagen_split(const char* in_path, size_t train, size_t valid, size_t test, uint64_t seed,
                                     p2t_split_mode mode, const char* out_path, size_t* n_total,
                                     size_t* n_assigned);
P2T_API p2t_status p2t_datagen_export(const char* in_path, const char* out_dir, size_t* n_train, size_t* n_valid,
                                      size_t* n_test);

/* ---- extraction and evaluation ---- */

typedef struct p2t_extract_options {
  p2t_mode mode;
  const char* template_path; /* NULL: built-in template for the mode */
  const char* bank_path;     /* required for P2T_MODE_FEW_SHOT */
  int per_relation;
  const char* cues_path;     /* NULL: default cue phrases */
} p2t_extract_options;

P2T_API void p2t_extract_options_init(p2t_extract_options* opts);
P2T_API p2t_status p2t_extract(p2t_backend* backend, const p2t_vocabulary* vocab, const p2t_extract_options* opts,
                               const char* dataset_path, const char* out_path, size_t* n_total,
                               size_t* n_requested, size_t* n_backend_errors);

/* out_dir may be NULL to skip writing report files. */
P2T_API p2t_status p2t_evaluate(const char* outcomes_path, const char* gold_path, const p2t_vocabulary* vocab,
                                p2t_f1_mode mode, const char* out_dir, const char* method_label,
                                p2t_eval** out);
P2T_API void p2t_eval_free(p2t_eval* eval);
P2T_API const char* p2t_eval_table(const p2t_eval* eval);
P2T_API void p2t_eval_metrics(const p2t_eval* eval, p2t_protocol protocol, double* precision, double* recall,
                              double* f1);
P2T_API void p2t_eval_verdict_totals(const p2t_eval* eval, p2t_protocol protocol, long* tp, long* fp, long* fn);

#ifdef __cplusplus
}
#endif

#endif /* P2T_P2T_H_ */
