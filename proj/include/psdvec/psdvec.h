/*
 * psdvec C API.
 *
 * Word embeddings from a weighted low-rank PSD approximation of a smoothed
 * PMI matrix. Objects are opaque handles owned by the caller and released
 * with the matching *_free function. Every fallible call returns a
 * psdvec_status; on failure psdvec_last_error() describes the problem for
 * the calling thread.
 */
#ifndef PSDVEC_PSDVEC_H
#define PSDVEC_PSDVEC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(PSDVEC_BUILDING)
#    define PSDVEC_API __declspec(dllexport)
#  else
#    define PSDVEC_API __declspec(dllimport)
#  endif
#else
#  define PSDVEC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum psdvec_status {
  PSDVEC_OK = 0,
  PSDVEC_E_INVALID_ARGUMENT = 1, /* null handle, bad config value */
  PSDVEC_E_IO = 2,
  PSDVEC_E_PARSE = 3,
  PSDVEC_E_DOMAIN = 4,
  PSDVEC_E_PRECONDITION = 5,
  PSDVEC_E_NUMERICAL = 6,
  PSDVEC_E_INTERNAL = 7
} psdvec_status;

typedef struct psdvec_vocab psdvec_vocab;
typedef struct psdvec_bigrams psdvec_bigrams;
typedef struct psdvec_embeddings psdvec_embeddings;

PSDVEC_API const char* psdvec_version(void);
/* Message for the last failed call on this thread; "" if none. */
PSDVEC_API const char* psdvec_last_error(void);
PSDVEC_API const char* psdvec_status_name(psdvec_status status);

/* ------------------------------------------------------------ corpus */

typedef struct psdvec_token_rules {
  const char* alphabet;          /* NULL: a-z */
  const char* document_sentinel; /* NULL: "" (blank line ends a document) */
  int split_documents;           /* nonzero: sentinel lines reset the window */
} psdvec_token_rules;

PSDVEC_API void psdvec_token_rules_default(psdvec_token_rules* rules);

/* rules may be NULL for defaults. */
PSDVEC_API psdvec_status psdvec_vocab_count(const char* corpus_path, uint64_t min_count,
                                            const psdvec_token_rules* rules, psdvec_vocab** out);
PSDVEC_API psdvec_status psdvec_vocab_load(const char* path, psdvec_vocab** out);
PSDVEC_API psdvec_status psdvec_vocab_save(const psdvec_vocab* vocab, const char* path);
PSDVEC_API void psdvec_vocab_free(psdvec_vocab* vocab);
PSDVEC_API size_t psdvec_vocab_size(const psdvec_vocab* vocab);
PSDVEC_API uint64_t psdvec_vocab_total_tokens(const psdvec_vocab* vocab);
/* NULL when i is out of range. The pointer lives as long as the handle. */
PSDVEC_API const char* psdvec_vocab_word(const psdvec_vocab* vocab, size_t i);
PSDVEC_API uint64_t psdvec_vocab_count_of(const psdvec_vocab* vocab, size_t i);
/* Returns -1 when absent. */
PSDVEC_API int64_t psdvec_vocab_find(const psdvec_vocab* vocab, const char* word);

/* The bigram handle keeps its own reference to the vocabulary. */
PSDVEC_API psdvec_status psdvec_bigrams_count(const char* corpus_path, const psdvec_vocab* vocab, int window,
                                              const psdvec_token_rules* rules, unsigned threads,
                                              psdvec_bigrams** out);
PSDVEC_API psdvec_status psdvec_bigrams_load(const char* path, const psdvec_vocab* vocab, psdvec_bigrams** out);
PSDVEC_API psdvec_status psdvec_bigrams_save(const psdvec_bigrams* bigrams, const char* path);
PSDVEC_API void psdvec_bigrams_free(psdvec_bigrams* bigrams);
PSDVEC_API int psdvec_bigrams_window(const psdvec_bigrams* bigrams);
PSDVEC_API uint64_t psdvec_bigrams_total_pairs(const psdvec_bigrams* bigrams);
PSDVEC_API uint64_t psdvec_bigrams_count_of(const psdvec_bigrams* bigrams, size_t lead, size_t context);
PSDVEC_API size_t psdvec_bigrams_nonzeros(const psdvec_bigrams* bigrams);

/* ------------------------------------------------------------ factorization */

typedef struct psdvec_stats_config {
  double lambda;  /* Jelinek-Mercer interpolation weight, [0, 1] */
  double alpha;   /* weight exponent, > 0 */
  double cap;     /* <= 0: no cap */
  int normalize;  /* nonzero: weights divided by the core-block maximum */
} psdvec_stats_config;

PSDVEC_API void psdvec_stats_config_default(psdvec_stats_config* cfg);

typedef struct psdvec_core_config {
  size_t core_size;
  size_t dim;
  int max_iters;
  double tol;
} psdvec_core_config;

PSDVEC_API void psdvec_core_config_default(psdvec_core_config* cfg);

typedef void (*psdvec_iteration_fn)(void* user, int iteration, double residual);

typedef struct psdvec_core_result {
  int iterations;
  int converged;
  double initial_residual;
  double final_residual;
} psdvec_core_result;

/* Embeds the first core_size vocabulary words. on_iteration may be NULL;
 * result may be NULL. */
PSDVEC_API psdvec_status psdvec_factorize_core(const psdvec_bigrams* bigrams, const psdvec_stats_config* stats,
                                               const psdvec_core_config* core, psdvec_iteration_fn on_iteration,
                                               void* user, psdvec_embeddings** out, psdvec_core_result* result);

typedef struct psdvec_noncore_result {
  size_t words_added;
  size_t degenerate;      /* mu = 0 solves with a singular normal matrix */
  size_t core_used;       /* core words found in the vocabulary */
  size_t core_missing;    /* core words absent from the vocabulary (skipped) */
  size_t empty_rows;      /* new words with no observed core co-occurrence */
  double weight_scale;
  double seconds;
} psdvec_noncore_result;

/* Treats the first core_size words of `base` (0: all of them) as fixed core
 * embeddings and solves the next `count` vocabulary words that `base` does
 * not contain yet. The output is `base` followed by the new words. */
PSDVEC_API psdvec_status psdvec_factorize_noncore(const psdvec_bigrams* bigrams, const psdvec_embeddings* base,
                                                  size_t core_size, size_t count, double mu,
                                                  const psdvec_stats_config* stats, unsigned threads,
                                                  psdvec_embeddings** out, psdvec_noncore_result* result);

/* ------------------------------------------------------------ embeddings */

PSDVEC_API psdvec_status psdvec_embeddings_load(const char* path, psdvec_embeddings** out);
PSDVEC_API psdvec_status psdvec_embeddings_save(const psdvec_embeddings* set, const char* path);
PSDVEC_API void psdvec_embeddings_free(psdvec_embeddings* set);
PSDVEC_API size_t psdvec_embeddings_size(const psdvec_embeddings* set);
PSDVEC_API size_t psdvec_embeddings_dim(const psdvec_embeddings* set);
PSDVEC_API const char* psdvec_embeddings_word(const psdvec_embeddings* set, size_t i);
PSDVEC_API int64_t psdvec_embeddings_find(const psdvec_embeddings* set, const char* word);
/* Copies dim() values into out. */
PSDVEC_API psdvec_status psdvec_embeddings_vector(const psdvec_embeddings* set, size_t i, double* out, size_t len);

/* ------------------------------------------------------------ evaluation */

typedef enum psdvec_testset_kind {
  PSDVEC_TESTSET_UNKNOWN = 0,
  PSDVEC_TESTSET_SIMILARITY = 1,
  PSDVEC_TESTSET_ANALOGY = 2,
  PSDVEC_TESTSET_CHOICE = 3
} psdvec_testset_kind;

typedef struct psdvec_eval_report {
  char testset[128];
  char metric[16]; /* "spearman" or "accuracy" */
  double value;
  size_t total;
  size_t covered;
  double coverage;
} psdvec_eval_report;

PSDVEC_API psdvec_testset_kind psdvec_testset_kind_of(const char* path);
/* On a scoring failure report still carries the coverage reached. */
PSDVEC_API psdvec_status psdvec_evaluate_file(const psdvec_embeddings* set, const char* path,
                                              psdvec_eval_report* report);
/* Writes the aligned table and key=value lines into buf (NUL-terminated,
 * truncated to len). Returns the full length needed, excluding the NUL. */
PSDVEC_API size_t psdvec_format_reports(const psdvec_eval_report* reports, size_t n, char* buf, size_t len);

#ifdef __cplusplus
}
#endif

#endif /* PSDVEC_PSDVEC_H */
