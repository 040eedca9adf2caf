#ifndef TEXTGRAPH_TEXTGRAPH_H
#define TEXTGRAPH_TEXTGRAPH_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TG_API __declspec(dllexport)
#else
#define TG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tg_status {
  TG_OK = 0,
  TG_ERR_ARGUMENT = 1,
  TG_ERR_NOT_FOUND = 2,
  TG_ERR_PARSE = 3,
  TG_ERR_PREPROCESS = 4,
  TG_ERR_SHAPE = 5,
  TG_ERR_FORMAT = 6,
  TG_ERR_TRUNCATED = 7,
  TG_ERR_ID_ORDER = 8,
  TG_ERR_COUNT_MISMATCH = 9,
  TG_ERR_NON_FINITE = 10,
  TG_ERR_CONFIG = 11,
  TG_ERR_IO = 12,
  TG_ERR_MISMATCH = 13,
  TG_ERR_NORMALIZATION = 14,
  TG_ERR_INTERNAL = 100
} tg_status;

typedef enum tg_split { TG_SPLIT_TRAIN = 0, TG_SPLIT_DEV = 1, TG_SPLIT_TEST = 2 } tg_split;

typedef struct tg_config tg_config;
typedef struct tg_corpus tg_corpus;
typedef struct tg_graph tg_graph;

typedef struct tg_corpus_info {
  uint64_t n_doc;
  uint64_t n_word;
  uint64_t n_classes;
  uint64_t n_train;
  uint64_t n_dev;
  uint64_t n_test;
  uint64_t corpus_hash;
} tg_corpus_info;

typedef struct tg_graph_info {
  uint64_t n_doc;
  uint64_t n_word;
  uint64_t nnz;
  uint64_t window_size;
  uint64_t corpus_hash; /* 0 when the graph carries no metadata */
} tg_graph_info;

typedef struct tg_epoch_report {
  uint64_t epoch;
  double train_loss;
  double dev_acc; /* NaN without a dev split */
  double test_acc;
  double wall_ms;
} tg_epoch_report;

typedef void (*tg_epoch_callback)(const tg_epoch_report* report, void* user);

typedef struct tg_train_summary {
  uint64_t epochs_run;
  uint64_t best_epoch;
  double best_dev_acc;
  double best_test_acc; /* test accuracy of the retained checkpoint */
  uint64_t config_hash;
} tg_train_summary;

/* Message for the last failing call on this thread; never NULL. */
TG_API const char* tg_last_error(void);
TG_API const char* tg_status_name(tg_status status);
TG_API const char* tg_version(void);

TG_API tg_status tg_config_create(tg_config** out);
TG_API void tg_config_destroy(tg_config* config);
TG_API tg_status tg_config_set(tg_config* config, const char* key, const char* value);
TG_API tg_status tg_config_load_file(tg_config* config, const char* path);
/* Copies the resolved key = value text into buf (NUL-terminated) when it
   fits; *needed always receives the full length including the NUL. */
TG_API tg_status tg_config_resolved(const tg_config* config, char* buf, size_t cap,
                                    size_t* needed);
TG_API tg_status tg_config_hash(const tg_config* config, uint64_t* out);

TG_API tg_status tg_corpus_load(const tg_config* config, tg_corpus** out);
TG_API void tg_corpus_destroy(tg_corpus* corpus);
TG_API tg_status tg_corpus_info_get(const tg_corpus* corpus, tg_corpus_info* out);
/* JSON {dataset, doc_ids, texts} in corpus order, raw texts. */
TG_API tg_status tg_corpus_write_manifest(const tg_corpus* corpus, const char* path);

TG_API tg_status tg_graph_build(const tg_config* config, const tg_corpus* corpus,
                                tg_graph** out);
TG_API tg_status tg_graph_load(const char* path, tg_graph** out);
TG_API tg_status tg_graph_save(const tg_graph* graph, const char* path);
TG_API tg_status tg_graph_info_get(const tg_graph* graph, tg_graph_info* out);
/* TG_ERR_MISMATCH when the graph was built from a different corpus. */
TG_API tg_status tg_graph_check_corpus(const tg_graph* graph, const tg_corpus* corpus);
TG_API void tg_graph_destroy(tg_graph* graph);

/* Writes metrics.csv, model.gcnm (+ .meta.json) and config.txt into out_dir. */
TG_API tg_status tg_train(const tg_config* config, const tg_corpus* corpus,
                          const tg_graph* graph, const char* out_dir,
                          tg_epoch_callback on_epoch, void* user,
                          tg_train_summary* summary);
/* Writes sweep.csv and config.txt. */
TG_API tg_status tg_sweep_lambda(const tg_config* config, const tg_corpus* corpus,
                                 const tg_graph* graph, const double* grid,
                                 size_t n_grid, const char* out_dir,
                                 tg_epoch_callback on_epoch, void* user);
/* Writes ablation.csv, ablation.txt and config.txt; the aligned table text
   is also copied into buf as in tg_config_resolved. */
TG_API tg_status tg_ablate(const tg_config* config, const tg_corpus* corpus,
                           const tg_graph* graph, const char* out_dir,
                           tg_epoch_callback on_epoch, void* user, char* buf,
                           size_t cap, size_t* needed);
TG_API tg_status tg_evaluate_checkpoint(const tg_config* config, const tg_corpus* corpus,
                                        const tg_graph* graph, const char* checkpoint,
                                        tg_split split, double* accuracy);

/* Checks a DEMB file against the corpus document order. */
TG_API tg_status tg_embeddings_validate(const char* path, const tg_corpus* corpus);
TG_API tg_status tg_embeddings_write(const char* path, uint64_t n_doc, uint64_t dim,
                                     const float* data, const char* const* doc_ids,
                                     const char* dataset, const char* model_name);

#ifdef __cplusplus
}
#endif

#endif
