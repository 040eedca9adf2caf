#include "textgraph/textgraph.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <string>

#include <json.hpp>

#include "textgraph/config.hpp"
#include "textgraph/error.hpp"
#include "textgraph/trainer.hpp"

namespace fs = std::filesystem;
using namespace textgraph;

struct tg_config {
  RunConfig config;
};

struct tg_corpus {
  Settings settings;
  Corpus corpus;
  std::vector<RawDocument> raw;
};

struct tg_graph {
  HeteroGraph graph;
  bool has_meta = false;
  GraphMetadata meta;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
tg_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return TG_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<tg_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return TG_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TG_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return TG_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  require(p != nullptr, ErrorCode::kArgument, std::string(what) + " is NULL");
}

void copy_text(const std::string& text, char* buf, size_t cap, size_t* needed) {
  if (needed != nullptr) *needed = text.size() + 1;
  if (buf != nullptr && cap > text.size()) std::memcpy(buf, text.c_str(), text.size() + 1);
}

void check_consistent(const tg_graph& g, const Corpus& corpus) {
  require(g.graph.n_doc == corpus.n_doc(), ErrorCode::kMismatch,
          "graph has " + std::to_string(g.graph.n_doc) + " documents, corpus has " +
              std::to_string(corpus.n_doc()));
  require(g.graph.n_word == corpus.n_word(), ErrorCode::kMismatch,
          "graph has " + std::to_string(g.graph.n_word) + " words, corpus has " +
              std::to_string(corpus.n_word()));
  if (g.has_meta)
    require(g.meta.corpus_hash == corpus_hash(corpus), ErrorCode::kMismatch,
            "graph was built from a different corpus (hash mismatch); rebuild it");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

fs::path prepare_dir(const char* out_dir, const Settings& s) {
  need(out_dir, "out_dir");
  fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), ErrorCode::kIo,
          "cannot create output directory " + dir.string());
  write_text(dir / "config.txt", format_settings(s));
  return dir;
}

EpochCallback forward_to(tg_epoch_callback cb, void* user) {
  if (cb == nullptr) return {};
  return [cb, user](const EpochReport& r) {
    const tg_epoch_report c{r.epoch, r.train_loss, r.dev_acc, r.test_acc, r.wall_ms};
    cb(&c, user);
  };
}

struct RunInputs {
  Settings settings;
  std::optional<DocFeatureSource> features;
  const DocFeatureSource* source() const { return features ? &*features : nullptr; }
};

RunInputs prepare_run(const tg_config* config, const tg_corpus* corpus,
                      const tg_graph* graph) {
  need(config, "config");
  need(corpus, "corpus");
  need(graph, "graph");
  check_consistent(*graph, corpus->corpus);
  RunInputs in{resolve(config->config), std::nullopt};
  in.features = load_features(in.settings, corpus->corpus);
  return in;
}

}  // namespace

extern "C" {

const char* tg_last_error(void) { return g_last_error.c_str(); }

const char* tg_status_name(tg_status status) {
  switch (status) {
    case TG_OK: return "ok";
    case TG_ERR_ARGUMENT: return "invalid argument";
    case TG_ERR_NOT_FOUND: return "not found";
    case TG_ERR_PARSE: return "parse error";
    case TG_ERR_PREPROCESS: return "preprocessing error";
    case TG_ERR_SHAPE: return "shape mismatch";
    case TG_ERR_FORMAT: return "bad file format";
    case TG_ERR_TRUNCATED: return "truncated file";
    case TG_ERR_ID_ORDER: return "document id order mismatch";
    case TG_ERR_COUNT_MISMATCH: return "document count mismatch";
    case TG_ERR_NON_FINITE: return "non-finite value";
    case TG_ERR_CONFIG: return "configuration error";
    case TG_ERR_IO: return "i/o error";
    case TG_ERR_MISMATCH: return "inconsistent inputs";
    case TG_ERR_NORMALIZATION: return "normalization error";
    case TG_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* tg_version(void) { return "0.1.0"; }

tg_status tg_config_create(tg_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new tg_config();
  });
}

void tg_config_destroy(tg_config* config) { delete config; }

tg_status tg_config_set(tg_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    config->config.set(key, value);
  });
}

tg_status tg_config_load_file(tg_config* config, const char* path) {
  return guarded([&] {
    need(config, "config");
    need(path, "path");
    config->config.load_file(path);
  });
}

tg_status tg_config_resolved(const tg_config* config, char* buf, size_t cap,
                             size_t* needed) {
  return guarded([&] {
    need(config, "config");
    copy_text(format_settings(resolve(config->config)), buf, cap, needed);
  });
}

tg_status tg_config_hash(const tg_config* config, uint64_t* out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = config_hash(resolve(config->config));
  });
}

tg_status tg_corpus_load(const tg_config* config, tg_corpus** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    auto c = std::make_unique<tg_corpus>();
    c->settings = resolve(config->config);
    require(!c->settings.dataset.empty(), ErrorCode::kConfig, "no dataset given");
    c->corpus = load_corpus(c->settings, &c->raw);
    *out = c.release();
  });
}

void tg_corpus_destroy(tg_corpus* corpus) { delete corpus; }

tg_status tg_corpus_info_get(const tg_corpus* corpus, tg_corpus_info* out) {
  return guarded([&] {
    need(corpus, "corpus");
    need(out, "out");
    const Corpus& c = corpus->corpus;
    *out = {c.n_doc(), c.n_word(), c.n_classes(), c.train_indices().size(),
            c.dev_indices().size(), c.test_indices().size(), corpus_hash(c)};
  });
}

tg_status tg_corpus_write_manifest(const tg_corpus* corpus, const char* path) {
  return guarded([&] {
    need(corpus, "corpus");
    need(path, "path");
    require(corpus->raw.size() == corpus->corpus.n_doc(), ErrorCode::kInternal,
            "raw documents and corpus are out of step");
    nlohmann::ordered_json j;
    j["dataset"] = fs::path(corpus->settings.dataset).filename().string();
    j["doc_ids"] = corpus->corpus.doc_ids;
    std::vector<std::string> texts;
    texts.reserve(corpus->raw.size());
    for (const RawDocument& d : corpus->raw) texts.push_back(d.text);
    j["texts"] = std::move(texts);
    write_text(path, j.dump() + "\n");
  });
}

tg_status tg_graph_build(const tg_config* config, const tg_corpus* corpus,
                         tg_graph** out) {
  return guarded([&] {
    need(config, "config");
    need(corpus, "corpus");
    need(out, "out");
    const Settings s = resolve(config->config);
    auto g = std::make_unique<tg_graph>();
    g->graph = build_graph(corpus->corpus, GraphParams{s.window});
    g->has_meta = true;
    g->meta = graph_metadata(s, corpus->corpus);
    *out = g.release();
  });
}

tg_status tg_graph_load(const char* path, tg_graph** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto g = std::make_unique<tg_graph>();
    if (fs::exists(sidecar_path(path))) {
      g->graph = load_graph(path, &g->meta);
      g->has_meta = true;
    } else {
      g->graph = load_graph(path);
    }
    *out = g.release();
  });
}

tg_status tg_graph_save(const tg_graph* graph, const char* path) {
  return guarded([&] {
    need(graph, "graph");
    need(path, "path");
    save_graph(graph->graph, graph->meta, path);
  });
}

tg_status tg_graph_info_get(const tg_graph* graph, tg_graph_info* out) {
  return guarded([&] {
    need(graph, "graph");
    need(out, "out");
    *out = {graph->graph.n_doc, graph->graph.n_word, graph->graph.adjacency.nnz(),
            graph->has_meta ? graph->meta.window_size : 0,
            graph->has_meta ? graph->meta.corpus_hash : 0};
  });
}

tg_status tg_graph_check_corpus(const tg_graph* graph, const tg_corpus* corpus) {
  return guarded([&] {
    need(graph, "graph");
    need(corpus, "corpus");
    check_consistent(*graph, corpus->corpus);
  });
}

void tg_graph_destroy(tg_graph* graph) { delete graph; }

tg_status tg_train(const tg_config* config, const tg_corpus* corpus,
                   const tg_graph* graph, const char* out_dir,
                   tg_epoch_callback on_epoch, void* user, tg_train_summary* summary) {
  return guarded([&] {
    const RunInputs in = prepare_run(config, corpus, graph);
    const fs::path dir = prepare_dir(out_dir, in.settings);
    const TrainResult r = train(corpus->corpus, graph->graph, in.source(),
                                in.settings.train, nullptr, forward_to(on_epoch, user));
    const std::uint64_t hash = config_hash(in.settings);
    write_metrics_csv(r.reports, in.settings.record_wall_time, dir / "metrics.csv");
    save_checkpoint(r.best_models, hash, dir / "model.gcnm");
    if (summary != nullptr)
      *summary = {r.reports.size(), r.best_epoch, r.best_dev_acc, r.best_test_acc, hash};
  });
}

tg_status tg_sweep_lambda(const tg_config* config, const tg_corpus* corpus,
                          const tg_graph* graph, const double* grid, size_t n_grid,
                          const char* out_dir, tg_epoch_callback on_epoch, void* user) {
  return guarded([&] {
    require(grid != nullptr && n_grid > 0, ErrorCode::kArgument, "empty lambda grid");
    const RunInputs in = prepare_run(config, corpus, graph);
    require(in.settings.mode == RunMode::kBertGcn, ErrorCode::kConfig,
            "the lambda sweep needs bertgcn mode");
    const fs::path dir = prepare_dir(out_dir, in.settings);
    const auto rows = sweep_lambda(corpus->corpus, graph->graph, in.source(),
                                   in.settings.train, std::span(grid, n_grid),
                                   forward_to(on_epoch, user));
    write_sweep_csv(rows, dir / "sweep.csv");
  });
}

tg_status tg_ablate(const tg_config* config, const tg_corpus* corpus,
                    const tg_graph* graph, const char* out_dir,
                    tg_epoch_callback on_epoch, void* user, char* buf, size_t cap,
                    size_t* needed) {
  return guarded([&] {
    const RunInputs in = prepare_run(config, corpus, graph);
    require(in.settings.mode == RunMode::kBertGcn, ErrorCode::kConfig,
            "the strategy ablation needs bertgcn mode");
    const fs::path dir = prepare_dir(out_dir, in.settings);
    const auto cells = ablation_run(corpus->corpus, graph->graph, in.source(),
                                    in.settings.train, forward_to(on_epoch, user));
    write_ablation_csv(cells, dir / "ablation.csv");
    const std::string table = format_ablation_table(cells);
    write_text(dir / "ablation.txt", table);
    copy_text(table, buf, cap, needed);
  });
}

tg_status tg_evaluate_checkpoint(const tg_config* config, const tg_corpus* corpus,
                                 const tg_graph* graph, const char* checkpoint,
                                 tg_split split, double* accuracy) {
  return guarded([&] {
    need(checkpoint, "checkpoint");
    need(accuracy, "accuracy");
    const RunInputs in = prepare_run(config, corpus, graph);
    const Checkpoint ck = load_checkpoint(checkpoint);
    require(ck.config_hash == config_hash(in.settings), ErrorCode::kMismatch,
            std::string(checkpoint) + " was trained with a different configuration");
    const EvalSplit s = split == TG_SPLIT_TRAIN ? EvalSplit::kTrain
                        : split == TG_SPLIT_DEV ? EvalSplit::kDev
                                                : EvalSplit::kTest;
    *accuracy = evaluate(ck.models, in.source(), graph->graph, corpus->corpus,
                         in.settings.train.lambda, s);
  });
}

tg_status tg_embeddings_validate(const char* path, const tg_corpus* corpus) {
  return guarded([&] {
    need(path, "path");
    need(corpus, "corpus");
    load_embedding_file(path, corpus->corpus);
  });
}

tg_status tg_embeddings_write(const char* path, uint64_t n_doc, uint64_t dim,
                              const float* data, const char* const* doc_ids,
                              const char* dataset, const char* model_name) {
  return guarded([&] {
    need(path, "path");
    require(n_doc == 0 || (data != nullptr && doc_ids != nullptr), ErrorCode::kArgument,
            "data and doc_ids are required");
    EmbeddingFile f;
    f.n_doc = n_doc;
    f.dim = dim;
    f.data.assign(data, data + n_doc * dim);
    for (uint64_t i = 0; i < n_doc; ++i) {
      need(doc_ids[i], "doc id");
      f.doc_ids.emplace_back(doc_ids[i]);
    }
    f.dataset = dataset ? dataset : "";
    f.model_name = model_name ? model_name : "";
    write_embedding_file(f, path);
  });
}

}  // extern "C"
