// textgraph: build text graphs and train TextGCN / SGC / BertGCN-style models.
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "textgraph/textgraph.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUser = 1;
constexpr int kExitInternal = 2;

struct Failure {
  tg_status status;
  std::string message;
};

void check(tg_status s) {
  if (s != TG_OK) throw Failure{s, tg_last_error()};
}

int exit_code(tg_status s) {
  switch (s) {
    case TG_ERR_INTERNAL:
    case TG_ERR_SHAPE:
    case TG_ERR_NORMALIZATION:
      return kExitInternal;
    default:
      return kExitUser;
  }
}

template <typename T, void (*Destroy)(T*)>
struct Deleter {
  void operator()(T* p) const { Destroy(p); }
};
using ConfigPtr = std::unique_ptr<tg_config, Deleter<tg_config, tg_config_destroy>>;
using CorpusPtr = std::unique_ptr<tg_corpus, Deleter<tg_corpus, tg_corpus_destroy>>;
using GraphPtr = std::unique_ptr<tg_graph, Deleter<tg_graph, tg_graph_destroy>>;

// Flag values collected as strings and forwarded to the config as key=value.
struct Options {
  std::string config_file;
  std::map<std::string, std::string> values;
  bool no_finetune = false;
  bool no_small_lr = false;
  std::string out;
  std::string graph;
  std::string grid;
  std::string checkpoint;
  std::string split = "test";
};

void add_value(CLI::App* app, Options& o, const std::string& flag, const std::string& key,
               const std::string& help) {
  app->add_option_function<std::string>(
      flag, [&o, key](const std::string& v) { o.values[key] = v; }, help);
}

void add_corpus_flags(CLI::App* app, Options& o) {
  app->add_option("--config", o.config_file, "Flat key = value config file")
      ->check(CLI::ExistingFile);
  add_value(app, o, "--dataset", "dataset", "Benchmark name or dataset directory");
  add_value(app, o, "--data-root", "data_root",
            "Directory holding benchmark datasets (default: $TEXTGRAPH_DATA)");
  add_value(app, o, "--window", "window", "Sliding window size for PPMI");
  add_value(app, o, "--seed", "seed", "Random seed");
  add_value(app, o, "--dev-fraction", "dev_fraction",
            "Fraction of training documents held out as dev set");
}

void add_model_flags(CLI::App* app, Options& o) {
  app->add_option_function<std::string>(
         "--mode", [&o](const std::string& v) { o.values["mode"] = v; },
         "Model: textgcn, sgc or bertgcn")
      ->check(CLI::IsMember({"textgcn", "sgc", "bertgcn"}));
  app->add_option_function<std::string>(
         "--encoder", [&o](const std::string& v) { o.values["encoder"] = v; },
         "Document features for bertgcn: external or hashed-bow")
      ->check(CLI::IsMember({"external", "hashed-bow"}));
  add_value(app, o, "--embeddings", "embeddings", "DEMB document embedding file");
  add_value(app, o, "--lambda", "lambda", "Interpolation weight of the GCN prediction");
  add_value(app, o, "--lr-gcn", "lr_gcn", "Learning rate of the GCN parameters");
  add_value(app, o, "--lr-encoder", "lr_encoder", "Learning rate of the encoder");
  add_value(app, o, "--batch-size", "batch_size", "Documents per step (0 = all)");
  add_value(app, o, "--epochs", "epochs", "Maximum number of epochs");
  add_value(app, o, "--hidden", "hidden", "Hidden width of the GCN");
  add_value(app, o, "--layers", "layers", "Number of GCN layers");
  add_value(app, o, "--dropout", "dropout", "Dropout rate");
  app->add_flag("--no-finetune-init", o.no_finetune,
                "Skip encoder pretraining before joint training");
  app->add_flag("--no-small-lr", o.no_small_lr,
                "Train the encoder at the GCN learning rate");
  app->add_option("--graph", o.graph, "Prebuilt graph file (built in memory if absent)");
}

ConfigPtr make_config(const Options& o) {
  tg_config* raw = nullptr;
  check(tg_config_create(&raw));
  ConfigPtr cfg(raw);
  if (!o.config_file.empty()) check(tg_config_load_file(cfg.get(), o.config_file.c_str()));
  for (const auto& [k, v] : o.values) check(tg_config_set(cfg.get(), k.c_str(), v.c_str()));
  if (o.no_finetune) check(tg_config_set(cfg.get(), "finetune_init", "false"));
  if (o.no_small_lr) check(tg_config_set(cfg.get(), "small_lr", "false"));
  return cfg;
}

CorpusPtr load_corpus(const tg_config* cfg) {
  tg_corpus* raw = nullptr;
  check(tg_corpus_load(cfg, &raw));
  return CorpusPtr(raw);
}

GraphPtr obtain_graph(const Options& o, const tg_config* cfg, const tg_corpus* corpus) {
  tg_graph* raw = nullptr;
  if (o.graph.empty()) check(tg_graph_build(cfg, corpus, &raw));
  else check(tg_graph_load(o.graph.c_str(), &raw));
  GraphPtr g(raw);
  check(tg_graph_check_corpus(g.get(), corpus));
  return g;
}

void log_epoch(const tg_epoch_report* r, void*) {
  std::fprintf(stderr, "epoch %4llu  loss %.6f  dev %s  test %s  %.0f ms\n",
               static_cast<unsigned long long>(r->epoch), r->train_loss,
               std::isnan(r->dev_acc) ? "  n/a " : std::to_string(r->dev_acc).substr(0, 6).c_str(),
               std::isnan(r->test_acc) ? "  n/a " : std::to_string(r->test_acc).substr(0, 6).c_str(),
               r->wall_ms);
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  if (text.empty()) {
    for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
    return grid;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size())
      throw Failure{TG_ERR_ARGUMENT, "--grid: '" + item + "' is not a number"};
    grid.push_back(v);
  }
  if (grid.empty()) throw Failure{TG_ERR_ARGUMENT, "--grid is empty"};
  return grid;
}

void run_build_graph(const Options& o) {
  const ConfigPtr cfg = make_config(o);
  const CorpusPtr corpus = load_corpus(cfg.get());
  tg_graph* raw = nullptr;
  check(tg_graph_build(cfg.get(), corpus.get(), &raw));
  const GraphPtr g(raw);
  check(tg_graph_save(g.get(), o.out.c_str()));
  tg_graph_info info{};
  check(tg_graph_info_get(g.get(), &info));
  std::printf("n_doc=%llu n_word=%llu nnz=%llu\n",
              static_cast<unsigned long long>(info.n_doc),
              static_cast<unsigned long long>(info.n_word),
              static_cast<unsigned long long>(info.nnz));
}

void run_train(const Options& o) {
  const ConfigPtr cfg = make_config(o);
  const CorpusPtr corpus = load_corpus(cfg.get());
  const GraphPtr g = obtain_graph(o, cfg.get(), corpus.get());
  tg_train_summary s{};
  check(tg_train(cfg.get(), corpus.get(), g.get(), o.out.c_str(), log_epoch, nullptr, &s));
  std::printf("epochs=%llu best_epoch=%llu dev_acc=%.4f test_acc=%.4f\n",
              static_cast<unsigned long long>(s.epochs_run),
              static_cast<unsigned long long>(s.best_epoch), s.best_dev_acc,
              s.best_test_acc);
}

void run_sweep(const Options& o) {
  const std::vector<double> grid = parse_grid(o.grid);
  const ConfigPtr cfg = make_config(o);
  const CorpusPtr corpus = load_corpus(cfg.get());
  const GraphPtr g = obtain_graph(o, cfg.get(), corpus.get());
  check(tg_sweep_lambda(cfg.get(), corpus.get(), g.get(), grid.data(), grid.size(),
                        o.out.c_str(), log_epoch, nullptr));
  std::printf("wrote %s/sweep.csv (%zu rows)\n", o.out.c_str(), grid.size());
}

void run_ablate(const Options& o) {
  const ConfigPtr cfg = make_config(o);
  const CorpusPtr corpus = load_corpus(cfg.get());
  const GraphPtr g = obtain_graph(o, cfg.get(), corpus.get());
  std::size_t needed = 0;
  std::string table(4096, '\0');
  check(tg_ablate(cfg.get(), corpus.get(), g.get(), o.out.c_str(), log_epoch, nullptr,
                  table.data(), table.size(), &needed));
  table.resize(needed > 0 ? needed - 1 : 0);
  std::fputs(table.c_str(), stdout);
}

void run_export_manifest(const Options& o) {
  const ConfigPtr cfg = make_config(o);
  const CorpusPtr corpus = load_corpus(cfg.get());
  check(tg_corpus_write_manifest(corpus.get(), o.out.c_str()));
  tg_corpus_info info{};
  check(tg_corpus_info_get(corpus.get(), &info));
  std::printf("wrote %s (%llu documents)\n", o.out.c_str(),
              static_cast<unsigned long long>(info.n_doc));
}

void run_evaluate(const Options& o) {
  const ConfigPtr cfg = make_config(o);
  const CorpusPtr corpus = load_corpus(cfg.get());
  const GraphPtr g = obtain_graph(o, cfg.get(), corpus.get());
  const tg_split split = o.split == "train" ? TG_SPLIT_TRAIN
                         : o.split == "dev" ? TG_SPLIT_DEV
                                            : TG_SPLIT_TEST;
  double acc = 0.0;
  check(tg_evaluate_checkpoint(cfg.get(), corpus.get(), g.get(), o.checkpoint.c_str(),
                               split, &acc));
  std::printf("%s_acc=%.6f\n", o.split.c_str(), acc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text graph construction and graph-convolutional text classification"};
  app.require_subcommand(1);

  Options build_o, train_o, sweep_o, ablate_o, manifest_o, eval_o;

  auto* build = app.add_subcommand("build-graph", "Build the word-document graph");
  add_corpus_flags(build, build_o);
  build->add_option("--out", build_o.out, "Output graph file")->required();

  auto* train = app.add_subcommand("train", "Train a model; writes metrics.csv and model.gcnm");
  add_corpus_flags(train, train_o);
  add_model_flags(train, train_o);
  train->add_option("--out", train_o.out, "Output directory")->required();

  auto* sweep = app.add_subcommand("sweep-lambda", "Train once per lambda; writes sweep.csv");
  add_corpus_flags(sweep, sweep_o);
  add_model_flags(sweep, sweep_o);
  sweep->add_option("--out", sweep_o.out, "Output directory")->required();
  sweep->add_option("--grid", sweep_o.grid,
                    "Comma-separated lambda values (default 0,0.1,...,1)");

  auto* ablate = app.add_subcommand("ablate", "Finetune-init x small-lr strategy grid");
  add_corpus_flags(ablate, ablate_o);
  add_model_flags(ablate, ablate_o);
  ablate->add_option("--out", ablate_o.out, "Output directory")->required();

  auto* manifest =
      app.add_subcommand("export-manifest", "Write {dataset, doc_ids, texts} JSON");
  add_corpus_flags(manifest, manifest_o);
  manifest->add_option("--out", manifest_o.out, "Output JSON file")->required();

  auto* eval = app.add_subcommand("evaluate", "Score a saved checkpoint");
  add_corpus_flags(eval, eval_o);
  add_model_flags(eval, eval_o);
  eval->add_option("--checkpoint", eval_o.checkpoint, "Checkpoint file")->required();
  eval->add_option("--split", eval_o.split, "train, dev or test")
      ->check(CLI::IsMember({"train", "dev", "test"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUser;
  }

  try {
    if (*build) run_build_graph(build_o);
    else if (*train) run_train(train_o);
    else if (*sweep) run_sweep(sweep_o);
    else if (*ablate) run_ablate(ablate_o);
    else if (*manifest) run_export_manifest(manifest_o);
    else if (*eval) run_evaluate(eval_o);
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s: %s\n", tg_status_name(f.status), f.message.c_str());
    return exit_code(f.status);
  }
  return kExitOk;
}
