#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "textgraph/corpus.hpp"
#include "textgraph/encoder.hpp"
#include "textgraph/gcn.hpp"
#include "textgraph/textgraph.hpp"

namespace textgraph {

enum class ModelKind { kGcn, kSgc };

struct Strategy {
  bool finetune_init = true;
  bool small_encoder_lr = true;
};

struct TrainConfig {
  double lambda = 0.7;
  double lr_gcn = 1e-3;
  double lr_encoder = 1e-5;
  std::size_t batch_size = 64;  // 0 means one batch holding every document
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
  Strategy strategy;
  std::size_t patience = 10;  // 0 disables early stopping

  ModelKind model = ModelKind::kGcn;
  std::size_t layers = 2;
  std::size_t hidden = 200;
  double dropout = 0.5;
  int sgc_k = 2;
  std::size_t encoder_dim = 128;

  std::size_t pretrain_epochs = 20;
  double lr_pretrain = 1e-3;

  // lr_gcn when the small-encoder-lr strategy is off.
  double effective_lr_encoder() const noexcept {
    return strategy.small_encoder_lr ? lr_encoder : lr_gcn;
  }
};

struct Models {
  ModelKind kind = ModelKind::kGcn;
  GcnModel gcn;            // kGcn
  DenseMatrix sgc_weight;  // kSgc
  int sgc_k = 2;
  std::optional<EncoderParams> encoder;  // absent with identity features

  std::size_t n_classes() const {
    return kind == ModelKind::kGcn ? gcn.output_width() : sgc_weight.cols();
  }
};

// Row r holds the latest embedding computed for document r.
struct MemoryBank {
  DenseMatrix m;
  std::uint64_t epoch_stamp = 0;
};

struct AdamMoments {
  DenseMatrix m;
  DenseMatrix v;
};

struct OptimizerState {
  std::vector<AdamMoments> gcn;
  std::vector<AdamMoments> encoder;  // projection, bias, aux_weight
  std::uint64_t step = 0;
};

struct EpochReport {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_acc = 0.0;  // NaN when the dev split is empty
  double test_acc = 0.0;
  double wall_ms = 0.0;
};

struct TrainResult {
  Models final_models;
  Models best_models;
  std::vector<EpochReport> reports;
  std::vector<double> step_losses;
  std::size_t best_epoch = 0;
  double best_dev_acc = 0.0;
  double best_test_acc = 0.0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

void adam_update(DenseMatrix& param, const DenseMatrix& grad, AdamMoments& state,
                 double lr, std::uint64_t step);

// Initial models for a corpus/graph/feature combination, before any training.
// `source` == nullptr selects identity node features (no encoder).
Models init_models(const Corpus& corpus, const HeteroGraph& graph,
                   const DocFeatureSource* source, const TrainConfig& config);

// Encoder-only training on the auxiliary head; returns the Glorot
// initialization untouched when the finetune-init strategy is off.
EncoderParams pretrain_encoder(const Corpus& corpus,
                               const DocFeatureSource& source,
                               const TrainConfig& config);

void refresh_memory_bank(MemoryBank& bank, const DocFeatureSource& source,
                         const EncoderParams& params);

// Mutable state of one training run. `source` may be null (identity X).
class TrainingSession {
 public:
  TrainingSession(const Corpus& corpus, const HeteroGraph& graph,
                  const DocFeatureSource* source, const TrainConfig& config,
                  Models models);

  // Begins an epoch: refreshes the whole bank with the current encoder.
  void refresh_bank();

  // One memory-bank step on batch `batch` (document indices); returns the
  // interpolated loss over all labeled training documents.
  double train_step(std::span<const std::size_t> batch);

  // Loss of the current parameters with a fully refreshed bank, eval mode
  // except for the dropout seed of the next step.
  double full_refresh_loss() const;

  const Models& models() const noexcept { return models_; }
  Models& models() noexcept { return models_; }
  const MemoryBank& bank() const noexcept { return bank_; }
  MemoryBank& bank() noexcept { return bank_; }
  const OptimizerState& optimizer() const noexcept { return opt_; }

  struct Gradients {
    std::vector<DenseMatrix> classifier;  // GCN layers, or the SGC weight
    std::optional<EncoderGradients> encoder;
    double loss = 0.0;
  };

  // Loss and gradients of the interpolated objective for the current bank
  // after recomputing rows `batch`; parameters and optimizer untouched.
  // Dropout masks use `dropout_seed` (no dropout when nullopt).
  Gradients objective(std::span<const std::size_t> batch,
                      std::optional<std::uint64_t> dropout_seed) const;

  std::uint64_t dropout_seed_for_step(std::uint64_t step) const noexcept;

 private:
  const Corpus& corpus_;
  const HeteroGraph& graph_;
  const DocFeatureSource* source_;
  TrainConfig config_;
  Models models_;
  MemoryBank bank_;
  OptimizerState opt_;
  std::vector<std::size_t> labeled_;
};

// Z = lambda * softmax(g(X, A)) + (1 - lambda) * softmax(M W) for every document.
// `bank` is ignored (may be null) when the models carry no encoder.
PredictionSet predict(const Models& models, const HeteroGraph& graph,
                      const DenseMatrix* bank, double lambda);

// Argmax accuracy with ties going to the lowest class index.
double accuracy(const PredictionSet& z, std::span<const int> labels,
                std::span<const std::size_t> rows);

enum class EvalSplit { kTrain, kDev, kTest };

// Refreshes a private bank snapshot and scores `split`.
double evaluate(const Models& models, const DocFeatureSource* source,
                const HeteroGraph& graph, const Corpus& corpus, double lambda,
                EvalSplit split);

using EpochCallback = std::function<void(const EpochReport&)>;

// Optional pretrain, then per epoch: bank refresh, shuffled batches over all
// documents, dev-accuracy early stopping with the best checkpoint retained.
TrainResult train(const Corpus& corpus, const HeteroGraph& graph,
                  const DocFeatureSource* source, const TrainConfig& config,
                  const EncoderParams* initial_encoder = nullptr,
                  const EpochCallback& on_epoch = {});

struct SweepRow {
  double lambda;
  double dev_acc;
  double test_acc;
};

std::vector<SweepRow> sweep_lambda(const Corpus& corpus, const HeteroGraph& graph,
                                   const DocFeatureSource* source,
                                   const TrainConfig& base,
                                   std::span<const double> grid,
                                   const EpochCallback& on_epoch = {});

struct AblationCell {
  std::string name;
  bool finetune_init;
  bool small_encoder_lr;
  double dev_acc;
  double test_acc;
};

// Cells in the order: w/ both, w/o finetune, w/o small lr., w/o both.
std::vector<AblationCell> ablation_run(const Corpus& corpus,
                                       const HeteroGraph& graph,
                                       const DocFeatureSource* source,
                                       const TrainConfig& config,
                                       const EpochCallback& on_epoch = {});

struct Checkpoint {
  Models models;
  std::uint64_t config_hash = 0;
};

void save_checkpoint(const Models& models, std::uint64_t config_hash,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void write_metrics_csv(const std::vector<EpochReport>& reports,
                       bool include_wall_time, const std::filesystem::path& path);
void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::filesystem::path& path);
void write_ablation_csv(const std::vector<AblationCell>& cells,
                        const std::filesystem::path& path);
std::string format_ablation_table(const std::vector<AblationCell>& cells);

}  // namespace textgraph
