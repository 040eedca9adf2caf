#include "textgraph/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "textgraph/binary_io.hpp"
#include "textgraph/error.hpp"
#include "textgraph/random.hpp"

namespace textgraph {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

std::vector<std::vector<std::size_t>> make_batches(std::vector<std::size_t> order,
                                                   std::size_t batch_size) {
  std::vector<std::vector<std::size_t>> out;
  const std::size_t step = batch_size == 0 ? order.size() : batch_size;
  for (std::size_t i = 0; i < order.size(); i += step)
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(
                                         std::min(order.size(), i + step)));
  return out;
}

AdamMoments zero_moments(const DenseMatrix& p) {
  return {DenseMatrix(p.rows(), p.cols()), DenseMatrix(p.rows(), p.cols())};
}

std::vector<AdamMoments> encoder_moments(const EncoderParams& p) {
  return {zero_moments(p.projection), zero_moments(p.bias),
          zero_moments(p.aux_weight)};
}

DenseMatrix leading_rows(const DenseMatrix& a, std::size_t n) {
  DenseMatrix out(n, a.cols());
  std::copy_n(a.data().begin(), n * a.cols(), out.data().begin());
  return out;
}

DenseMatrix pad_rows(const DenseMatrix& a, std::size_t n) {
  DenseMatrix out(n, a.cols());
  std::copy(a.data().begin(), a.data().end(), out.data().begin());
  return out;
}

void write_matrix(BinaryWriter& w, const DenseMatrix& m) {
  w.put<std::uint64_t>(m.rows());
  w.put<std::uint64_t>(m.cols());
  w.put_array<double>(m.data());
}

DenseMatrix read_matrix(BinaryReader& r) {
  const auto rows = r.get<std::uint64_t>();
  const auto cols = r.get<std::uint64_t>();
  require(cols == 0 || rows <= r.remaining() / sizeof(double) / cols,
          ErrorCode::kTruncated, r.source() + ": truncated matrix block");
  return DenseMatrix(rows, cols, r.get_array<double>(rows * cols));
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt_double(double v, const char* spec) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

void adam_update(DenseMatrix& param, const DenseMatrix& grad,
                 AdamMoments& state, double lr, std::uint64_t step) {
  require(param.size() == grad.size() && state.m.size() == param.size(),
          ErrorCode::kShape, "optimizer state does not mirror parameter shape");
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
  for (std::size_t k = 0; k < param.size(); ++k) {
    const double g = grad.data()[k];
    double& m = state.m.data()[k];
    double& v = state.v.data()[k];
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g * g;
    param.data()[k] -= lr * (m / c1) / (std::sqrt(v / c2) + kAdamEps);
  }
}

Models init_models(const Corpus& corpus, const HeteroGraph& graph,
                   const DocFeatureSource* source, const TrainConfig& config) {
  require(graph.n_doc == corpus.n_doc(), ErrorCode::kMismatch,
          "graph has " + std::to_string(graph.n_doc) + " documents, corpus has " +
              std::to_string(corpus.n_doc()));
  require(corpus.n_classes() >= 1, ErrorCode::kConfig, "corpus has no labels");
  Models m;
  m.kind = config.model;
  m.sgc_k = config.sgc_k;
  std::size_t in_width = graph.n_nodes();
  if (source != nullptr) {
    require(source->n_doc() == corpus.n_doc(), ErrorCode::kCountMismatch,
            "document features cover " + std::to_string(source->n_doc()) +
                " documents, corpus has " + std::to_string(corpus.n_doc()));
    in_width = config.encoder_dim;
    m.encoder = init_encoder(source->raw_dim(), config.encoder_dim,
                             corpus.n_classes(), derive_seed(config.seed, "encoder"));
  }
  if (config.model == ModelKind::kGcn) {
    require(config.layers >= 1, ErrorCode::kConfig, "GCN needs at least one layer");
    std::vector<std::size_t> widths{in_width};
    for (std::size_t i = 1; i < config.layers; ++i) widths.push_back(config.hidden);
    widths.push_back(corpus.n_classes());
    m.gcn = init_params(widths, derive_seed(config.seed, "gcn"), config.dropout);
  } else {
    require(source == nullptr, ErrorCode::kConfig,
            "SGC mode runs on identity node features only");
    require(config.sgc_k >= 1, ErrorCode::kConfig, "SGC needs K >= 1");
    m.sgc_weight = glorot_uniform(in_width, corpus.n_classes(),
                                  derive_seed(config.seed, "sgc"));
  }
  return m;
}

EncoderParams pretrain_encoder(const Corpus& corpus,
                               const DocFeatureSource& source,
                               const TrainConfig& config) {
  EncoderParams params =
      init_encoder(source.raw_dim(), config.encoder_dim, corpus.n_classes(),
                   derive_seed(config.seed, "encoder"));
  if (!config.strategy.finetune_init) return params;

  const std::vector<std::size_t> labeled = corpus.train_indices();
  require(!labeled.empty(), ErrorCode::kConfig, "no labeled training documents");
  std::vector<AdamMoments> moments = encoder_moments(params);
  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < config.pretrain_epochs; ++epoch) {
    std::vector<std::size_t> order = labeled;
    Rng rng(derive_seed(config.seed, "pretrain-shuffle", epoch));
    rng.shuffle(std::span<std::size_t>(order));
    for (const auto& batch : make_batches(std::move(order), config.batch_size)) {
      const EncodeResult enc = encode_batch(source, params, batch);
      const PredictionSet z = aux_forward(enc.embeddings, params);
      std::vector<int> labels(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) labels[i] = corpus.labels[batch[i]];
      const std::vector<std::size_t> rows = iota_indices(batch.size());
      EncoderGradients g = zero_gradients(params);
      const DenseMatrix dlogits =
          softmax_backward(z, cross_entropy_grad(z, labels, rows));
      const DenseMatrix d_emb = aux_backward(enc.embeddings, params, dlogits, g);
      encoder_backward(source, enc, d_emb, g);
      ++step;
      adam_update(params.projection, g.projection, moments[0], config.lr_pretrain, step);
      adam_update(params.bias, g.bias, moments[1], config.lr_pretrain, step);
      adam_update(params.aux_weight, g.aux_weight, moments[2], config.lr_pretrain, step);
    }
  }
  return params;
}

void refresh_memory_bank(MemoryBank& bank, const DocFeatureSource& source,
                         const EncoderParams& params) {
  require(bank.m.empty() || bank.m.cols() == params.dim(), ErrorCode::kShape,
          "memory bank width " + std::to_string(bank.m.cols()) +
              " does not match encoder width " + std::to_string(params.dim()));
  const std::vector<std::size_t> all = iota_indices(source.n_doc());
  bank.m = encode_batch(source, params, all).embeddings;
  ++bank.epoch_stamp;
}

TrainingSession::TrainingSession(const Corpus& corpus, const HeteroGraph& graph,
                                 const DocFeatureSource* source,
                                 const TrainConfig& config, Models models)
    : corpus_(corpus),
      graph_(graph),
      source_(source),
      config_(config),
      models_(std::move(models)),
      labeled_(corpus.train_indices()) {
  require(!labeled_.empty(), ErrorCode::kConfig, "no labeled training documents");
  require(config.lambda >= 0.0 && config.lambda <= 1.0, ErrorCode::kConfig,
          "lambda must lie in [0, 1]");
  require((source_ != nullptr) == models_.encoder.has_value(), ErrorCode::kConfig,
          "document features and encoder parameters must come together");
  require(source_ != nullptr || config.lambda == 1.0, ErrorCode::kConfig,
          "identity-feature training needs lambda = 1");
  require(graph.n_doc == corpus.n_doc(), ErrorCode::kMismatch,
          "graph and corpus disagree on the document count");
  if (models_.kind == ModelKind::kGcn) {
    for (const DenseMatrix& w : models_.gcn.weights) opt_.gcn.push_back(zero_moments(w));
  } else {
    opt_.gcn.push_back(zero_moments(models_.sgc_weight));
  }
  if (models_.encoder) {
    opt_.encoder = encoder_moments(*models_.encoder);
    bank_.m = DenseMatrix(corpus.n_doc(), models_.encoder->dim());
  }
}

void TrainingSession::refresh_bank() {
  if (source_ != nullptr) refresh_memory_bank(bank_, *source_, *models_.encoder);
}

std::uint64_t TrainingSession::dropout_seed_for_step(
    std::uint64_t step) const noexcept {
  return derive_seed(config_.seed, "step-dropout", step);
}

namespace {

struct ObjectiveInputs {
  const Corpus& corpus;
  const HeteroGraph& graph;
  const DocFeatureSource* source;
  const Models& models;
  double lambda;
  std::span<const std::size_t> labeled;
};

TrainingSession::Gradients compute_objective(const ObjectiveInputs& in,
                                             const DenseMatrix* bank,
                                             const EncodeResult* batch,
                                             std::optional<std::uint64_t> seed) {
  const std::size_t n_doc = in.graph.n_doc;
  const std::size_t n_nodes = in.graph.n_nodes();
  const SparseMatrix& adj = in.graph.norm_adjacency;
  const bool has_encoder = in.models.encoder.has_value();

  DenseMatrix x_storage;
  NodeFeatures x = NodeFeatures::identity(n_nodes);
  if (has_encoder) {
    x_storage = pad_rows(*bank, n_nodes);
    x = NodeFeatures::dense(x_storage);
  }
  const ForwardMode mode = seed ? ForwardMode::training(*seed) : ForwardMode::eval();

  GcnForward gcn_fwd;
  DenseMatrix logits;
  if (in.models.kind == ModelKind::kGcn) {
    gcn_fwd = gcn_forward(in.models.gcn, adj, x, mode);
    logits = leading_rows(gcn_fwd.logits, n_doc);
  } else {
    logits = leading_rows(sgc_forward(adj, x, in.models.sgc_k, in.models.sgc_weight),
                          n_doc);
  }
  const PredictionSet z_gcn = softmax_rows(logits);
  const double lambda = has_encoder ? in.lambda : 1.0;

  PredictionSet z_aux;
  PredictionSet z{z_gcn.probs};
  if (has_encoder) {
    z_aux = aux_forward(*bank, *in.models.encoder);
    for (std::size_t k = 0; k < z.probs.size(); ++k)
      z.probs.data()[k] =
          lambda * z_gcn.probs.data()[k] + (1.0 - lambda) * z_aux.probs.data()[k];
  }

  TrainingSession::Gradients out;
  out.loss = cross_entropy_masked(z, in.corpus.labels, in.labeled);
  const DenseMatrix dz = cross_entropy_grad(z, in.corpus.labels, in.labeled);

  DenseMatrix dz_gcn = dz;
  for (double& v : dz_gcn.data()) v *= lambda;
  const DenseMatrix dlogits = pad_rows(softmax_backward(z_gcn, dz_gcn), n_nodes);

  DenseMatrix dx;
  if (in.models.kind == ModelKind::kGcn) {
    GcnGradients g = gcn_backward(in.models.gcn, adj, x, gcn_fwd.cache, dlogits,
                                  has_encoder ? n_doc : 0);
    out.classifier = std::move(g.weights);
    dx = std::move(g.input);
  } else {
    out.classifier.push_back(sgc_backward(adj, x, in.models.sgc_k, dlogits));
  }

  if (has_encoder) {
    const EncoderParams& enc = *in.models.encoder;
    EncoderGradients eg = zero_gradients(enc);
    DenseMatrix dz_aux = dz;
    for (double& v : dz_aux.data()) v *= (1.0 - lambda);
    DenseMatrix dm = aux_backward(*bank, enc, softmax_backward(z_aux, dz_aux), eg);
    for (std::size_t k = 0; k < dm.size(); ++k) dm.data()[k] += dx.data()[k];
    // Only rows recomputed in this step carry gradient into the encoder.
    if (batch != nullptr && !batch->rows.empty())
      encoder_backward(*in.source, *batch, take_rows(dm, batch->rows), eg);
    out.encoder = std::move(eg);
  }
  return out;
}

}  // namespace

TrainingSession::Gradients TrainingSession::objective(
    std::span<const std::size_t> batch,
    std::optional<std::uint64_t> dropout_seed) const {
  const ObjectiveInputs in{corpus_, graph_, source_, models_, config_.lambda,
                           labeled_};
  if (source_ == nullptr) return compute_objective(in, nullptr, nullptr, dropout_seed);
  DenseMatrix bank = bank_.m;
  const EncodeResult enc = encode_batch(*source_, *models_.encoder, batch);
  for (std::size_t i = 0; i < enc.rows.size(); ++i)
    std::copy_n(enc.embeddings.row(i).data(), bank.cols(), bank.row(enc.rows[i]).data());
  return compute_objective(in, &bank, &enc, dropout_seed);
}

double TrainingSession::full_refresh_loss() const {
  const ObjectiveInputs in{corpus_, graph_, source_, models_, config_.lambda,
                           labeled_};
  const auto seed = dropout_seed_for_step(opt_.step + 1);
  if (source_ == nullptr) return compute_objective(in, nullptr, nullptr, seed).loss;
  MemoryBank fresh;
  refresh_memory_bank(fresh, *source_, *models_.encoder);
  return compute_objective(in, &fresh.m, nullptr, seed).loss;
}

double TrainingSession::train_step(std::span<const std::size_t> batch) {
  const ObjectiveInputs in{corpus_, graph_, source_, models_, config_.lambda,
                           labeled_};
  const std::uint64_t step = opt_.step + 1;
  EncodeResult enc;
  if (source_ != nullptr) {
    enc = encode_batch(*source_, *models_.encoder, batch);
    for (std::size_t i = 0; i < enc.rows.size(); ++i)
      std::copy_n(enc.embeddings.row(i).data(), bank_.m.cols(),
                  bank_.m.row(enc.rows[i]).data());
  }
  Gradients g = compute_objective(in, source_ ? &bank_.m : nullptr,
                                  source_ ? &enc : nullptr,
                                  dropout_seed_for_step(step));
  opt_.step = step;
  if (models_.kind == ModelKind::kGcn) {
    for (std::size_t i = 0; i < models_.gcn.weights.size(); ++i)
      adam_update(models_.gcn.weights[i], g.classifier[i], opt_.gcn[i],
                  config_.lr_gcn, step);
  } else {
    adam_update(models_.sgc_weight, g.classifier[0], opt_.gcn[0], config_.lr_gcn,
                step);
  }
  if (models_.encoder) {
    const double lr = config_.effective_lr_encoder();
    EncoderParams& p = *models_.encoder;
    adam_update(p.projection, g.encoder->projection, opt_.encoder[0], lr, step);
    adam_update(p.bias, g.encoder->bias, opt_.encoder[1], lr, step);
    adam_update(p.aux_weight, g.encoder->aux_weight, opt_.encoder[2], lr, step);
  }
  return g.loss;
}

PredictionSet predict(const Models& models, const HeteroGraph& graph,
                      const DenseMatrix* bank, double lambda) {
  const std::size_t n_doc = graph.n_doc;
  const std::size_t n_nodes = graph.n_nodes();
  DenseMatrix x_storage;
  NodeFeatures x = NodeFeatures::identity(n_nodes);
  if (models.encoder) {
    require(bank != nullptr && bank->rows() == n_doc, ErrorCode::kShape,
            "prediction needs a bank covering every document");
    x_storage = pad_rows(*bank, n_nodes);
    x = NodeFeatures::dense(x_storage);
  }
  DenseMatrix logits =
      models.kind == ModelKind::kGcn
          ? gcn_forward(models.gcn, graph.norm_adjacency, x, ForwardMode::eval()).logits
          : sgc_forward(graph.norm_adjacency, x, models.sgc_k, models.sgc_weight);
  PredictionSet z = softmax_rows(leading_rows(logits, n_doc));
  if (models.encoder) {
    const PredictionSet aux = aux_forward(*bank, *models.encoder);
    for (std::size_t k = 0; k < z.probs.size(); ++k)
      z.probs.data()[k] = lambda * z.probs.data()[k] + (1.0 - lambda) * aux.probs.data()[k];
  }
  return z;
}

double accuracy(const PredictionSet& z, std::span<const int> labels,
                std::span<const std::size_t> rows) {
  require(!rows.empty(), ErrorCode::kArgument, "accuracy over an empty split");
  std::size_t correct = 0;
  for (const std::size_t r : rows) {
    const auto row = z.probs.row(r);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c)
      if (row[c] > row[best]) best = c;
    if (labels[r] >= 0 && static_cast<std::size_t>(labels[r]) == best) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

double evaluate(const Models& models, const DocFeatureSource* source,
                const HeteroGraph& graph, const Corpus& corpus, double lambda,
                EvalSplit split) {
  const std::vector<std::size_t> rows =
      split == EvalSplit::kTrain ? corpus.train_indices()
      : split == EvalSplit::kDev ? corpus.dev_indices()
                                 : corpus.test_indices();
  require(!rows.empty(), ErrorCode::kArgument, "evaluation split is empty");
  MemoryBank snapshot;
  if (models.encoder) {
    require(source != nullptr, ErrorCode::kConfig,
            "encoder checkpoint needs document features");
    refresh_memory_bank(snapshot, *source, *models.encoder);
  }
  return accuracy(predict(models, graph, models.encoder ? &snapshot.m : nullptr, lambda),
                  corpus.labels, rows);
}

TrainResult train(const Corpus& corpus, const HeteroGraph& graph,
                  const DocFeatureSource* source, const TrainConfig& config,
                  const EncoderParams* initial_encoder,
                  const EpochCallback& on_epoch) {
  Models models = init_models(corpus, graph, source, config);
  if (source != nullptr)
    models.encoder = initial_encoder ? *initial_encoder
                                     : pretrain_encoder(corpus, *source, config);
  TrainingSession session(corpus, graph, source, config, std::move(models));

  const std::vector<std::size_t> dev = corpus.dev_indices();
  const std::vector<std::size_t> test = corpus.test_indices();
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

  TrainResult result;
  bool have_best = false;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    session.refresh_bank();

    std::vector<std::vector<std::size_t>> batches;
    if (source != nullptr) {
      std::vector<std::size_t> order = iota_indices(corpus.n_doc());
      Rng rng(derive_seed(config.seed, "shuffle", epoch));
      rng.shuffle(std::span<std::size_t>(order));
      batches = make_batches(std::move(order), config.batch_size);
    } else {
      batches.emplace_back();  // full-graph step, nothing to re-encode
    }

    double loss_sum = 0.0;
    for (const auto& batch : batches) {
      const double loss = session.train_step(batch);
      result.step_losses.push_back(loss);
      loss_sum += loss;
    }

    MemoryBank snapshot;
    if (source != nullptr)
      refresh_memory_bank(snapshot, *source, *session.models().encoder);
    const PredictionSet z = predict(session.models(), graph,
                                    source ? &snapshot.m : nullptr, config.lambda);

    EpochReport report;
    report.epoch = epoch;
    report.train_loss = loss_sum / static_cast<double>(batches.size());
    report.dev_acc = dev.empty() ? kNaN : accuracy(z, corpus.labels, dev);
    report.test_acc = test.empty() ? kNaN : accuracy(z, corpus.labels, test);
    report.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    result.reports.push_back(report);
    if (on_epoch) on_epoch(report);

    const bool improved =
        !have_best || dev.empty() || report.dev_acc > result.best_dev_acc;
    if (improved) {
      have_best = true;
      since_best = 0;
      result.best_models = session.models();
      result.best_epoch = epoch;
      result.best_dev_acc = report.dev_acc;
      result.best_test_acc = report.test_acc;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
  }
  result.final_models = session.models();
  if (!have_best) result.best_models = result.final_models;
  return result;
}

std::vector<SweepRow> sweep_lambda(const Corpus& corpus, const HeteroGraph& graph,
                                   const DocFeatureSource* source,
                                   const TrainConfig& base,
                                   std::span<const double> grid,
                                   const EpochCallback& on_epoch) {
  for (const double l : grid)
    require(l >= 0.0 && l <= 1.0, ErrorCode::kArgument,
            "lambda grid values must lie in [0, 1]");
  std::optional<EncoderParams> shared;
  if (source != nullptr) shared = pretrain_encoder(corpus, *source, base);
  std::vector<SweepRow> rows;
  for (const double l : grid) {
    TrainConfig cfg = base;
    cfg.lambda = l;
    const TrainResult r =
        train(corpus, graph, source, cfg, shared ? &*shared : nullptr, on_epoch);
    rows.push_back({l, r.best_dev_acc, r.best_test_acc});
  }
  return rows;
}

std::vector<AblationCell> ablation_run(const Corpus& corpus,
                                       const HeteroGraph& graph,
                                       const DocFeatureSource* source,
                                       const TrainConfig& config,
                                       const EpochCallback& on_epoch) {
  const struct {
    const char* name;
    bool finetune;
    bool small_lr;
  } arms[] = {{"w/ both", true, true},
              {"w/o finetune", false, true},
              {"w/o small lr.", true, false},
              {"w/o both", false, false}};
  std::vector<AblationCell> cells;
  for (const auto& arm : arms) {
    TrainConfig cfg = config;
    cfg.strategy.finetune_init = arm.finetune;
    cfg.strategy.small_encoder_lr = arm.small_lr;
    const TrainResult r = train(corpus, graph, source, cfg, nullptr, on_epoch);
    cells.push_back({arm.name, arm.finetune, arm.small_lr, r.best_dev_acc,
                     r.best_test_acc});
  }
  return cells;
}

void save_checkpoint(const Models& models, std::uint64_t config_hash,
                     const std::filesystem::path& path) {
  BinaryWriter w;
  w.magic("GCNM");
  w.put<std::uint32_t>(kCheckpointVersion);
  if (models.kind == ModelKind::kGcn) {
    w.put<std::uint64_t>(models.gcn.weights.size());
    for (const DenseMatrix& m : models.gcn.weights) write_matrix(w, m);
  } else {
    w.put<std::uint64_t>(1);
    write_matrix(w, models.sgc_weight);
  }
  w.put<std::uint32_t>(models.encoder ? 1U : 0U);
  if (models.encoder) {
    write_matrix(w, models.encoder->projection);
    write_matrix(w, models.encoder->bias);
    write_matrix(w, models.encoder->aux_weight);
  }
  w.put<std::uint32_t>(models.kind == ModelKind::kGcn ? 0U : 1U);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(models.sgc_k));
  w.put<double>(models.gcn.dropout_rate);
  w.put<std::uint64_t>(config_hash);
  w.save(path);

  nlohmann::ordered_json j;
  j["format"] = "GCNM";
  j["version"] = kCheckpointVersion;
  j["kind"] = models.kind == ModelKind::kGcn ? "gcn" : "sgc";
  nlohmann::json widths = nlohmann::json::array();
  if (models.kind == ModelKind::kGcn) {
    widths.push_back(models.gcn.input_width());
    for (const DenseMatrix& m : models.gcn.weights) widths.push_back(m.cols());
  } else {
    widths = {models.sgc_weight.rows(), models.sgc_weight.cols()};
    j["sgc_k"] = models.sgc_k;
  }
  j["widths"] = widths;
  j["encoder"] = models.encoder.has_value();
  if (models.encoder) {
    j["encoder_raw_dim"] = models.encoder->projection.rows();
    j["encoder_dim"] = models.encoder->dim();
  }
  j["config_hash"] = hex64(config_hash);
  std::ofstream out(sidecar_path(path), std::ios::trunc);
  require(out.good(), ErrorCode::kIo, "cannot write " + sidecar_path(path).string());
  out << j.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  BinaryReader r = BinaryReader::open(path);
  r.expect_magic("GCNM");
  const auto version = r.get<std::uint32_t>();
  require(version == kCheckpointVersion, ErrorCode::kFormat,
          path.string() + ": unsupported checkpoint version " +
              std::to_string(version));
  const auto n_layers = r.get<std::uint64_t>();
  require(n_layers >= 1 && n_layers < 1024, ErrorCode::kFormat,
          path.string() + ": implausible layer count");
  std::vector<DenseMatrix> layers;
  for (std::uint64_t i = 0; i < n_layers; ++i) layers.push_back(read_matrix(r));
  Checkpoint ck;
  if (r.get<std::uint32_t>() == 1U) {
    EncoderParams e;
    e.projection = read_matrix(r);
    e.bias = read_matrix(r);
    e.aux_weight = read_matrix(r);
    ck.models.encoder = std::move(e);
  }
  const auto kind = r.get<std::uint32_t>();
  ck.models.sgc_k = static_cast<int>(r.get<std::uint32_t>());
  ck.models.gcn.dropout_rate = r.get<double>();
  ck.config_hash = r.get<std::uint64_t>();
  require(r.remaining() == 0, ErrorCode::kFormat,
          path.string() + ": trailing bytes after checkpoint");
  if (kind == 0U) {
    ck.models.kind = ModelKind::kGcn;
    ck.models.gcn.weights = std::move(layers);
  } else {
    require(kind == 1U && n_layers == 1, ErrorCode::kFormat,
            path.string() + ": unknown model kind");
    ck.models.kind = ModelKind::kSgc;
    ck.models.sgc_weight = std::move(layers.front());
  }
  return ck;
}

void write_metrics_csv(const std::vector<EpochReport>& reports,
                       bool include_wall_time, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorCode::kIo, "cannot write " + path.string());
  out << "epoch,train_loss,dev_acc,test_acc,wall_ms\n";
  for (const EpochReport& r : reports)
    out << r.epoch << ',' << fmt_double(r.train_loss, "%.12g") << ','
        << fmt_double(r.dev_acc, "%.6f") << ',' << fmt_double(r.test_acc, "%.6f")
        << ',' << (include_wall_time ? fmt_double(r.wall_ms, "%.0f") : "0") << '\n';
}

void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorCode::kIo, "cannot write " + path.string());
  out << "lambda,dev_acc,test_acc\n";
  for (const SweepRow& r : rows)
    out << fmt_double(r.lambda, "%.4g") << ',' << fmt_double(r.dev_acc, "%.6f")
        << ',' << fmt_double(r.test_acc, "%.6f") << '\n';
}

void write_ablation_csv(const std::vector<AblationCell>& cells,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorCode::kIo, "cannot write " + path.string());
  out << "strategy,finetune_init,small_lr,dev_acc,test_acc\n";
  for (const AblationCell& c : cells)
    out << c.name << ',' << (c.finetune_init ? 1 : 0) << ','
        << (c.small_encoder_lr ? 1 : 0) << ',' << fmt_double(c.dev_acc, "%.6f")
        << ',' << fmt_double(c.test_acc, "%.6f") << '\n';
}

std::string format_ablation_table(const std::vector<AblationCell>& cells) {
  std::ostringstream head;
  std::ostringstream body;
  head << "Strategy  ";
  body << "Dev acc.  ";
  for (const AblationCell& c : cells) {
    const std::string value = fmt_double(100.0 * c.dev_acc, "%.1f");
    const std::size_t width = std::max(c.name.size(), value.size());
    char buf[64];
    std::snprintf(buf, sizeof buf, " | %*s", static_cast<int>(width), c.name.c_str());
    head << buf;
    std::snprintf(buf, sizeof buf, " | %*s", static_cast<int>(width), value.c_str());
    body << buf;
  }
  return head.str() + "\n" + body.str() + "\n";
}

}  // namespace textgraph
