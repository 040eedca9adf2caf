#include <doctest.h>

#include <numeric>

#include "support.hpp"
#include "textgraph/error.hpp"
#include "textgraph/trainer.hpp"

using namespace textgraph;

namespace {

struct Fixture {
  Corpus corpus;
  HeteroGraph graph;
  DocFeatureSource source;
  TrainConfig config;

  explicit Fixture(Corpus c, std::size_t buckets = 32) : corpus(std::move(c)) {
    graph = build_graph(corpus, GraphParams{4});
    source = hashed_bow_features(corpus, buckets, 1);
    config.hidden = 8;
    config.encoder_dim = 6;
    config.epochs = 5;
    config.pretrain_epochs = 5;
    config.batch_size = 4;
    config.patience = 0;
  }
};

Fixture sanity() {
  Fixture f(tgtest::sanity_corpus(), 64);
  f.config.hidden = 16;
  f.config.encoder_dim = 16;
  f.config.epochs = 50;
  f.config.pretrain_epochs = 20;
  // 1e-3 leaves the GCN head undertrained with only two steps per epoch.
  f.config.lr_gcn = 0.01;
  return f;
}

}  // namespace

TEST_CASE("first Adam step moves each entry by about lr against its gradient") {
  DenseMatrix p(1, 3, 1.0), g(1, 3);
  g(0, 0) = 2.0;
  g(0, 1) = -0.5;
  AdamMoments s{DenseMatrix(1, 3), DenseMatrix(1, 3)};
  adam_update(p, g, s, 0.1, 1);
  CHECK(p(0, 0) == doctest::Approx(0.9).epsilon(1e-7));
  CHECK(p(0, 1) == doctest::Approx(1.1).epsilon(1e-7));
  CHECK(p(0, 2) == 1.0);
}

TEST_CASE("pretraining") {
  Fixture f(tgtest::sanity_corpus());
  f.config.strategy.finetune_init = false;
  const EncoderParams init = pretrain_encoder(f.corpus, f.source, f.config);
  const EncoderParams glorot = init_encoder(f.source.raw_dim(), f.config.encoder_dim,
                                            f.corpus.n_classes(),
                                            derive_seed(f.config.seed, "encoder"));
  CHECK(init.projection == glorot.projection);
  CHECK(init.aux_weight == glorot.aux_weight);

  f.config.strategy.finetune_init = true;
  f.config.pretrain_epochs = 40;
  f.config.lr_pretrain = 1e-2;
  const EncoderParams a = pretrain_encoder(f.corpus, f.source, f.config);
  const EncoderParams b = pretrain_encoder(f.corpus, f.source, f.config);
  CHECK(a.projection == b.projection);
  CHECK(a.aux_weight == b.aux_weight);
  CHECK_FALSE(a.projection == glorot.projection);

  const std::vector<std::size_t> all = f.corpus.train_indices();
  const auto emb = encode_batch(f.source, a, all).embeddings;
  const auto z = aux_forward(emb, a);
  std::vector<int> labels;
  for (auto r : all) labels.push_back(f.corpus.labels[r]);
  std::vector<std::size_t> rows(all.size());
  std::iota(rows.begin(), rows.end(), 0);
  CHECK(accuracy(z, labels, rows) == 1.0);
}

TEST_CASE("memory bank refresh") {
  Fixture f(tgtest::random_corpus(3, 9, 10, 3));
  EncoderParams p = init_encoder(f.source.raw_dim(), 5, 3, 2);
  MemoryBank bank;
  refresh_memory_bank(bank, f.source, p);
  const DenseMatrix first = bank.m;
  refresh_memory_bank(bank, f.source, p);
  CHECK(bank.m == first);
  CHECK(bank.epoch_stamp == 2);

  for (double& v : p.bias.data()) v += 0.1;
  refresh_memory_bank(bank, f.source, p);
  for (std::size_t r = 0; r < bank.m.rows(); ++r)
    CHECK_FALSE(std::equal(bank.m.row(r).begin(), bank.m.row(r).end(), first.row(r).begin()));

  MemoryBank narrow{DenseMatrix(f.corpus.n_doc(), 4), 0};
  try {
    refresh_memory_bank(narrow, f.source, p);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kShape);
  }
}

TEST_CASE("frozen encoder: step loss equals fully refreshed loss") {
  Fixture f(tgtest::random_corpus(8, 12, 10, 3));
  f.config.lr_encoder = 0.0;
  Models m = init_models(f.corpus, f.graph, &f.source, f.config);
  TrainingSession s(f.corpus, f.graph, &f.source, f.config, m);
  s.refresh_bank();
  const std::vector<std::vector<std::size_t>> batches{{0}, {3, 5, 7}, {}, {1, 2, 4, 6, 8, 9, 10, 11}};
  for (const auto& b : batches) {
    const double expected = s.full_refresh_loss();
    CHECK(s.train_step(b) == expected);
  }
}

TEST_CASE("lambda endpoints detach one head") {
  Fixture f(tgtest::random_corpus(12, 10, 10, 3));
  for (const double lambda : {0.0, 1.0}) {
    f.config.lambda = lambda;
    TrainingSession s(f.corpus, f.graph, &f.source, f.config,
                      init_models(f.corpus, f.graph, &f.source, f.config));
    s.refresh_bank();
    const std::vector<std::size_t> batch{1, 4};
    const auto g = s.objective(batch, s.dropout_seed_for_step(1));
    if (lambda == 0.0) {
      for (const auto& w : g.classifier)
        for (double v : w.data()) CHECK(v == 0.0);
    } else {
      for (double v : g.encoder->aux_weight.data()) CHECK(v == 0.0);
      double norm = 0.0;
      for (double v : g.encoder->projection.data()) norm += std::abs(v);
      CHECK(norm > 0.0);
    }
  }
}

TEST_CASE("interpolated objective gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Fixture f(tgtest::random_corpus(200 + seed, 8, 9, 3), 12);
    f.config.encoder_dim = 4;
    f.config.hidden = 5;
    f.config.lambda = 0.3 + 0.2 * static_cast<double>(seed);
    f.config.seed = seed;
    TrainingSession s(f.corpus, f.graph, &f.source, f.config,
                      init_models(f.corpus, f.graph, &f.source, f.config));
    s.refresh_bank();
    const std::vector<std::size_t> batch{0, 3, 5};
    const auto seed_d = s.dropout_seed_for_step(7);
    const auto g = s.objective(batch, seed_d);
    const auto loss = [&] { return s.objective(batch, seed_d).loss; };
    Models& m = s.models();
    for (std::size_t i = 0; i < m.gcn.weights.size(); ++i)
      CHECK(tgtest::fd_check(m.gcn.weights[i], g.classifier[i], loss) < 1e-4);
    CHECK(tgtest::fd_check(m.encoder->projection, g.encoder->projection, loss) < 1e-4);
    CHECK(tgtest::fd_check(m.encoder->bias, g.encoder->bias, loss) < 1e-4);
    CHECK(tgtest::fd_check(m.encoder->aux_weight, g.encoder->aux_weight, loss) < 1e-4);
  }
}

TEST_CASE("configuration errors") {
  Corpus c = tgtest::random_corpus(1, 6, 6, 2);
  const HeteroGraph g = build_graph(c, GraphParams{3});
  TrainConfig cfg;
  cfg.lambda = 1.0;
  Corpus none = c;
  std::fill(none.train_mask.begin(), none.train_mask.end(), 0);
  try {
    TrainingSession s(none, g, nullptr, cfg, init_models(none, g, nullptr, cfg));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
  }
  cfg.lambda = 0.5;
  CHECK_THROWS_AS(TrainingSession(c, g, nullptr, cfg, init_models(c, g, nullptr, cfg)), Error);
}

TEST_CASE("identity-feature training equals a dedicated full-batch loop") {
  Fixture f(tgtest::random_corpus(44, 10, 12, 3));
  TrainConfig cfg = f.config;
  cfg.lambda = 1.0;
  cfg.lr_gcn = 0.02;
  cfg.epochs = 6;
  const TrainResult r = train(f.corpus, f.graph, nullptr, cfg);

  // Reference loop written directly against the GCN primitives.
  GcnModel m = init_models(f.corpus, f.graph, nullptr, cfg).gcn;
  std::vector<AdamMoments> mom;
  for (const auto& w : m.weights) mom.push_back({DenseMatrix(w.rows(), w.cols()), DenseMatrix(w.rows(), w.cols())});
  const auto n = f.graph.n_nodes();
  const auto rows = f.corpus.train_indices();
  std::vector<double> losses;
  for (std::uint64_t step = 1; step <= cfg.epochs; ++step) {
    const auto mode = ForwardMode::training(derive_seed(cfg.seed, "step-dropout", step));
    const auto fwd = gcn_forward(m, f.graph.norm_adjacency, NodeFeatures::identity(n), mode);
    DenseMatrix doc_logits(f.corpus.n_doc(), fwd.logits.cols());
    std::copy_n(fwd.logits.data().begin(), doc_logits.size(), doc_logits.data().begin());
    const auto z = softmax_rows(doc_logits);
    losses.push_back(cross_entropy_masked(z, f.corpus.labels, rows));
    const DenseMatrix dz = softmax_backward(z, cross_entropy_grad(z, f.corpus.labels, rows));
    DenseMatrix dl(n, dz.cols());
    std::copy(dz.data().begin(), dz.data().end(), dl.data().begin());
    const auto g = gcn_backward(m, f.graph.norm_adjacency, NodeFeatures::identity(n), fwd.cache, dl, 0);
    for (std::size_t i = 0; i < m.weights.size(); ++i)
      adam_update(m.weights[i], g.weights[i], mom[i], cfg.lr_gcn, step);
  }
  REQUIRE(r.step_losses.size() == losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i)
    CHECK(std::abs(r.step_losses[i] - losses[i]) <= 1e-12);
  CHECK(r.final_models.gcn.weights == m.weights);
}

TEST_CASE("accuracy tie-break and argmax invariance") {
  PredictionSet z{DenseMatrix(4, 2, 0.5)};
  const std::vector<int> labels{0, 1, 0, 1};
  const std::vector<std::size_t> rows{0, 1, 2, 3};
  CHECK(accuracy(z, labels, rows) == 0.5);

  PredictionSet exact{DenseMatrix(4, 2)};
  for (std::size_t r = 0; r < 4; ++r) exact.probs(r, labels[r]) = 1.0;
  CHECK(accuracy(exact, labels, rows) == 1.0);

  PredictionSet rnd{tgtest::random_dense(4, 2, 3, 0.0, 1.0)};
  PredictionSet scaled = rnd;
  for (double& v : scaled.probs.data()) v *= 3.7;
  CHECK(accuracy(rnd, labels, rows) == accuracy(scaled, labels, rows));
  CHECK_THROWS_AS(accuracy(rnd, labels, std::vector<std::size_t>{}), Error);
}

TEST_CASE("sanity corpus reaches full test accuracy") {
  Fixture f = sanity();
  const TrainResult r = train(f.corpus, f.graph, &f.source, f.config);
  double best = 0.0;
  for (const auto& e : r.reports) best = std::max(best, e.test_acc);
  CHECK(best == 1.0);
  CHECK(std::isnan(r.reports.front().dev_acc));
}

TEST_CASE("training is deterministic and early stopping keeps the best epoch") {
  Fixture f(carve_dev_split(tgtest::random_corpus(61, 24, 15, 3), 0.25, 0));
  f.config.epochs = 8;
  f.config.patience = 2;
  const TrainResult a = train(f.corpus, f.graph, &f.source, f.config);
  const TrainResult b = train(f.corpus, f.graph, &f.source, f.config);
  REQUIRE(a.reports.size() == b.reports.size());
  for (std::size_t i = 0; i < a.reports.size(); ++i) {
    CHECK(a.reports[i].train_loss == b.reports[i].train_loss);
    CHECK(a.reports[i].dev_acc == b.reports[i].dev_acc);
    CHECK(a.reports[i].test_acc == b.reports[i].test_acc);
  }
  CHECK(a.step_losses == b.step_losses);
  double best = -1.0;
  for (const auto& e : a.reports) best = std::max(best, e.dev_acc);
  CHECK(a.best_dev_acc == best);
  CHECK(a.reports[a.best_epoch - 1].dev_acc == best);
}

TEST_CASE("endpoint runs leave the detached parameters bitwise unchanged") {
  Fixture f(tgtest::random_corpus(71, 12, 12, 2));
  f.config.lambda = 0.0;
  const Models init = init_models(f.corpus, f.graph, &f.source, f.config);
  const TrainResult r0 = train(f.corpus, f.graph, &f.source, f.config);
  CHECK(r0.final_models.gcn.weights == init.gcn.weights);

  f.config.lambda = 1.0;
  const EncoderParams pre = pretrain_encoder(f.corpus, f.source, f.config);
  const TrainResult r1 = train(f.corpus, f.graph, &f.source, f.config);
  CHECK(r1.final_models.encoder->aux_weight == pre.aux_weight);
  CHECK_FALSE(r1.final_models.encoder->projection == pre.projection);
}

TEST_CASE("predictions are row-stochastic for every lambda") {
  Fixture f(tgtest::random_corpus(5, 10, 10, 3));
  const TrainResult r = train(f.corpus, f.graph, &f.source, f.config);
  MemoryBank bank;
  refresh_memory_bank(bank, f.source, *r.final_models.encoder);
  for (int i = 0; i <= 10; ++i) {
    const auto z = predict(r.final_models, f.graph, &bank.m, i / 10.0);
    for (std::size_t row = 0; row < z.probs.rows(); ++row) {
      double s = 0.0;
      for (double v : z.probs.row(row)) s += v;
      CHECK(std::abs(s - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("lambda sweep") {
  Fixture f = sanity();
  f.config.epochs = 30;
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
  const auto rows = sweep_lambda(f.corpus, f.graph, &f.source, f.config, grid);
  REQUIRE(rows.size() == 11);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].lambda > rows[i - 1].lambda);
  const double floor = std::max(rows.front().test_acc, rows.back().test_acc) - 0.1;
  for (const auto& row : rows) CHECK(row.test_acc >= floor);

  // Endpoints equal the corresponding single runs.
  TrainConfig c0 = f.config;
  c0.lambda = 0.0;
  const EncoderParams pre = pretrain_encoder(f.corpus, f.source, f.config);
  const TrainResult r0 = train(f.corpus, f.graph, &f.source, c0, &pre);
  CHECK(rows.front().test_acc == r0.best_test_acc);
}

TEST_CASE("ablation grid") {
  Fixture f = sanity();
  f.config.epochs = 10;
  const auto cells = ablation_run(f.corpus, f.graph, &f.source, f.config);
  REQUIRE(cells.size() == 4);
  CHECK(cells[0].name == "w/ both");
  CHECK(cells[1].name == "w/o finetune");
  CHECK(cells[2].name == "w/o small lr.");
  CHECK(cells[3].name == "w/o both");
  for (const auto& c : cells) {
    CHECK(c.test_acc >= 0.0);
    CHECK(c.test_acc <= 1.0);
  }
  const TrainResult plain = train(f.corpus, f.graph, &f.source, f.config);
  CHECK(cells[0].test_acc == plain.best_test_acc);

  TrainConfig t;
  t.strategy.small_encoder_lr = false;
  CHECK(t.effective_lr_encoder() == t.lr_gcn);
  t.strategy.small_encoder_lr = true;
  CHECK(t.effective_lr_encoder() == t.lr_encoder);

  const std::string table = format_ablation_table(cells);
  for (const char* name : {"w/ both", "w/o finetune", "w/o small lr.", "w/o both"})
    CHECK(table.find(name) != std::string::npos);
}

TEST_CASE("checkpoint round trip reproduces accuracy bitwise") {
  const auto dir = tgtest::scratch_dir("ckpt");
  Fixture f(tgtest::random_corpus(9, 14, 12, 3));
  const TrainResult r = train(f.corpus, f.graph, &f.source, f.config);
  save_checkpoint(r.best_models, 0xabcdefULL, dir / "m.gcnm");
  const Checkpoint back = load_checkpoint(dir / "m.gcnm");
  CHECK(back.config_hash == 0xabcdefULL);
  CHECK(back.models.gcn.weights == r.best_models.gcn.weights);
  CHECK(back.models.encoder->projection == r.best_models.encoder->projection);
  const double before = evaluate(r.best_models, &f.source, f.graph, f.corpus, 0.7, EvalSplit::kTest);
  const double after = evaluate(back.models, &f.source, f.graph, f.corpus, 0.7, EvalSplit::kTest);
  CHECK(before == after);

  TrainConfig sgc = f.config;
  sgc.model = ModelKind::kSgc;
  sgc.lambda = 1.0;
  sgc.lr_gcn = 0.2;
  const TrainResult rs = train(f.corpus, f.graph, nullptr, sgc);
  save_checkpoint(rs.best_models, 1, dir / "s.gcnm");
  const Checkpoint bs = load_checkpoint(dir / "s.gcnm");
  CHECK(bs.models.kind == ModelKind::kSgc);
  CHECK(bs.models.sgc_weight == rs.best_models.sgc_weight);
  CHECK(evaluate(bs.models, nullptr, f.graph, f.corpus, 1.0, EvalSplit::kTest) ==
        evaluate(rs.best_models, nullptr, f.graph, f.corpus, 1.0, EvalSplit::kTest));
}

TEST_CASE("metrics CSV layout") {
  const auto dir = tgtest::scratch_dir("csv");
  std::vector<EpochReport> reps{{1, 0.5, std::nan(""), 0.25, 12.0}, {2, 0.25, 0.5, 0.75, 9.0}};
  write_metrics_csv(reps, false, dir / "m.csv");
  CHECK(tgtest::read_bytes(dir / "m.csv") ==
        "epoch,train_loss,dev_acc,test_acc,wall_ms\n1,0.5,nan,0.250000,0\n2,0.25,0.500000,0.750000,0\n");
  write_sweep_csv({{0.0, 0.5, 0.5}, {0.7, 1.0, 0.75}}, dir / "s.csv");
  CHECK(tgtest::read_bytes(dir / "s.csv") ==
        "lambda,dev_acc,test_acc\n0,0.500000,0.500000\n0.7,1.000000,0.750000\n");
}
