#include <doctest.h>

#include <Eigen/Dense>

#include "support.hpp"
#include "textgraph/error.hpp"
#include "textgraph/textgraph.hpp"

using namespace textgraph;

namespace {

Corpus aba_c() { return tgtest::make_corpus({{"x", "a b a"}, {"y", "c"}}, {}); }

std::uint32_t id(const Corpus& c, const char* w) { return *c.vocabulary.find(w); }

}  // namespace

TEST_CASE("window counts on the a-b-a / c corpus") {
  const Corpus c = aba_c();
  const auto counts = count_cooccurrence(c, 2);
  CHECK(counts.window_count == 3);
  CHECK(counts.word_window_count[id(c, "a")] == 2);
  CHECK(counts.word_window_count[id(c, "b")] == 2);
  CHECK(counts.word_window_count[id(c, "c")] == 1);
  CHECK(counts.pair(id(c, "a"), id(c, "b")) == 2);
  CHECK(counts.pair(id(c, "b"), id(c, "a")) == 2);
  CHECK(counts.pair(id(c, "a"), id(c, "c")) == 0);

  const auto ppmi = compute_ppmi(counts);
  REQUIRE(ppmi.size() == 1);
  CHECK(ppmi[0].weight == doctest::Approx(std::log(1.5)).epsilon(1e-15));
}

TEST_CASE("single-token document gives one window") {
  const Corpus c = tgtest::make_corpus({{"x", "a"}}, {});
  for (std::size_t w : {2u, 5u, 20u}) {
    const auto counts = count_cooccurrence(c, w);
    CHECK(counts.window_count == 1);
    CHECK(counts.word_window_count[0] == 1);
  }
  CHECK_THROWS_AS(count_cooccurrence(c, 1), Error);
}

TEST_CASE("PMI at exactly zero and negative PMI produce no edge") {
  // a,b each in 2 of 4 windows and together in 1: pair/W = 1/4 = (2/4)(2/4).
  CooccurrenceCounts zero;
  zero.window_count = 4;
  zero.word_window_count = {2, 2};
  zero.pair_window_count = {{0, 1, 1}};
  CHECK(compute_ppmi(zero).empty());

  CooccurrenceCounts neg;
  neg.window_count = 10;
  neg.word_window_count = {8, 8};
  neg.pair_window_count = {{0, 1, 6}};
  CHECK(compute_ppmi(neg).empty());
}

TEST_CASE("TF-IDF formula and df = N omission") {
  const Corpus c = tgtest::make_corpus({{"x", "rare rare common"}, {"x", "common"},
                                        {"y", "common other"}}, {});
  const auto edges = compute_tfidf(c);
  bool found = false;
  for (const auto& e : edges) {
    CHECK(e.word != id(c, "common"));
    if (e.doc == 0 && e.word == id(c, "rare")) {
      found = true;
      CHECK(e.weight == doctest::Approx(2.0 * std::log(3.0)).epsilon(1e-15));
    }
  }
  CHECK(found);
}

TEST_CASE("adjacency assembly") {
  const HeteroGraph g = assemble_adjacency({}, {}, 2, 3);
  CHECK(g.adjacency == SparseMatrix::identity(5));

  CHECK_THROWS_AS(assemble_adjacency({{0, 1, 1.0}, {0, 1, 2.0}}, {}, 1, 2), Error);

  const Corpus c = aba_c();
  const HeteroGraph built = build_graph(c, GraphParams{2});
  const auto oracle = tgtest::dense_graph_oracle(c, 2);
  CHECK(built.adjacency.is_symmetric(0.0));
  CHECK(max_abs_diff(built.adjacency.to_dense(), oracle.a) <= 1e-12);
  for (std::size_t i = 0; i < c.n_doc(); ++i)
    for (std::size_t j = 0; j < c.n_doc(); ++j)
      if (i != j) CHECK(built.adjacency.at(i, j) == 0.0);
}

TEST_CASE("normalization examples") {
  CHECK(normalize_adjacency(SparseMatrix::identity(4)) == SparseMatrix::identity(4));
  const SparseMatrix ones =
      SparseMatrix::from_triplets(2, 2, {{0, 0, 1}, {0, 1, 1}, {1, 0, 1}, {1, 1, 1}});
  const SparseMatrix n = normalize_adjacency(ones);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(n.at(i, j) == doctest::Approx(0.5));

  const SparseMatrix dead = SparseMatrix::from_triplets(2, 2, {{0, 0, 1}});
  try {
    normalize_adjacency(dead);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNormalization);
  }
}

TEST_CASE("graph matches the dense oracle on random corpora") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const Corpus c = tgtest::random_corpus(100 + seed, 2 + seed % 7, 3 + seed % 10, 2,
                                           12, true);
    const std::size_t window = 2 + seed % 5;
    const HeteroGraph g = build_graph(c, GraphParams{window});
    const auto o = tgtest::dense_graph_oracle(c, window);
    CHECK(max_abs_diff(g.adjacency.to_dense(), o.a) <= 1e-12);
    CHECK(max_abs_diff(g.norm_adjacency.to_dense(), o.a_norm) <= 1e-12);
    CHECK(g.norm_adjacency.is_symmetric(1e-12));
  }
}

TEST_CASE("normalized adjacency spectrum lies in [-1, 1]") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Corpus c = tgtest::random_corpus(900 + seed, 6, 10, 2);
    const HeteroGraph g = build_graph(c, GraphParams{3});
    const DenseMatrix d = g.norm_adjacency.to_dense();
    Eigen::MatrixXd m(d.rows(), d.cols());
    for (std::size_t i = 0; i < d.rows(); ++i)
      for (std::size_t j = 0; j < d.cols(); ++j) m(i, j) = d(i, j);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    CHECK(es.eigenvalues().maxCoeff() <= 1.0 + 1e-12);
    CHECK(es.eigenvalues().minCoeff() >= -1.0 - 1e-12);
    CHECK(es.eigenvalues().maxCoeff() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("graph file round trip, determinism and corruption") {
  const auto dir = tgtest::scratch_dir("graph-io");
  const Corpus c = tgtest::sanity_corpus();
  const HeteroGraph g = build_graph(c, GraphParams{20});
  GraphMetadata meta{"sanity", 20, 1, false, corpus_hash(c)};
  save_graph(g, meta, dir / "a.htgr");
  save_graph(build_graph(c, GraphParams{20}), meta, dir / "b.htgr");
  CHECK(tgtest::read_bytes(dir / "a.htgr") == tgtest::read_bytes(dir / "b.htgr"));

  GraphMetadata back;
  const HeteroGraph loaded = load_graph(dir / "a.htgr", &back);
  CHECK(loaded.adjacency == g.adjacency);
  CHECK(loaded.norm_adjacency == g.norm_adjacency);
  CHECK(back.corpus_hash == meta.corpus_hash);
  CHECK(back.window_size == 20);

  const std::string bytes = tgtest::read_bytes(dir / "a.htgr");
  {
    std::ofstream out(dir / "short.htgr", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 3));
  }
  try {
    load_graph(dir / "short.htgr");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTruncated);
  }
  {
    std::string wrong = bytes;
    wrong[0] = 'X';
    std::ofstream out(dir / "magic.htgr", std::ios::binary);
    out << wrong;
  }
  try {
    load_graph(dir / "magic.htgr");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kFormat);
  }
}
