#include <doctest.h>

#include "support.hpp"
#include "textgraph/corpus.hpp"
#include "textgraph/error.hpp"

using namespace textgraph;
using tgtest::LabeledText;

TEST_CASE("tokenize lowercases and splits clitics and punctuation") {
  CHECK(tokenize("The cat's HAT, isn't it?") ==
        std::vector<std::string>{"the", "cat", "'s", "hat", ",", "is", "n't", "it", "?"});
  CHECK(tokenize("a@b#c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(tokenize("   ").empty());
}

TEST_CASE("stopword removal can empty a document without dropping it") {
  PreprocessConfig cfg;
  cfg.min_freq = 1;
  cfg.stopwords = {"the"};
  const auto raw = tgtest::make_raw({{"a", "The THE the"}, {"b", "cats purr"}}, {});
  const Corpus c = preprocess(raw, cfg);
  REQUIRE(c.n_doc() == 2);
  CHECK(c.documents[0].empty());
  CHECK_FALSE(c.vocabulary.find("the").has_value());
}

TEST_CASE("min_freq threshold is inclusive") {
  PreprocessConfig cfg;
  cfg.remove_stopwords = false;
  cfg.min_freq = 5;
  const auto raw = tgtest::make_raw(
      {{"a", "rare rare rare rare often often often often often"}}, {});
  const Corpus c = preprocess(raw, cfg);
  CHECK_FALSE(c.vocabulary.find("rare").has_value());
  CHECK(c.vocabulary.find("often").has_value());
}

TEST_CASE("empty vocabulary is a preprocessing error") {
  PreprocessConfig cfg;
  cfg.min_freq = 10;
  try {
    preprocess(tgtest::make_raw({{"a", "x y"}}, {}), cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kPreprocess);
  }
}

TEST_CASE("vocabulary ids follow lexicographic order") {
  const Corpus c = tgtest::make_corpus({{"a", "zebra apple mango"}}, {{"b", "kiwi"}});
  const auto& v = c.vocabulary.id_to_token;
  CHECK(std::is_sorted(v.begin(), v.end()));
  CHECK(v.size() == 4);
}

TEST_CASE("labels, masks and unlabeled documents") {
  const Corpus c = tgtest::make_corpus({{"x", "a b"}, {"", "b c"}, {"y", "c d"}},
                                       {{"x", "a d"}});
  CHECK(c.label_names == std::vector<std::string>{"x", "y"});
  CHECK(c.labels == std::vector<int>{0, -1, 1, 0});
  CHECK(c.train_indices() == std::vector<std::size_t>{0, 2});
  CHECK(c.test_indices() == std::vector<std::size_t>{3});
  CHECK(c.dev_indices().empty());
}

TEST_CASE("carve_dev_split arithmetic and determinism") {
  std::vector<LabeledText> train;
  for (int i = 0; i < 100; ++i) train.push_back({i % 2 ? "a" : "b", "w" + std::to_string(i)});
  const Corpus c = tgtest::make_corpus(train, {});
  const Corpus s1 = carve_dev_split(c, 0.1, 1);
  CHECK(s1.train_indices().size() == 90);
  CHECK(s1.dev_indices().size() == 10);
  CHECK(carve_dev_split(c, 0.1, 1).dev_indices() == s1.dev_indices());
  const Corpus s2 = carve_dev_split(c, 0.1, 2);
  CHECK(s2.dev_indices().size() == 10);
  CHECK(s2.dev_indices() != s1.dev_indices());
  CHECK(corpus_hash(s1) == corpus_hash(c));

  for (const double bad : {0.0, 1.0, -0.5, 1.5}) {
    try {
      carve_dev_split(c, bad, 1);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kArgument);
    }
  }
}

TEST_CASE("dataset loading from TSV files") {
  const auto dir = tgtest::scratch_dir("corpus-load");
  tgtest::write_tsv_dataset(dir / "toy", {{"a", "one two"}, {"b", "three"}},
                            {{"a", "four"}});
  const auto docs = load_dataset(dir, "toy");
  REQUIRE(docs.size() == 3);
  CHECK(docs[0].id == "train-0");
  CHECK(docs[2].id == "test-0");
  CHECK(docs[2].split == Split::kTest);
  CHECK(load_dataset("", (dir / "toy").string()).size() == 3);

  try {
    load_dataset(dir, "missing");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNotFound);
    CHECK(std::string(e.what()).find("missing") != std::string::npos);
  }

  {
    std::ofstream bad(dir / "toy" / "test.tsv");
    bad << "a\tfine\nno tab here\n";
  }
  try {
    load_dataset(dir, "toy");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
}

TEST_CASE("published benchmark split sizes") {
  CHECK(known_split_sizes("20ng")->train == 11314);
  CHECK(known_split_sizes("20ng")->test == 7532);
  CHECK(known_split_sizes("r8")->train == 5485);
  CHECK(known_split_sizes("r8")->test == 2189);
  CHECK(known_split_sizes("mr")->train + known_split_sizes("mr")->test == 10662);
  CHECK_FALSE(known_split_sizes("unknown").has_value());
}

TEST_CASE("bundled stopword list") {
  const auto words = load_stopwords(default_stopwords_path());
  CHECK(words.size() == 127);
  CHECK(std::find(words.begin(), words.end(), "the") != words.end());
  CHECK_FALSE(default_preprocess_config("mr").remove_stopwords);
  CHECK(default_preprocess_config("mr").min_freq == 1);
  CHECK(default_preprocess_config("r8").min_freq == 5);
}

TEST_CASE("corpus hash ignores masks but sees tokens and labels") {
  const Corpus a = tgtest::make_corpus({{"x", "a b"}, {"y", "b c"}}, {});
  Corpus b = a;
  b.labels[0] = 1;
  CHECK(corpus_hash(a) != corpus_hash(b));
  Corpus d = a;
  d.documents[1].pop_back();
  CHECK(corpus_hash(a) != corpus_hash(d));
}
