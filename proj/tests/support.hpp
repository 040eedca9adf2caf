// Shared fixtures and independent reference implementations for the tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "textgraph/corpus.hpp"
#include "textgraph/dense.hpp"
#include "textgraph/random.hpp"
#include "textgraph/sparse.hpp"

namespace tgtest {

using textgraph::Corpus;
using textgraph::DenseMatrix;
using textgraph::RawDocument;
using textgraph::Split;

struct LabeledText {
  std::string label;
  std::string text;
};

inline std::vector<RawDocument> make_raw(const std::vector<LabeledText>& train,
                                         const std::vector<LabeledText>& test) {
  std::vector<RawDocument> docs;
  for (std::size_t i = 0; i < train.size(); ++i)
    docs.push_back({"train-" + std::to_string(i), train[i].text, train[i].label,
                    Split::kTrain});
  for (std::size_t i = 0; i < test.size(); ++i)
    docs.push_back({"test-" + std::to_string(i), test[i].text, test[i].label,
                    Split::kTest});
  return docs;
}

inline textgraph::PreprocessConfig keep_everything() {
  textgraph::PreprocessConfig c;
  c.remove_stopwords = false;
  c.min_freq = 1;
  return c;
}

inline Corpus make_corpus(const std::vector<LabeledText>& train,
                          const std::vector<LabeledText>& test) {
  return textgraph::preprocess(make_raw(train, test), keep_everything());
}

// Two topics with disjoint content words and shared filler; 8 train, 4 test.
inline std::vector<LabeledText> sanity_train() {
  return {{"sport", "the team won the match after a late goal"},
          {"sport", "the coach praised the team and the goal keeper"},
          {"sport", "a tense match ended with a penalty goal for the team"},
          {"sport", "the keeper saved a penalty and the coach cheered"},
          {"tech", "the new chip makes the laptop run software faster"},
          {"tech", "a server runs the software on a fast chip"},
          {"tech", "the laptop ships with new software and a faster server"},
          {"tech", "engineers tested the chip inside the server and laptop"}};
}

inline std::vector<LabeledText> sanity_test() {
  return {{"sport", "the team scored a goal in the match"},
          {"tech", "the software on the laptop uses a new chip"},
          {"sport", "the coach and the keeper watched the penalty"},
          {"tech", "the server chip runs software"}};
}

inline Corpus sanity_corpus() { return make_corpus(sanity_train(), sanity_test()); }

// Random corpus over words w0..w{vocab-1}; some train docs unlabeled.
inline Corpus random_corpus(std::uint64_t seed, std::size_t n_doc, std::size_t vocab,
                            std::size_t n_classes, std::size_t max_len = 10,
                            bool allow_empty = false) {
  textgraph::Rng rng(seed);
  std::vector<LabeledText> train, test;
  const std::size_t n_train = std::max<std::size_t>(1, (n_doc * 2 + 2) / 3);
  for (std::size_t d = 0; d < n_doc; ++d) {
    const std::size_t lo = allow_empty ? 0 : 1;
    const std::size_t len = lo + rng.below(max_len - lo + 1);
    std::string text;
    for (std::size_t t = 0; t < len; ++t)
      text += "w" + std::to_string(rng.below(vocab)) + " ";
    // Every class appears among the first n_classes train docs.
    const std::size_t cls = d < n_classes ? d : rng.below(n_classes);
    LabeledText doc{"c" + std::to_string(cls), text};
    if (d < n_train) train.push_back(doc);
    else test.push_back(doc);
  }
  // Guarantee a non-empty vocabulary.
  if (train[0].text.empty()) train[0].text = "w0";
  return make_corpus(train, test);
}

inline DenseMatrix random_dense(std::size_t r, std::size_t c, std::uint64_t seed,
                                double lo = -1.0, double hi = 1.0) {
  DenseMatrix m(r, c);
  textgraph::Rng rng(seed);
  for (double& v : m.data()) v = rng.uniform(lo, hi);
  return m;
}

inline DenseMatrix dense_mul(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

// Brute-force graph oracle: enumerates windows explicitly and fills a dense
// (n_doc + n_word)^2 adjacency straight from the defining formulas.
struct DenseGraph {
  std::size_t windows = 0;
  std::vector<std::size_t> word_windows;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> pair_windows;
  DenseMatrix ppmi;   // n_word x n_word, zero diagonal
  DenseMatrix tfidf;  // n_doc x n_word
  DenseMatrix a;
  DenseMatrix a_norm;
};

inline DenseGraph dense_graph_oracle(const Corpus& c, std::size_t window) {
  const std::size_t nd = c.n_doc(), nw = c.n_word(), n = nd + nw;
  DenseGraph g;
  g.word_windows.assign(nw, 0);
  for (const auto& doc : c.documents) {
    if (doc.empty()) continue;
    std::vector<std::vector<std::uint32_t>> wins;
    if (doc.size() <= window) {
      wins.push_back(doc);
    } else {
      for (std::size_t s = 0; s + window <= doc.size(); ++s)
        wins.emplace_back(doc.begin() + s, doc.begin() + s + window);
    }
    for (const auto& w : wins) {
      ++g.windows;
      const std::set<std::uint32_t> uniq(w.begin(), w.end());
      for (auto i : uniq) ++g.word_windows[i];
      for (auto i : uniq)
        for (auto j : uniq)
          if (i < j) ++g.pair_windows[{i, j}];
    }
  }
  g.ppmi = DenseMatrix(nw, nw);
  for (const auto& [ij, cnt] : g.pair_windows) {
    const double W = static_cast<double>(g.windows);
    const double pmi = std::log((cnt / W) / ((g.word_windows[ij.first] / W) *
                                             (g.word_windows[ij.second] / W)));
    if (pmi > 0.0) g.ppmi(ij.first, ij.second) = g.ppmi(ij.second, ij.first) = pmi;
  }
  g.tfidf = DenseMatrix(nd, nw);
  for (std::size_t w = 0; w < nw; ++w) {
    std::size_t df = 0;
    for (const auto& doc : c.documents)
      if (std::find(doc.begin(), doc.end(), w) != doc.end()) ++df;
    for (std::size_t d = 0; d < nd; ++d) {
      const auto tf = std::count(c.documents[d].begin(), c.documents[d].end(), w);
      if (tf > 0) g.tfidf(d, w) = static_cast<double>(tf) * std::log(double(nd) / double(df));
    }
  }
  g.a = DenseMatrix(n, n);
  for (std::size_t i = 0; i < n; ++i) g.a(i, i) = 1.0;
  for (std::size_t d = 0; d < nd; ++d)
    for (std::size_t w = 0; w < nw; ++w)
      g.a(d, nd + w) = g.a(nd + w, d) = g.tfidf(d, w);
  for (std::size_t i = 0; i < nw; ++i)
    for (std::size_t j = 0; j < nw; ++j)
      if (i != j) g.a(nd + i, nd + j) = g.ppmi(i, j);
  g.a_norm = DenseMatrix(n, n);
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deg[i] += g.a(i, j);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      g.a_norm(i, j) = g.a(i, j) / (std::sqrt(deg[i]) * std::sqrt(deg[j]));
  return g;
}

// Relative error used by every finite-difference comparison; the floor keeps
// entries that are zero on both sides from dividing by zero.
inline double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

// Central differences of `loss` w.r.t. every entry of `param`, compared with
// `grad`; returns the worst relative error.
template <typename Loss>
double fd_check(DenseMatrix& param, const DenseMatrix& grad, Loss&& loss,
                double eps = 1e-5) {
  double worst = 0.0;
  for (std::size_t k = 0; k < param.size(); ++k) {
    const double saved = param.data()[k];
    param.data()[k] = saved + eps;
    const double up = loss();
    param.data()[k] = saved - eps;
    const double down = loss();
    param.data()[k] = saved;
    worst = std::max(worst, rel_err(grad.data()[k], (up - down) / (2.0 * eps)));
  }
  return worst;
}

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_tsv_dataset(const std::filesystem::path& dir,
                              const std::vector<LabeledText>& train,
                              const std::vector<LabeledText>& test) {
  std::filesystem::create_directories(dir);
  std::ofstream tr(dir / "train.tsv"), te(dir / "test.tsv");
  for (const auto& d : train) tr << d.label << '\t' << d.text << '\n';
  for (const auto& d : test) te << d.label << '\t' << d.text << '\n';
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("textgraph-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace tgtest
