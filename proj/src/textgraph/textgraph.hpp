#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "textgraph/corpus.hpp"
#include "textgraph/sparse.hpp"

namespace textgraph {

struct PairCount {
  std::uint32_t i;  // i < j
  std::uint32_t j;
  std::uint64_t count;
};

// Sliding-window statistics; each word and each unordered pair is counted at
// most once per window.
struct CooccurrenceCounts {
  std::uint64_t window_count = 0;
  std::vector<std::uint64_t> word_window_count;
  std::vector<PairCount> pair_window_count;  // sorted by (i, j), count > 0

  std::uint64_t pair(std::uint32_t a, std::uint32_t b) const noexcept;
};

struct WordEdge {
  std::uint32_t i;
  std::uint32_t j;
  double weight;
};

struct DocWordEdge {
  std::uint32_t doc;
  std::uint32_t word;
  double weight;
};

// Node order: documents [0, n_doc), then words [n_doc, n_doc + n_word).
struct HeteroGraph {
  std::uint64_t n_doc = 0;
  std::uint64_t n_word = 0;
  SparseMatrix adjacency;
  SparseMatrix norm_adjacency;

  std::uint64_t n_nodes() const noexcept { return n_doc + n_word; }
};

struct GraphParams {
  std::size_t window_size = 20;
};

CooccurrenceCounts count_cooccurrence(const Corpus& corpus,
                                      std::size_t window_size);

// Positive PMI per pair (i < j); non-positive pairs are omitted.
std::vector<WordEdge> compute_ppmi(const CooccurrenceCounts& counts);

// Raw term count times ln(n_doc / df); zero weights are omitted.
std::vector<DocWordEdge> compute_tfidf(const Corpus& corpus);

// Unit self-loops plus symmetric TF-IDF and PPMI blocks. The returned graph
// has an empty norm_adjacency.
HeteroGraph assemble_adjacency(const std::vector<WordEdge>& ppmi,
                               const std::vector<DocWordEdge>& tfidf,
                               std::uint64_t n_doc, std::uint64_t n_word);

// D^{-1/2} A D^{-1/2}
SparseMatrix normalize_adjacency(const SparseMatrix& a);

HeteroGraph build_graph(const Corpus& corpus, const GraphParams& params);

struct GraphMetadata {
  std::string dataset;
  std::size_t window_size = 20;
  std::size_t min_freq = 0;
  bool remove_stopwords = false;
  std::uint64_t corpus_hash = 0;
};

void save_graph(const HeteroGraph& graph, const GraphMetadata& meta,
                const std::filesystem::path& path);

// Reads the binary container; the sidecar is read when present.
HeteroGraph load_graph(const std::filesystem::path& path,
                       GraphMetadata* meta = nullptr);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

}  // namespace textgraph
