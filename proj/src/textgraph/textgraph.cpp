#include "textgraph/textgraph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "textgraph/binary_io.hpp"
#include "textgraph/error.hpp"

namespace textgraph {

namespace {

constexpr std::uint32_t kGraphVersion = 1;

std::uint64_t pair_key(std::uint32_t i, std::uint32_t j) noexcept {
  return (static_cast<std::uint64_t>(i) << 32) | j;
}

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_csr(BinaryWriter& w, const SparseMatrix& m) {
  w.put_array<std::uint64_t>(m.row_ptr);
  w.put_array<std::uint64_t>(m.col_idx);
  w.put_array<double>(m.values);
}

SparseMatrix read_csr(BinaryReader& r, std::uint64_t n) {
  SparseMatrix m;
  m.n_rows = m.n_cols = n;
  m.row_ptr = r.get_array<std::uint64_t>(n + 1);
  const std::uint64_t nnz = m.row_ptr.back();
  m.col_idx = r.get_array<std::uint64_t>(nnz);
  m.values = r.get_array<double>(nnz);
  try {
    m.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kFormat, r.source() + ": corrupt CSR block: " + e.what());
  }
  return m;
}

}  // namespace

std::uint64_t CooccurrenceCounts::pair(std::uint32_t a,
                                       std::uint32_t b) const noexcept {
  if (a > b) std::swap(a, b);
  const auto it = std::lower_bound(
      pair_window_count.begin(), pair_window_count.end(), PairCount{a, b, 0},
      [](const PairCount& x, const PairCount& y) {
        return x.i != y.i ? x.i < y.i : x.j < y.j;
      });
  if (it == pair_window_count.end() || it->i != a || it->j != b) return 0;
  return it->count;
}

CooccurrenceCounts count_cooccurrence(const Corpus& corpus,
                                      std::size_t window_size) {
  require(window_size >= 2, ErrorCode::kArgument,
          "window size must be at least 2");
  CooccurrenceCounts counts;
  counts.word_window_count.assign(corpus.n_word(), 0);
  std::unordered_map<std::uint64_t, std::uint64_t> pairs;

  std::vector<std::uint32_t> window;
  for (const auto& doc : corpus.documents) {
    if (doc.empty()) continue;
    const std::size_t len = std::min(window_size, doc.size());
    const std::size_t n_windows = doc.size() - len + 1;
    for (std::size_t start = 0; start < n_windows; ++start) {
      window.assign(doc.begin() + static_cast<std::ptrdiff_t>(start),
                    doc.begin() + static_cast<std::ptrdiff_t>(start + len));
      std::sort(window.begin(), window.end());
      window.erase(std::unique(window.begin(), window.end()), window.end());
      ++counts.window_count;
      for (std::size_t a = 0; a < window.size(); ++a) {
        ++counts.word_window_count[window[a]];
        for (std::size_t b = a + 1; b < window.size(); ++b)
          ++pairs[pair_key(window[a], window[b])];
      }
    }
  }

  counts.pair_window_count.reserve(pairs.size());
  for (const auto& [key, c] : pairs)
    counts.pair_window_count.push_back(
        {static_cast<std::uint32_t>(key >> 32),
         static_cast<std::uint32_t>(key & 0xffffffffU), c});
  std::sort(counts.pair_window_count.begin(), counts.pair_window_count.end(),
            [](const PairCount& x, const PairCount& y) {
              return x.i != y.i ? x.i < y.i : x.j < y.j;
            });
  return counts;
}

std::vector<WordEdge> compute_ppmi(const CooccurrenceCounts& counts) {
  require(counts.window_count > 0 || counts.pair_window_count.empty(),
          ErrorCode::kArgument, "PPMI needs at least one window");
  std::vector<WordEdge> edges;
  const auto total = static_cast<unsigned __int128>(counts.window_count);
  for (const PairCount& p : counts.pair_window_count) {
    const std::uint64_t ci = counts.word_window_count[p.i];
    const std::uint64_t cj = counts.word_window_count[p.j];
    // PMI > 0  <=>  pair * #W > c_i * c_j, decided exactly in integers.
    const unsigned __int128 num = static_cast<unsigned __int128>(p.count) * total;
    const unsigned __int128 den = static_cast<unsigned __int128>(ci) * cj;
    if (p.count == 0 || num <= den) continue;
    const double w = static_cast<double>(counts.window_count);
    const double pmi = std::log((static_cast<double>(p.count) / w) /
                                ((static_cast<double>(ci) / w) *
                                 (static_cast<double>(cj) / w)));
    if (pmi > 0.0) edges.push_back({p.i, p.j, pmi});
  }
  return edges;
}

std::vector<DocWordEdge> compute_tfidf(const Corpus& corpus) {
  require(corpus.n_doc() > 0, ErrorCode::kArgument, "TF-IDF of empty corpus");
  std::vector<std::uint64_t> df(corpus.n_word(), 0);
  std::vector<std::uint32_t> uniq;
  for (const auto& doc : corpus.documents) {
    uniq.assign(doc.begin(), doc.end());
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (const std::uint32_t w : uniq) ++df[w];
  }
  const double n_doc = static_cast<double>(corpus.n_doc());
  std::vector<DocWordEdge> edges;
  std::vector<std::uint32_t> sorted;
  for (std::size_t d = 0; d < corpus.n_doc(); ++d) {
    sorted.assign(corpus.documents[d].begin(), corpus.documents[d].end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t a = 0; a < sorted.size();) {
      std::size_t b = a;
      while (b < sorted.size() && sorted[b] == sorted[a]) ++b;
      const std::uint32_t w = sorted[a];
      const double idf = std::log(n_doc / static_cast<double>(df[w]));
      const double value = static_cast<double>(b - a) * idf;
      if (value != 0.0)
        edges.push_back({static_cast<std::uint32_t>(d), w, value});
      a = b;
    }
  }
  return edges;
}

HeteroGraph assemble_adjacency(const std::vector<WordEdge>& ppmi,
                               const std::vector<DocWordEdge>& tfidf,
                               std::uint64_t n_doc, std::uint64_t n_word) {
  const std::uint64_t n = n_doc + n_word;
  std::vector<Triplet> entries;
  entries.reserve(n + 2 * (ppmi.size() + tfidf.size()));
  for (std::uint64_t i = 0; i < n; ++i) entries.push_back({i, i, 1.0});
  for (const DocWordEdge& e : tfidf) {
    require(e.doc < n_doc && e.word < n_word, ErrorCode::kArgument,
            "TF-IDF entry out of range");
    const std::uint64_t w = n_doc + e.word;
    entries.push_back({e.doc, w, e.weight});
    entries.push_back({w, e.doc, e.weight});
  }
  for (const WordEdge& e : ppmi) {
    require(e.i < n_word && e.j < n_word, ErrorCode::kArgument,
            "PPMI entry out of range");
    if (e.i == e.j)
      fail(ErrorCode::kInternal, "PPMI entry on the diagonal");
    entries.push_back({n_doc + e.i, n_doc + e.j, e.weight});
    entries.push_back({n_doc + e.j, n_doc + e.i, e.weight});
  }
  HeteroGraph g;
  g.n_doc = n_doc;
  g.n_word = n_word;
  g.adjacency = SparseMatrix::from_triplets(n, n, std::move(entries));
  return g;
}

SparseMatrix normalize_adjacency(const SparseMatrix& a) {
  require(a.n_rows == a.n_cols, ErrorCode::kShape,
          "adjacency must be square");
  std::vector<double> inv_sqrt(a.n_rows);
  for (std::uint64_t r = 0; r < a.n_rows; ++r) {
    double sum = 0.0;
    for (std::uint64_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k)
      sum += a.values[k];
    require(sum > 0.0, ErrorCode::kNormalization,
            "row " + std::to_string(r) + " has non-positive degree");
    inv_sqrt[r] = 1.0 / std::sqrt(sum);
  }
  SparseMatrix out = a;
  for (std::uint64_t r = 0; r < a.n_rows; ++r)
    for (std::uint64_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k)
      out.values[k] = a.values[k] * inv_sqrt[r] * inv_sqrt[a.col_idx[k]];
  return out;
}

HeteroGraph build_graph(const Corpus& corpus, const GraphParams& params) {
  const CooccurrenceCounts counts = count_cooccurrence(corpus, params.window_size);
  HeteroGraph g = assemble_adjacency(compute_ppmi(counts), compute_tfidf(corpus),
                                     corpus.n_doc(), corpus.n_word());
  g.norm_adjacency = normalize_adjacency(g.adjacency);
  return g;
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".meta.json");
}

void save_graph(const HeteroGraph& graph, const GraphMetadata& meta,
                const std::filesystem::path& path) {
  BinaryWriter w;
  w.magic("HTGR");
  w.put<std::uint32_t>(kGraphVersion);
  w.put<std::uint64_t>(graph.n_doc);
  w.put<std::uint64_t>(graph.n_word);
  write_csr(w, graph.adjacency);
  write_csr(w, graph.norm_adjacency);
  w.save(path);

  nlohmann::ordered_json j;
  j["format"] = "HTGR";
  j["version"] = kGraphVersion;
  j["dataset"] = meta.dataset;
  j["window_size"] = meta.window_size;
  j["min_freq"] = meta.min_freq;
  j["remove_stopwords"] = meta.remove_stopwords;
  j["corpus_hash"] = to_hex(meta.corpus_hash);
  j["n_doc"] = graph.n_doc;
  j["n_word"] = graph.n_word;
  j["nnz"] = graph.adjacency.nnz();
  std::ofstream out(sidecar_path(path), std::ios::trunc);
  require(out.good(), ErrorCode::kIo,
          "cannot write " + sidecar_path(path).string());
  out << j.dump(2) << '\n';
}

HeteroGraph load_graph(const std::filesystem::path& path, GraphMetadata* meta) {
  BinaryReader r = BinaryReader::open(path);
  r.expect_magic("HTGR");
  const auto version = r.get<std::uint32_t>();
  require(version == kGraphVersion, ErrorCode::kFormat,
          path.string() + ": unsupported graph version " + std::to_string(version));
  HeteroGraph g;
  g.n_doc = r.get<std::uint64_t>();
  g.n_word = r.get<std::uint64_t>();
  g.adjacency = read_csr(r, g.n_nodes());
  g.norm_adjacency = read_csr(r, g.n_nodes());
  require(r.remaining() == 0, ErrorCode::kFormat,
          path.string() + ": trailing bytes after graph payload");

  if (meta != nullptr) {
    std::ifstream in(sidecar_path(path));
    require(in.good(), ErrorCode::kNotFound,
            "graph metadata not found: " + sidecar_path(path).string());
    try {
      const auto j = nlohmann::json::parse(in);
      meta->dataset = j.at("dataset").get<std::string>();
      meta->window_size = j.at("window_size").get<std::size_t>();
      meta->min_freq = j.at("min_freq").get<std::size_t>();
      meta->remove_stopwords = j.at("remove_stopwords").get<bool>();
      meta->corpus_hash =
          std::stoull(j.at("corpus_hash").get<std::string>(), nullptr, 16);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kParse,
           sidecar_path(path).string() + ": " + std::string(e.what()));
    }
  }
  return g;
}

}  // namespace textgraph
