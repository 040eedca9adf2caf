#include "textgraph/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "textgraph/error.hpp"
#include "textgraph/random.hpp"

#ifndef TEXTGRAPH_DATA_DIR
#define TEXTGRAPH_DATA_DIR "data"
#endif

namespace textgraph {

namespace fs = std::filesystem;

std::optional<std::uint32_t> Vocabulary::find(std::string_view token) const {
  const auto it = token_to_id.find(std::string(token));
  if (it == token_to_id.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> Corpus::indices(
    const std::vector<std::uint8_t>& mask) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.push_back(i);
  return out;
}

std::string Corpus::cleaned_text(std::size_t doc) const {
  std::string out;
  for (const std::uint32_t id : documents.at(doc)) {
    if (!out.empty()) out += ' ';
    out += vocabulary.id_to_token[id];
  }
  return out;
}

std::optional<SplitSizes> known_split_sizes(std::string_view name) {
  static const std::map<std::string_view, SplitSizes> kSizes = {
      {"20ng", {11314, 7532}},  {"r8", {5485, 2189}}, {"r52", {6532, 2568}},
      {"ohsumed", {3357, 4043}}, {"mr", {7108, 3554}},
  };
  const auto it = kSizes.find(name);
  if (it == kSizes.end()) return std::nullopt;
  return it->second;
}

namespace {

void read_tsv(const fs::path& path, Split split,
              std::vector<RawDocument>& out) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kNotFound,
          "dataset file not found: " + path.string());
  const std::string prefix = split == Split::kTrain ? "train-" : "test-";
  std::string line;
  std::size_t line_no = 0;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      fail(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) +
                                  ": expected 'label<TAB>text'");
    RawDocument doc;
    doc.id = prefix + std::to_string(index++);
    doc.label = line.substr(0, tab);
    doc.text = line.substr(tab + 1);
    doc.split = split;
    out.push_back(std::move(doc));
  }
}

void replace_all(std::string& s, std::string_view pat, std::string_view rep) {
  std::size_t pos = 0;
  while ((pos = s.find(pat, pos)) != std::string::npos) {
    s.replace(pos, pat.size(), rep);
    pos += rep.size();
  }
}

bool kept_char(char c) {
  switch (c) {
    case ',': case '.': case '!': case '?': case '\'': case '(': case ')':
      return true;
    default:
      return std::isalnum(static_cast<unsigned char>(c)) != 0;
  }
}

}  // namespace

std::vector<RawDocument> load_tsv_dataset(const fs::path& dir) {
  require(fs::is_directory(dir), ErrorCode::kNotFound,
          "dataset directory not found: " + dir.string());
  std::vector<RawDocument> docs;
  read_tsv(dir / "train.tsv", Split::kTrain, docs);
  read_tsv(dir / "test.tsv", Split::kTest, docs);
  return docs;
}

std::vector<RawDocument> load_dataset(const fs::path& root,
                                      const std::string& name_or_path) {
  require(!name_or_path.empty(), ErrorCode::kArgument, "no dataset given");
  const fs::path under_root = root / name_or_path;
  if (!root.empty() && fs::is_directory(under_root))
    return load_tsv_dataset(under_root);
  if (fs::is_directory(name_or_path)) return load_tsv_dataset(name_or_path);
  fail(ErrorCode::kNotFound,
       "dataset not found: " + (root.empty() ? fs::path(name_or_path)
                                             : under_root).string());
}

std::vector<std::string> tokenize(std::string_view text) {
  std::string s;
  s.reserve(text.size() + 16);
  for (const char c : text) {
    const char lower =
        static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    s += kept_char(lower) ? lower : ' ';
  }
  for (const std::string_view suffix : {"'s", "'ve", "n't", "'re", "'d", "'ll"})
    replace_all(s, suffix, std::string(" ") + std::string(suffix));
  for (const std::string_view p : {",", "!", "(", ")", "?"})
    replace_all(s, p, std::string(" ") + std::string(p) + " ");

  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) tokens.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::vector<std::string> load_stopwords(const fs::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kNotFound,
          "stopword file not found: " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) words.push_back(line);
  }
  return words;
}

fs::path default_stopwords_path() {
  return fs::path(TEXTGRAPH_DATA_DIR) / "stopwords_en.txt";
}

PreprocessConfig default_preprocess_config(std::string_view dataset) {
  PreprocessConfig config;
  if (dataset == "mr") {
    config.remove_stopwords = false;
    config.min_freq = 1;
  }
  return config;
}

Corpus preprocess(const std::vector<RawDocument>& docs,
                  const PreprocessConfig& config) {
  require(!docs.empty(), ErrorCode::kPreprocess, "corpus has no documents");

  std::vector<std::vector<std::string>> tokenized;
  tokenized.reserve(docs.size());
  std::map<std::string, std::size_t> freq;
  for (const RawDocument& d : docs) {
    tokenized.push_back(tokenize(d.text));
    for (const std::string& t : tokenized.back()) ++freq[t];
  }

  std::set<std::string> stop;
  if (config.remove_stopwords)
    stop.insert(config.stopwords.begin(), config.stopwords.end());

  Corpus corpus;
  // std::map iteration gives lexicographic order, hence deterministic ids.
  for (const auto& [token, count] : freq) {
    if (count < config.min_freq || stop.count(token)) continue;
    const auto id = static_cast<std::uint32_t>(corpus.vocabulary.size());
    corpus.vocabulary.token_to_id.emplace(token, id);
    corpus.vocabulary.id_to_token.push_back(token);
  }
  require(corpus.vocabulary.size() > 0, ErrorCode::kPreprocess,
          "vocabulary is empty after filtering");

  std::set<std::string> label_set;
  for (const RawDocument& d : docs)
    if (!d.label.empty()) label_set.insert(d.label);
  corpus.label_names.assign(label_set.begin(), label_set.end());

  const std::size_t n = docs.size();
  corpus.documents.resize(n);
  corpus.labels.assign(n, -1);
  corpus.train_mask.assign(n, 0);
  corpus.dev_mask.assign(n, 0);
  corpus.test_mask.assign(n, 0);
  std::set<std::string> seen_ids;
  for (std::size_t i = 0; i < n; ++i) {
    const RawDocument& d = docs[i];
    require(seen_ids.insert(d.id).second, ErrorCode::kParse,
            "duplicate document id " + d.id);
    corpus.doc_ids.push_back(d.id);
    for (const std::string& t : tokenized[i])
      if (const auto id = corpus.vocabulary.find(t)) corpus.documents[i].push_back(*id);
    if (!d.label.empty()) {
      const auto it = std::lower_bound(corpus.label_names.begin(),
                                       corpus.label_names.end(), d.label);
      corpus.labels[i] = static_cast<int>(it - corpus.label_names.begin());
    }
    if (d.split == Split::kTest)
      corpus.test_mask[i] = 1;
    else if (corpus.labels[i] >= 0)
      corpus.train_mask[i] = 1;
  }
  return corpus;
}

Corpus carve_dev_split(Corpus corpus, double fraction, std::uint64_t seed) {
  require(fraction > 0.0 && fraction < 1.0, ErrorCode::kArgument,
          "dev fraction must lie in (0, 1), got " + std::to_string(fraction));
  std::vector<std::size_t> train = corpus.train_indices();
  require(!train.empty(), ErrorCode::kArgument, "training split is empty");
  Rng rng(derive_seed(seed, "dev-split"));
  rng.shuffle(std::span<std::size_t>(train));
  const auto n_dev = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(train.size())));
  for (std::size_t i = 0; i < n_dev; ++i) {
    corpus.train_mask[train[i]] = 0;
    corpus.dev_mask[train[i]] = 1;
  }
  return corpus;
}

std::uint64_t corpus_hash(const Corpus& corpus) {
  std::uint64_t h = fnv1a("textgraph-corpus");
  h = fnv1a_u64(corpus.n_doc(), h);
  for (std::size_t i = 0; i < corpus.n_doc(); ++i) {
    h = fnv1a_u64(corpus.documents[i].size(), h);
    for (const std::uint32_t t : corpus.documents[i]) h = fnv1a_u64(t, h);
    h = fnv1a_u64(static_cast<std::uint64_t>(corpus.labels[i] + 1), h);
  }
  for (const std::string& t : corpus.vocabulary.id_to_token)
    h = fnv1a(t, fnv1a_u64(t.size(), h));
  return h;
}

}  // namespace textgraph
