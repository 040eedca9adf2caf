#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace textgraph {

enum class Split { kTrain, kTest };

struct RawDocument {
  std::string id;
  std::string text;
  std::string label;  // empty when the document is deliberately unlabeled
  Split split = Split::kTrain;
};

struct Vocabulary {
  std::unordered_map<std::string, std::uint32_t> token_to_id;
  std::vector<std::string> id_to_token;

  std::size_t size() const noexcept { return id_to_token.size(); }
  std::optional<std::uint32_t> find(std::string_view token) const;
};

struct Corpus {
  std::vector<std::vector<std::uint32_t>> documents;
  std::vector<std::string> doc_ids;
  std::vector<int> labels;  // -1 for unlabeled documents
  std::vector<std::string> label_names;
  std::vector<std::uint8_t> train_mask;
  std::vector<std::uint8_t> dev_mask;
  std::vector<std::uint8_t> test_mask;
  Vocabulary vocabulary;

  std::size_t n_doc() const noexcept { return documents.size(); }
  std::size_t n_word() const noexcept { return vocabulary.size(); }
  std::size_t n_classes() const noexcept { return label_names.size(); }

  std::vector<std::size_t> indices(const std::vector<std::uint8_t>& mask) const;
  std::vector<std::size_t> train_indices() const { return indices(train_mask); }
  std::vector<std::size_t> dev_indices() const { return indices(dev_mask); }
  std::vector<std::size_t> test_indices() const { return indices(test_mask); }

  // Space-joined surviving tokens of one document.
  std::string cleaned_text(std::size_t doc) const;
};

struct PreprocessConfig {
  bool remove_stopwords = true;
  std::size_t min_freq = 5;
  std::vector<std::string> stopwords;
};

struct SplitSizes {
  std::size_t train;
  std::size_t test;
};

// Published train/test sizes of the five benchmark corpora.
std::optional<SplitSizes> known_split_sizes(std::string_view name);

// Reads <dir>/train.tsv and <dir>/test.tsv (label<TAB>text per line).
std::vector<RawDocument> load_tsv_dataset(const std::filesystem::path& dir);

// `name_or_path` is either a benchmark name resolved under `root`, or a
// directory in the same layout.
std::vector<RawDocument> load_dataset(const std::filesystem::path& root,
                                      const std::string& name_or_path);

std::vector<std::string> tokenize(std::string_view text);

std::vector<std::string> load_stopwords(const std::filesystem::path& path);
std::filesystem::path default_stopwords_path();

// TextGCN protocol: stopwords and min_freq 5, both disabled for MR.
PreprocessConfig default_preprocess_config(std::string_view dataset);

Corpus preprocess(const std::vector<RawDocument>& docs,
                  const PreprocessConfig& config);

Corpus carve_dev_split(Corpus corpus, double fraction, std::uint64_t seed);

// Content hash over tokens, labels and vocabulary (masks excluded).
std::uint64_t corpus_hash(const Corpus& corpus);

}  // namespace textgraph
