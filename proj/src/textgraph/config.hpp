#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "textgraph/corpus.hpp"
#include "textgraph/encoder.hpp"
#include "textgraph/textgraph.hpp"
#include "textgraph/trainer.hpp"

namespace textgraph {

enum class RunMode { kTextGcn, kSgc, kBertGcn };
enum class EncoderKind { kExternal, kHashedBow };

// Flat key=value configuration. Only explicitly set keys are stored; mode
// dependent defaults are filled in by resolve().
class RunConfig {
 public:
  // Rejects unknown keys and values that do not parse for the key's type.
  void set(const std::string& key, const std::string& value);
  void unset(const std::string& key);
  // `#` starts a comment; blank lines are ignored.
  void load_file(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  static const std::vector<std::string>& known_keys();

 private:
  std::map<std::string, std::string> values_;
};

struct Settings {
  std::string dataset;
  std::filesystem::path data_root;
  RunMode mode = RunMode::kBertGcn;
  EncoderKind encoder = EncoderKind::kExternal;
  std::filesystem::path embeddings;
  std::filesystem::path stopwords_file;
  std::size_t window = 20;
  std::size_t min_freq = 5;
  bool remove_stopwords = true;
  double dev_fraction = 0.1;
  std::size_t n_buckets = 1024;
  bool record_wall_time = false;
  TrainConfig train;
};

Settings resolve(const RunConfig& config);

// key=value lines for every key, in known_keys() order. Loading the text back
// through RunConfig::load_file resolves to the same Settings.
std::string format_settings(const Settings& s);

// Hash over the keys that shape the model and its inputs.
std::uint64_t config_hash(const Settings& s);

const char* mode_name(RunMode m);

// dataset -> raw documents -> corpus with dev split carved out.
Corpus load_corpus(const Settings& s, std::vector<RawDocument>* raw = nullptr);

GraphMetadata graph_metadata(const Settings& s, const Corpus& corpus);

// Null for identity-feature modes.
std::optional<DocFeatureSource> load_features(const Settings& s, const Corpus& corpus);

}  // namespace textgraph
