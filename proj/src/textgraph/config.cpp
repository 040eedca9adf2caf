#include "textgraph/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "textgraph/error.hpp"
#include "textgraph/random.hpp"

namespace textgraph {

namespace fs = std::filesystem;

namespace {

enum class Kind { kString, kPath, kReal, kCount, kSeed, kFlag, kChoice };

struct KeySpec {
  const char* name;
  Kind kind;
  double lo = 0.0;  // numeric bounds, inclusive unless noted in `open_hi`
  double hi = 0.0;
  bool open_hi = false;
  std::vector<std::string> choices = {};
};

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      {"dataset", Kind::kString},
      {"data_root", Kind::kPath},
      {"mode", Kind::kChoice, 0, 0, false, {"textgcn", "sgc", "bertgcn"}},
      {"encoder", Kind::kChoice, 0, 0, false, {"external", "hashed-bow"}},
      {"embeddings", Kind::kPath},
      {"stopwords_file", Kind::kPath},
      {"window", Kind::kCount, 2, 1e9},
      {"min_freq", Kind::kCount, 1, 1e9},
      {"remove_stopwords", Kind::kFlag},
      {"dev_fraction", Kind::kReal, 0, 1, true},
      {"lambda", Kind::kReal, 0, 1},
      {"lr_gcn", Kind::kReal, 0, 1e3},
      {"lr_encoder", Kind::kReal, 0, 1e3},
      {"lr_pretrain", Kind::kReal, 0, 1e3},
      {"batch_size", Kind::kCount, 0, 1e12},
      {"epochs", Kind::kCount, 1, 1e9},
      {"pretrain_epochs", Kind::kCount, 0, 1e9},
      {"patience", Kind::kCount, 0, 1e9},
      {"layers", Kind::kCount, 1, 64},
      {"hidden", Kind::kCount, 1, 1e6},
      {"dropout", Kind::kReal, 0, 1, true},
      {"sgc_k", Kind::kCount, 1, 64},
      {"encoder_dim", Kind::kCount, 1, 1e6},
      {"n_buckets", Kind::kCount, 1, 1e9},
      {"finetune_init", Kind::kFlag},
      {"small_lr", Kind::kFlag},
      {"seed", Kind::kSeed},
      {"record_wall_time", Kind::kFlag},
  };
  return table;
}

const KeySpec* find_key(const std::string& key) {
  for (const KeySpec& k : key_table())
    if (key == k.name) return &k;
  return nullptr;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> parse_real(const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
    return std::nullopt;
  return out;
}

std::optional<std::uint64_t> parse_uint(const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) return std::nullopt;
  return out;
}

std::optional<bool> parse_flag(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  return std::nullopt;
}

void validate(const KeySpec& k, const std::string& v) {
  const std::string where = "config key '" + std::string(k.name) + "': ";
  switch (k.kind) {
    case Kind::kString:
    case Kind::kPath:
      return;
    case Kind::kFlag:
      require(parse_flag(v).has_value(), ErrorCode::kConfig,
              where + "expected true/false, got '" + v + "'");
      return;
    case Kind::kSeed:
      require(parse_uint(v).has_value(), ErrorCode::kConfig,
              where + "expected an unsigned integer, got '" + v + "'");
      return;
    case Kind::kChoice: {
      if (std::find(k.choices.begin(), k.choices.end(), v) != k.choices.end()) return;
      std::string all;
      for (const auto& c : k.choices) all += (all.empty() ? "" : ", ") + c;
      fail(ErrorCode::kConfig, where + "'" + v + "' is not one of " + all);
    }
    case Kind::kCount: {
      const auto n = parse_uint(v);
      require(n.has_value(), ErrorCode::kConfig,
              where + "expected an unsigned integer, got '" + v + "'");
      require(static_cast<double>(*n) >= k.lo && static_cast<double>(*n) <= k.hi,
              ErrorCode::kConfig, where + v + " is out of range");
      return;
    }
    case Kind::kReal: {
      const auto x = parse_real(v);
      require(x.has_value(), ErrorCode::kConfig,
              where + "expected a number, got '" + v + "'");
      const bool ok = *x >= k.lo && (k.open_hi ? *x < k.hi : *x <= k.hi);
      require(ok, ErrorCode::kConfig, where + v + " is out of range");
      return;
    }
  }
}

std::string real_text(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const KeySpec& k : key_table()) out.emplace_back(k.name);
    return out;
  }();
  return keys;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const KeySpec* spec = find_key(key);
  require(spec != nullptr, ErrorCode::kConfig, "unknown config key '" + key + "'");
  validate(*spec, value);
  values_[key] = value;
}

void RunConfig::unset(const std::string& key) { values_.erase(key); }

std::optional<std::string> RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void RunConfig::load_file(const fs::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kNotFound, "config file not found: " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    require(eq != std::string::npos, ErrorCode::kConfig,
            path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      set(trim(std::string_view(body).substr(0, eq)),
          trim(std::string_view(body).substr(eq + 1)));
    } catch (const Error& e) {
      fail(e.code(), path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

const char* mode_name(RunMode m) {
  switch (m) {
    case RunMode::kTextGcn: return "textgcn";
    case RunMode::kSgc: return "sgc";
    case RunMode::kBertGcn: return "bertgcn";
  }
  return "?";
}

Settings resolve(const RunConfig& config) {
  const auto str = [&](const char* k, std::string def) {
    return config.get(k).value_or(std::move(def));
  };
  const auto real = [&](const char* k, double def) {
    const auto v = config.get(k);
    return v ? *parse_real(*v) : def;
  };
  const auto count = [&](const char* k, std::size_t def) {
    const auto v = config.get(k);
    return v ? static_cast<std::size_t>(*parse_uint(*v)) : def;
  };
  const auto flag = [&](const char* k, bool def) {
    const auto v = config.get(k);
    return v ? *parse_flag(*v) : def;
  };

  Settings s;
  s.dataset = str("dataset", "");
  const char* env_root = std::getenv("TEXTGRAPH_DATA");
  s.data_root = str("data_root", env_root ? env_root : "");
  const std::string mode = str("mode", "bertgcn");
  s.mode = mode == "textgcn" ? RunMode::kTextGcn
           : mode == "sgc"   ? RunMode::kSgc
                             : RunMode::kBertGcn;

  TrainConfig& t = s.train;
  switch (s.mode) {
    case RunMode::kTextGcn:
      t.lr_gcn = 0.02;
      t.epochs = 200;
      t.lambda = 1.0;
      t.batch_size = 0;
      break;
    case RunMode::kSgc:
      t.lr_gcn = 0.2;
      t.epochs = 100;
      t.lambda = 1.0;
      t.batch_size = 0;
      t.model = ModelKind::kSgc;
      break;
    case RunMode::kBertGcn:
      break;
  }
  if (s.mode != RunMode::kBertGcn && config.has("lambda"))
    require(real("lambda", 1.0) == 1.0, ErrorCode::kConfig,
            std::string(mode_name(s.mode)) + " mode uses identity features and fixes lambda = 1");

  const PreprocessConfig pre =
      default_preprocess_config(fs::path(s.dataset).filename().string());
  s.min_freq = count("min_freq", pre.min_freq);
  s.remove_stopwords = flag("remove_stopwords", pre.remove_stopwords);
  s.stopwords_file = str("stopwords_file", default_stopwords_path().string());
  s.window = count("window", s.window);
  s.dev_fraction = real("dev_fraction", s.dev_fraction);
  s.n_buckets = count("n_buckets", s.n_buckets);
  s.record_wall_time = flag("record_wall_time", false);
  s.embeddings = str("embeddings", "");

  t.lambda = real("lambda", t.lambda);
  t.lr_gcn = real("lr_gcn", t.lr_gcn);
  t.lr_encoder = real("lr_encoder", t.lr_encoder);
  t.lr_pretrain = real("lr_pretrain", t.lr_pretrain);
  t.batch_size = count("batch_size", t.batch_size);
  t.epochs = count("epochs", t.epochs);
  t.pretrain_epochs = count("pretrain_epochs", t.pretrain_epochs);
  t.patience = count("patience", t.patience);
  t.layers = count("layers", t.layers);
  t.hidden = count("hidden", t.hidden);
  t.dropout = real("dropout", t.dropout);
  t.sgc_k = static_cast<int>(count("sgc_k", static_cast<std::size_t>(t.sgc_k)));
  t.encoder_dim = count("encoder_dim", t.encoder_dim);
  t.strategy.finetune_init = flag("finetune_init", true);
  t.strategy.small_encoder_lr = flag("small_lr", true);
  t.seed = config.get("seed") ? *parse_uint(*config.get("seed")) : 0;

  require(t.lr_gcn > 0.0, ErrorCode::kConfig, "lr_gcn must be positive");
  require(t.lr_pretrain > 0.0, ErrorCode::kConfig, "lr_pretrain must be positive");

  const std::string enc = str("encoder", "external");
  s.encoder = enc == "hashed-bow" ? EncoderKind::kHashedBow : EncoderKind::kExternal;
  return s;
}

std::string format_settings(const Settings& s) {
  const TrainConfig& t = s.train;
  const auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  const std::map<std::string, std::string> v = {
      {"dataset", s.dataset},
      {"data_root", s.data_root.string()},
      {"mode", mode_name(s.mode)},
      {"encoder", s.encoder == EncoderKind::kHashedBow ? "hashed-bow" : "external"},
      {"embeddings", s.embeddings.string()},
      {"stopwords_file", s.stopwords_file.string()},
      {"window", std::to_string(s.window)},
      {"min_freq", std::to_string(s.min_freq)},
      {"remove_stopwords", b(s.remove_stopwords)},
      {"dev_fraction", real_text(s.dev_fraction)},
      {"lambda", real_text(t.lambda)},
      {"lr_gcn", real_text(t.lr_gcn)},
      {"lr_encoder", real_text(t.lr_encoder)},
      {"lr_pretrain", real_text(t.lr_pretrain)},
      {"batch_size", std::to_string(t.batch_size)},
      {"epochs", std::to_string(t.epochs)},
      {"pretrain_epochs", std::to_string(t.pretrain_epochs)},
      {"patience", std::to_string(t.patience)},
      {"layers", std::to_string(t.layers)},
      {"hidden", std::to_string(t.hidden)},
      {"dropout", real_text(t.dropout)},
      {"sgc_k", std::to_string(t.sgc_k)},
      {"encoder_dim", std::to_string(t.encoder_dim)},
      {"n_buckets", std::to_string(s.n_buckets)},
      {"finetune_init", b(t.strategy.finetune_init)},
      {"small_lr", b(t.strategy.small_encoder_lr)},
      {"seed", std::to_string(t.seed)},
      {"record_wall_time", b(s.record_wall_time)},
  };
  std::ostringstream out;
  for (const std::string& k : RunConfig::known_keys()) {
    const std::string& val = v.at(k);
    // An empty path means "unset" and must stay unset on reload.
    if (val.empty()) out << "# " << k << " =\n";
    else out << k << " = " << val << '\n';
  }
  return out.str();
}

std::uint64_t config_hash(const Settings& s) {
  const TrainConfig& t = s.train;
  std::ostringstream key;
  key << "dataset=" << fs::path(s.dataset).filename().string()
      << ";mode=" << mode_name(s.mode) << ";layers=" << t.layers
      << ";hidden=" << t.hidden << ";sgc_k=" << t.sgc_k
      << ";lambda=" << real_text(t.lambda) << ";window=" << s.window
      << ";min_freq=" << s.min_freq << ";stop=" << s.remove_stopwords;
  if (s.mode == RunMode::kBertGcn) {
    key << ";encoder=" << (s.encoder == EncoderKind::kHashedBow ? "hashed-bow" : "external")
        << ";encoder_dim=" << t.encoder_dim;
    if (s.encoder == EncoderKind::kHashedBow) key << ";n_buckets=" << s.n_buckets;
  }
  return fnv1a(key.str());
}

Corpus load_corpus(const Settings& s, std::vector<RawDocument>* raw) {
  std::vector<RawDocument> docs = load_dataset(s.data_root, s.dataset);
  PreprocessConfig pre;
  pre.min_freq = s.min_freq;
  pre.remove_stopwords = s.remove_stopwords;
  if (s.remove_stopwords) pre.stopwords = load_stopwords(s.stopwords_file);
  Corpus corpus = preprocess(docs, pre);
  if (s.dev_fraction > 0.0)
    corpus = carve_dev_split(std::move(corpus), s.dev_fraction, s.train.seed);
  if (raw != nullptr) *raw = std::move(docs);
  return corpus;
}

GraphMetadata graph_metadata(const Settings& s, const Corpus& corpus) {
  GraphMetadata m;
  m.dataset = s.dataset;
  m.window_size = s.window;
  m.min_freq = s.min_freq;
  m.remove_stopwords = s.remove_stopwords;
  m.corpus_hash = corpus_hash(corpus);
  return m;
}

std::optional<DocFeatureSource> load_features(const Settings& s, const Corpus& corpus) {
  if (s.mode != RunMode::kBertGcn) return std::nullopt;
  if (s.encoder == EncoderKind::kExternal) {
    require(!s.embeddings.empty(), ErrorCode::kConfig,
            "bertgcn mode needs --embeddings <file> or --encoder hashed-bow");
    return load_embedding_file(s.embeddings, corpus);
  }
  return hashed_bow_features(corpus, s.n_buckets, derive_seed(s.train.seed, "hashed-bow"));
}

}  // namespace textgraph
