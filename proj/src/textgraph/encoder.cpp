#include "textgraph/encoder.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "textgraph/binary_io.hpp"
#include "textgraph/error.hpp"
#include "textgraph/random.hpp"
#include "textgraph/textgraph.hpp"

namespace textgraph {

namespace {
constexpr std::uint32_t kEmbeddingVersion = 1;
}  // namespace

void write_embedding_file(const EmbeddingFile& file,
                          const std::filesystem::path& path) {
  require(file.data.size() == file.n_doc * file.dim, ErrorCode::kShape,
          "embedding data length does not match n_doc x dim");
  require(file.doc_ids.size() == file.n_doc, ErrorCode::kCountMismatch,
          "embedding doc_ids length does not match n_doc");
  BinaryWriter w;
  w.magic("DEMB");
  w.put<std::uint32_t>(kEmbeddingVersion);
  w.put<std::uint64_t>(file.n_doc);
  w.put<std::uint64_t>(file.dim);
  w.put_array<float>(file.data);
  w.save(path);

  nlohmann::ordered_json j;
  j["dataset"] = file.dataset;
  j["model_name"] = file.model_name;
  j["doc_ids"] = file.doc_ids;
  std::ofstream out(sidecar_path(path), std::ios::trunc);
  require(out.good(), ErrorCode::kIo,
          "cannot write " + sidecar_path(path).string());
  out << j.dump() << '\n';
}

EmbeddingFile read_embedding_file(const std::filesystem::path& path) {
  BinaryReader r = BinaryReader::open(path);
  r.expect_magic("DEMB");
  const auto version = r.get<std::uint32_t>();
  require(version == kEmbeddingVersion, ErrorCode::kFormat,
          path.string() + ": unsupported embedding version " +
              std::to_string(version));
  EmbeddingFile f;
  f.n_doc = r.get<std::uint64_t>();
  f.dim = r.get<std::uint64_t>();
  require(f.dim == 0 || f.n_doc <= r.remaining() / sizeof(float) / f.dim,
          ErrorCode::kTruncated,
          path.string() + ": truncated payload, header declares " +
              std::to_string(f.n_doc) + "x" + std::to_string(f.dim) +
              " floats but only " + std::to_string(r.remaining()) +
              " bytes follow");
  f.data = r.get_array<float>(f.n_doc * f.dim);
  require(r.remaining() == 0, ErrorCode::kFormat,
          path.string() + ": " + std::to_string(r.remaining()) +
              " trailing bytes after payload");

  std::ifstream in(sidecar_path(path));
  require(in.good(), ErrorCode::kNotFound,
          "embedding sidecar not found: " + sidecar_path(path).string());
  try {
    const auto j = nlohmann::json::parse(in);
    f.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
    f.dataset = j.value("dataset", std::string());
    f.model_name = j.value("model_name", std::string());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, sidecar_path(path).string() + ": " + e.what());
  }
  return f;
}

DocFeatureSource load_embedding_file(const std::filesystem::path& path,
                                     const Corpus& corpus) {
  const EmbeddingFile f = read_embedding_file(path);
  require(f.n_doc == corpus.n_doc(), ErrorCode::kCountMismatch,
          path.string() + ": file holds " + std::to_string(f.n_doc) +
              " documents, corpus has " + std::to_string(corpus.n_doc()));
  require(f.doc_ids.size() == f.n_doc, ErrorCode::kCountMismatch,
          path.string() + ": sidecar lists " + std::to_string(f.doc_ids.size()) +
              " ids for " + std::to_string(f.n_doc) + " rows");
  for (std::size_t i = 0; i < f.doc_ids.size(); ++i)
    require(f.doc_ids[i] == corpus.doc_ids[i], ErrorCode::kIdOrder,
            path.string() + ": row " + std::to_string(i) + " is '" +
                f.doc_ids[i] + "', corpus expects '" + corpus.doc_ids[i] + "'");
  DocFeatureSource src;
  src.kind = DocFeatureSource::Kind::kExternalEmbedding;
  src.features = DenseMatrix(f.n_doc, f.dim);
  for (std::size_t k = 0; k < f.data.size(); ++k) {
    require(std::isfinite(f.data[k]), ErrorCode::kNonFinite,
            path.string() + ": non-finite value at row " +
                std::to_string(k / f.dim));
    src.features.data()[k] = static_cast<double>(f.data[k]);
  }
  return src;
}

DocFeatureSource hashed_bow_features(const Corpus& corpus,
                                     std::size_t n_buckets, std::uint64_t seed) {
  require(n_buckets >= 1, ErrorCode::kArgument, "n_buckets must be >= 1");
  DocFeatureSource src;
  src.kind = DocFeatureSource::Kind::kHashedBow;
  src.features = DenseMatrix(corpus.n_doc(), n_buckets);
  const std::uint64_t salt = mix64(seed ^ 0x6a09e667f3bcc909ULL);
  for (std::size_t d = 0; d < corpus.n_doc(); ++d) {
    auto row = src.features.row(d);
    for (const std::uint32_t t : corpus.documents[d])
      row[mix64(salt ^ t) % n_buckets] += 1.0;
    double norm = 0.0;
    for (const double v : row) norm += v * v;
    if (norm > 0.0) {
      norm = std::sqrt(norm);
      for (double& v : row) v /= norm;
    }
  }
  return src;
}

EncoderParams init_encoder(std::size_t raw_dim, std::size_t dim,
                           std::size_t n_classes, std::uint64_t seed) {
  EncoderParams p;
  p.projection = glorot_uniform(raw_dim, dim, derive_seed(seed, "projection"));
  p.bias = DenseMatrix(1, dim);
  p.aux_weight = glorot_uniform(dim, n_classes, derive_seed(seed, "aux"));
  return p;
}

EncoderGradients zero_gradients(const EncoderParams& params) {
  return {DenseMatrix(params.projection.rows(), params.projection.cols()),
          DenseMatrix(1, params.bias.cols()),
          DenseMatrix(params.aux_weight.rows(), params.aux_weight.cols())};
}

EncodeResult encode_batch(const DocFeatureSource& source,
                          const EncoderParams& params,
                          std::span<const std::size_t> rows) {
  require(source.raw_dim() == params.projection.rows(), ErrorCode::kShape,
          "feature width " + std::to_string(source.raw_dim()) +
              " does not match projection input " +
              std::to_string(params.projection.rows()));
  for (const std::size_t r : rows)
    require(r < source.n_doc(), ErrorCode::kArgument,
            "document row " + std::to_string(r) + " out of range");
  EncodeResult out;
  out.rows.assign(rows.begin(), rows.end());
  out.embeddings = matmul(take_rows(source.features, rows), params.projection);
  for (std::size_t i = 0; i < out.embeddings.rows(); ++i) {
    auto row = out.embeddings.row(i);
    for (std::size_t c = 0; c < row.size(); ++c)
      row[c] = std::tanh(row[c] + params.bias(0, c));
  }
  return out;
}

void encoder_backward(const DocFeatureSource& source, const EncodeResult& fwd,
                      const DenseMatrix& d_embeddings, EncoderGradients& grads) {
  require(d_embeddings.rows() == fwd.embeddings.rows() &&
              d_embeddings.cols() == fwd.embeddings.cols(),
          ErrorCode::kShape, "encoder upstream gradient has the wrong shape");
  DenseMatrix d_pre(d_embeddings.rows(), d_embeddings.cols());
  for (std::size_t k = 0; k < d_pre.size(); ++k) {
    const double y = fwd.embeddings.data()[k];
    d_pre.data()[k] = d_embeddings.data()[k] * (1.0 - y * y);
  }
  const DenseMatrix dp = matmul_tn(take_rows(source.features, fwd.rows), d_pre);
  for (std::size_t k = 0; k < dp.size(); ++k)
    grads.projection.data()[k] += dp.data()[k];
  for (std::size_t i = 0; i < d_pre.rows(); ++i)
    for (std::size_t c = 0; c < d_pre.cols(); ++c) grads.bias(0, c) += d_pre(i, c);
}

PredictionSet aux_forward(const DenseMatrix& x, const EncoderParams& params) {
  require(x.cols() == params.aux_weight.rows(), ErrorCode::kShape,
          "auxiliary classifier expects width " +
              std::to_string(params.aux_weight.rows()));
  return softmax_rows(matmul(x, params.aux_weight));
}

DenseMatrix aux_backward(const DenseMatrix& x, const EncoderParams& params,
                         const DenseMatrix& dlogits, EncoderGradients& grads) {
  const DenseMatrix dw = matmul_tn(x, dlogits);
  for (std::size_t k = 0; k < dw.size(); ++k)
    grads.aux_weight.data()[k] += dw.data()[k];
  return matmul_nt(dlogits, params.aux_weight);
}

}  // namespace textgraph
