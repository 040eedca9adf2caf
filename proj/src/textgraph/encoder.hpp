#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "textgraph/corpus.hpp"
#include "textgraph/dense.hpp"
#include "textgraph/gcn.hpp"

namespace textgraph {

// Fixed per-document input representation behind the trainable encoder.
struct DocFeatureSource {
  enum class Kind { kExternalEmbedding, kHashedBow };

  Kind kind = Kind::kHashedBow;
  DenseMatrix features;  // n_doc x raw_dim, corpus order

  std::size_t n_doc() const noexcept { return features.rows(); }
  std::size_t raw_dim() const noexcept { return features.cols(); }
};

// On-disk "DEMB" container plus its `.meta.json` sidecar.
struct EmbeddingFile {
  std::uint64_t n_doc = 0;
  std::uint64_t dim = 0;
  std::vector<float> data;  // row-major
  std::vector<std::string> doc_ids;
  std::string dataset;
  std::string model_name;
};

void write_embedding_file(const EmbeddingFile& file,
                          const std::filesystem::path& path);

// Reads and checks the container and sidecar, without corpus validation.
EmbeddingFile read_embedding_file(const std::filesystem::path& path);

// Reads, validates against the corpus document order, promotes to f64.
DocFeatureSource load_embedding_file(const std::filesystem::path& path,
                                     const Corpus& corpus);

DocFeatureSource hashed_bow_features(const Corpus& corpus,
                                     std::size_t n_buckets, std::uint64_t seed);

struct EncoderParams {
  DenseMatrix projection;  // raw_dim x d
  DenseMatrix bias;        // 1 x d
  DenseMatrix aux_weight;  // d x n_classes

  std::size_t dim() const noexcept { return projection.cols(); }
};

struct EncoderGradients {
  DenseMatrix projection;
  DenseMatrix bias;
  DenseMatrix aux_weight;
};

EncoderParams init_encoder(std::size_t raw_dim, std::size_t dim,
                           std::size_t n_classes, std::uint64_t seed);

struct EncodeResult {
  DenseMatrix embeddings;          // |rows| x d
  std::vector<std::size_t> rows;   // document indices, in batch order
};

// tanh(features[rows] * projection + bias)
EncodeResult encode_batch(const DocFeatureSource& source,
                          const EncoderParams& params,
                          std::span<const std::size_t> rows);

// Accumulates projection/bias gradients from d loss / d embeddings.
void encoder_backward(const DocFeatureSource& source, const EncodeResult& fwd,
                      const DenseMatrix& d_embeddings, EncoderGradients& grads);

// softmax(X * aux_weight); no bias.
PredictionSet aux_forward(const DenseMatrix& x, const EncoderParams& params);

// Accumulates the aux_weight gradient and returns d loss / d X.
DenseMatrix aux_backward(const DenseMatrix& x, const EncoderParams& params,
                         const DenseMatrix& dlogits, EncoderGradients& grads);

EncoderGradients zero_gradients(const EncoderParams& params);

}  // namespace textgraph
