#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "textgraph/dense.hpp"
#include "textgraph/sparse.hpp"

namespace textgraph {

// Non-owning view of the node feature matrix: either an explicit dense matrix
// or the implicit identity used by TextGCN-style featureless training.
class NodeFeatures {
 public:
  static NodeFeatures identity(std::size_t n) { return NodeFeatures(nullptr, n); }
  static NodeFeatures dense(const DenseMatrix& x) { return NodeFeatures(&x, 0); }

  bool is_identity() const noexcept { return dense_ == nullptr; }
  std::size_t rows() const noexcept { return dense_ ? dense_->rows() : n_; }
  std::size_t cols() const noexcept { return dense_ ? dense_->cols() : n_; }
  const DenseMatrix& matrix() const noexcept { return *dense_; }

 private:
  NodeFeatures(const DenseMatrix* dense, std::size_t n) : dense_(dense), n_(n) {}
  const DenseMatrix* dense_;
  std::size_t n_;
};

enum class Activation { kReLU };

struct GcnModel {
  std::vector<DenseMatrix> weights;  // weights[i] is d_i x d_{i+1}
  Activation activation = Activation::kReLU;
  double dropout_rate = 0.5;

  std::size_t input_width() const { return weights.front().rows(); }
  std::size_t output_width() const { return weights.back().cols(); }
};

struct ForwardMode {
  bool train = false;
  std::uint64_t seed = 0;

  static ForwardMode eval() { return {false, 0}; }
  static ForwardMode training(std::uint64_t seed) { return {true, seed}; }
};

struct GcnCache {
  bool valid = false;
  std::uint64_t fingerprint = 0;
  std::vector<double> identity_scale;     // dropout on identity input (diag)
  std::vector<DenseMatrix> inputs;        // post-dropout layer inputs
  std::vector<std::vector<double>> masks; // dropout scale per input element
  std::vector<DenseMatrix> pre;           // A~ In W, before activation
};

struct GcnForward {
  DenseMatrix logits;
  GcnCache cache;
};

struct GcnGradients {
  std::vector<DenseMatrix> weights;
  DenseMatrix input;  // first `input_rows` rows of dL/dX; empty for identity X
};

struct PredictionSet {
  DenseMatrix probs;
};

inline constexpr double kProbFloor = 1e-12;

// Glorot-uniform matrix, deterministic for a given generator state.
DenseMatrix glorot_uniform(std::size_t rows, std::size_t cols,
                           std::uint64_t seed);

GcnModel init_params(std::span<const std::size_t> widths, std::uint64_t seed,
                     double dropout_rate = 0.5);

// L0 = X, Li = relu(A~ dropout(L{i-1}) Wi); the last layer emits raw logits.
GcnForward gcn_forward(const GcnModel& model, const SparseMatrix& norm_adj,
                       const NodeFeatures& x, const ForwardMode& mode);

GcnGradients gcn_backward(const GcnModel& model, const SparseMatrix& norm_adj,
                          const NodeFeatures& x, const GcnCache& cache,
                          const DenseMatrix& dlogits, std::size_t input_rows);

// A~^K X W by K repeated sparse products.
DenseMatrix sgc_forward(const SparseMatrix& norm_adj, const NodeFeatures& x,
                        int k, const DenseMatrix& w);

// dL/dW = X^T (A~^T)^K dL/dlogits
DenseMatrix sgc_backward(const SparseMatrix& norm_adj, const NodeFeatures& x,
                         int k, const DenseMatrix& dlogits);

PredictionSet softmax_rows(const DenseMatrix& logits);

// Mean of -ln max(p[label], 1e-12) over `rows`.
double cross_entropy_masked(const PredictionSet& pred, std::span<const int> labels,
                            std::span<const std::size_t> rows);

// d loss / d probs for cross_entropy_masked, same shape as pred.probs.
DenseMatrix cross_entropy_grad(const PredictionSet& pred,
                               std::span<const int> labels,
                               std::span<const std::size_t> rows);

// d loss / d logits given d loss / d probs.
DenseMatrix softmax_backward(const PredictionSet& pred, const DenseMatrix& dprobs);

std::uint64_t weights_fingerprint(std::span<const DenseMatrix> weights);

}  // namespace textgraph
