#include "textgraph/gcn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "textgraph/error.hpp"
#include "textgraph/random.hpp"

namespace textgraph {

namespace {

std::vector<double> dropout_scales(std::size_t n, double rate,
                                   std::uint64_t seed) {
  std::vector<double> s(n, 1.0);
  if (rate <= 0.0) return s;
  const double keep = 1.0 - rate;
  Rng rng(seed);
  for (double& v : s) v = rng.uniform() < rate ? 0.0 : 1.0 / keep;
  return s;
}

void check_model(const GcnModel& model, const SparseMatrix& adj,
                 const NodeFeatures& x) {
  require(!model.weights.empty(), ErrorCode::kShape, "GCN has no layers");
  require(adj.n_rows == adj.n_cols, ErrorCode::kShape,
          "adjacency must be square");
  require(x.rows() == adj.n_rows, ErrorCode::kShape,
          "feature matrix has " + std::to_string(x.rows()) + " rows, graph has " +
              std::to_string(adj.n_rows) + " nodes");
  require(x.cols() == model.input_width(), ErrorCode::kShape,
          "feature width " + std::to_string(x.cols()) +
              " does not match first layer input " +
              std::to_string(model.input_width()));
  for (std::size_t i = 1; i < model.weights.size(); ++i)
    require(model.weights[i - 1].cols() == model.weights[i].rows(),
            ErrorCode::kShape,
            "layer widths do not chain at layer " + std::to_string(i));
}

}  // namespace

std::uint64_t weights_fingerprint(std::span<const DenseMatrix> weights) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const DenseMatrix& w : weights) {
    h = fnv1a_u64(w.rows(), fnv1a_u64(w.cols(), h));
    for (const double v : w.data()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      h = mix64(h ^ bits);
    }
  }
  return h;
}

DenseMatrix glorot_uniform(std::size_t rows, std::size_t cols,
                           std::uint64_t seed) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  DenseMatrix m(rows, cols);
  Rng rng(seed);
  for (double& v : m.data()) v = rng.uniform(-bound, bound);
  return m;
}

GcnModel init_params(std::span<const std::size_t> widths, std::uint64_t seed,
                     double dropout_rate) {
  require(widths.size() >= 2, ErrorCode::kArgument,
          "a GCN needs at least an input and an output width");
  GcnModel model;
  model.dropout_rate = dropout_rate;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i)
    model.weights.push_back(glorot_uniform(widths[i], widths[i + 1],
                                           derive_seed(seed, "gcn-layer", i)));
  return model;
}

GcnForward gcn_forward(const GcnModel& model, const SparseMatrix& norm_adj,
                       const NodeFeatures& x, const ForwardMode& mode) {
  check_model(model, norm_adj, x);
  const std::size_t n_layers = model.weights.size();
  const double rate = mode.train ? model.dropout_rate : 0.0;

  GcnForward out;
  GcnCache& cache = out.cache;
  cache.fingerprint = weights_fingerprint(model.weights);
  cache.inputs.resize(n_layers);
  cache.masks.resize(n_layers);
  cache.pre.resize(n_layers);

  DenseMatrix current;
  for (std::size_t i = 0; i < n_layers; ++i) {
    const DenseMatrix& w = model.weights[i];
    const std::uint64_t layer_seed = derive_seed(mode.seed, "dropout", i);
    DenseMatrix t;
    if (i == 0 && x.is_identity()) {
      cache.identity_scale = dropout_scales(x.rows(), rate, layer_seed);
      t = w;
      for (std::size_t r = 0; r < t.rows(); ++r) {
        const double s = cache.identity_scale[r];
        if (s == 1.0) continue;
        for (double& v : t.row(r)) v *= s;
      }
    } else {
      DenseMatrix in = (i == 0) ? x.matrix() : std::move(current);
      cache.masks[i] = dropout_scales(in.size(), rate, layer_seed);
      if (rate > 0.0)
        for (std::size_t k = 0; k < in.size(); ++k) in.data()[k] *= cache.masks[i][k];
      t = matmul(in, w);
      cache.inputs[i] = std::move(in);
    }
    DenseMatrix p = spmm(norm_adj, t);
    if (i + 1 < n_layers) {
      current = p;
      for (double& v : current.data()) v = std::max(v, 0.0);
      cache.pre[i] = std::move(p);
    } else {
      out.logits = std::move(p);
    }
  }
  cache.valid = true;
  return out;
}

GcnGradients gcn_backward(const GcnModel& model, const SparseMatrix& norm_adj,
                          const NodeFeatures& x, const GcnCache& cache,
                          const DenseMatrix& dlogits, std::size_t input_rows) {
  check_model(model, norm_adj, x);
  const std::size_t n_layers = model.weights.size();
  require(cache.valid && cache.pre.size() == n_layers &&
              cache.fingerprint == weights_fingerprint(model.weights),
          ErrorCode::kInternal,
          "GCN cache does not belong to the current model parameters");
  require(dlogits.rows() == norm_adj.n_rows &&
              dlogits.cols() == model.output_width(),
          ErrorCode::kShape, "upstream gradient has the wrong shape");
  require(!(x.is_identity() && input_rows > 0), ErrorCode::kArgument,
          "identity features carry no input gradient");

  GcnGradients grads;
  grads.weights.resize(n_layers);
  DenseMatrix d_out = dlogits;
  for (std::size_t li = n_layers; li-- > 0;) {
    const DenseMatrix& w = model.weights[li];
    if (li + 1 < n_layers) {
      const DenseMatrix& pre = cache.pre[li];
      for (std::size_t k = 0; k < d_out.size(); ++k)
        if (!(pre.data()[k] > 0.0)) d_out.data()[k] = 0.0;
    }
    const DenseMatrix d_t = spmm_t(norm_adj, d_out);

    if (li == 0 && x.is_identity()) {
      grads.weights[li] = d_t;
      for (std::size_t r = 0; r < d_t.rows(); ++r) {
        const double s = cache.identity_scale[r];
        if (s == 1.0) continue;
        for (double& v : grads.weights[li].row(r)) v *= s;
      }
      break;
    }
    grads.weights[li] = matmul_tn(cache.inputs[li], d_t);

    if (li > 0) {
      d_out = matmul_nt(d_t, w);
      const auto& mask = cache.masks[li];
      for (std::size_t k = 0; k < d_out.size(); ++k) d_out.data()[k] *= mask[k];
    } else if (input_rows > 0) {
      grads.input = matmul_nt(d_t, w, input_rows);
      const auto& mask = cache.masks[0];
      for (std::size_t k = 0; k < grads.input.size(); ++k)
        grads.input.data()[k] *= mask[k];
    }
  }
  return grads;
}

DenseMatrix sgc_forward(const SparseMatrix& norm_adj, const NodeFeatures& x,
                        int k, const DenseMatrix& w) {
  require(k >= 1, ErrorCode::kArgument, "SGC needs K >= 1");
  require(x.rows() == norm_adj.n_rows && x.cols() == w.rows(),
          ErrorCode::kShape, "SGC operand shapes do not match");
  DenseMatrix y = x.is_identity() ? w : matmul(x.matrix(), w);
  for (int i = 0; i < k; ++i) y = spmm(norm_adj, y);
  return y;
}

DenseMatrix sgc_backward(const SparseMatrix& norm_adj, const NodeFeatures& x,
                         int k, const DenseMatrix& dlogits) {
  require(k >= 1, ErrorCode::kArgument, "SGC needs K >= 1");
  require(dlogits.rows() == norm_adj.n_rows, ErrorCode::kShape,
          "SGC upstream gradient has the wrong shape");
  DenseMatrix g = dlogits;
  for (int i = 0; i < k; ++i) g = spmm_t(norm_adj, g);
  return x.is_identity() ? g : matmul_tn(x.matrix(), g);
}

PredictionSet softmax_rows(const DenseMatrix& logits) {
  PredictionSet out{DenseMatrix(logits.rows(), logits.cols())};
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto in = logits.row(r);
    auto p = out.probs.row(r);
    const double m = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      p[c] = std::exp(in[c] - m);
      sum += p[c];
    }
    for (double& v : p) v /= sum;
  }
  return out;
}

double cross_entropy_masked(const PredictionSet& pred,
                            std::span<const int> labels,
                            std::span<const std::size_t> rows) {
  require(!rows.empty(), ErrorCode::kArgument, "cross-entropy over empty mask");
  double loss = 0.0;
  for (const std::size_t r : rows) {
    require(r < pred.probs.rows() && r < labels.size() && labels[r] >= 0,
            ErrorCode::kArgument,
            "cross-entropy mask selects unlabeled row " + std::to_string(r));
    loss -= std::log(std::max(pred.probs(r, static_cast<std::size_t>(labels[r])),
                              kProbFloor));
  }
  return loss / static_cast<double>(rows.size());
}

DenseMatrix cross_entropy_grad(const PredictionSet& pred,
                               std::span<const int> labels,
                               std::span<const std::size_t> rows) {
  require(!rows.empty(), ErrorCode::kArgument, "cross-entropy over empty mask");
  DenseMatrix g(pred.probs.rows(), pred.probs.cols());
  const double scale = 1.0 / static_cast<double>(rows.size());
  for (const std::size_t r : rows) {
    const auto c = static_cast<std::size_t>(labels[r]);
    const double p = pred.probs(r, c);
    // The floor is a constant below 1e-12, so it has zero derivative there.
    if (p > kProbFloor) g(r, c) -= scale / p;
  }
  return g;
}

DenseMatrix softmax_backward(const PredictionSet& pred,
                             const DenseMatrix& dprobs) {
  require(pred.probs.rows() == dprobs.rows() && pred.probs.cols() == dprobs.cols(),
          ErrorCode::kShape, "softmax_backward: shapes differ");
  DenseMatrix d(dprobs.rows(), dprobs.cols());
  for (std::size_t r = 0; r < d.rows(); ++r) {
    const auto p = pred.probs.row(r);
    const auto g = dprobs.row(r);
    double dot = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) dot += p[c] * g[c];
    for (std::size_t c = 0; c < p.size(); ++c) d(r, c) = p[c] * (g[c] - dot);
  }
  return d;
}

}  // namespace textgraph
