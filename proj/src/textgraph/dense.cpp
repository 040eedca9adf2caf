#include "textgraph/dense.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "textgraph/error.hpp"

namespace textgraph {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols,
                         std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows_ * cols_, ErrorCode::kShape,
          "dense matrix data length " + std::to_string(data_.size()) +
              " does not match " + std::to_string(rows_) + "x" +
              std::to_string(cols_));
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void DenseMatrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool DenseMatrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](double x) { return std::isfinite(x); });
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.rows(), ErrorCode::kShape,
          "matmul: inner dimensions differ");
  DenseMatrix c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* out = c.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double s = a(i, k);
      if (s == 0.0) continue;
      const double* in = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) out[j] += s * in[j];
    }
  }
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.rows() == b.rows(), ErrorCode::kShape,
          "matmul_tn: row counts differ");
  DenseMatrix c(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* in = b.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double s = a(k, i);
      if (s == 0.0) continue;
      double* out = c.row(i).data();
      for (std::size_t j = 0; j < n; ++j) out[j] += s * in[j];
    }
  }
  return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b,
                      std::size_t rows) {
  require(a.cols() == b.cols(), ErrorCode::kShape,
          "matmul_nt: column counts differ");
  const std::size_t m = std::min(rows, a.rows());
  DenseMatrix c(m, b.rows());
  for (std::size_t i = 0; i < m; ++i) {
    const double* x = a.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* y = b.row(j).data();
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += x[k] * y[k];
      c(i, j) = s;
    }
  }
  return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

DenseMatrix take_rows(const DenseMatrix& a, std::span<const std::size_t> idx) {
  DenseMatrix out(idx.size(), a.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    require(idx[r] < a.rows(), ErrorCode::kArgument,
            "row index " + std::to_string(idx[r]) + " out of range");
    std::copy_n(a.row(idx[r]).data(), a.cols(), out.row(r).data());
  }
  return out;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCode::kShape,
          "max_abs_diff: shapes differ");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace textgraph
