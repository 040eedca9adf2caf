#include "textgraph/sparse.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>

#include "textgraph/error.hpp"

namespace textgraph {

SparseMatrix SparseMatrix::from_triplets(std::uint64_t n_rows,
                                         std::uint64_t n_cols,
                                         std::vector<Triplet> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const Triplet& a, const Triplet& b) {
              return a.row != b.row ? a.row < b.row : a.col < b.col;
            });
  SparseMatrix m;
  m.n_rows = n_rows;
  m.n_cols = n_cols;
  m.row_ptr.assign(n_rows + 1, 0);
  m.col_idx.reserve(entries.size());
  m.values.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Triplet& t = entries[i];
    require(t.row < n_rows && t.col < n_cols, ErrorCode::kInternal,
            "triplet (" + std::to_string(t.row) + ", " +
                std::to_string(t.col) + ") out of range");
    if (i > 0 && entries[i - 1].row == t.row && entries[i - 1].col == t.col)
      fail(ErrorCode::kInternal, "duplicate entry (" + std::to_string(t.row) +
                                     ", " + std::to_string(t.col) + ")");
    m.col_idx.push_back(t.col);
    m.values.push_back(t.value);
    ++m.row_ptr[t.row + 1];
  }
  for (std::uint64_t r = 0; r < n_rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
  return m;
}

SparseMatrix SparseMatrix::identity(std::uint64_t n) {
  SparseMatrix m;
  m.n_rows = m.n_cols = n;
  m.row_ptr.resize(n + 1);
  m.col_idx.resize(n);
  m.values.assign(n, 1.0);
  for (std::uint64_t i = 0; i <= n; ++i) m.row_ptr[i] = i;
  for (std::uint64_t i = 0; i < n; ++i) m.col_idx[i] = i;
  return m;
}

double SparseMatrix::at(std::uint64_t r, std::uint64_t c) const noexcept {
  if (r >= n_rows) return 0.0;
  const auto begin = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r]);
  const auto end = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r + 1]);
  const auto it = std::lower_bound(begin, end, c);
  if (it == end || *it != c) return 0.0;
  return values[static_cast<std::size_t>(it - col_idx.begin())];
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(n_rows, n_cols);
  for (std::uint64_t r = 0; r < n_rows; ++r)
    for (std::uint64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
      d(r, col_idx[k]) = values[k];
  return d;
}

void SparseMatrix::validate() const {
  require(row_ptr.size() == n_rows + 1, ErrorCode::kInternal,
          "row_ptr length is not n_rows + 1");
  require(row_ptr.front() == 0, ErrorCode::kInternal, "row_ptr[0] != 0");
  require(row_ptr.back() == nnz() && values.size() == nnz(),
          ErrorCode::kInternal, "row_ptr[n_rows] != nnz");
  for (std::uint64_t r = 0; r < n_rows; ++r) {
    require(row_ptr[r] <= row_ptr[r + 1], ErrorCode::kInternal,
            "row_ptr decreasing at row " + std::to_string(r));
    for (std::uint64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      require(col_idx[k] < n_cols, ErrorCode::kInternal,
              "column index out of range in row " + std::to_string(r));
      require(k == row_ptr[r] || col_idx[k - 1] < col_idx[k],
              ErrorCode::kInternal,
              "columns not sorted/unique in row " + std::to_string(r));
      require(std::isfinite(values[k]), ErrorCode::kInternal,
              "non-finite value in row " + std::to_string(r));
    }
  }
}

bool SparseMatrix::is_symmetric(double tol) const {
  if (n_rows != n_cols) return false;
  for (std::uint64_t r = 0; r < n_rows; ++r) {
    for (std::uint64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      const std::uint64_t c = col_idx[k];
      const auto begin = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[c]);
      const auto end = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[c + 1]);
      const auto it = std::lower_bound(begin, end, r);
      if (it == end || *it != r) return false;
      const double other = values[static_cast<std::size_t>(it - col_idx.begin())];
      if (std::abs(other - values[k]) > tol) return false;
    }
  }
  return true;
}

namespace {

std::atomic<unsigned> g_threads{0};

unsigned thread_count(std::uint64_t rows, std::uint64_t work) {
  // Below ~1M multiply-adds the thread start-up costs more than it saves.
  if (work < (1u << 20) || rows < 2) return 1;
  unsigned n = g_threads.load();
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::uint64_t>(n, rows));
}

// Y = A * X with rows split across threads. Each output row is still summed
// by one thread in CSR order, so the result does not depend on the split.
DenseMatrix gather(const SparseMatrix& a, const DenseMatrix& x) {
  const std::size_t n = x.cols();
  DenseMatrix y(a.n_rows, n);
  const auto rows = [&](std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t r = lo; r < hi; ++r) {
      double* out = y.row(r).data();
      for (std::uint64_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
        const double w = a.values[k];
        const double* in = x.row(a.col_idx[k]).data();
        for (std::size_t j = 0; j < n; ++j) out[j] += w * in[j];
      }
    }
  };
  const unsigned t = thread_count(a.n_rows, a.nnz() * n);
  if (t == 1) {
    rows(0, a.n_rows);
    return y;
  }
  std::vector<std::thread> pool;
  const std::uint64_t step = (a.n_rows + t - 1) / t;
  for (std::uint64_t lo = 0; lo < a.n_rows; lo += step)
    pool.emplace_back(rows, lo, std::min(a.n_rows, lo + step));
  for (auto& th : pool) th.join();
  return y;
}

}  // namespace

void set_spmm_threads(unsigned n) { g_threads.store(n); }

SparseMatrix transpose(const SparseMatrix& a) {
  SparseMatrix t;
  t.n_rows = a.n_cols;
  t.n_cols = a.n_rows;
  t.row_ptr.assign(a.n_cols + 1, 0);
  for (const std::uint64_t c : a.col_idx) ++t.row_ptr[c + 1];
  for (std::uint64_t c = 0; c < a.n_cols; ++c) t.row_ptr[c + 1] += t.row_ptr[c];
  t.col_idx.resize(a.nnz());
  t.values.resize(a.nnz());
  std::vector<std::uint64_t> next(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (std::uint64_t r = 0; r < a.n_rows; ++r)
    for (std::uint64_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
      const std::uint64_t slot = next[a.col_idx[k]]++;
      t.col_idx[slot] = r;
      t.values[slot] = a.values[k];
    }
  return t;
}

DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& x) {
  require(a.n_cols == x.rows(), ErrorCode::kShape,
          "spmm: matrix has " + std::to_string(a.n_cols) +
              " columns but operand has " + std::to_string(x.rows()) + " rows");
  return gather(a, x);
}

// Rows of the transpose list source rows in ascending order, the same order a
// serial scatter over A would accumulate them in.
DenseMatrix spmm_t(const SparseMatrix& a, const DenseMatrix& x) {
  require(a.n_rows == x.rows(), ErrorCode::kShape,
          "spmm_t: matrix has " + std::to_string(a.n_rows) +
              " rows but operand has " + std::to_string(x.rows()) + " rows");
  return gather(transpose(a), x);
}

}  // namespace textgraph
