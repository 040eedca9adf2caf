#pragma once

#include <cstdint>
#include <vector>

#include "textgraph/dense.hpp"

namespace textgraph {

struct Triplet {
  std::uint64_t row;
  std::uint64_t col;
  double value;
};

// Compressed sparse row matrix. Column indices are sorted and unique within
// each row.
struct SparseMatrix {
  std::uint64_t n_rows = 0;
  std::uint64_t n_cols = 0;
  std::vector<std::uint64_t> row_ptr{0};
  std::vector<std::uint64_t> col_idx;
  std::vector<double> values;

  std::uint64_t nnz() const noexcept { return col_idx.size(); }

  // Builds from triplets; any (row, col) appearing twice is an internal error.
  static SparseMatrix from_triplets(std::uint64_t n_rows, std::uint64_t n_cols,
                                    std::vector<Triplet> entries);
  static SparseMatrix identity(std::uint64_t n);

  // Stored value, or 0 when the entry is structurally absent.
  double at(std::uint64_t r, std::uint64_t c) const noexcept;

  DenseMatrix to_dense() const;

  // Throws kInternal describing the first violated CSR invariant.
  void validate() const;
  bool is_symmetric(double tol = 0.0) const;

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;
};

// Y = A * X
DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& x);
// Y = A^T * X
DenseMatrix spmm_t(const SparseMatrix& a, const DenseMatrix& x);

SparseMatrix transpose(const SparseMatrix& a);

// Worker threads for large products; 0 (default) uses every hardware thread.
// Results are bitwise identical for any setting.
void set_spmm_threads(unsigned n);

}  // namespace textgraph
