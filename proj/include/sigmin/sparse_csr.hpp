#ifndef SIGMIN_SPARSE_CSR_HPP
#define SIGMIN_SPARSE_CSR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigmin/dense_matrix.hpp"

namespace sigmin {

// Compressed sparse row matrix. Column indices must be strictly increasing
// within each row; validate() enforces the full structural contract.
struct SparseMatrixCSR {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr;  // rows + 1 entries, row_ptr[0] == 0
  std::vector<std::size_t> col_idx;
  std::vector<double> values;

  SparseMatrixCSR() : row_ptr(1, 0) {}
  SparseMatrixCSR(std::size_t r, std::size_t c) : rows(r), cols(c), row_ptr(r + 1, 0) {}

  std::size_t nnz() const { return values.size(); }

  void validate() const {
    if (row_ptr.size() != rows + 1)
      throw std::invalid_argument("csr: row_ptr must have rows+1 entries");
    if (row_ptr.front() != 0)
      throw std::invalid_argument("csr: row_ptr[0] must be 0");
    if (col_idx.size() != values.size())
      throw std::invalid_argument("csr: col_idx and values sizes differ");
    if (row_ptr.back() != values.size())
      throw std::invalid_argument("csr: row_ptr back must equal nnz");
    for (std::size_t i = 0; i < rows; ++i) {
      if (row_ptr[i] > row_ptr[i + 1])
        throw std::invalid_argument("csr: row_ptr decreasing at row " + std::to_string(i));
      for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
        if (col_idx[p] >= cols)
          throw std::invalid_argument("csr: column index out of range in row " +
                                      std::to_string(i));
        if (p > row_ptr[i] && col_idx[p] <= col_idx[p - 1])
          throw std::invalid_argument(
              "csr: column indices not strictly increasing in row " + std::to_string(i));
      }
    }
  }
};

inline DenseMatrix to_dense(const SparseMatrixCSR& a) {
  DenseMatrix d(a.rows, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p)
      d.at(i, a.col_idx[p]) = a.values[p];
  return d;
}

inline SparseMatrixCSR sparse_from_dense(const DenseMatrix& d, double drop_tol = 0.0) {
  SparseMatrixCSR a(d.rows, d.cols);
  for (std::size_t i = 0; i < d.rows; ++i) {
    for (std::size_t j = 0; j < d.cols; ++j) {
      double v = d.at(i, j);
      if (v != 0.0 && (drop_tol <= 0.0 || std::abs(v) > drop_tol)) {
        a.col_idx.push_back(j);
        a.values.push_back(v);
      }
    }
    a.row_ptr[i + 1] = a.values.size();
  }
  return a;
}

}  // namespace sigmin

#endif
