#ifndef SIGMIN_KERNELS_HPP
#define SIGMIN_KERNELS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigmin/dense_matrix.hpp"
#include "sigmin/parallel.hpp"
#include "sigmin/sparse_csr.hpp"

// Threaded kernels. Work is partitioned by rows (or by fixed-size reduction
// blocks), each unit is computed independently with a fixed accumulation
// order, so every result is bitwise identical for every thread count.

namespace sigmin {

// Reduction block size. Partial sums are always formed per 4096-element
// block and combined in block order, independent of the thread partition.
inline constexpr std::size_t kReductionBlock = 4096;

inline double dot(const std::vector<double>& a, const std::vector<double>& b, int threads = 1) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  std::size_t n = a.size();
  std::size_t nblocks = (n + kReductionBlock - 1) / kReductionBlock;
  if (nblocks == 0) return 0.0;
  std::vector<double> partial(nblocks, 0.0);
  parallel_for_blocks(nblocks, threads, [&](std::size_t bb, std::size_t be) {
    for (std::size_t blk = bb; blk < be; ++blk) {
      std::size_t lo = blk * kReductionBlock;
      std::size_t hi = std::min(n, lo + kReductionBlock);
      double s = 0.0;
      for (std::size_t i = lo; i < hi; ++i) s += a[i] * b[i];
      partial[blk] = s;
    }
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

inline double norm2(const std::vector<double>& a, int threads = 1) {
  return std::sqrt(dot(a, a, threads));
}

inline double frobenius_norm(const DenseMatrix& a, int threads = 1) {
  return std::sqrt(dot(a.data, a.data, threads));
}

inline std::vector<double> vec_add(const std::vector<double>& a, const std::vector<double>& b,
                                   int threads = 1) {
  if (a.size() != b.size()) throw std::invalid_argument("vec_add: length mismatch");
  std::vector<double> out(a.size());
  parallel_for_blocks(a.size(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) out[i] = a[i] + b[i];
  });
  return out;
}

inline std::vector<double> vec_sub(const std::vector<double>& a, const std::vector<double>& b,
                                   int threads = 1) {
  if (a.size() != b.size()) throw std::invalid_argument("vec_sub: length mismatch");
  std::vector<double> out(a.size());
  parallel_for_blocks(a.size(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) out[i] = a[i] - b[i];
  });
  return out;
}

inline void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline std::vector<double> dense_matvec(const DenseMatrix& a, const std::vector<double>& x,
                                        int threads = 1) {
  if (a.cols != x.size()) throw std::invalid_argument("dense_matvec: shape mismatch");
  std::vector<double> y(a.rows, 0.0);
  parallel_for_blocks(a.rows, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const double* row = a.row(i);
      double s = 0.0;
      for (std::size_t j = 0; j < a.cols; ++j) s += row[j] * x[j];
      y[i] = s;
    }
  });
  return y;
}

// y = A^T x without forming the transpose; parallel over output entries.
inline std::vector<double> dense_matvec_transposed(const DenseMatrix& a,
                                                   const std::vector<double>& x,
                                                   int threads = 1) {
  if (a.rows != x.size())
    throw std::invalid_argument("dense_matvec_transposed: shape mismatch");
  std::vector<double> y(a.cols, 0.0);
  parallel_for_blocks(a.cols, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t j = lo; j < hi; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < a.rows; ++i) s += a.data[i * a.cols + j] * x[i];
      y[j] = s;
    }
  });
  return y;
}

inline std::vector<double> sparse_matvec(const SparseMatrixCSR& a, const std::vector<double>& x,
                                         int threads = 1) {
  if (a.cols != x.size()) throw std::invalid_argument("sparse_matvec: shape mismatch");
  std::vector<double> y(a.rows, 0.0);
  parallel_for_blocks(a.rows, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      double s = 0.0;
      for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p)
        s += a.values[p] * x[a.col_idx[p]];
      y[i] = s;
    }
  });
  return y;
}

// Dense product with the k loop in a fixed middle position per output row;
// each row accumulates in the same order regardless of threading.
inline DenseMatrix dense_matmat(const DenseMatrix& a, const DenseMatrix& b, int threads = 1) {
  if (a.cols != b.rows) throw std::invalid_argument("dense_matmat: shape mismatch");
  DenseMatrix c(a.rows, b.cols);
  parallel_for_blocks(a.rows, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      double* crow = c.row(i);
      const double* arow = a.row(i);
      for (std::size_t k = 0; k < a.cols; ++k) {
        double aik = arow[k];
        if (aik == 0.0) continue;
        const double* brow = b.row(k);
        for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
      }
    }
  });
  return c;
}

inline DenseMatrix dense_transpose(const DenseMatrix& a, int threads = 1) {
  DenseMatrix t(a.cols, a.rows);
  parallel_for_blocks(a.cols, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t j = lo; j < hi; ++j)
      for (std::size_t i = 0; i < a.rows; ++i) t.data[j * a.rows + i] = a.data[i * a.cols + j];
  });
  return t;
}

// Counting-sort transpose; output rows come out sorted by construction.
inline SparseMatrixCSR sparse_transpose(const SparseMatrixCSR& a, int /*threads*/ = 1) {
  SparseMatrixCSR t(a.cols, a.rows);
  t.col_idx.resize(a.nnz());
  t.values.resize(a.nnz());
  std::vector<std::size_t> count(a.cols, 0);
  for (std::size_t p = 0; p < a.nnz(); ++p) ++count[a.col_idx[p]];
  for (std::size_t j = 0; j < a.cols; ++j) t.row_ptr[j + 1] = t.row_ptr[j] + count[j];
  std::vector<std::size_t> next(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
      std::size_t j = a.col_idx[p];
      t.col_idx[next[j]] = i;
      t.values[next[j]] = a.values[p];
      ++next[j];
    }
  return t;
}

// Sparse product via per-row dense accumulators; each output row is built
// independently with ascending column order.
inline SparseMatrixCSR sparse_matmat(const SparseMatrixCSR& a, const SparseMatrixCSR& b,
                                     int threads = 1) {
  if (a.cols != b.rows) throw std::invalid_argument("sparse_matmat: shape mismatch");
  std::vector<std::vector<std::size_t>> row_cols(a.rows);
  std::vector<std::vector<double>> row_vals(a.rows);
  parallel_for_blocks(a.rows, threads, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> acc(b.cols, 0.0);
    std::vector<char> used(b.cols, 0);
    std::vector<std::size_t> touched;
    for (std::size_t i = lo; i < hi; ++i) {
      touched.clear();
      for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
        double av = a.values[p];
        std::size_t k = a.col_idx[p];
        for (std::size_t q = b.row_ptr[k]; q < b.row_ptr[k + 1]; ++q) {
          std::size_t j = b.col_idx[q];
          if (!used[j]) {
            used[j] = 1;
            touched.push_back(j);
            acc[j] = 0.0;
          }
          acc[j] += av * b.values[q];
        }
      }
      std::sort(touched.begin(), touched.end());
      row_cols[i].assign(touched.begin(), touched.end());
      row_vals[i].reserve(touched.size());
      for (std::size_t j : touched) {
        row_vals[i].push_back(acc[j]);
        used[j] = 0;
      }
    }
  });
  SparseMatrixCSR c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    c.row_ptr[i + 1] = c.row_ptr[i] + row_cols[i].size();
  c.col_idx.reserve(c.row_ptr.back());
  c.values.reserve(c.row_ptr.back());
  for (std::size_t i = 0; i < a.rows; ++i) {
    c.col_idx.insert(c.col_idx.end(), row_cols[i].begin(), row_cols[i].end());
    c.values.insert(c.values.end(), row_vals[i].begin(), row_vals[i].end());
  }
  return c;
}

inline DenseMatrix sparse_dense_matmat(const SparseMatrixCSR& a, const DenseMatrix& b,
                                       int threads = 1) {
  if (a.cols != b.rows) throw std::invalid_argument("sparse_dense_matmat: shape mismatch");
  DenseMatrix c(a.rows, b.cols);
  parallel_for_blocks(a.rows, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      double* crow = c.row(i);
      for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
        double av = a.values[p];
        const double* brow = b.row(a.col_idx[p]);
        for (std::size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
      }
    }
  });
  return c;
}

inline DenseMatrix dense_add(const DenseMatrix& a, const DenseMatrix& b, int threads = 1) {
  if (!a.same_shape(b)) throw std::invalid_argument("dense_add: shape mismatch");
  DenseMatrix c(a.rows, a.cols);
  parallel_for_blocks(a.data.size(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) c.data[i] = a.data[i] + b.data[i];
  });
  return c;
}

inline DenseMatrix dense_sub(const DenseMatrix& a, const DenseMatrix& b, int threads = 1) {
  if (!a.same_shape(b)) throw std::invalid_argument("dense_sub: shape mismatch");
  DenseMatrix c(a.rows, a.cols);
  parallel_for_blocks(a.data.size(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) c.data[i] = a.data[i] - b.data[i];
  });
  return c;
}

// A + lambda I for square sparse matrices; missing diagonal entries are
// inserted in sorted position.
inline SparseMatrixCSR matrix_shift(const SparseMatrixCSR& a, double lambda) {
  if (a.rows != a.cols) throw std::invalid_argument("matrix_shift: matrix must be square");
  SparseMatrixCSR s(a.rows, a.cols);
  s.col_idx.reserve(a.nnz() + a.rows);
  s.values.reserve(a.nnz() + a.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    bool placed = false;
    for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
      std::size_t j = a.col_idx[p];
      if (!placed && j > i) {
        s.col_idx.push_back(i);
        s.values.push_back(lambda);
        placed = true;
      }
      s.col_idx.push_back(j);
      s.values.push_back(j == i ? a.values[p] + lambda : a.values[p]);
      if (j == i) placed = true;
    }
    if (!placed) {
      s.col_idx.push_back(i);
      s.values.push_back(lambda);
    }
    s.row_ptr[i + 1] = s.values.size();
  }
  return s;
}

inline DenseMatrix matrix_shift(const DenseMatrix& a, double lambda) {
  if (a.rows != a.cols) throw std::invalid_argument("matrix_shift: matrix must be square");
  DenseMatrix s = a;
  for (std::size_t i = 0; i < a.rows; ++i) s.at(i, i) += lambda;
  return s;
}

}  // namespace sigmin

#endif
