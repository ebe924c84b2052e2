#include <gtest/gtest.h>

#include <vector>

#include "oracles.hpp"
#include "sigmin/generators.hpp"
#include "sigmin/kernels.hpp"
#include "sigmin/rng.hpp"

using namespace sigmin;

namespace {

DenseMatrix random_dense(std::size_t r, std::size_t c, std::uint64_t seed) {
  DenseMatrix m(r, c);
  Rng rng(seed);
  for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
  return m;
}

DenseMatrix random_sparse_dense(std::size_t r, std::size_t c, double density,
                                std::uint64_t seed) {
  DenseMatrix m(r, c);
  Rng rng(seed);
  for (double& v : m.data)
    if (rng.uniform() < density) v = rng.uniform(-1.0, 1.0);
  return m;
}

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  std::vector<double> v(n);
  Rng rng(seed);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

TEST(Kernels, DotAndNormFrozenValues) {
  EXPECT_EQ(dot({1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}), 32.0);
  EXPECT_EQ(norm2({3.0, 4.0}), 5.0);
  EXPECT_EQ(dot({}, {}), 0.0);
  EXPECT_THROW(dot({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST(Kernels, ReductionsBitwiseIdenticalAcrossThreadCounts) {
  auto a = random_vec(100001, 1);
  auto b = random_vec(100001, 2);
  double base_dot = dot(a, b, 1);
  double base_norm = norm2(a, 1);
  for (int threads : {2, 3, 4, 8}) {
    EXPECT_EQ(dot(a, b, threads), base_dot);
    EXPECT_EQ(norm2(a, threads), base_norm);
  }
  long double ref = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) ref += static_cast<long double>(a[i]) * b[i];
  EXPECT_NEAR(base_dot, static_cast<double>(ref), 1e-9);
}

TEST(Kernels, DenseMatmatMatchesOracleAndIsThreadInvariant) {
  DenseMatrix a = random_dense(33, 17, 3);
  DenseMatrix b = random_dense(17, 29, 4);
  DenseMatrix ref = oracles::matmul_ref(a, b);
  DenseMatrix c = dense_matmat(a, b, 1);
  EXPECT_LT(oracles::max_abs_diff(c, ref), 1e-13);

  DenseMatrix sq_a = random_dense(64, 64, 5);
  DenseMatrix sq_b = random_dense(64, 64, 6);
  DenseMatrix base = dense_matmat(sq_a, sq_b, 1);
  for (int threads : {2, 3, 4}) {
    DenseMatrix again = dense_matmat(sq_a, sq_b, threads);
    EXPECT_EQ(oracles::max_abs_diff(again, base), 0.0) << "threads=" << threads;
  }
  EXPECT_THROW(dense_matmat(a, a, 1), std::invalid_argument);
}

TEST(Kernels, DenseMatvecBothOrientations) {
  DenseMatrix a = random_dense(20, 13, 7);
  auto x = random_vec(13, 8);
  auto y = dense_matvec(a, x, 2);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) s += a.at(i, j) * x[j];
    EXPECT_NEAR(y[i], s, 1e-14);
  }
  auto z = random_vec(20, 9);
  auto yt = dense_matvec_transposed(a, z, 3);
  for (std::size_t j = 0; j < a.cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i) s += a.at(i, j) * z[i];
    EXPECT_NEAR(yt[j], s, 1e-14);
  }
  EXPECT_THROW(dense_matvec(a, z, 1), std::invalid_argument);
}

TEST(Kernels, SparseMatvecMatchesDense) {
  DenseMatrix d = random_sparse_dense(40, 25, 0.15, 10);
  SparseMatrixCSR a = sparse_from_dense(d);
  auto x = random_vec(25, 11);
  auto ys = sparse_matvec(a, x, 2);
  auto yd = dense_matvec(d, x, 1);
  for (std::size_t i = 0; i < ys.size(); ++i) EXPECT_NEAR(ys[i], yd[i], 1e-14);
}

TEST(Kernels, SparseMatmatMatchesOracleWithCanonicalStructure) {
  DenseMatrix da = random_sparse_dense(30, 22, 0.2, 12);
  DenseMatrix db = random_sparse_dense(22, 27, 0.2, 13);
  SparseMatrixCSR a = sparse_from_dense(da);
  SparseMatrixCSR b = sparse_from_dense(db);
  SparseMatrixCSR c = sparse_matmat(a, b, 1);
  EXPECT_NO_THROW(c.validate());
  DenseMatrix ref = oracles::matmul_ref(da, db);
  EXPECT_LT(oracles::max_abs_diff(to_dense(c), ref), 1e-13);
  for (int threads : {2, 4}) {
    SparseMatrixCSR again = sparse_matmat(a, b, threads);
    EXPECT_EQ(again.row_ptr, c.row_ptr);
    EXPECT_EQ(again.col_idx, c.col_idx);
    EXPECT_EQ(again.values, c.values);
  }
}

TEST(Kernels, SparseDenseMatmatMatchesOracle) {
  DenseMatrix da = random_sparse_dense(26, 18, 0.25, 14);
  DenseMatrix db = random_dense(18, 21, 15);
  SparseMatrixCSR a = sparse_from_dense(da);
  DenseMatrix c = sparse_dense_matmat(a, db, 2);
  DenseMatrix ref = oracles::matmul_ref(da, db);
  EXPECT_LT(oracles::max_abs_diff(c, ref), 1e-13);
}

TEST(Kernels, TransposesAreExactInvolutions) {
  DenseMatrix d = random_dense(19, 31, 16);
  DenseMatrix dt = dense_transpose(d, 3);
  ASSERT_EQ(dt.rows, 31u);
  for (std::size_t i = 0; i < d.rows; ++i)
    for (std::size_t j = 0; j < d.cols; ++j) EXPECT_EQ(dt.at(j, i), d.at(i, j));
  DenseMatrix dtt = dense_transpose(dt, 1);
  EXPECT_EQ(oracles::max_abs_diff(dtt, d), 0.0);

  DenseMatrix sd = random_sparse_dense(24, 35, 0.12, 17);
  SparseMatrixCSR s = sparse_from_dense(sd);
  SparseMatrixCSR st = sparse_transpose(s);
  EXPECT_NO_THROW(st.validate());
  EXPECT_EQ(oracles::max_abs_diff(to_dense(st), dense_transpose(sd)), 0.0);
  SparseMatrixCSR stt = sparse_transpose(st);
  EXPECT_EQ(stt.row_ptr, s.row_ptr);
  EXPECT_EQ(stt.col_idx, s.col_idx);
  EXPECT_EQ(stt.values, s.values);
}

TEST(Kernels, MatrixShiftInsertsMissingDiagonals) {
  // Rows with diagonal present, absent mid-row, absent at row end, and empty.
  DenseMatrix d(4, 4);
  d.at(0, 0) = 2.0;
  d.at(0, 3) = 1.0;
  d.at(1, 0) = 5.0;
  d.at(1, 3) = -1.0;
  d.at(2, 0) = 7.0;
  SparseMatrixCSR a = sparse_from_dense(d);
  SparseMatrixCSR s = matrix_shift(a, 0.5);
  EXPECT_NO_THROW(s.validate());
  DenseMatrix expect = d;
  for (std::size_t i = 0; i < 4; ++i) expect.at(i, i) += 0.5;
  EXPECT_EQ(oracles::max_abs_diff(to_dense(s), expect), 0.0);

  DenseMatrix ds = matrix_shift(d, 0.5);
  EXPECT_EQ(oracles::max_abs_diff(ds, expect), 0.0);

  SparseMatrixCSR rect(2, 3);
  EXPECT_THROW(matrix_shift(rect, 1.0), std::invalid_argument);
}

TEST(Kernels, DenseAddSubAndVectorOps) {
  DenseMatrix a = random_dense(9, 9, 18);
  DenseMatrix b = random_dense(9, 9, 19);
  DenseMatrix sum = dense_add(a, b, 2);
  DenseMatrix diff = dense_sub(sum, b, 2);
  EXPECT_LT(oracles::max_abs_diff(diff, a), 1e-15);

  auto u = random_vec(50, 20);
  auto v = random_vec(50, 21);
  auto w = vec_add(u, v, 2);
  auto back = vec_sub(w, v, 3);
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(back[i], u[i], 1e-15);
  auto y = u;
  axpy(2.0, v, y);
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_EQ(y[i], u[i] + 2.0 * v[i]);
}

TEST(Kernels, FrobeniusNormMatchesOracle) {
  DenseMatrix a = random_dense(17, 23, 22);
  EXPECT_NEAR(frobenius_norm(a, 1), oracles::frob_ref(a), 1e-12);
  EXPECT_EQ(frobenius_norm(a, 4), frobenius_norm(a, 1));
}
