#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "sigmin/generators.hpp"
#include "sigmin/kernels.hpp"
#include "sigmin/rng.hpp"
#include "sigmin/svd.hpp"

using namespace sigmin;

namespace {

DenseMatrix random_dense(std::size_t r, std::size_t c, std::uint64_t seed) {
  DenseMatrix m(r, c);
  Rng rng(seed);
  for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
  return m;
}

// Singular values by a different route: Jacobi eigendecomposition of A^T A.
std::vector<double> oracle_singular_values(const DenseMatrix& a) {
  DenseMatrix at = dense_transpose(a);
  DenseMatrix gram = oracles::matmul_ref(at, a);
  std::vector<double> evals;
  DenseMatrix evecs;
  oracles::jacobi_eigen_sym(gram, evals, evecs);
  std::vector<double> s(evals.size());
  for (std::size_t i = 0; i < evals.size(); ++i) s[i] = std::sqrt(std::max(evals[i], 0.0));
  return s;
}

double max_offdiag_from_identity(const DenseMatrix& q) {
  DenseMatrix qt = dense_transpose(q);
  DenseMatrix g = oracles::matmul_ref(qt, q);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.rows; ++i)
    for (std::size_t j = 0; j < g.cols; ++j)
      worst = std::max(worst, std::abs(g.at(i, j) - (i == j ? 1.0 : 0.0)));
  return worst;
}

void check_factor_invariants(const DenseMatrix& a, const SvdFactors& f, double tol) {
  double s1 = f.s.empty() ? 0.0 : f.s[0];
  EXPECT_LE(max_offdiag_from_identity(f.u), 1e-8);
  EXPECT_LE(max_offdiag_from_identity(f.v), 1e-8);
  for (std::size_t i = 1; i < f.s.size(); ++i) EXPECT_LE(f.s[i], f.s[i - 1] + 1e-14);
  for (double s : f.s) EXPECT_GE(s, 0.0);
  EXPECT_GE(f.residual_sq, -1e-12);
  double frob_sq = 0.0;
  for (double v : a.data) frob_sq += v * v;
  double ssum = 0.0;
  for (double s : f.s) ssum += s * s;
  EXPECT_NEAR(f.residual_sq, std::max(0.0, frob_sq - ssum), 1e-9 * (1.0 + frob_sq));
  for (std::size_t j = 0; j < f.s.size(); ++j) {
    std::vector<double> vj(a.cols), uj(a.rows);
    for (std::size_t i = 0; i < a.cols; ++i) vj[i] = f.v.at(i, j);
    for (std::size_t i = 0; i < a.rows; ++i) uj[i] = f.u.at(i, j);
    auto av = dense_matvec(a, vj);
    auto atu = dense_matvec_transposed(a, uj);
    double r1 = 0.0, r2 = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i)
      r1 += (av[i] - f.s[j] * uj[i]) * (av[i] - f.s[j] * uj[i]);
    for (std::size_t i = 0; i < a.cols; ++i)
      r2 += (atu[i] - f.s[j] * vj[i]) * (atu[i] - f.s[j] * vj[i]);
    EXPECT_LE(std::sqrt(r1), tol * std::max(s1, 1e-300)) << "triple " << j;
    EXPECT_LE(std::sqrt(r2), tol * std::max(s1, 1e-300)) << "triple " << j;
  }
  // Sign convention: the largest-magnitude entry of each left vector is
  // positive.
  for (std::size_t j = 0; j < f.u.cols; ++j) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < f.u.rows; ++i)
      if (std::abs(f.u.at(i, j)) > best) {
        best = std::abs(f.u.at(i, j));
        arg = i;
      }
    EXPECT_GE(f.u.at(arg, j), 0.0);
  }
}

DenseMatrix reconstruct(const SvdFactors& f) {
  DenseMatrix us = f.u;
  for (std::size_t j = 0; j < f.s.size(); ++j)
    for (std::size_t i = 0; i < us.rows; ++i) us.at(i, j) *= f.s[j];
  return oracles::matmul_ref(us, dense_transpose(f.v));
}

}  // namespace

TEST(SymmetricEigen, MatchesJacobiOracle) {
  const std::size_t n = 20;
  DenseMatrix a(n, n);
  Rng rng(1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double v = rng.uniform(-1.0, 1.0);
      a.at(i, j) = v;
      a.at(j, i) = v;
    }
  std::vector<double> e1, e2;
  DenseMatrix v1, v2;
  symmetric_eigen(a, e1, v1);
  oracles::jacobi_eigen_sym(a, e2, v2);
  ASSERT_EQ(e1.size(), n);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(e1[i], e2[i], 1e-10);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = v1.at(i, j);
    auto av = dense_matvec(a, col);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(av[i], e1[j] * col[i], 1e-9);
  }
}

TEST(Svd, DiagonalMatrixExactBothMethods) {
  DenseMatrix d(3, 3);
  d.at(0, 0) = 3.0;
  d.at(1, 1) = 2.0;
  d.at(2, 2) = 1.0;
  SparseMatrixCSR sp = sparse_from_dense(d);
  for (int method = 0; method < 2; ++method) {
    SvdFactors f = method == 0 ? svd_cross(sp, 3) : svd_lanczos(sp, 3);
    ASSERT_EQ(f.s.size(), 3u);
    EXPECT_NEAR(f.s[0], 3.0, 1e-10);
    EXPECT_NEAR(f.s[1], 2.0, 1e-10);
    EXPECT_NEAR(f.s[2], 1.0, 1e-10);
    check_factor_invariants(d, f, 1e-6);
    EXPECT_NEAR(f.residual_sq, 0.0, 1e-10);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(f.u.at(j, j), 1.0, 1e-8);
  }
  SvdFactors fd = svd_cross(d, 3);
  EXPECT_NEAR(fd.s[0], 3.0, 1e-10);
}

TEST(Svd, FullRankRandomMatchesOracle) {
  DenseMatrix a = random_dense(50, 30, 2);
  auto s_ref = oracle_singular_values(a);
  for (int method = 0; method < 2; ++method) {
    SvdFactors f = method == 0 ? svd_cross(a, 30) : svd_lanczos(a, 30);
    for (std::size_t i = 0; i < 30; ++i)
      EXPECT_NEAR(f.s[i], s_ref[i], 1e-8 * s_ref[0]) << "method " << method << " i " << i;
    check_factor_invariants(a, f, 1e-6);
    EXPECT_LE(f.residual_sq, 1e-8 * s_ref[0] * s_ref[0]);
    DenseMatrix rec = reconstruct(f);
    EXPECT_LE(oracles::max_abs_diff(rec, a), 1e-7 * s_ref[0]);
  }
}

TEST(Svd, TruncatedTailMatchesOracle) {
  DenseMatrix a = random_dense(60, 40, 3);
  auto s_ref = oracle_singular_values(a);
  double tail = 0.0;
  for (std::size_t i = 10; i < s_ref.size(); ++i) tail += s_ref[i] * s_ref[i];
  for (int method = 0; method < 2; ++method) {
    SvdFactors f = method == 0 ? svd_cross(a, 10) : svd_lanczos(a, 10);
    ASSERT_EQ(f.s.size(), 10u);
    for (std::size_t i = 0; i < 10; ++i)
      EXPECT_NEAR(f.s[i], s_ref[i], 1e-7 * s_ref[0]) << "method " << method;
    check_factor_invariants(a, f, 1e-6);
    EXPECT_NEAR(f.residual_sq, tail, 1e-5 * (1.0 + tail)) << "method " << method;
  }
}

TEST(Svd, RankDeficientReportsZeros) {
  // Rank 3 by construction from orthonormalised outer products.
  const std::size_t n = 40;
  Rng rng(4);
  std::vector<std::vector<double>> xs(3, std::vector<double>(n)), ys(3, std::vector<double>(n));
  for (int r = 0; r < 3; ++r)
    for (std::size_t i = 0; i < n; ++i) {
      xs[r][i] = rng.uniform(-1.0, 1.0);
      ys[r][i] = rng.uniform(-1.0, 1.0);
    }
  for (int r = 0; r < 3; ++r) {
    for (int prev = 0; prev < r; ++prev) {
      double cx = dot(xs[prev], xs[r]), cy = dot(ys[prev], ys[r]);
      axpy(-cx, xs[prev], xs[r]);
      axpy(-cy, ys[prev], ys[r]);
    }
    double nx = norm2(xs[r]), ny = norm2(ys[r]);
    for (std::size_t i = 0; i < n; ++i) {
      xs[r][i] /= nx;
      ys[r][i] /= ny;
    }
  }
  const double sig[3] = {5.0, 3.0, 1.0};
  DenseMatrix a(n, n);
  for (int r = 0; r < 3; ++r)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a.at(i, j) += sig[r] * xs[r][i] * ys[r][j];
  for (int method = 0; method < 2; ++method) {
    SvdFactors f = method == 0 ? svd_cross(a, 5) : svd_lanczos(a, 5);
    EXPECT_NEAR(f.s[0], 5.0, 1e-7);
    EXPECT_NEAR(f.s[1], 3.0, 1e-7);
    EXPECT_NEAR(f.s[2], 1.0, 1e-7);
    EXPECT_LE(f.s[3], 1e-8 * f.s[0]) << "method " << method;
    EXPECT_LE(f.s[4], 1e-8 * f.s[0]) << "method " << method;
    EXPECT_LE(max_offdiag_from_identity(f.u), 1e-8);
    EXPECT_LE(max_offdiag_from_identity(f.v), 1e-8);
    DenseMatrix rec = reconstruct(f);
    EXPECT_LE(oracles::max_abs_diff(rec, a), 1e-6 * f.s[0]);
  }
}

TEST(Svd, LaplacianTopValuesMatchEigenOracle) {
  SparseMatrixCSR lap = make_grid_laplacian(8);
  DenseMatrix dense = to_dense(lap);
  std::vector<double> evals;
  DenseMatrix evecs;
  oracles::jacobi_eigen_sym(dense, evals, evecs);
  SvdFactors f = svd_cross(lap, 50);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_NEAR(f.s[i], evals[i], 1e-7 * evals[0]);
  SvdFactors g = svd_lanczos(lap, 50);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_NEAR(g.s[i], evals[i], 1e-7 * evals[0]);
}

TEST(Svd, OrthogonalMatrixHasUnitSpectrum) {
  const std::size_t n = 8;
  Rng rng(5);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  double nv = norm2(v);
  for (double& x : v) x /= nv;
  DenseMatrix h = DenseMatrix::identity(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) h.at(i, j) -= 2.0 * v[i] * v[j];
  for (int method = 0; method < 2; ++method) {
    SvdFactors f = method == 0 ? svd_cross(h, n) : svd_lanczos(h, n);
    for (double s : f.s) EXPECT_NEAR(s, 1.0, 1e-8);
    EXPECT_NEAR(f.residual_sq, 0.0, 1e-9);
  }
}

TEST(Svd, MethodsAgreeWithEachOther) {
  DenseMatrix a = random_dense(40, 25, 6);
  SvdFactors fc = svd_cross(a, 8);
  SvdFactors fl = svd_lanczos(a, 8);
  double s1 = fc.s[0];
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(fc.s[i], fl.s[i], 1e-6 * s1);
  // Compare vectors only where the spectrum is well separated.
  for (std::size_t i = 0; i < 8; ++i) {
    double gap = 1e9;
    if (i > 0) gap = std::min(gap, fc.s[i - 1] - fc.s[i]);
    if (i + 1 < 8) gap = std::min(gap, fc.s[i] - fc.s[i + 1]);
    if (gap < 1e-3 * s1) continue;
    double du = 0.0, dv = 0.0;
    for (std::size_t r = 0; r < a.rows; ++r) du += fc.u.at(r, i) * fl.u.at(r, i);
    for (std::size_t r = 0; r < a.cols; ++r) dv += fc.v.at(r, i) * fl.v.at(r, i);
    EXPECT_GT(du, 1.0 - 1e-6) << "triple " << i;
    EXPECT_GT(dv, 1.0 - 1e-6) << "triple " << i;
  }
}

TEST(Svd, ArgumentValidation) {
  DenseMatrix a = random_dense(10, 6, 7);
  EXPECT_THROW(svd_cross(a, 0), std::invalid_argument);
  EXPECT_THROW(svd_cross(a, 7), std::invalid_argument);
  EXPECT_THROW(svd_cross(a, 3, 0.0), std::invalid_argument);
  EXPECT_THROW(svd_lanczos(a, 0), std::invalid_argument);
  EXPECT_THROW(svd_lanczos(a, 7), std::invalid_argument);
  EXPECT_THROW(svd_lanczos(a, 3, -1.0), std::invalid_argument);
}

TEST(Svd, BudgetExhaustionThrowsWithConvergedCount) {
  // 2000 singular values spread evenly over [0.5, 1]: the leading gaps are
  // tiny relative to the spread, so a 20-vector window cannot separate the
  // top pair within the matvec budget.
  std::size_t n = 2000;
  SparseMatrixCSR a;
  a.rows = a.cols = n;
  a.row_ptr.resize(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    a.row_ptr[i] = i;
    a.col_idx.push_back(i);
    a.values.push_back(1.0 - 0.5 * double(i) / double(n - 1));
  }
  a.row_ptr[n] = n;
  bool threw = false;
  try {
    svd_lanczos(a, 2, 1e-10);
  } catch (const svd_error& e) {
    threw = true;
    EXPECT_LE(e.converged_count, 2u);
    EXPECT_NE(std::string(e.what()).find("budget"), std::string::npos);
  }
  EXPECT_TRUE(threw);
  threw = false;
  try {
    svd_cross(a, 2, 1e-10);
  } catch (const svd_error& e) {
    threw = true;
    EXPECT_LE(e.converged_count, 2u);
  }
  EXPECT_TRUE(threw);
}

TEST(Svd, ThreadCountDoesNotChangeTheFactors) {
  DenseMatrix a = random_dense(48, 32, 9);
  SvdFactors base_c = svd_cross(a, 6, 1e-6, 1);
  SvdFactors base_l = svd_lanczos(a, 6, 1e-6, 1);
  for (int threads : {2, 4}) {
    SvdFactors fc = svd_cross(a, 6, 1e-6, threads);
    SvdFactors fl = svd_lanczos(a, 6, 1e-6, threads);
    EXPECT_EQ(fc.s, base_c.s);
    EXPECT_EQ(fc.u.data, base_c.u.data);
    EXPECT_EQ(fc.v.data, base_c.v.data);
    EXPECT_EQ(fl.s, base_l.s);
    EXPECT_EQ(fl.u.data, base_l.u.data);
    EXPECT_EQ(fl.v.data, base_l.v.data);
  }
}
