#include <gtest/gtest.h>

#include <vector>

#include "oracles.hpp"
#include "sigmin/bicgstab.hpp"
#include "sigmin/generators.hpp"
#include "sigmin/kernels.hpp"
#include "sigmin/rng.hpp"

using namespace sigmin;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  std::vector<double> v(n);
  Rng rng(seed);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

double rel_err(const std::vector<double>& got, const std::vector<double>& want) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    num += (got[i] - want[i]) * (got[i] - want[i]);
    den += want[i] * want[i];
  }
  return std::sqrt(num / (den > 0 ? den : 1.0));
}

}  // namespace

TEST(Bicgstab, SolvesSpdLaplacianToOracleAccuracy) {
  SparseMatrixCSR a = make_grid_laplacian(8);
  auto b = random_vec(64, 1);
  JacobiPreconditioner jac(a);
  SolveResult res = bicgstab_solve(a, b, &jac, 1e-12, 640);
  EXPECT_TRUE(res.converged);
  EXPECT_LE(res.final_residual, 1e-12 * norm2(b));
  auto x_ref = oracles::lu_solve(to_dense(a), b);
  EXPECT_LT(rel_err(res.x, x_ref), 1e-9);
}

TEST(Bicgstab, DiagonalSystemWithJacobiConvergesImmediately) {
  DenseMatrix d(10, 10);
  for (std::size_t i = 0; i < 10; ++i) d.at(i, i) = static_cast<double>(i + 1);
  SparseMatrixCSR a = sparse_from_dense(d);
  auto b = random_vec(10, 2);
  JacobiPreconditioner jac(a);
  SolveResult res = bicgstab_solve(a, b, &jac, 1e-10, 100);
  EXPECT_TRUE(res.converged);
  EXPECT_LE(res.iterations, 2u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(res.x[i], b[i] / (i + 1.0), 1e-10);
}

TEST(Bicgstab, JacobiHelpsIllScaledSystem) {
  // SPD with widely spread diagonal scaling.
  const std::size_t n = 40;
  DenseMatrix d(n, n);
  Rng rng(3);
  for (std::size_t i = 0; i < n; ++i) {
    double scale = std::pow(10.0, 4.0 * static_cast<double>(i) / (n - 1));
    d.at(i, i) = scale;
    if (i + 1 < n) {
      double off = 0.05 * std::sqrt(d.at(i, i));
      d.at(i, i + 1) += off;
      d.at(i + 1, i) += off;
    }
  }
  auto b = random_vec(n, 4);
  JacobiPreconditioner jac(d);
  SolveResult with = bicgstab_solve(d, b, &jac, 1e-10, 400);
  SolveResult without = bicgstab_solve(d, b, nullptr, 1e-10, 400);
  EXPECT_TRUE(with.converged);
  EXPECT_LE(with.iterations, without.iterations);
}

TEST(Bicgstab, NonsymmetricSystemMatchesLuOracle) {
  const std::size_t n = 30;
  DenseMatrix a(n, n);
  Rng rng(5);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      a.at(i, j) = (i == j ? 5.0 : 0.0) + 0.5 * rng.uniform(-1.0, 1.0);
  auto b = random_vec(n, 6);
  SolveResult res = bicgstab_solve(a, b, nullptr, 1e-11, 300);
  EXPECT_TRUE(res.converged);
  EXPECT_LT(rel_err(res.x, oracles::lu_solve(a, b)), 1e-8);
}

TEST(Bicgstab, ZeroDiagonalRejectedWithRowIndex) {
  DenseMatrix d(3, 3);
  d.at(0, 0) = 1.0;
  d.at(1, 2) = 2.0;  // row 1 has no diagonal entry
  d.at(2, 2) = 3.0;
  SparseMatrixCSR a = sparse_from_dense(d);
  try {
    JacobiPreconditioner jac(a);
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
  }
  try {
    JacobiPreconditioner jac(d);
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
  }
}

TEST(Bicgstab, IterationExhaustionReportsHonestResidual) {
  SparseMatrixCSR a = make_grid_laplacian(8);
  auto b = random_vec(64, 7);
  SolveResult res = bicgstab_solve(a, b, nullptr, 1e-14, 3);
  EXPECT_FALSE(res.converged);
  EXPECT_EQ(res.iterations, 3u);
  auto ax = sparse_matvec(a, res.x);
  double actual = norm2(vec_sub(b, ax));
  EXPECT_NEAR(res.final_residual, actual, 1e-12 * (1.0 + actual));
  EXPECT_GT(res.final_residual, 1e-14 * norm2(b));
}

TEST(Bicgstab, RepeatedBreakdownThrowsAfterOneRestart) {
  DenseMatrix zero(2, 2);
  std::vector<double> b = {1.0, 1.0};
  EXPECT_THROW(bicgstab_solve(zero, b, nullptr, 1e-10, 50), solver_breakdown);
}

TEST(Bicgstab, ThreadCountDoesNotChangeTheResult) {
  SparseMatrixCSR a = make_grid_laplacian(6);
  auto b = random_vec(36, 8);
  JacobiPreconditioner jac(a);
  SolveResult one = bicgstab_solve(a, b, &jac, 1e-10, 360, 1);
  for (int threads : {2, 4}) {
    SolveResult multi = bicgstab_solve(a, b, &jac, 1e-10, 360, threads);
    EXPECT_EQ(multi.iterations, one.iterations);
    EXPECT_EQ(multi.x, one.x);
  }
}

TEST(Bicgstab, ArgumentValidation) {
  SparseMatrixCSR a = make_grid_laplacian(3);
  std::vector<double> b(9, 1.0);
  EXPECT_THROW(bicgstab_solve(a, std::vector<double>(4, 1.0), nullptr, 1e-8, 10),
               std::invalid_argument);
  EXPECT_THROW(bicgstab_solve(a, b, nullptr, 0.0, 10), std::invalid_argument);
  std::vector<double> zero_b(9, 0.0);
  SolveResult res = bicgstab_solve(a, zero_b, nullptr, 1e-8, 10);
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(norm2(res.x), 0.0);
}
